pub mod balanced;
pub mod disperser;
pub mod error;
pub mod exhaustive;
pub mod field;
pub mod model;
pub mod strong_selector;
pub mod sui;
pub mod builder;
pub mod decoder;
pub mod bounds;
pub mod random_code;
pub mod codefile;
pub mod sketch;
pub mod bench;
