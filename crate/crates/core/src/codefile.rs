//! Text serialization of codes.
//!
//! ```text
//! qgtc 1
//! n 8
//! k 1
//! alpha 2
//! mode plain
//! blocks 8
//! ssui 1 1 6       <kind> <level> <base offset, 1-based> <slice count>
//! ...
//! 1                one query per line, ascending; empty line = empty query
//! 1
//! ```
//!
//! Lines end in LF. The number of queries is whatever follows the layout.

use std::fmt::Write as _;

use crate::builder::{enhance, Block, BlockKind, GroupTestingCode, Mode};
use crate::error::{Error, Result};
use crate::model::{Params, QuerySequence, QuerySet};

pub const FORMAT_VERSION: u32 = 1;

pub fn serialize(code: &GroupTestingCode) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qgtc {FORMAT_VERSION}");
    let _ = writeln!(out, "n {}", code.n());
    let _ = writeln!(out, "k {}", code.k());
    let _ = writeln!(out, "alpha {}", code.alpha());
    let _ = writeln!(out, "mode {}", code.mode());
    let _ = writeln!(out, "blocks {}", code.blocks().len());
    for b in code.blocks() {
        let _ = writeln!(out, "{} {} {} {}", b.kind, b.level, b.base + 1, b.slices);
    }
    for q in code.queries() {
        let _ = writeln!(out, "{q}");
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let (i, line) = self
            .inner
            .next()
            .ok_or_else(|| Error::parse(self.last + 1, "unexpected end of file"))?;
        self.last = i + 1;
        Ok((i + 1, line))
    }

    /// A `<key> <value>` header line.
    fn header<T: std::str::FromStr>(&mut self, key: &str) -> Result<(usize, T)> {
        let (no, line) = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| Error::parse(no, format!("expected `{key} <value>`")))?;
        let parsed = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(no, format!("bad {key} value `{value}`")))?;
        Ok((no, parsed))
    }
}

fn number(no: usize, token: Option<&str>, what: &str) -> Result<usize> {
    let t = token.ok_or_else(|| Error::parse(no, format!("missing {what}")))?;
    t.parse()
        .map_err(|_| Error::parse(no, format!("bad {what} `{t}`")))
}

pub fn parse(text: &str) -> Result<GroupTestingCode> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (no, version): (usize, u32) = lines.header("qgtc")?;
    if version != FORMAT_VERSION {
        return Err(Error::parse(
            no,
            format!("unsupported format version {version}"),
        ));
    }
    let (n_line, n): (usize, usize) = lines.header("n")?;
    let (_, k): (usize, usize) = lines.header("k")?;
    let (_, alpha): (usize, u64) = lines.header("alpha")?;
    let (mode_line, mode): (usize, String) = lines.header("mode")?;
    let mode: Mode = mode
        .parse()
        .map_err(|e: Error| Error::parse(mode_line, e.to_string()))?;
    let params = Params::new(n, k, alpha).map_err(|e| Error::parse(n_line, e.to_string()))?;
    let (blocks_line, count): (usize, usize) = lines.header("blocks")?;
    if mode == Mode::Random && count != 0 {
        return Err(Error::parse(blocks_line, "random codes have no blocks"));
    }

    let slices = 2 * n.trailing_zeros() as usize;
    let mut blocks = Vec::with_capacity(count);
    let mut block_lines = Vec::with_capacity(count);
    let mut next = 0;
    for _ in 0..count {
        let (no, line) = lines.next()?;
        let mut t = line.split_ascii_whitespace();
        let kind: BlockKind = t
            .next()
            .ok_or_else(|| Error::parse(no, "missing block kind"))?
            .parse()
            .map_err(|e: Error| Error::parse(no, e.to_string()))?;
        let level = number(no, t.next(), "level")?;
        let offset = number(no, t.next(), "base offset")?;
        let slice_count = number(no, t.next(), "slice count")?;
        if t.next().is_some() {
            return Err(Error::parse(no, "trailing tokens after block"));
        }
        if offset != next + 1 {
            return Err(Error::parse(
                no,
                format!("base offset {offset}, expected {}", next + 1),
            ));
        }
        if slice_count != slices {
            return Err(Error::parse(
                no,
                format!("slice count {slice_count}, expected {slices}"),
            ));
        }
        let block = Block {
            kind,
            level,
            base: next,
            slices,
        };
        next = block.end();
        blocks.push(block);
        block_lines.push(no);
    }

    let mut queries = Vec::new();
    while let Ok((no, line)) = lines.next() {
        let elements = line
            .split_ascii_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(no, format!("bad element `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        queries.push(QuerySet::from_sorted(elements, n).map_err(|e| Error::parse(no, e.to_string()))?);
    }

    let first_query_line = blocks_line + count + 1;
    if mode != Mode::Random {
        if next != queries.len() {
            return Err(Error::parse(
                blocks_line,
                format!("blocks cover {next} queries, file has {}", queries.len()),
            ));
        }
        for (b, &no) in blocks.iter().zip(&block_lines) {
            let expect = enhance(&queries[b.base], n).map_err(|e| Error::parse(no, e.to_string()))?;
            if let Some(j) = (0..expect.len()).find(|&j| expect[j] != queries[b.base + j]) {
                return Err(Error::parse(
                    first_query_line + b.base + j,
                    format!("slice {j} does not match the block's base query"),
                ));
            }
        }
    }
    GroupTestingCode::new(params, mode, QuerySequence::new(queries), blocks)
        .map_err(|e| Error::parse(blocks_line, e.to_string()))
}
