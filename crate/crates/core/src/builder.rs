//! Layered group testing codes.
//!
//! A code is a concatenation of enhanced blocks: a selector query `S`
//! followed by its `2 log2 n` bit slices `R_1(S), ..., R_{2 log2 n}(S)`.
//! Levels run over `ell = K, K/2, ...` where `K` is `k` rounded up to a
//! power of two; entering level `ell`, at most `ell` hidden elements are
//! still undecoded.
//!
//! Every SuI and the terminal SSuI are capped at `min(n, ...)` queries: a
//! family that would be at least `n` long is replaced by the `n`
//! singletons. With [`BuildOptions::round_robin_shortcut`] set, assembly
//! stops at the first such Round-Robin block, since it decodes every
//! element on its own.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::balanced::encode_balanced;
use crate::error::{Error, Result};
use crate::model::{OccurrenceIndex, Params, QuerySequence, QuerySet};
use crate::strong_selector::{build_ssui, plan_ssui, DEFAULT_C2};
use crate::sui::{build_sui, build_sui_chunked, rr_base_level, SuiConfig};

/// Slack of every SuI level. Any value in `(0, 1/2)` leaves fewer than
/// `ell / 2` elements behind, which is all the level invariant needs.
pub const LEVEL_EPSILON: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Plain,
    Large,
    Multiset,
    /// Random codes carry no block layout and cannot be decoded.
    Random,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Large => "large",
            Mode::Multiset => "multiset",
            Mode::Random => "random",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Mode::Plain),
            "large" => Ok(Mode::Large),
            "multiset" => Ok(Mode::Multiset),
            "random" => Ok(Mode::Random),
            _ => Err(Error::InvalidParams(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Sui,
    Ssui,
    /// A query of an alpha-chunked SuI.
    Rr,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Sui => "sui",
            BlockKind::Ssui => "ssui",
            BlockKind::Rr => "rr",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sui" => Ok(BlockKind::Sui),
            "ssui" => Ok(BlockKind::Ssui),
            "rr" => Ok(BlockKind::Rr),
            _ => Err(Error::InvalidParams(format!("unknown block kind `{s}`"))),
        }
    }
}

/// One enhanced query: the base query at `base` (0-based) followed by
/// `slices` slice queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block {
    pub kind: BlockKind,
    pub level: usize,
    pub base: usize,
    pub slices: usize,
}

impl Block {
    /// Index of `R_j(S)`, `j` in `1..=slices`.
    pub fn slice(&self, j: usize) -> usize {
        debug_assert!((1..=self.slices).contains(&j));
        self.base + j
    }

    /// One past the last query of the block.
    pub fn end(&self) -> usize {
        self.base + 1 + self.slices
    }
}

/// A built code together with the layout the decoder needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTestingCode {
    n: usize,
    k: usize,
    alpha: u64,
    mode: Mode,
    queries: QuerySequence,
    blocks: Vec<Block>,
}

impl GroupTestingCode {
    /// Checks the layout: blocks tile the queries in order and every slice
    /// matches its base query. Random codes must have no blocks.
    pub fn new(
        params: Params,
        mode: Mode,
        queries: QuerySequence,
        blocks: Vec<Block>,
    ) -> Result<Self> {
        let Params { n, k, alpha } = params;
        for (i, q) in queries.iter().enumerate() {
            if q.iter().any(|v| v > n) {
                return Err(Error::InvalidParams(format!(
                    "query {} has an element outside 1..={n}",
                    i + 1
                )));
            }
        }
        if mode == Mode::Random {
            if !blocks.is_empty() {
                return Err(Error::InvalidParams("random codes have no blocks".into()));
            }
        } else {
            check_layout(n, &queries, &blocks)?;
        }
        Ok(GroupTestingCode {
            n,
            k,
            alpha,
            mode,
            queries,
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn queries(&self) -> &QuerySequence {
        &self.queries
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Code length `m`.
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn occurrence_index(&self) -> OccurrenceIndex {
        self.queries.occurrence_index(self.n)
    }

    /// See [`trusted_cap`].
    pub fn trusted_cap(&self) -> u64 {
        trusted_cap(self.alpha, self.k)
    }

    /// Largest number of queries any element belongs to.
    pub fn occurrence_max(&self) -> usize {
        self.occurrence_index().max_occurrence()
    }

    /// Runs of consecutive blocks sharing kind and level.
    pub fn phases(&self) -> Vec<Range<usize>> {
        let b = &self.blocks;
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=b.len() {
            if i == b.len() || (b[i - 1].kind, b[i - 1].level) != (b[i].kind, b[i].level) {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

fn check_layout(n: usize, queries: &QuerySequence, blocks: &[Block]) -> Result<()> {
    let slices = 2 * n.trailing_zeros() as usize;
    let mut next = 0;
    for (i, b) in blocks.iter().enumerate() {
        if b.base != next {
            return Err(Error::InvalidParams(format!(
                "block {} starts at query {}, expected {}",
                i + 1,
                b.base + 1,
                next + 1
            )));
        }
        if b.slices != slices {
            return Err(Error::InvalidParams(format!(
                "block {} has {} slices, expected {slices}",
                i + 1,
                b.slices
            )));
        }
        if b.end() > queries.len() {
            return Err(Error::InvalidParams(format!(
                "block {} runs past the last query",
                i + 1
            )));
        }
        let expect = enhance(&queries[b.base], n)?;
        if expect.iter().zip(&queries.as_slice()[b.base..b.end()]).any(|(a, b)| a != b) {
            return Err(Error::InvalidParams(format!(
                "block {} slices do not match its base query",
                i + 1
            )));
        }
        next = b.end();
    }
    if next != queries.len() {
        return Err(Error::InvalidParams(format!(
            "blocks cover {next} of {} queries",
            queries.len()
        )));
    }
    Ok(())
}

/// `<S, R_1(S), ..., R_{2 log2 n}(S)>`.
pub fn enhance(s: &QuerySet, n: usize) -> Result<Vec<QuerySet>> {
    let ids = s
        .iter()
        .map(|v| encode_balanced(v, n).map(|id| (v, id)))
        .collect::<Result<Vec<_>>>()?;
    let width = 2 * n.trailing_zeros() as usize;
    let mut out = Vec::with_capacity(1 + width);
    out.push(s.clone());
    for position in 1..=width {
        out.push(
            ids.iter()
                .filter(|(_, id)| id.bit(position))
                .map(|&(v, _)| v)
                .collect(),
        );
    }
    Ok(out)
}

/// Which construction [`build`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildMode {
    Plain,
    Large,
    Multiset,
    /// Plain or large, whichever [`choose_mode`] picks.
    Auto,
}

impl FromStr for BuildMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(BuildMode::Plain),
            "large" => Ok(BuildMode::Large),
            "multiset" => Ok(BuildMode::Multiset),
            "auto" => Ok(BuildMode::Auto),
            _ => Err(Error::InvalidParams(format!("unknown build mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub mode: BuildMode,
    pub sui: SuiConfig,
    /// Stop after the first block family that is the full Round-Robin.
    pub round_robin_shortcut: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            mode: BuildMode::Plain,
            sui: SuiConfig::default(),
            round_robin_shortcut: true,
        }
    }
}

impl BuildOptions {
    pub fn with_mode(mode: BuildMode) -> Self {
        BuildOptions {
            mode,
            ..Self::default()
        }
    }
}

/// Whether `(k / alpha)^2 > n / alpha`, the regime the large-k
/// construction targets.
pub fn large_mode_recommended(n: usize, k: usize, alpha: u64) -> bool {
    (k as u128 * k as u128) > (n as u128 * alpha as u128)
}

/// Plain when `(k/alpha)^2 log^3 n <= (n/alpha) log^4 n`, large otherwise.
pub fn choose_mode(n: usize, k: usize, alpha: u64) -> Mode {
    let log = n.trailing_zeros() as u128;
    // multiply through by alpha^2
    let plain = (k as u128).pow(2) * log.pow(3);
    let large = n as u128 * alpha as u128 * log.pow(4);
    if plain <= large {
        Mode::Plain
    } else {
        Mode::Large
    }
}

pub fn build_code(n: usize, k: usize, alpha: u64) -> Result<GroupTestingCode> {
    build(Params::new(n, k, alpha)?, &BuildOptions::with_mode(BuildMode::Plain))
}

pub fn build_code_large(n: usize, k: usize, alpha: u64) -> Result<GroupTestingCode> {
    build(Params::new(n, k, alpha)?, &BuildOptions::with_mode(BuildMode::Large))
}

/// Multiset code read out with cap `alpha = k`.
pub fn build_code_multiset(n: usize, k: usize) -> Result<GroupTestingCode> {
    build(
        Params::new(n, k, k as u64)?,
        &BuildOptions::with_mode(BuildMode::Multiset),
    )
}

pub fn build(params: Params, options: &BuildOptions) -> Result<GroupTestingCode> {
    if params.n < 2 {
        return Err(Error::InvalidParams("codes need n >= 2".into()));
    }
    let mode = match options.mode {
        BuildMode::Plain => Mode::Plain,
        BuildMode::Large => Mode::Large,
        BuildMode::Multiset => Mode::Multiset,
        BuildMode::Auto => choose_mode(params.n, params.k, params.alpha),
    };
    let mut asm = Assembler::new(params.n, options.round_robin_shortcut);
    match mode {
        Mode::Plain => assemble_plain(&mut asm, params, &options.sui)?,
        Mode::Large => assemble_large(&mut asm, params, &options.sui)?,
        Mode::Multiset => assemble_multiset(&mut asm, params, &options.sui)?,
        Mode::Random => unreachable!("random codes come from the random_code module"),
    }
    let code = GroupTestingCode {
        n: params.n,
        k: params.k,
        alpha: params.alpha,
        mode,
        queries: QuerySequence::new(asm.queries),
        blocks: asm.blocks,
    };
    debug_assert!(check_layout(code.n, &code.queries, &code.blocks).is_ok());
    Ok(code)
}

/// Level sizes `K, K/2, ..., 1` for `K = k` rounded up to a power of two.
fn levels(k: usize) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(k.next_power_of_two()), |&l| (l > 1).then_some(l / 2))
}

/// Feedback values below this are exact counts. With `alpha >= k` no
/// count of a `k`-set is ever clipped, so the cap is lifted to `k + 1`.
pub fn trusted_cap(alpha: u64, k: usize) -> u64 {
    if alpha >= k as u64 {
        alpha.max(k as u64 + 1)
    } else {
        alpha
    }
}

fn interference_cap(alpha: u64, k: usize) -> Result<u64> {
    let alpha = trusted_cap(alpha, k);
    if alpha < 2 {
        return Err(Error::CapTooSmall(alpha));
    }
    Ok(alpha - 1)
}

fn assemble_plain(asm: &mut Assembler, p: Params, cfg: &SuiConfig) -> Result<()> {
    let a1 = interference_cap(p.alpha, p.k)?;
    let c2k = DEFAULT_C2 as u128 * p.k as u128;
    for ell in levels(p.k).take_while(|&l| l as u128 * a1 as u128 > c2k) {
        let fam = build_sui(p.n, ell, LEVEL_EPSILON, p.k, a1, cfg)?;
        if asm.push(BlockKind::Sui, ell, fam.queries)? {
            return Ok(());
        }
    }
    let ell = rr_base_level(p.k, a1).min(p.k);
    let rs = plan_ssui(p.n, ell, p.k, a1)?;
    let queries = if asm.shortcut && rs.length() >= p.n as u128 {
        QuerySequence::round_robin(p.n)
    } else {
        build_ssui(p.n, ell, p.k, a1, rs.c)?.queries
    };
    asm.push(BlockKind::Ssui, ell, queries)?;
    Ok(())
}

fn assemble_large(asm: &mut Assembler, p: Params, cfg: &SuiConfig) -> Result<()> {
    let a1 = interference_cap(p.alpha, p.k)?;
    let twice_c2k = 2 * DEFAULT_C2 as u128 * p.k as u128;
    let base = rr_base_level(p.k, a1);
    for ell in levels(p.k) {
        let done = if ell as u128 * a1 as u128 >= twice_c2k {
            let fam = build_sui(p.n, ell, LEVEL_EPSILON, p.k, a1, cfg)?;
            asm.push(BlockKind::Sui, ell, fam.queries)?
        } else {
            let ell_base = base.max(ell);
            let fam = build_sui_chunked(p.n, ell, ell_base, LEVEL_EPSILON, p.k, a1, cfg)?;
            asm.push(BlockKind::Rr, ell, fam.queries)?
        };
        if done {
            break;
        }
    }
    Ok(())
}

/// Interference never reaches `k + 1`, so the SuI only has to isolate.
fn assemble_multiset(asm: &mut Assembler, p: Params, cfg: &SuiConfig) -> Result<()> {
    let cap = p.k as u64 + 1;
    for ell in levels(p.k) {
        let fam = build_sui(p.n, ell, LEVEL_EPSILON, p.k, cap, cfg)?;
        if asm.push(BlockKind::Sui, ell, fam.queries)? {
            break;
        }
    }
    Ok(())
}

struct Assembler {
    n: usize,
    shortcut: bool,
    queries: Vec<QuerySet>,
    blocks: Vec<Block>,
}

impl Assembler {
    fn new(n: usize, shortcut: bool) -> Self {
        Assembler {
            n,
            shortcut,
            queries: Vec::new(),
            blocks: Vec::new(),
        }
    }

    /// Appends the enhanced family; returns whether assembly should stop.
    fn push(&mut self, kind: BlockKind, level: usize, family: QuerySequence) -> Result<bool> {
        let stop = self.shortcut && is_round_robin(&family, self.n);
        for s in family.iter() {
            let enhanced = enhance(s, self.n)?;
            self.blocks.push(Block {
                kind,
                level,
                base: self.queries.len(),
                slices: enhanced.len() - 1,
            });
            self.queries.extend(enhanced);
        }
        Ok(stop)
    }
}

fn is_round_robin(family: &QuerySequence, n: usize) -> bool {
    family.len() == n
        && family
            .iter()
            .enumerate()
            .all(|(i, q)| q.as_slice() == [i + 1])
}
