//! Seeded random alpha-Round-Robin codes and their claim checks.
//!
//! The first `t1` queries include every element with probability `p1`, the
//! next `t2` with probability `p2`. When `t1 + t2 >= n` the Round-Robin code
//! is shorter and is returned instead. The logarithms in `t1` and `t2` are
//! the only floating-point arithmetic in the crate.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exhaustive::{check_budget, count_sets_up_to, subsets_of_size};
use crate::model::{Element, QuerySequence, QuerySet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCodeParams {
    pub n: usize,
    pub k: usize,
    pub alpha: u64,
    /// `ceil((8n / alpha) (ln(ne) + 4))`.
    pub t1: usize,
    /// `ceil(k (ln(ne) + 4))`.
    pub t2: usize,
    /// `alpha / (6n)`.
    pub p1: f64,
    /// `min(1 / (6k), alpha / (6n))`.
    pub p2: f64,
    pub seed: u64,
}

impl RandomCodeParams {
    pub fn new(n: usize, k: usize, alpha: u64, seed: u64) -> Result<Self> {
        if n < 2 || k == 0 || k > n || alpha == 0 {
            return Err(Error::InvalidParams(format!(
                "random code needs n >= 2, 1 <= k <= n, alpha >= 1 (got n = {n}, k = {k}, alpha = {alpha})"
            )));
        }
        let log_term = (n as f64).ln() + 1.0 + 4.0;
        let (nf, kf, af) = (n as f64, k as f64, alpha as f64);
        Ok(RandomCodeParams {
            n,
            k,
            alpha,
            t1: (8.0 * nf / af * log_term).ceil() as usize,
            t2: (kf * log_term).ceil() as usize,
            p1: (af / (6.0 * nf)).min(1.0),
            p2: (1.0 / (6.0 * kf)).min(af / (6.0 * nf)).min(1.0),
            seed,
        })
    }

    /// Whether the Round-Robin code is used instead.
    pub fn falls_back(&self) -> bool {
        self.t1 + self.t2 >= self.n
    }

    /// `min(t1 + t2, n)`.
    pub fn length(&self) -> usize {
        (self.t1 + self.t2).min(self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomCode {
    pub params: RandomCodeParams,
    pub queries: QuerySequence,
    /// Round-Robin in place of a random draw.
    pub fallback: bool,
}

impl RandomCode {
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    /// Queries used for sets with `|K| <= n / alpha`.
    pub fn first_part(&self) -> &[QuerySet] {
        if self.is_fallback() {
            return self.queries.as_slice();
        }
        &self.queries.as_slice()[..self.params.t1]
    }

    /// Queries used for sets with `|K| > n / alpha`.
    pub fn second_part(&self) -> &[QuerySet] {
        if self.is_fallback() {
            return self.queries.as_slice();
        }
        &self.queries.as_slice()[self.params.t1..]
    }
}

pub fn build_random_code(n: usize, k: usize, alpha: u64, seed: u64) -> Result<RandomCode> {
    let params = RandomCodeParams::new(n, k, alpha, seed)?;
    if params.falls_back() {
        return Ok(RandomCode {
            params,
            queries: QuerySequence::round_robin(n),
            fallback: true,
        });
    }
    Ok(draw(params))
}

/// Draws both parts even when `t1 + t2 >= n`, where [`build_random_code`]
/// would fall back to Round-Robin.
pub fn draw_random_code(n: usize, k: usize, alpha: u64, seed: u64) -> Result<RandomCode> {
    Ok(draw(RandomCodeParams::new(n, k, alpha, seed)?))
}

fn draw(params: RandomCodeParams) -> RandomCode {
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut draw = |p: f64| -> QuerySet { (1..=n).filter(|_| rng.gen_bool(p)).collect() };
    let mut queries: Vec<QuerySet> = (0..params.t1).map(|_| draw(params.p1)).collect();
    queries.extend((0..params.t2).map(|_| draw(params.p2)));
    RandomCode {
        params,
        queries: QuerySequence::new(queries),
        fallback: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimMode {
    Exhaustive { budget: u128 },
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// 1-based index of an offending query.
    Query(usize),
    /// A set no query of the relevant part hits exactly once.
    Set(Vec<Element>),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Query(i) => write!(f, "query {i}"),
            Witness::Set(s) => {
                let items: Vec<String> = s.iter().map(Element::to_string).collect();
                write!(f, "K = {{{}}}", items.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimResult {
    pub pass: bool,
    pub checked: u128,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimReport {
    /// Every query has at most `alpha` elements.
    pub claim1: ClaimResult,
    /// Small sets are hit exactly once by a first-part query.
    pub claim2: ClaimResult,
    /// Large sets are hit exactly once by a second-part query.
    pub claim3: ClaimResult,
}

impl ClaimReport {
    pub fn pass(&self) -> bool {
        self.claim1.pass && self.claim2.pass && self.claim3.pass
    }
}

impl fmt::Display for ClaimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let claims = [
            ("claim 1 (query size <= alpha)", &self.claim1),
            ("claim 2 (small sets hit once)", &self.claim2),
            ("claim 3 (large sets hit once)", &self.claim3),
        ];
        for (name, c) in claims {
            write!(f, "{name}: {}", if c.pass { "pass" } else { "FAIL" })?;
            write!(f, " ({} checked)", c.checked)?;
            if let Some(w) = &c.witness {
                write!(f, " witness {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-element membership bitmaps over one part of the code.
struct Columns {
    cols: Vec<Vec<u64>>,
}

impl Columns {
    fn new(part: &[QuerySet], n: usize) -> Self {
        let words = part.len().div_ceil(64);
        let mut cols = vec![vec![0u64; words]; n + 1];
        for (i, q) in part.iter().enumerate() {
            for v in q.iter() {
                cols[v][i / 64] |= 1 << (i % 64);
            }
        }
        Columns { cols }
    }

    /// Whether some query meets `set` in exactly one element.
    fn hits_once(&self, set: &[Element]) -> bool {
        let words = self.cols[0].len();
        (0..words).any(|w| {
            let (mut once, mut more) = (0u64, 0u64);
            for &v in set {
                let c = self.cols[v][w];
                more |= once & c;
                once = (once | c) & !more;
            }
            once != 0
        })
    }
}

pub fn verify_claims(code: &RandomCode, mode: ClaimMode) -> Result<ClaimReport> {
    let RandomCodeParams { n, k, alpha, .. } = code.params;
    let k = k.min(n);

    let oversized = code.queries.iter().position(|q| q.len() as u64 > alpha);
    let claim1 = ClaimResult {
        pass: oversized.is_none(),
        checked: code.queries.len() as u128,
        witness: oversized.map(|i| Witness::Query(i + 1)),
    };

    // |K| <= n / alpha  <=>  |K| * alpha <= n
    let small = |s: usize| s as u128 * alpha as u128 <= n as u128;
    let first = Columns::new(code.first_part(), n);
    let second = Columns::new(code.second_part(), n);
    let sizes2: Vec<usize> = (1..=k).filter(|&s| small(s)).collect();
    let sizes3: Vec<usize> = (1..=k).filter(|&s| !small(s)).collect();

    let (claim2, claim3) = match mode {
        ClaimMode::Exhaustive { budget } => {
            check_budget(count_sets_up_to(n, k), budget)?;
            (
                exhaustive_claim(&first, n, &sizes2),
                exhaustive_claim(&second, n, &sizes3),
            )
        }
        ClaimMode::Sampled { trials, seed } => (
            sampled_claim(&first, n, &sizes2, trials, seed),
            sampled_claim(&second, n, &sizes3, trials, seed.wrapping_add(1)),
        ),
    };
    Ok(ClaimReport {
        claim1,
        claim2,
        claim3,
    })
}

fn exhaustive_claim(cols: &Columns, n: usize, sizes: &[usize]) -> ClaimResult {
    let mut checked = 0u128;
    for &s in sizes {
        let miss = subsets_of_size(n, s)
            .par_bridge()
            .find_any(|set| !cols.hits_once(set));
        if let Some(set) = miss {
            return ClaimResult {
                pass: false,
                checked,
                witness: Some(Witness::Set(set)),
            };
        }
        checked += crate::exhaustive::binomial(n, s);
    }
    ClaimResult {
        pass: true,
        checked,
        witness: None,
    }
}

fn sampled_claim(
    cols: &Columns,
    n: usize,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> ClaimResult {
    if sizes.is_empty() {
        return ClaimResult {
            pass: true,
            checked: 0,
            witness: None,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let s = sizes[rng.gen_range(0..sizes.len())];
        let mut set: Vec<Element> = sample(&mut rng, n, s).iter().map(|i| i + 1).collect();
        set.sort_unstable();
        if !cols.hits_once(&set) {
            return ClaimResult {
                pass: false,
                checked: t as u128,
                witness: Some(Witness::Set(set)),
            };
        }
    }
    ClaimResult {
        pass: true,
        checked: trials as u128,
        witness: None,
    }
}

/// A code whose claims passed, with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedRandomCode {
    pub code: RandomCode,
    pub report: ClaimReport,
    pub attempts: u32,
}

/// Tries seeds `seed, seed + 1, ...` until the claims pass.
pub fn build_verified_random_code(
    n: usize,
    k: usize,
    alpha: u64,
    seed: u64,
    mode: ClaimMode,
    max_attempts: u32,
) -> Result<VerifiedRandomCode> {
    retry_claims(seed, mode, max_attempts, |s| build_random_code(n, k, alpha, s))
}

/// Calls `build` with `seed, seed + 1, ...` until the claims pass.
pub fn retry_claims(
    seed: u64,
    mode: ClaimMode,
    max_attempts: u32,
    build: impl Fn(u64) -> Result<RandomCode>,
) -> Result<VerifiedRandomCode> {
    for attempt in 1..=max_attempts {
        let code = build(seed.wrapping_add(u64::from(attempt - 1)))?;
        let report = verify_claims(&code, mode)?;
        if report.pass() {
            return Ok(VerifiedRandomCode {
                code,
                report,
                attempts: attempt,
            });
        }
    }
    Err(Error::ClaimsFailed {
        first_seed: seed,
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustive::DEFAULT_BUDGET;

    /// Direct transcription of the length formulas.
    fn lengths(n: f64, k: f64, alpha: f64) -> (usize, usize) {
        let l = (n * std::f64::consts::E).ln() + 4.0;
        ((8.0 * n / alpha * l).ceil() as usize, (k * l).ceil() as usize)
    }

    #[test]
    fn formulas() {
        let p = RandomCodeParams::new(64, 3, 8, 0).unwrap();
        assert_eq!(p.t1, 587);
        for (n, k, a) in [(64, 3, 8), (1024, 3, 128), (4096, 10, 64), (32, 3, 8)] {
            let p = RandomCodeParams::new(n, k, a, 0).unwrap();
            assert_eq!((p.t1, p.t2), lengths(n as f64, k as f64, a as f64));
        }
        let p = RandomCodeParams::new(1024, 3, 128, 0).unwrap();
        assert!((p.p1 - 128.0 / 6144.0).abs() < 1e-12);
        assert!((p.p2 - 1.0 / 48.0).abs() < 1e-12);
        assert!(RandomCodeParams::new(1, 1, 1, 0).is_err());
    }

    #[test]
    fn fallback_is_round_robin() {
        let c = build_random_code(32, 3, 8, 5).unwrap();
        assert!(c.is_fallback());
        assert_eq!(c.queries, QuerySequence::round_robin(32));
        let r = verify_claims(&c, ClaimMode::Exhaustive { budget: DEFAULT_BUDGET }).unwrap();
        assert!(r.pass());
    }

    #[test]
    fn deterministic_and_sized() {
        let a = build_random_code(1024, 3, 128, 11).unwrap();
        assert!(!a.is_fallback());
        assert_eq!(a.queries.len(), a.params.length());
        assert_eq!(a, build_random_code(1024, 3, 128, 11).unwrap());
        assert_ne!(a, build_random_code(1024, 3, 128, 12).unwrap());
    }

    #[test]
    fn oversized_query_fails_claim1() {
        let mut c = build_random_code(32, 3, 8, 0).unwrap();
        let mut qs = c.queries.into_inner();
        qs[4] = QuerySet::new(1..=9);
        c.queries = QuerySequence::new(qs);
        let r = verify_claims(&c, ClaimMode::Exhaustive { budget: DEFAULT_BUDGET }).unwrap();
        assert!(!r.claim1.pass);
        assert_eq!(r.claim1.witness, Some(Witness::Query(5)));
    }

    #[test]
    fn exactly_once_detection() {
        let part = vec![QuerySet::new([1, 2]), QuerySet::new([2, 3])];
        let cols = Columns::new(&part, 4);
        assert!(cols.hits_once(&[1]));
        assert!(cols.hits_once(&[1, 3]));
        assert!(!cols.hits_once(&[1, 2, 3]));
        assert!(!cols.hits_once(&[4]));
        assert!(!cols.hits_once(&[]));
    }

    #[test]
    fn exhaustive_claims_on_a_real_random_code() {
        let v = build_verified_random_code(
            1024,
            2,
            128,
            0,
            ClaimMode::Exhaustive { budget: DEFAULT_BUDGET },
            20,
        )
        .unwrap();
        assert!(!v.code.is_fallback());
        assert!(v.report.pass());
        assert_eq!(v.report.claim2.checked, 1024 + 1024 * 1023 / 2);
    }
}
