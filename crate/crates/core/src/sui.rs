//! Selectors under interference.
//!
//! A family selects `v` from `K1` under `alpha`-interference from `K2` when
//! some query `T` has `T ∩ K1 = {v}` and `|T ∩ K2| < alpha`. An
//! `(n, ell, eps, kappa, alpha)`-SuI leaves fewer than `eps * ell` elements
//! of any `K1` (`|K1| <= ell`) unselected against any `K2` (`|K2| <= kappa`).
//!
//! Queries are `T_b ∩ N(w_a)` for a strong selector `T` of strength
//! `c * delta` and a disperser with right side `W`, ordered `w`-major. When
//! that family would be at least `n` long the `n` singletons are used
//! instead. With the default disperser sizing this is always the case below
//! astronomically large `n`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::disperser::{
    CheckMode, ConstructedDisperser, Disperser, DisperserParams, SeededDisperser,
};
use crate::error::{Error, Result};
use crate::exhaustive::{
    binomial, check_budget, max_unselected, selection_sizes, subsets_of_size,
};
use crate::model::{check_power_of_two, Element, QuerySequence, QuerySet};
use crate::strong_selector::{build_strong_selector, RsCodeParams, DEFAULT_C2, DEFAULT_SELECTOR_C};

/// How a family's queries were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Singleton,
    DisperserComposed,
    /// Every query of a base SuI split into pieces of at most `alpha`.
    AlphaChunked,
}

/// Knobs for the disperser and the internal strong selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiConfig {
    /// Disperser left degree; defaults to `log2(n)^2`.
    pub degree: Option<usize>,
    /// Entropy loss; defaults to `log2(n)^3`.
    pub delta: Option<usize>,
    pub seed: u64,
    pub max_attempts: u32,
    pub dispersion_check: CheckMode,
    /// Multiplier `c` of the strong selector strength `c * delta`.
    pub selector_c: u64,
}

impl Default for SuiConfig {
    fn default() -> Self {
        SuiConfig {
            degree: None,
            delta: None,
            seed: 0,
            max_attempts: 64,
            dispersion_check: CheckMode::default(),
            selector_c: DEFAULT_SELECTOR_C,
        }
    }
}

impl SuiConfig {
    /// Disperser parameters for level `ell` with slack `epsilon`;
    /// `ell* = max(1, ceil(epsilon * ell))`.
    pub fn disperser_params(&self, ell: usize, epsilon: f64) -> Result<DisperserParams> {
        let ell_star = ((epsilon * ell as f64).ceil() as usize).max(1);
        let mut p = DisperserParams::new(ell_star, epsilon, self.seed)?;
        p.degree = self.degree;
        p.delta = self.delta;
        p.max_attempts = self.max_attempts;
        p.validate()?;
        Ok(p)
    }

    /// Sizes of the family without building anything.
    pub fn plan(&self, n: usize, ell: usize, epsilon: f64) -> Result<SuiPlan> {
        check_power_of_two(n)?;
        let disperser = self.disperser_params(ell, epsilon)?;
        let strength = self.selector_c as usize * disperser.resolved_delta(n);
        let selector = RsCodeParams::new(n, strength, self.selector_c)?;
        let right_size = disperser.right_size(n);
        let composed_len = selector.length().saturating_mul(right_size as u128);
        Ok(SuiPlan {
            disperser,
            right_size,
            strength,
            selector,
            singleton: n as u128 <= composed_len,
        })
    }
}

/// Analytic sizing of one SuI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiPlan {
    pub disperser: DisperserParams,
    pub right_size: usize,
    pub strength: usize,
    pub selector: RsCodeParams,
    /// Whether `n <= |T| * |W|`, in which case singletons are emitted.
    pub singleton: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiFamily {
    pub queries: QuerySequence,
    pub n: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub kappa: usize,
    pub alpha: u64,
    pub provenance: Provenance,
    /// Disperser used by a composed family.
    pub disperser: Option<ConstructedDisperser>,
    /// Upper bound on the occurrences of any element.
    pub occurrence_bound: usize,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParams(format!(
            "epsilon = {epsilon} must lie in (0, 1/2)"
        )));
    }
    Ok(())
}

fn check_common(n: usize, ell: usize, epsilon: f64, alpha: u64) -> Result<()> {
    check_power_of_two(n)?;
    check_epsilon(epsilon)?;
    if ell == 0 {
        return Err(Error::InvalidParams("ell must be at least 1".into()));
    }
    if alpha == 0 {
        return Err(Error::InvalidParams("alpha must be at least 1".into()));
    }
    Ok(())
}

/// Builds an `(n, ell, epsilon, kappa, alpha)`-SuI. Requires
/// `alpha * ell > c2 * kappa`.
pub fn build_sui(
    n: usize,
    ell: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    config: &SuiConfig,
) -> Result<SuiFamily> {
    check_common(n, ell, epsilon, alpha)?;
    if (alpha as u128) * (ell as u128) <= (DEFAULT_C2 as u128) * (kappa as u128) {
        return Err(Error::Inadmissible(format!(
            "alpha * ell > c2 * kappa violated: {alpha} * {ell} <= {DEFAULT_C2} * {kappa}"
        )));
    }
    compose(n, ell, epsilon, kappa, alpha, config)
}

fn compose(
    n: usize,
    ell: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    config: &SuiConfig,
) -> Result<SuiFamily> {
    let plan = config.plan(n, ell, epsilon)?;
    let mut family = SuiFamily {
        queries: QuerySequence::round_robin(n),
        n,
        ell,
        epsilon,
        kappa,
        alpha,
        provenance: Provenance::Singleton,
        disperser: None,
        occurrence_bound: 1,
    };
    if plan.singleton {
        return Ok(family);
    }

    let built = SeededDisperser {
        params: plan.disperser,
        check: config.dispersion_check,
    }
    .construct(n)?;
    let selector = build_strong_selector(n, plan.strength, config.selector_c)?;
    let neighborhoods = built.graph.right_neighborhoods();
    let queries = neighborhoods
        .par_iter()
        .flat_map_iter(|nw| selector.queries.iter().map(move |t| intersect(t, nw)))
        .collect::<Vec<_>>();

    family.queries = QuerySequence::new(queries);
    family.provenance = Provenance::DisperserComposed;
    family.occurrence_bound = built.graph.degree() * selector.rs.q as usize;
    family.disperser = Some(built);
    Ok(family)
}

fn intersect(a: &QuerySet, b: &QuerySet) -> QuerySet {
    let (a, b) = (a.as_slice(), b.as_slice());
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    QuerySet::new(out)
}

/// The sparse variant for `ell * alpha <= c2 * kappa`: builds the SuI for
/// `ell_base = ceil(c2 * kappa / alpha)` and splits every query into
/// consecutive pieces of at most `alpha` elements.
pub fn build_sui_rr(
    n: usize,
    ell: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    config: &SuiConfig,
) -> Result<SuiFamily> {
    check_common(n, ell, epsilon, alpha)?;
    if (ell as u128) * (alpha as u128) > (DEFAULT_C2 as u128) * (kappa as u128) {
        return Err(Error::Inadmissible(format!(
            "ell * alpha <= c2 * kappa violated: {ell} * {alpha} > {DEFAULT_C2} * {kappa}"
        )));
    }
    build_sui_chunked(n, ell, rr_base_level(kappa, alpha), epsilon, kappa, alpha, config)
}

/// `max(1, ceil(c2 * kappa / alpha))`.
pub(crate) fn rr_base_level(kappa: usize, alpha: u64) -> usize {
    ((DEFAULT_C2 as u128 * kappa as u128).div_ceil(alpha as u128) as usize).max(1)
}

/// Chunks the SuI built for `ell_base` and labels the result with `ell`.
pub(crate) fn build_sui_chunked(
    n: usize,
    ell: usize,
    ell_base: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    config: &SuiConfig,
) -> Result<SuiFamily> {
    check_common(n, ell_base, epsilon, alpha)?;
    let base = compose(n, ell_base, epsilon, kappa, alpha, config)?;
    Ok(SuiFamily {
        queries: base
            .queries
            .iter()
            .flat_map(|q| chunk_query(q, alpha as usize))
            .collect(),
        ell,
        provenance: Provenance::AlphaChunked,
        ..base
    })
}

/// Splits `q` in order into `ceil(|q| / size)` pieces of at most `size`.
pub fn chunk_query(q: &QuerySet, size: usize) -> Vec<QuerySet> {
    assert!(size > 0, "chunk size must be positive");
    q.as_slice()
        .chunks(size)
        .map(|c| QuerySet::new(c.iter().copied()))
        .collect()
}

/// Outcome of a selection check.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiReport {
    /// Largest number of unselected elements of any checked `K1`.
    pub max_unselected: usize,
    /// `eps * ell`; passing requires `max_unselected` strictly below it.
    pub threshold: f64,
    pub checked_sets: u128,
    /// A `K1` attaining `max_unselected`, if positive.
    pub witness: Option<Vec<Element>>,
}

impl SuiReport {
    pub fn pass(&self) -> bool {
        (self.max_unselected as f64) < self.threshold
    }
}

fn fold_reports(
    sets: impl ParallelIterator<Item = Vec<Element>>,
    worst: impl Fn(&[Element]) -> usize + Sync + Send,
) -> (usize, Option<Vec<Element>>, u128) {
    sets.map(|k1| {
        let u = worst(&k1);
        (u, (u > 0).then_some(k1), 1u128)
    })
    .reduce(
        || (0, None, 0),
        |a, b| {
            let count = a.2 + b.2;
            if b.0 > a.0 {
                (b.0, b.1, count)
            } else {
                (a.0, a.1, count)
            }
        },
    )
}

/// Exhaustive check over every `K1` (`|K1| <= ell`) and every disjoint `K2`
/// (`|K2| <= kappa`). Refuses when `C(n, ell) * C(n, kappa)` exceeds
/// `budget`.
pub fn verify_sui(
    queries: &QuerySequence,
    n: usize,
    ell: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    budget: u128,
) -> Result<SuiReport> {
    check_budget(
        binomial(n, ell.min(n)).saturating_mul(binomial(n, kappa.min(n))),
        budget,
    )?;
    let index = queries.occurrence_index(n);
    let worst = |k1: &[Element]| max_unselected(queries, &index, k1, kappa, alpha, n, usize::MAX);
    let mut best = (0, None, 0u128);
    for size in selection_sizes(n, ell, kappa) {
        let r = fold_reports(subsets_of_size(n, size).par_bridge(), worst);
        best.2 += r.2;
        if r.0 > best.0 {
            best = (r.0, r.1, best.2);
        }
    }
    Ok(SuiReport {
        max_unselected: best.0,
        threshold: epsilon * ell as f64,
        checked_sets: best.2,
        witness: best.1,
    })
}

/// As [`verify_sui`] but over `trials` random `K1` of size `min(ell, n)`;
/// `K2` is still chosen adversarially for each of them.
#[allow(clippy::too_many_arguments)]
pub fn verify_sui_sampled(
    queries: &QuerySequence,
    n: usize,
    ell: usize,
    epsilon: f64,
    kappa: usize,
    alpha: u64,
    trials: usize,
    seed: u64,
) -> SuiReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = ell.min(n);
    let sets: Vec<Vec<Element>> = (0..trials)
        .map(|_| {
            let mut s: Vec<Element> = sample(&mut rng, n, size).iter().map(|i| i + 1).collect();
            s.sort_unstable();
            s
        })
        .collect();
    let index = queries.occurrence_index(n);
    let worst = |k1: &[Element]| max_unselected(queries, &index, k1, kappa, alpha, n, usize::MAX);
    let (max_unselected, witness, checked_sets) = fold_reports(sets.into_par_iter(), worst);
    SuiReport {
        max_unselected,
        threshold: epsilon * ell as f64,
        checked_sets,
        witness,
    }
}
