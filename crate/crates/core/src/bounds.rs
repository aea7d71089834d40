//! Lower-bound evaluation and exhaustive solvability checks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exhaustive::{binomial, check_budget, count_sets_up_to, subsets_of_size, subsets_up_to};
use crate::model::{Element, OccurrenceIndex, QuerySequence};

/// The lower-bound expression evaluated without hidden constants, with
/// logarithms in base 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `min((k / alpha)^2, n / alpha)`.
    pub lb_capped_general: f64,
    /// `k log2(n / k) / log2(alpha)`; the denominator is 1 when `alpha = 1`.
    pub lb_info: f64,
    pub lb_total: f64,
    pub measured_m: Option<usize>,
    pub ratio: Option<f64>,
}

impl BoundReport {
    pub fn with_measured(mut self, m: usize) -> Self {
        self.measured_m = Some(m);
        self.ratio = Some(m as f64 / self.lb_total);
        self
    }
}

pub fn lower_bound(n: usize, k: usize, alpha: u64) -> Result<BoundReport> {
    if k > n || n == 0 || alpha == 0 {
        return Err(Error::InvalidParams(format!(
            "lower bound needs k <= n and alpha >= 1 (got n = {n}, k = {k}, alpha = {alpha})"
        )));
    }
    let (nf, kf, af) = (n as f64, k as f64, alpha as f64);
    let lb_capped_general = ((kf / af).powi(2)).min(nf / af);
    let denom = if alpha >= 2 { af.log2() } else { 1.0 };
    let lb_info = if k == 0 { 0.0 } else { kf * (nf / kf).log2() / denom };
    Ok(BoundReport {
        lb_capped_general,
        lb_info,
        lb_total: lb_capped_general + lb_info,
        measured_m: None,
        ratio: None,
    })
}

/// Feedback of `set` under `code`, computed through the occurrence index.
fn feedback_of(index: &OccurrenceIndex, m: usize, set: &[Element], alpha: u64) -> Vec<u64> {
    let mut fv = vec![0u64; m];
    for &v in set {
        for &q in index.queries_of(v) {
            fv[q] += 1;
        }
    }
    for x in &mut fv {
        *x = (*x).min(alpha);
    }
    fv
}

/// A set `K` (`|K| <= k`) and `x ∈ K` such that every query containing
/// `x` meets `K` in more than `alpha + 1` elements. Then `K` and
/// `K \ {x}` produce the same capped feedback.
///
/// Only `|K| = min(k, n)` is enumerated: growing `K` keeps a jammed `x`
/// jammed.
pub fn find_unjammed_violation(
    code: &QuerySequence,
    n: usize,
    k: usize,
    alpha: u64,
    budget: u128,
) -> Result<Option<(Vec<Element>, Element)>> {
    let size = k.min(n);
    check_budget(binomial(n, size), budget)?;
    let index = code.occurrence_index(n);
    let threshold = alpha.saturating_add(1);
    Ok(subsets_of_size(n, size).par_bridge().find_map_any(|set| {
        let counts = feedback_of(&index, code.len(), &set, u64::MAX);
        set.iter()
            .copied()
            .find(|&x| index.queries_of(x).iter().all(|&q| counts[q] > threshold))
            .map(|x| (set.clone(), x))
    }))
}

/// Two distinct sets of size at most `k` with equal feedback, if any.
pub fn find_collision(
    code: &QuerySequence,
    n: usize,
    k: usize,
    alpha: u64,
    budget: u128,
) -> Result<Option<(Vec<Element>, Vec<Element>)>> {
    check_budget(count_sets_up_to(n, k), budget)?;
    let index = code.occurrence_index(n);
    let mut all: Vec<(Vec<u64>, Vec<Element>)> = subsets_up_to(n, k)
        .par_bridge()
        .map(|set| (feedback_of(&index, code.len(), &set, alpha), set))
        .collect();
    all.par_sort_unstable();
    Ok(all
        .windows(2)
        .find(|w| w[0].0 == w[1].0)
        .map(|w| (w[0].1.clone(), w[1].1.clone())))
}

/// Whether all sets of size at most `k` have pairwise distinct feedback.
pub fn verify_uniqueness(
    code: &QuerySequence,
    n: usize,
    k: usize,
    alpha: u64,
    budget: u128,
) -> Result<bool> {
    Ok(find_collision(code, n, k, alpha, budget)?.is_none())
}

/// `(alpha + 1)^m >=` the number of sets of size at most `k`.
pub fn counting_check(m: usize, n: usize, k: usize, alpha: u64) -> bool {
    let target = count_sets_up_to(n, k);
    let base = alpha as u128 + 1;
    let mut acc: u128 = 1;
    for _ in 0..m {
        if acc >= target {
            return true;
        }
        acc = acc.saturating_mul(base);
    }
    acc >= target
}
