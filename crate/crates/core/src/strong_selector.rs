//! Strong selectors under interference from Reed–Solomon superimposed codes.
//!
//! Element `i` is identified with a polynomial `P_i` of degree at most `d`
//! over `F_q`. For every argument `x` there is a block of `q` queries, and
//! `i` belongs to query `x * q + P_i(x)` of that block (0-based). Two
//! distinct polynomials agree on at most `d` arguments, which is what makes
//! the family selective.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exhaustive::{binomial, check_budget, max_unselected, selection_sizes, subsets_of_size};
use crate::field::{is_prime, next_prime, PrimeField};
use crate::model::{check_power_of_two, Element, QuerySet, QuerySequence};

/// Starting value of the multiplier `c` in `q >= c * ell * d`.
pub const DEFAULT_SELECTOR_C: u64 = 2;

/// Admissibility constant: selectors require `ell * alpha >= C2 * kappa`.
pub const DEFAULT_C2: u64 = 1;

const MAX_ESCALATIONS: u32 = 20;

/// Degree and field size of the underlying Reed–Solomon code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RsCodeParams {
    pub n: usize,
    pub ell: usize,
    pub degree: u32,
    pub q: u64,
    pub c: u64,
}

impl RsCodeParams {
    pub fn new(n: usize, ell: usize, c: u64) -> Result<Self> {
        if n == 0 || ell == 0 || c == 0 {
            return Err(Error::InvalidParams(format!(
                "Reed-Solomon selector needs n, ell, c >= 1 (got n = {n}, ell = {ell}, c = {c})"
            )));
        }
        let degree = rs_degree(n, ell);
        let q = smallest_admissible_prime(ell, degree, c, n);
        Ok(RsCodeParams {
            n,
            ell,
            degree,
            q,
            c,
        })
    }

    /// Number of queries, `q^2`.
    pub fn length(&self) -> u128 {
        self.q as u128 * self.q as u128
    }

    /// The sufficient condition `floor(kappa * d / alpha) < q - (ell - 1) * d`
    /// under which every element of every `K1` is selected.
    pub fn margin_ok(&self, kappa: usize, alpha: u64) -> bool {
        let d = self.degree as u128;
        let collisions = (self.ell as u128 - 1) * d;
        let q = self.q as u128;
        if collisions >= q {
            return false;
        }
        (kappa as u128 * d) / (alpha as u128) < q - collisions
    }
}

/// `ceil(log_ell n)`, clamped to at least 1; `ell < 2` is treated as 2.
pub fn rs_degree(n: usize, ell: usize) -> u32 {
    let base = ell.max(2) as u128;
    let mut d = 1u32;
    let mut pow = base;
    while pow < n as u128 {
        pow *= base;
        d += 1;
    }
    d
}

/// Smallest prime `q >= c * ell * d` with `q^(d + 1) >= n`.
pub fn smallest_admissible_prime(ell: usize, d: u32, c: u64, n: usize) -> u64 {
    let mut q = next_prime(c * ell as u64 * d as u64);
    while (q as u128).checked_pow(d + 1).is_some_and(|p| p < n as u128) {
        q = next_prime(q + 1);
    }
    q
}

/// Coefficients (constant term first) of the polynomial assigned to
/// element `i`: the `d + 1` base-`q` digits of `i - 1`.
pub fn nth_polynomial(i: Element, params: &RsCodeParams) -> Result<Vec<u64>> {
    if i == 0 || i > params.n {
        return Err(Error::ElementOutOfRange {
            element: i,
            n: params.n,
        });
    }
    let mut rest = (i - 1) as u64;
    let mut coeffs = Vec::with_capacity(params.degree as usize + 1);
    for _ in 0..=params.degree {
        coeffs.push(rest % params.q);
        rest /= params.q;
    }
    debug_assert_eq!(rest, 0, "n exceeds q^(d+1)");
    Ok(coeffs)
}

/// An `(n, ell, kappa, alpha)` strong selector under interference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsuiFamily {
    pub queries: QuerySequence,
    pub n: usize,
    pub ell: usize,
    pub kappa: usize,
    pub alpha: u64,
    pub rs: RsCodeParams,
    /// Whether the counting margin guarantees the selection property.
    pub analytic_ok: bool,
}

fn check_admissible(ell: usize, kappa: usize, alpha: u64, c2: u64) -> Result<()> {
    if alpha == 0 {
        return Err(Error::InvalidParams("alpha must be at least 1".into()));
    }
    if (ell as u128) * (alpha as u128) < (c2 as u128) * (kappa as u128) {
        return Err(Error::Inadmissible(format!(
            "ell * alpha >= c2 * kappa violated: {ell} * {alpha} < {c2} * {kappa}"
        )));
    }
    Ok(())
}

/// Builds the family for a fixed multiplier `c`.
pub fn build_ssui(n: usize, ell: usize, kappa: usize, alpha: u64, c: u64) -> Result<SsuiFamily> {
    check_power_of_two(n)?;
    check_admissible(ell, kappa, alpha, DEFAULT_C2)?;
    let rs = RsCodeParams::new(n, ell, c)?;
    Ok(build_from_params(rs, kappa, alpha))
}

/// Picks the multiplier: starts at [`DEFAULT_SELECTOR_C`] and doubles it
/// until the counting margin holds.
pub fn plan_ssui(n: usize, ell: usize, kappa: usize, alpha: u64) -> Result<RsCodeParams> {
    check_power_of_two(n)?;
    check_admissible(ell, kappa, alpha, DEFAULT_C2)?;
    let mut c = DEFAULT_SELECTOR_C;
    for _ in 0..MAX_ESCALATIONS {
        let rs = RsCodeParams::new(n, ell, c)?;
        if rs.margin_ok(kappa, alpha) {
            return Ok(rs);
        }
        c *= 2;
    }
    Err(Error::Inadmissible(format!(
        "no multiplier up to {c} satisfies the selection margin for ell = {ell}, kappa = {kappa}, alpha = {alpha}"
    )))
}

/// [`build_ssui`] with the multiplier chosen by [`plan_ssui`].
pub fn build_ssui_auto(n: usize, ell: usize, kappa: usize, alpha: u64) -> Result<SsuiFamily> {
    let rs = plan_ssui(n, ell, kappa, alpha)?;
    Ok(build_from_params(rs, kappa, alpha))
}

/// `(n, w)`-strong selector: a strong selector with no interference set.
pub fn build_strong_selector(n: usize, strength: usize, c: u64) -> Result<SsuiFamily> {
    build_ssui(n, strength, 0, 1, c)
}

fn build_from_params(rs: RsCodeParams, kappa: usize, alpha: u64) -> SsuiFamily {
    debug_assert!(is_prime(rs.q));
    let field = PrimeField::new(rs.q).expect("q is prime by construction");
    let q = rs.q as usize;

    let columns: Vec<Vec<usize>> = (1..=rs.n)
        .into_par_iter()
        .map(|i| {
            let coeffs = nth_polynomial(i, &rs).expect("i in range");
            (0..rs.q)
                .map(|x| x as usize * q + field.eval(&coeffs, x) as usize)
                .collect()
        })
        .collect();

    let mut rows: Vec<Vec<Element>> = vec![Vec::new(); q * q];
    for (i, col) in columns.iter().enumerate() {
        for &r in col {
            rows[r].push(i + 1);
        }
    }
    SsuiFamily {
        queries: rows.into_iter().map(QuerySet::new).collect(),
        n: rs.n,
        ell: rs.ell,
        kappa,
        alpha,
        analytic_ok: rs.margin_ok(kappa, alpha),
        rs,
    }
}

/// Exhaustive check of the strong selection property: for every `K1`
/// (`|K1| <= ell`), every disjoint `K2` (`|K2| <= kappa`) and every
/// `v ∈ K1`, some query `T` has `T ∩ K1 = {v}` and `|T ∩ K2| < alpha`.
///
/// Refuses when `C(n, ell) * C(n, kappa)` exceeds `budget`.
pub fn verify_ssui(
    queries: &QuerySequence,
    n: usize,
    ell: usize,
    kappa: usize,
    alpha: u64,
    budget: u128,
) -> Result<bool> {
    check_budget(
        binomial(n, ell.min(n)).saturating_mul(binomial(n, kappa.min(n))),
        budget,
    )?;
    let index = queries.occurrence_index(n);
    let sizes = selection_sizes(n, ell, kappa);
    Ok(sizes.into_iter().all(|size| {
        subsets_of_size(n, size)
            .par_bridge()
            .all(|k1| max_unselected(queries, &index, &k1, kappa, alpha, n, 1) == 0)
    }))
}

/// Largest number of queries shared by two distinct elements.
pub fn max_cooccurrence(queries: &QuerySequence, n: usize) -> usize {
    let index = queries.occurrence_index(n);
    let mut best = 0;
    for a in 1..=n {
        let qa = index.queries_of(a);
        for b in a + 1..=n {
            let qb = index.queries_of(b);
            let (mut i, mut j, mut shared) = (0, 0, 0);
            while i < qa.len() && j < qb.len() {
                match qa[i].cmp(&qb[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        shared += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            best = best.max(shared);
        }
    }
    best
}
