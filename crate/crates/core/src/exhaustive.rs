//! Shared machinery for the exhaustive small-instance oracles: counting,
//! budget guards, subset enumeration and the interference-blocking search
//! used by the selector verifiers.

use fixedbitset::FixedBitSet;
use itertools::Itertools;

use crate::error::{Error, Result};
use crate::model::{Element, OccurrenceIndex, QuerySequence};

/// Default cap on the candidate count an exhaustive oracle will accept.
pub const DEFAULT_BUDGET: u128 = 10_000_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of subsets of `1..=n` with at most `k` elements.
pub fn count_sets_up_to(n: usize, k: usize) -> u128 {
    (0..=k.min(n)).fold(0u128, |acc, j| acc.saturating_add(binomial(n, j)))
}

pub fn check_budget(required: u128, budget: u128) -> Result<()> {
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// All `size`-subsets of `1..=n` in lexicographic order.
pub fn subsets_of_size(n: usize, size: usize) -> impl Iterator<Item = Vec<Element>> {
    (1..=n).combinations(size)
}

/// All subsets of `1..=n` with at most `k` elements, smallest first.
pub fn subsets_up_to(n: usize, k: usize) -> impl Iterator<Item = Vec<Element>> {
    (0..=k.min(n)).flat_map(move |j| subsets_of_size(n, j))
}

/// The sizes of `K1` worth enumerating for a selection property with
/// selection set bound `ell` and interference bound `kappa`.
///
/// Both "failing to select" and "interference" are monotone in their sets,
/// so when a maximal `K1` and a disjoint maximal `K2` always fit inside the
/// universe it suffices to look at `|K1| = ell`. Otherwise every size is
/// enumerated.
pub(crate) fn selection_sizes(n: usize, ell: usize, kappa: usize) -> Vec<usize> {
    let ell = ell.min(n);
    if ell + kappa <= n {
        vec![ell]
    } else {
        (1..=ell).collect()
    }
}

/// For one `K1`, the largest number of its elements an adversary can leave
/// unselected by choosing `K2` (disjoint from `K1`, at most `kappa`
/// elements) so that every query isolating one of them carries at least
/// `alpha` members of `K2`. The search stops early once `limit` is reached.
pub(crate) fn max_unselected(
    queries: &QuerySequence,
    index: &OccurrenceIndex,
    k1: &[Element],
    kappa: usize,
    alpha: u64,
    n: usize,
    limit: usize,
) -> usize {
    // isolating[i] = the queries T with T ∩ K1 = {k1[i]}, listed as T \ K1
    let isolating: Vec<Vec<&[Element]>> = k1
        .iter()
        .map(|&v| {
            index
                .queries_of(v)
                .iter()
                .map(|&qi| queries[qi].as_slice())
                .filter(|t| k1.iter().all(|&u| u == v || t.binary_search(&u).is_err()))
                .collect()
        })
        .collect();

    let mut search = BlockingSearch::new(n, alpha);
    let lists_for = |members: &[usize]| -> Vec<Vec<Element>> {
        members
            .iter()
            .flat_map(|&i| {
                let v = k1[i];
                isolating[i]
                    .iter()
                    .map(move |t| t.iter().copied().filter(|&u| u != v).collect())
            })
            .collect()
    };

    let candidates: Vec<usize> = (0..k1.len())
        .filter(|&i| search.blockable(&lists_for(&[i]), kappa))
        .collect();
    let mut best = usize::from(!candidates.is_empty());
    if best >= limit {
        return best;
    }
    for r in 2..=candidates.len() {
        let found = candidates
            .iter()
            .copied()
            .combinations(r)
            .any(|u| search.blockable(&lists_for(&u), kappa));
        if !found {
            break;
        }
        best = r;
        if best >= limit {
            break;
        }
    }
    best
}

/// Decides whether at most `budget` elements can hit every constraint list
/// at least `alpha` times. Branches on the most constrained list and, in the
/// i-th branch, forbids the elements tried in branches `1..i`.
pub(crate) struct BlockingSearch {
    alpha: u64,
    chosen: FixedBitSet,
    forbidden: FixedBitSet,
}

impl BlockingSearch {
    pub(crate) fn new(n: usize, alpha: u64) -> Self {
        BlockingSearch {
            alpha,
            chosen: FixedBitSet::with_capacity(n + 1),
            forbidden: FixedBitSet::with_capacity(n + 1),
        }
    }

    pub(crate) fn blockable(&mut self, constraints: &[Vec<Element>], budget: usize) -> bool {
        self.chosen.clear();
        self.forbidden.clear();
        let mut hits = vec![0u64; constraints.len()];
        self.dfs(constraints, &mut hits, budget)
    }

    fn dfs(&mut self, constraints: &[Vec<Element>], hits: &mut [u64], remaining: usize) -> bool {
        let mut pick: Option<(usize, usize)> = None;
        for (ci, c) in constraints.iter().enumerate() {
            if hits[ci] >= self.alpha {
                continue;
            }
            let deficit = (self.alpha - hits[ci]) as usize;
            if deficit > remaining {
                return false;
            }
            let avail = c
                .iter()
                .filter(|&&e| !self.chosen.contains(e) && !self.forbidden.contains(e))
                .count();
            if avail < deficit {
                return false;
            }
            if pick.is_none_or(|(_, a)| avail < a) {
                pick = Some((ci, avail));
            }
        }
        let Some((ci, _)) = pick else {
            return true;
        };
        let options: Vec<Element> = constraints[ci]
            .iter()
            .copied()
            .filter(|&e| !self.chosen.contains(e) && !self.forbidden.contains(e))
            .collect();
        let mut newly_forbidden = Vec::new();
        let mut found = false;
        for e in options {
            self.chosen.insert(e);
            for (cj, c) in constraints.iter().enumerate() {
                if c.binary_search(&e).is_ok() {
                    hits[cj] += 1;
                }
            }
            found = self.dfs(constraints, hits, remaining - 1);
            for (cj, c) in constraints.iter().enumerate() {
                if c.binary_search(&e).is_ok() {
                    hits[cj] -= 1;
                }
            }
            self.chosen.set(e, false);
            if found {
                break;
            }
            self.forbidden.insert(e);
            newly_forbidden.push(e);
        }
        for e in newly_forbidden {
            self.forbidden.set(e, false);
        }
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuerySet;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(32, 4), 35_960);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(count_sets_up_to(32, 3), 1 + 32 + 496 + 4960);
        assert_eq!(count_sets_up_to(4, 9), 16);
    }

    #[test]
    fn budget_guard() {
        assert!(check_budget(10, 10).is_ok());
        assert_eq!(
            check_budget(11, 10),
            Err(Error::BudgetExceeded {
                required: 11,
                budget: 10
            })
        );
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets_of_size(4, 2).count(), 6);
        let all: Vec<_> = subsets_up_to(3, 2).collect();
        assert_eq!(all.len(), 7);
        assert_eq!(all[0], Vec::<usize>::new());
    }

    #[test]
    fn blocking_search_basics() {
        let mut s = BlockingSearch::new(8, 2);
        // one element hits both lists twice? no: each element counts once per list
        assert!(!s.blockable(&[vec![1]], 5));
        assert!(s.blockable(&[vec![1, 2]], 2));
        assert!(!s.blockable(&[vec![1, 2]], 1));
        assert!(s.blockable(&[vec![1, 2, 3], vec![2, 3, 4]], 2));
        assert!(!s.blockable(&[vec![1, 2], vec![3, 4]], 3));
        assert!(s.blockable(&[], 0));
    }

    /// Tries every K2 directly.
    fn naive_max_unselected(
        queries: &QuerySequence,
        k1: &[Element],
        kappa: usize,
        alpha: u64,
        n: usize,
    ) -> usize {
        let outside: Vec<Element> = (1..=n).filter(|v| !k1.contains(v)).collect();
        let mut best = 0;
        for size in 0..=kappa.min(outside.len()) {
            for k2 in outside.iter().copied().combinations(size) {
                let unselected = k1
                    .iter()
                    .filter(|&&v| {
                        !queries.iter().any(|t| {
                            t.contains(v)
                                && k1.iter().all(|&u| u == v || !t.contains(u))
                                && (k2.iter().filter(|&&u| t.contains(u)).count() as u64)
                                    < alpha
                        })
                    })
                    .count();
                best = best.max(unselected);
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn smart_search_matches_naive(
            qs in prop::collection::vec(prop::collection::vec(1usize..=8, 0..5), 0..10),
            k1 in prop::collection::btree_set(1usize..=8, 1..4),
            kappa in 0usize..4,
            alpha in 1u64..3,
        ) {
            let code = QuerySequence::new(qs.into_iter().map(QuerySet::new).collect());
            let index = code.occurrence_index(8);
            let k1: Vec<Element> = k1.into_iter().collect();
            let smart = max_unselected(&code, &index, &k1, kappa, alpha, 8, usize::MAX);
            prop_assert_eq!(smart, naive_max_unselected(&code, &k1, kappa, alpha, 8));
        }
    }
}
