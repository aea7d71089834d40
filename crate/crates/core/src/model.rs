//! Problem instances, the capped feedback function and feedback vectors.
//!
//! Elements are 1-indexed: the universe is `1..=n`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An element of the universe, in `1..=n`.
pub type Element = usize;

/// Universe size, hidden-set bound and feedback cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    pub n: usize,
    pub k: usize,
    pub alpha: u64,
}

impl Params {
    /// Validates `n` (power of two), `1 <= k <= n` and `alpha >= 1`.
    ///
    /// A cap above `k` is accepted: it never binds, so the instance behaves
    /// exactly like `alpha = k`.
    pub fn new(n: usize, k: usize, alpha: u64) -> Result<Self> {
        check_power_of_two(n)?;
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!(
                "k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        if alpha == 0 {
            return Err(Error::InvalidParams("alpha must be at least 1".into()));
        }
        Ok(Params { n, k, alpha })
    }

    /// `log2(n)`.
    pub fn log_n(&self) -> usize {
        self.n.trailing_zeros() as usize
    }
}

pub(crate) fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(())
}

pub(crate) fn check_element(v: Element, n: usize) -> Result<()> {
    if v == 0 || v > n {
        return Err(Error::ElementOutOfRange { element: v, n });
    }
    Ok(())
}

/// A query: a set of elements, stored sorted and without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuerySet(Vec<Element>);

impl QuerySet {
    /// Builds a query from arbitrary elements; order and repeats are ignored.
    pub fn new(elements: impl IntoIterator<Item = Element>) -> Self {
        let mut v: Vec<Element> = elements.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        QuerySet(v)
    }

    pub fn empty() -> Self {
        QuerySet(Vec::new())
    }

    pub fn singleton(v: Element) -> Self {
        QuerySet(vec![v])
    }

    /// Accepts an already sorted list, rejecting repeats, unsorted input and
    /// elements outside `1..=n`.
    pub fn from_sorted(elements: Vec<Element>, n: usize) -> Result<Self> {
        for w in elements.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParams(format!(
                    "query elements not strictly increasing at {} {}",
                    w[0], w[1]
                )));
            }
        }
        for &v in &elements {
            check_element(v, n)?;
        }
        Ok(QuerySet(elements))
    }

    pub fn contains(&self, v: Element) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Element> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Element] {
        &self.0
    }

    /// Multiplicity-weighted size of `self ∩ hidden`.
    pub fn weight_in(&self, hidden: &HiddenMultiset) -> u64 {
        if hidden.support_len() < self.len() {
            hidden
                .iter()
                .filter(|&(v, _)| self.contains(v))
                .map(|(_, m)| m)
                .sum()
        } else {
            self.iter().map(|v| hidden.multiplicity(v)).sum()
        }
    }
}

impl FromIterator<Element> for QuerySet {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        QuerySet::new(iter)
    }
}

impl fmt::Display for QuerySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// An ordered, non-adaptive sequence of queries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct QuerySequence(Vec<QuerySet>);

impl QuerySequence {
    pub fn new(queries: Vec<QuerySet>) -> Self {
        QuerySequence(queries)
    }

    /// The Round-Robin code `<{1}, {2}, ..., {n}>`.
    pub fn round_robin(n: usize) -> Self {
        QuerySequence((1..=n).map(QuerySet::singleton).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QuerySet> {
        self.0.iter()
    }

    pub fn get(&self, i: usize) -> Option<&QuerySet> {
        self.0.get(i)
    }

    pub fn push(&mut self, q: QuerySet) {
        self.0.push(q);
    }

    pub fn as_slice(&self) -> &[QuerySet] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<QuerySet> {
        self.0
    }

    /// Total number of (element, query) incidences.
    pub fn total_size(&self) -> usize {
        self.0.iter().map(QuerySet::len).sum()
    }

    /// Builds the element → queries incidence lists over `1..=n`.
    pub fn occurrence_index(&self, n: usize) -> OccurrenceIndex {
        let mut lists = vec![Vec::new(); n + 1];
        for (i, q) in self.0.iter().enumerate() {
            for v in q.iter() {
                if v <= n {
                    lists[v].push(i);
                }
            }
        }
        OccurrenceIndex { lists }
    }
}

impl std::ops::Index<usize> for QuerySequence {
    type Output = QuerySet;

    fn index(&self, i: usize) -> &QuerySet {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a QuerySequence {
    type Item = &'a QuerySet;
    type IntoIter = std::slice::Iter<'a, QuerySet>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromIterator<QuerySet> for QuerySequence {
    fn from_iter<I: IntoIterator<Item = QuerySet>>(iter: I) -> Self {
        QuerySequence(iter.into_iter().collect())
    }
}

/// For each element, the (0-based) indices of the queries containing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceIndex {
    lists: Vec<Vec<usize>>,
}

impl OccurrenceIndex {
    pub fn queries_of(&self, v: Element) -> &[usize] {
        self.lists.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest number of queries any single element belongs to.
    pub fn max_occurrence(&self) -> usize {
        self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// The hidden input: a multiset of elements. Plain sets have every
/// multiplicity equal to one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HiddenMultiset {
    counts: BTreeMap<Element, u64>,
}

impl HiddenMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_set(elements: impl IntoIterator<Item = Element>) -> Self {
        let mut h = Self::new();
        for v in elements {
            h.counts.insert(v, 1);
        }
        h
    }

    pub fn from_counts(pairs: impl IntoIterator<Item = (Element, u64)>) -> Self {
        let mut h = Self::new();
        for (v, m) in pairs {
            h.add(v, m);
        }
        h
    }

    /// Adds `mult` copies of `v`. Adding zero copies is a no-op.
    pub fn add(&mut self, v: Element, mult: u64) {
        if mult > 0 {
            *self.counts.entry(v).or_insert(0) += mult;
        }
    }

    /// Removes one copy of `v`; returns false when `v` is absent.
    pub fn remove_one(&mut self, v: Element) -> bool {
        match self.counts.get_mut(&v) {
            Some(m) if *m > 1 => {
                *m -= 1;
                true
            }
            Some(_) => {
                self.counts.remove(&v);
                true
            }
            None => false,
        }
    }

    pub fn multiplicity(&self, v: Element) -> u64 {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    pub fn contains(&self, v: Element) -> bool {
        self.counts.contains_key(&v)
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// Sum of all multiplicities.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(element, multiplicity)` pairs in increasing element order.
    pub fn iter(&self) -> impl Iterator<Item = (Element, u64)> + '_ {
        self.counts.iter().map(|(&v, &m)| (v, m))
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.counts.keys().copied()
    }

    /// One `"element multiplicity"` line per support element, sorted.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (v, m) in self.iter() {
            out.push_str(&format!("{v} {m}\n"));
        }
        out
    }

    /// Fails with `ElementOutOfRange` unless the support lies in `1..=n`.
    pub fn check_range(&self, n: usize) -> Result<()> {
        self.elements().try_for_each(|v| check_element(v, n))
    }
}

/// Parses `"v[:mult],v[:mult],..."`; an empty string is the empty multiset.
impl FromStr for HiddenMultiset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut h = HiddenMultiset::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (v, m) = match item.split_once(':') {
                Some((v, m)) => (v.trim(), m.trim()),
                None => (item, "1"),
            };
            let v: Element = v
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad element `{v}`")))?;
            let m: u64 = m
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad multiplicity `{m}`")))?;
            if v == 0 || m == 0 {
                return Err(Error::InvalidParams(format!(
                    "`{item}`: elements and multiplicities must be positive"
                )));
            }
            h.add(v, m);
        }
        Ok(h)
    }
}

/// Per-query capped intersection counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeedbackVector(Vec<u64>);

impl FeedbackVector {
    pub fn new(values: Vec<u64>) -> Self {
        FeedbackVector(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for FeedbackVector {
    type Output = u64;

    fn index(&self, i: usize) -> &u64 {
        &self.0[i]
    }
}

/// Space-separated decimal values, no trailing newline.
impl fmt::Display for FeedbackVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for FeedbackVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_ascii_whitespace()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| Error::parse(1, format!("bad feedback value `{t}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(FeedbackVector)
    }
}

/// `min(|query ∩ hidden|, alpha)`, counting multiplicities.
pub fn capped_feedback(query: &QuerySet, hidden: &HiddenMultiset, alpha: u64) -> u64 {
    query.weight_in(hidden).min(alpha)
}

/// The feedback vector of `hidden` under `code` with cap `alpha`.
pub fn feedback_vector(code: &QuerySequence, hidden: &HiddenMultiset, alpha: u64) -> FeedbackVector {
    FeedbackVector(
        code.iter()
            .map(|q| capped_feedback(q, hidden, alpha))
            .collect(),
    )
}

/// Whether `code` tells `k1` and `k2` apart under cap `alpha`.
pub fn distinguishes(
    code: &QuerySequence,
    k1: &HiddenMultiset,
    k2: &HiddenMultiset,
    alpha: u64,
) -> Result<bool> {
    if k1 == k2 {
        return Err(Error::IdenticalSets);
    }
    Ok(code
        .iter()
        .any(|q| capped_feedback(q, k1, alpha) != capped_feedback(q, k2, alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> HiddenMultiset {
        HiddenMultiset::from_set(v.iter().copied())
    }

    #[test]
    fn capped_feedback_examples() {
        let q = QuerySet::new([1, 2, 3]);
        assert_eq!(capped_feedback(&q, &set(&[2, 3, 5]), 2), 2);
        assert_eq!(capped_feedback(&QuerySet::new([1, 2]), &set(&[]), 5), 0);
        let heavy = HiddenMultiset::from_counts([(4, 3)]);
        assert_eq!(capped_feedback(&QuerySet::singleton(4), &heavy, 2), 2);
        assert_eq!(capped_feedback(&QuerySet::singleton(4), &heavy, 5), 3);
    }

    #[test]
    fn feedback_vector_examples() {
        let code = QuerySequence::new(vec![QuerySet::singleton(1), QuerySet::singleton(2)]);
        assert_eq!(feedback_vector(&code, &set(&[1]), 1).values(), &[1, 0]);
        let one = QuerySequence::new(vec![QuerySet::new([1, 2])]);
        assert_eq!(feedback_vector(&one, &set(&[1, 2]), 1).values(), &[1]);
        let rr = QuerySequence::round_robin(8);
        assert!(feedback_vector(&rr, &set(&[]), 3).values().iter().all(|&x| x == 0));
    }

    #[test]
    fn distinguishes_examples() {
        let rr = QuerySequence::round_robin(4);
        assert!(distinguishes(&rr, &set(&[1]), &set(&[2]), 1).unwrap());
        let one = QuerySequence::new(vec![QuerySet::new([1, 2])]);
        assert!(!distinguishes(&one, &set(&[1]), &set(&[2]), 1).unwrap());
        assert_eq!(
            distinguishes(&rr, &set(&[1]), &set(&[1]), 1),
            Err(Error::IdenticalSets)
        );
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(16, 2, 2).is_ok());
        assert_eq!(Params::new(12, 2, 2), Err(Error::NotPowerOfTwo(12)));
        assert!(Params::new(16, 0, 2).is_err());
        assert!(Params::new(16, 17, 2).is_err());
        assert!(Params::new(16, 2, 0).is_err());
        assert_eq!(Params::new(1024, 4, 2).unwrap().log_n(), 10);
    }

    #[test]
    fn query_set_from_sorted_rejects_bad_input() {
        assert!(QuerySet::from_sorted(vec![1, 3, 5], 8).is_ok());
        assert!(QuerySet::from_sorted(vec![3, 1], 8).is_err());
        assert!(QuerySet::from_sorted(vec![1, 1], 8).is_err());
        assert!(QuerySet::from_sorted(vec![0], 8).is_err());
        assert!(QuerySet::from_sorted(vec![9], 8).is_err());
    }

    #[test]
    fn multiset_text_form() {
        let h: HiddenMultiset = "3:2, 7".parse().unwrap();
        assert_eq!(h, HiddenMultiset::from_counts([(3, 2), (7, 1)]));
        assert_eq!(h.total(), 3);
        assert_eq!(h.to_lines(), "3 2\n7 1\n");
        assert!("".parse::<HiddenMultiset>().unwrap().is_empty());
        assert!("0".parse::<HiddenMultiset>().is_err());
        assert!("4:0".parse::<HiddenMultiset>().is_err());
        assert!("x".parse::<HiddenMultiset>().is_err());
    }

    #[test]
    fn feedback_vector_text_form() {
        let fv = FeedbackVector::new(vec![0, 2, 1]);
        assert_eq!(fv.to_string(), "0 2 1");
        assert_eq!("0 2 1\n".parse::<FeedbackVector>().unwrap(), fv);
        assert!("0 a".parse::<FeedbackVector>().is_err());
    }

    fn arb_query(n: usize) -> impl Strategy<Value = QuerySet> {
        prop::collection::vec(1..=n, 0..n).prop_map(QuerySet::new)
    }

    fn arb_multiset(n: usize) -> impl Strategy<Value = HiddenMultiset> {
        prop::collection::vec((1..=n, 1u64..4), 0..6).prop_map(HiddenMultiset::from_counts)
    }

    proptest! {
        #[test]
        fn feedback_is_capped_count(q in arb_query(16), h in arb_multiset(16), alpha in 1u64..6) {
            let f = capped_feedback(&q, &h, alpha);
            let exact: u64 = h.iter().filter(|&(v, _)| q.contains(v)).map(|(_, m)| m).sum();
            prop_assert!(f <= alpha);
            if exact < alpha {
                prop_assert_eq!(f, exact);
            } else {
                prop_assert_eq!(f, alpha);
            }
        }

        #[test]
        fn feedback_is_monotone(q in arb_query(16), h in arb_multiset(16), v in 1usize..=16, alpha in 1u64..6) {
            let before = capped_feedback(&q, &h, alpha);
            let mut bigger = h.clone();
            bigger.add(v, 1);
            prop_assert!(capped_feedback(&q, &bigger, alpha) >= before);
        }

        #[test]
        fn feedback_vector_is_deterministic(qs in prop::collection::vec(arb_query(16), 1..8), h in arb_multiset(16)) {
            let code = QuerySequence::new(qs);
            prop_assert_eq!(
                feedback_vector(&code, &h, 3).to_string(),
                feedback_vector(&code.clone(), &h.clone(), 3).to_string()
            );
        }
    }
}
