//! Streaming multiset sketches and a dynamic-graph sketch on top of them.
//!
//! Counters hold exact intersection counts so that deletions are possible;
//! the cap is applied only when a feedback vector is formed for decoding.

use crate::builder::{build, BuildMode, BuildOptions, GroupTestingCode, Mode};
use crate::decoder::decode;
use crate::error::{Error, Result};
use crate::model::{check_element, Element, FeedbackVector, HiddenMultiset, OccurrenceIndex, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Insert(Element),
    Delete(Element),
}

/// Parses one op per line, `I v` or `D v`. Blank lines and `#` comments
/// are skipped.
pub fn parse_ops(text: &str) -> Result<Vec<Op>> {
    op_lines(text, 1)?
        .into_iter()
        .map(|(kind, args)| Ok(if kind { Op::Insert(args[0]) } else { Op::Delete(args[0]) }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOp {
    Insert(usize, usize),
    Delete(usize, usize),
}

/// Parses `I u v` / `D u v` lines.
pub fn parse_edge_ops(text: &str) -> Result<Vec<EdgeOp>> {
    op_lines(text, 2)?
        .into_iter()
        .map(|(kind, a)| {
            Ok(if kind {
                EdgeOp::Insert(a[0], a[1])
            } else {
                EdgeOp::Delete(a[0], a[1])
            })
        })
        .collect()
}

fn op_lines(text: &str, arity: usize) -> Result<Vec<(bool, Vec<usize>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let insert = match tokens.next() {
            Some("I") => true,
            Some("D") => false,
            Some(t) => return Err(Error::parse(i + 1, format!("unknown op `{t}`"))),
            None => unreachable!(),
        };
        let args = tokens
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(i + 1, format!("bad operand `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if args.len() != arity {
            return Err(Error::parse(
                i + 1,
                format!("expected {arity} operand(s), found {}", args.len()),
            ));
        }
        out.push((insert, args));
    }
    Ok(out)
}

/// Exact per-query counters of a multiset under a multiset-mode code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSketch {
    code: GroupTestingCode,
    index: OccurrenceIndex,
    counters: Vec<u64>,
    total: u64,
}

impl StreamSketch {
    pub fn new(code: GroupTestingCode) -> Result<Self> {
        if code.mode() != Mode::Multiset {
            return Err(Error::InvalidParams(format!(
                "sketches need a multiset code, got {}",
                code.mode()
            )));
        }
        Ok(StreamSketch {
            index: code.occurrence_index(),
            counters: vec![0; code.len()],
            total: 0,
            code,
        })
    }

    /// A sketch for multisets over `1..=n` with total multiplicity at most
    /// `capacity`, read out with cap `alpha = capacity`.
    pub fn with_capacity(n: usize, capacity: usize) -> Result<Self> {
        let params = Params::new(n, capacity, capacity as u64)?;
        Self::new(build(params, &BuildOptions::with_mode(BuildMode::Multiset))?)
    }

    pub fn code(&self) -> &GroupTestingCode {
        &self.code
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    /// Total multiplicity currently stored.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn capacity(&self) -> usize {
        self.code.k()
    }

    /// Largest number of counters a single update touches.
    pub fn occurrence_bound(&self) -> usize {
        self.index.max_occurrence()
    }

    /// Adds one copy of `v`; returns the number of counters touched.
    pub fn insert(&mut self, v: Element) -> Result<usize> {
        check_element(v, self.code.n())?;
        let qs = self.index.queries_of(v);
        for &q in qs {
            self.counters[q] += 1;
        }
        self.total += 1;
        Ok(qs.len())
    }

    /// Removes one copy of `v`. Refused when some counter of `v` is zero,
    /// which always holds for an absent `v` that occurs in any query.
    pub fn delete(&mut self, v: Element) -> Result<usize> {
        check_element(v, self.code.n())?;
        let qs = self.index.queries_of(v);
        if self.total == 0 || qs.iter().any(|&q| self.counters[q] == 0) {
            return Err(Error::AbsentElement(v));
        }
        for &q in qs {
            self.counters[q] -= 1;
        }
        self.total -= 1;
        Ok(qs.len())
    }

    pub fn apply(&mut self, op: Op) -> Result<usize> {
        match op {
            Op::Insert(v) => self.insert(v),
            Op::Delete(v) => self.delete(v),
        }
    }

    /// Capped counters.
    pub fn feedback(&self) -> FeedbackVector {
        let alpha = self.code.alpha();
        FeedbackVector::new(self.counters.iter().map(|&c| c.min(alpha)).collect())
    }

    pub fn reconstruct(&self) -> Result<HiddenMultiset> {
        if self.total > self.code.k() as u64 {
            return Err(Error::CapacityExceeded(format!(
                "total multiplicity {} exceeds capacity {}",
                self.total,
                self.code.k()
            )));
        }
        decode(&self.code, &self.feedback())
    }
}

/// Number of possible edges, `nodes (nodes - 1) / 2`.
pub fn edge_universe(nodes: usize) -> usize {
    nodes * nodes.saturating_sub(1) / 2
}

/// Row-major index of edge `{u, v}`, `u < v`: `(1,2) -> 1, (1,3) -> 2, ...`.
pub fn edge_index(u: usize, v: usize, nodes: usize) -> Result<usize> {
    if u == 0 || u >= v || v > nodes {
        return Err(Error::InvalidParams(format!(
            "edge ({u}, {v}) needs 1 <= u < v <= {nodes}"
        )));
    }
    Ok((u - 1) * (2 * nodes - u) / 2 + (v - u))
}

/// Inverse of [`edge_index`].
pub fn edge_of_index(index: usize, nodes: usize) -> Result<(usize, usize)> {
    if index == 0 || index > edge_universe(nodes) {
        return Err(Error::InvalidParams(format!(
            "edge index {index} outside 1..={}",
            edge_universe(nodes)
        )));
    }
    let mut rest = index;
    let mut u = 1;
    while rest > nodes - u {
        rest -= nodes - u;
        u += 1;
    }
    Ok((u, u + rest))
}

/// Edge-set sketch of a graph on `nodes` nodes with maximum degree `k`.
///
/// The edge universe is padded to a power of two. The sketch holds up to
/// `min(k * nodes / 2, nodes (nodes - 1) / 2)` edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSketch {
    nodes: usize,
    sketch: StreamSketch,
}

impl GraphSketch {
    pub fn new(nodes: usize, max_degree: usize) -> Result<Self> {
        let edges = edge_universe(nodes);
        if edges == 0 || max_degree == 0 {
            return Err(Error::InvalidParams(
                "graph sketch needs at least 2 nodes and max degree >= 1".into(),
            ));
        }
        let capacity = (max_degree * nodes / 2).clamp(1, edges);
        let universe = edges.next_power_of_two().max(2);
        Ok(GraphSketch {
            nodes,
            sketch: StreamSketch::with_capacity(universe, capacity)?,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn sketch(&self) -> &StreamSketch {
        &self.sketch
    }

    fn index(&self, u: usize, v: usize) -> Result<usize> {
        edge_index(u.min(v), u.max(v), self.nodes)
    }

    pub fn insert_edge(&mut self, u: usize, v: usize) -> Result<usize> {
        let e = self.index(u, v)?;
        self.sketch.insert(e)
    }

    pub fn delete_edge(&mut self, u: usize, v: usize) -> Result<usize> {
        let e = self.index(u, v)?;
        self.sketch.delete(e)
    }

    pub fn apply(&mut self, op: EdgeOp) -> Result<usize> {
        match op {
            EdgeOp::Insert(u, v) => self.insert_edge(u, v),
            EdgeOp::Delete(u, v) => self.delete_edge(u, v),
        }
    }

    /// Current edges `(u, v)`, `u < v`, in index order.
    pub fn reconstruct(&self) -> Result<Vec<(usize, usize)>> {
        let set = self.sketch.reconstruct()?;
        set.iter()
            .map(|(e, m)| {
                let (u, v) = edge_of_index(e, self.nodes)?;
                if m > 1 {
                    return Err(Error::CapacityExceeded(format!(
                        "edge ({u}, {v}) is present {m} times"
                    )));
                }
                Ok((u, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::feedback_vector;

    #[test]
    fn edge_indexing() {
        let expect = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
        for (i, &(u, v)) in expect.iter().enumerate() {
            assert_eq!(edge_index(u, v, 4).unwrap(), i + 1);
        }
        assert_eq!(edge_universe(4), 6);
        for nodes in 2..=64 {
            let mut next = 1;
            for u in 1..=nodes {
                for v in u + 1..=nodes {
                    let e = edge_index(u, v, nodes).unwrap();
                    assert_eq!(e, next);
                    assert_eq!(edge_of_index(e, nodes).unwrap(), (u, v));
                    next += 1;
                }
            }
        }
        assert!(edge_index(2, 2, 4).is_err());
        assert!(edge_index(3, 2, 4).is_err());
        assert!(edge_index(1, 5, 4).is_err());
        assert!(edge_of_index(7, 4).is_err());
    }

    #[test]
    fn op_parsing() {
        assert_eq!(
            parse_ops("I 3\n# c\n\nD 3\n").unwrap(),
            vec![Op::Insert(3), Op::Delete(3)]
        );
        assert_eq!(parse_edge_ops("I 1 2\n").unwrap(), vec![EdgeOp::Insert(1, 2)]);
        assert_eq!(parse_ops("I 1\nX 2\n"), Err(Error::parse(2, "unknown op `X`")));
        assert!(parse_ops("I 1 2\n").is_err());
        assert!(parse_ops("I a\n").is_err());
    }

    #[test]
    fn insert_delete_cancel() {
        let mut s = StreamSketch::with_capacity(16, 3).unwrap();
        s.insert(4).unwrap();
        let before = s.counters().to_vec();
        s.insert(9).unwrap();
        s.delete(9).unwrap();
        assert_eq!(s.counters(), &before[..]);
    }

    #[test]
    fn fresh_insert_is_the_column() {
        let mut s = StreamSketch::with_capacity(16, 3).unwrap();
        let touched = s.insert(7).unwrap();
        let column = feedback_vector(s.code().queries(), &HiddenMultiset::from_set([7]), 1);
        assert_eq!(s.counters(), column.values());
        assert_eq!(touched, s.code().occurrence_index().queries_of(7).len());
    }

    #[test]
    fn delete_absent_and_capacity() {
        let mut s = StreamSketch::with_capacity(16, 2).unwrap();
        assert_eq!(s.delete(3), Err(Error::AbsentElement(3)));
        assert!(s.reconstruct().unwrap().is_empty());
        for v in [1, 2, 3] {
            s.insert(v).unwrap();
        }
        assert!(matches!(s.reconstruct(), Err(Error::CapacityExceeded(_))));
        s.delete(2).unwrap();
        assert_eq!(s.reconstruct().unwrap(), HiddenMultiset::from_set([1, 3]));
        assert!(s.insert(17).is_err());
    }

    #[test]
    fn plain_code_is_rejected() {
        let code = crate::builder::build_code(16, 2, 2).unwrap();
        assert!(StreamSketch::new(code).is_err());
    }

    #[test]
    fn graph_roundtrip() {
        let mut g = GraphSketch::new(6, 2).unwrap();
        assert!(g.reconstruct().unwrap().is_empty());
        let path = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)];
        for &(u, v) in &path {
            g.insert_edge(v, u).unwrap();
        }
        assert_eq!(g.reconstruct().unwrap(), path.to_vec());
        g.insert_edge(1, 2).unwrap();
        assert!(matches!(g.reconstruct(), Err(Error::CapacityExceeded(_))));
    }
}
