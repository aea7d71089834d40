//! Left-regular bipartite dispersers.
//!
//! The selector-under-interference construction only needs two facts about
//! its bipartite graph: every left node has the same (small) degree, and
//! every left set of `ell*` nodes reaches at least `(1 - eps)|W|` right
//! nodes. [`SeededDisperser`] draws a random left-regular graph from a seed
//! and keeps reseeding until the dispersion check passes. Any other
//! construction can be plugged in through the [`Disperser`] trait.

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exhaustive::{binomial, check_budget, subsets_of_size, DEFAULT_BUDGET};
use crate::model::{check_power_of_two, Element, QuerySet};

/// `G = (V, W, E)` with `V = 1..=left`, `W = 1..=right`; each left node
/// records exactly `degree` edges. Repeated edges are allowed and count
/// once towards neighbourhoods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    right: usize,
    degree: usize,
    adjacency: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(right: usize, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let degree = adjacency.first().map_or(0, Vec::len);
        for (i, nbrs) in adjacency.iter().enumerate() {
            if nbrs.len() != degree {
                return Err(Error::InvalidParams(format!(
                    "left node {} has {} edges, expected {degree}",
                    i + 1,
                    nbrs.len()
                )));
            }
            if let Some(&w) = nbrs.iter().find(|&&w| w == 0 || w > right) {
                return Err(Error::InvalidParams(format!(
                    "left node {} points at right node {w} outside 1..={right}",
                    i + 1
                )));
            }
        }
        Ok(BipartiteGraph {
            right,
            degree,
            adjacency,
        })
    }

    /// The complete bipartite graph `K_{left,right}`.
    pub fn complete(left: usize, right: usize) -> Self {
        BipartiteGraph {
            right,
            degree: right,
            adjacency: vec![(1..=right).collect(); left],
        }
    }

    pub fn left(&self) -> usize {
        self.adjacency.len()
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Recorded right neighbours of left node `v` (1-indexed).
    pub fn neighbors(&self, v: Element) -> &[usize] {
        &self.adjacency[v - 1]
    }

    /// `N_G(w)` for every right node `w`, in order.
    pub fn right_neighborhoods(&self) -> Vec<QuerySet> {
        let mut lists = vec![Vec::new(); self.right];
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &w in nbrs {
                lists[w - 1].push(i + 1);
            }
        }
        lists.into_iter().map(QuerySet::new).collect()
    }

    /// `|N_G(L)|`.
    pub fn neighborhood_size(&self, set: &[Element]) -> usize {
        let mut seen = FixedBitSet::with_capacity(self.right + 1);
        for &v in set {
            for &w in self.neighbors(v) {
                seen.insert(w);
            }
        }
        seen.count_ones(..)
    }

    /// One line per left node with its right neighbours.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for nbrs in &self.adjacency {
            let line: Vec<String> = nbrs.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses [`to_dump`](Self::to_dump) output. When `right` is `None`
    /// the largest index mentioned is used.
    pub fn from_dump(text: &str, right: Option<usize>) -> Result<Self> {
        let mut adjacency = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let nbrs = line
                .split_ascii_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(i + 1, format!("bad right index `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            adjacency.push(nbrs);
        }
        let right = right.unwrap_or_else(|| adjacency.iter().flatten().copied().max().unwrap_or(0));
        BipartiteGraph::new(right, adjacency)
    }
}

/// Parameters of a seeded random disperser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisperserParams {
    /// Smallest left set size that must disperse.
    pub ell_star: usize,
    /// Allowed fraction of missed right nodes, in `(0, 1/2)`.
    pub epsilon: f64,
    /// Left degree; defaults to `log2(n)^2`.
    pub degree: Option<usize>,
    /// Entropy loss; defaults to `log2(n)^3`.
    pub delta: Option<usize>,
    pub seed: u64,
    /// Seeds tried by [`SeededDisperser`] before giving up.
    pub max_attempts: u32,
}

impl DisperserParams {
    pub fn new(ell_star: usize, epsilon: f64, seed: u64) -> Result<Self> {
        let p = DisperserParams {
            ell_star,
            epsilon,
            degree: None,
            delta: None,
            seed,
            max_attempts: 64,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidParams(format!(
                "epsilon = {} must lie in (0, 1/2)",
                self.epsilon
            )));
        }
        if self.ell_star == 0 {
            return Err(Error::InvalidParams("ell* must be at least 1".into()));
        }
        if self.degree == Some(0) || self.delta == Some(0) {
            return Err(Error::InvalidParams("degree and delta must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_degree(&self, n: usize) -> usize {
        let log = n.trailing_zeros() as usize;
        self.degree.unwrap_or((log * log).max(1))
    }

    pub fn resolved_delta(&self, n: usize) -> usize {
        let log = n.trailing_zeros() as usize;
        self.delta.unwrap_or((log * log * log).max(1))
    }

    /// `|W| = max(1, ceil(ell* * degree / delta))`.
    pub fn right_size(&self, n: usize) -> usize {
        let num = self.ell_star * self.resolved_degree(n);
        num.div_ceil(self.resolved_delta(n)).max(1)
    }
}

/// One random left-regular graph for `params.seed`; no verification.
pub fn build_disperser(n: usize, params: &DisperserParams) -> Result<BipartiteGraph> {
    check_power_of_two(n)?;
    params.validate()?;
    let right = params.right_size(n);
    let degree = params.resolved_degree(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let adjacency = (0..n)
        .map(|_| (0..degree).map(|_| rng.gen_range(1..=right)).collect())
        .collect();
    BipartiteGraph::new(right, adjacency)
}

/// How a property over many subsets is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Every subset, refusing instances above the candidate budget.
    Exhaustive { budget: u128 },
    /// `trials` uniformly random subsets drawn from `seed`.
    Sampled { trials: usize, seed: u64 },
}

impl Default for CheckMode {
    fn default() -> Self {
        CheckMode::Exhaustive {
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Whether every left set of size `ell_star` has at least
/// `(1 - epsilon)|W|` neighbours. Larger sets have larger neighbourhoods,
/// so size `ell_star` is the only one checked.
pub fn verify_dispersion(
    g: &BipartiteGraph,
    ell_star: usize,
    epsilon: f64,
    mode: CheckMode,
) -> Result<bool> {
    let n = g.left();
    let size = ell_star.min(n);
    let need = (1.0 - epsilon) * g.right() as f64;
    let ok = |set: &[Element]| g.neighborhood_size(set) as f64 + 1e-9 >= need;
    match mode {
        CheckMode::Exhaustive { budget } => {
            check_budget(binomial(n, size), budget)?;
            Ok(subsets_of_size(n, size).par_bridge().all(|l| ok(&l)))
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..trials).all(|_| {
                let l: Vec<Element> = sample(&mut rng, n, size).iter().map(|i| i + 1).collect();
                ok(&l)
            }))
        }
    }
}

/// A pluggable source of dispersers.
pub trait Disperser {
    fn construct(&self, n: usize) -> Result<ConstructedDisperser>;
}

/// A graph together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedDisperser {
    pub graph: BipartiteGraph,
    pub seed: u64,
    pub attempts: u32,
}

/// Random left-regular graphs, reseeded (`seed`, `seed + 1`, ...) until the
/// dispersion check passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeededDisperser {
    pub params: DisperserParams,
    pub check: CheckMode,
}

impl Disperser for SeededDisperser {
    fn construct(&self, n: usize) -> Result<ConstructedDisperser> {
        let mut params = self.params;
        for attempt in 1..=self.params.max_attempts {
            params.seed = self.params.seed.wrapping_add(u64::from(attempt - 1));
            let graph = build_disperser(n, &params)?;
            if verify_dispersion(&graph, params.ell_star, params.epsilon, self.check)? {
                return Ok(ConstructedDisperser {
                    graph,
                    seed: params.seed,
                    attempts: attempt,
                });
            }
        }
        Err(Error::DispersionFailed {
            first_seed: self.params.seed,
            attempts: self.params.max_attempts,
        })
    }
}
