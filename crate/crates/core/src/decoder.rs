//! Reconstruction of the hidden (multi)set from a feedback vector.
//!
//! Phases are runs of blocks with the same kind and level. Each phase is
//! swept until no block yields a new element. A block is good when its base
//! query holds exactly one undecoded hidden element whose contribution can
//! be read off exactly; the slices then spell out its balanced identifier.
//! Per-query counts of decoded elements are kept incrementally through the
//! occurrence index.
//!
//! Plain mode trusts a base query only below the cap, or everywhere when
//! `alpha >= k`. Multiset mode trusts
//! every value, which requires `alpha` to be at least the total
//! multiplicity; the final consistency check reports violations.

use crate::balanced::decode_balanced;
use crate::builder::{Block, GroupTestingCode, Mode};
use crate::error::{Error, Result};
use crate::model::{Element, FeedbackVector, HiddenMultiset, OccurrenceIndex};

/// Operation counts of one decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub sweeps: usize,
    pub base_checks: usize,
    pub slice_reads: usize,
    pub index_updates: usize,
    /// Entries compared by the final consistency check.
    pub residual_checks: usize,
}

impl DecodeStats {
    pub fn ops(&self) -> usize {
        self.base_checks + self.slice_reads + self.index_updates + self.residual_checks
    }
}

/// Decoded elements so far and, for every query, their weighted count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeState {
    accumulated: HiddenMultiset,
    known: Vec<u64>,
}

impl DecodeState {
    pub fn new(code: &GroupTestingCode) -> Self {
        DecodeState {
            accumulated: HiddenMultiset::new(),
            known: vec![0; code.len()],
        }
    }

    pub fn accumulated(&self) -> &HiddenMultiset {
        &self.accumulated
    }

    /// Weighted number of decoded elements in query `q` (0-based).
    pub fn known(&self, q: usize) -> u64 {
        self.known[q]
    }

    /// Records `mult` more copies of `v`.
    pub fn add(&mut self, v: Element, mult: u64, index: &OccurrenceIndex) -> usize {
        self.accumulated.add(v, mult);
        let qs = index.queries_of(v);
        for &q in qs {
            self.known[q] += mult;
        }
        qs.len()
    }
}

/// An element read from a good block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub element: Element,
    pub multiplicity: u64,
}

/// Plain: `fv[S]` is below the trusted cap and `fv[S]` is one more than the decoded count.
/// Multiset: `fv[S]` exceeds the decoded count.
pub fn query_is_good(
    code: &GroupTestingCode,
    block: &Block,
    fv: &FeedbackVector,
    state: &DecodeState,
) -> bool {
    let (f, known) = (fv[block.base], state.known(block.base));
    match code.mode() {
        Mode::Multiset => f > known,
        _ => f < code.trusted_cap() && f == known + 1,
    }
}

/// Reads the identifier spelled by the slices of a good block, after
/// subtracting decoded elements. `None` marks a block to skip.
///
/// Plain mode rejects slices whose feedback reached the cap. Multiset mode
/// expects every slice residual to be `0` or the base residual `r` and
/// reports multiplicity `r`.
pub fn decode_element(
    code: &GroupTestingCode,
    block: &Block,
    fv: &FeedbackVector,
    state: &DecodeState,
) -> Option<Decoded> {
    let multiset = code.mode() == Mode::Multiset;
    let r = if multiset {
        fv[block.base].checked_sub(state.known(block.base))?
    } else {
        1
    };
    if r == 0 {
        return None;
    }
    let mut bits = Vec::with_capacity(block.slices);
    for j in (1..=block.slices).rev() {
        let q = block.slice(j);
        if !multiset && fv[q] >= code.trusted_cap() {
            return None;
        }
        let diff = fv[q] as i64 - state.known(q) as i64;
        bits.push(match diff {
            0 => 0,
            d if d == r as i64 => 1,
            // out-of-range values are rejected by decode_balanced
            d if !multiset => d,
            _ => return None,
        });
    }
    let v = decode_balanced(&bits, code.n())?;
    if !code.queries()[block.base].contains(v) || (!multiset && state.accumulated().contains(v)) {
        return None;
    }
    Some(Decoded {
        element: v,
        multiplicity: r,
    })
}

pub fn decode(code: &GroupTestingCode, fv: &FeedbackVector) -> Result<HiddenMultiset> {
    decode_with_stats(code, fv).map(|(k, _)| k)
}

pub fn decode_with_stats(
    code: &GroupTestingCode,
    fv: &FeedbackVector,
) -> Result<(HiddenMultiset, DecodeStats)> {
    if code.mode() == Mode::Random {
        return Err(Error::InvalidParams(
            "random codes carry no block layout to decode with".into(),
        ));
    }
    if fv.len() != code.len() {
        return Err(Error::LengthMismatch {
            expected: code.len(),
            got: fv.len(),
        });
    }
    if let Some(i) = fv.values().iter().position(|&x| x > code.alpha()) {
        return Err(Error::InconsistentFeedback(format!(
            "query {} reports {} above the cap {}",
            i + 1,
            fv[i],
            code.alpha()
        )));
    }

    let index = code.occurrence_index();
    let blocks = code.blocks();
    let mut state = DecodeState::new(code);
    let mut stats = DecodeStats::default();
    for phase in code.phases() {
        loop {
            stats.sweeps += 1;
            let mut progress = false;
            for block in &blocks[phase.clone()] {
                stats.base_checks += 1;
                if !query_is_good(code, block, fv, &state) {
                    continue;
                }
                stats.slice_reads += block.slices;
                let Some(d) = decode_element(code, block, fv, &state) else {
                    continue;
                };
                stats.index_updates += state.add(d.element, d.multiplicity, &index);
                progress = true;
                if code.mode() != Mode::Multiset && state.accumulated.support_len() > code.k() {
                    return Err(Error::InconsistentFeedback(format!(
                        "more than k = {} elements decoded",
                        code.k()
                    )));
                }
            }
            if !progress {
                break;
            }
        }
    }

    stats.residual_checks = code.len();
    let alpha = code.alpha();
    if let Some(i) = (0..code.len()).find(|&i| state.known[i].min(alpha) != fv[i]) {
        let at_cap = fv.values().contains(&alpha);
        if code.mode() == Mode::Multiset && at_cap {
            return Err(Error::CapTooSmall(alpha));
        }
        return Err(Error::InconsistentFeedback(format!(
            "query {} reports {} but the decoded set explains {}",
            i + 1,
            fv[i],
            state.known[i].min(alpha)
        )));
    }
    Ok((state.accumulated, stats))
}
