//! Tester outcomes and rejection evidence.

use serde::Serialize;

use crate::bits::BitString;
use crate::oracle::LedgerReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

/// The structured evidence that triggered a rejection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Adjacent sketch elements out of order.
    AdjacencyBreak { u: usize, v: usize },
    /// A sampled edge `u <σ v` whose blocks are reversed.
    LongEdge {
        u: usize,
        v: usize,
        block_u: usize,
        block_v: usize,
    },
    /// A block holding too many sampled vertices.
    CrowdedBlock { block: usize, count: usize },
    /// A directed triangle `u <σ v <σ w <σ u` inside one block.
    Triangle { u: usize, v: usize, w: usize },
    /// No consistent sketch could be built from the preprocessing sample.
    SketchNil,
    /// MaxIndex found no valid index for a sampled string.
    NilMaxIndex { x: BitString },
    /// Pairs `x ∈ P`, `y ∈ Q` with `v = MaxIndex(y) ∈ supp(x)` (types 1 and 2).
    BlockGap {
        kind: u8,
        x: BitString,
        y: BitString,
        v: usize,
    },
    /// Adjacent small blocks with `f(e_u ∨ e_v) ≠ f(e_u)`.
    PairConflict {
        x: BitString,
        y: BitString,
        u: usize,
        v: usize,
    },
    /// A dominance chain `u ≻ v ≻ w` across three consecutive small blocks.
    Chain { u: usize, v: usize, w: usize },
    /// An alternating 4-cycle: `f(e_{u1}∨e_{u2}) = f(e_{u3}∨e_{u4}) = 0`, `f(e_{u2}∨e_{u3}) = f(e_{u4}∨e_{u1}) = 1`.
    Alternating {
        u1: usize,
        u2: usize,
        u3: usize,
        u4: usize,
    },
    /// Majority of amplified runs rejected.
    Majority { rejects: usize, runs: usize },
    /// The hybrid function disagreed too often with the shifted function.
    HybridDistance { count: u64, threshold: u64 },
    /// No outer round collected enough accepting checks.
    NoGoodRound { rounds: u64 },
    /// The default-string search ran out of options.
    CheckExhausted,
}

impl Witness {
    /// A short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Witness::AdjacencyBreak { .. } => "adjacency",
            Witness::LongEdge { .. } => "long-edge",
            Witness::CrowdedBlock { .. } => "crowded-block",
            Witness::Triangle { .. } => "triangle",
            Witness::SketchNil => "sketch-nil",
            Witness::NilMaxIndex { .. } => "nil-max-index",
            Witness::BlockGap { kind: 1, .. } => "type-1",
            Witness::BlockGap { .. } => "type-2",
            Witness::PairConflict { .. } => "type-3",
            Witness::Chain { .. } => "type-4",
            Witness::Alternating { .. } => "type-5",
            Witness::Majority { .. } => "majority",
            Witness::HybridDistance { .. } => "hybrid-distance",
            Witness::NoGoodRound { .. } => "no-good-round",
            Witness::CheckExhausted => "check-exhausted",
        }
    }
}

/// Accept or reject, the rejection evidence, and the ledger at return time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub witness: Option<Witness>,
    pub ledger: LedgerReport,
}

impl Verdict {
    pub fn accept(ledger: LedgerReport) -> Self {
        Verdict {
            decision: Decision::Accept,
            witness: None,
            ledger,
        }
    }

    pub fn reject(witness: Witness, ledger: LedgerReport) -> Self {
        Verdict {
            decision: Decision::Reject,
            witness: Some(witness),
            ledger,
        }
    }

    pub fn is_accept(&self) -> bool {
        self.decision.is_accept()
    }
}
