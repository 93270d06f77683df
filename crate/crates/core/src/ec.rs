//! Shor-style syndrome extraction with verified cat states.
//!
//! Each weight-`w` check uses `w` cat qubits and one verification qubit from a
//! shared ancilla pool:
//!
//! ```text
//! prep a0 in |+>, a1..a(w-1) in |0>, CNOT chain a(k) -> a(k+1)
//! prep v in |0>, CNOT a0 -> v, CNOT a(w-1) -> v, measure Z on v   (retry if 1)
//! couple: CNOT a(k) -> data(k) for X checks, CZ a(k), data(k) for Z checks
//! measure every a(k) in X; the check outcome is the parity
//! ```
//!
//! That is `4w + 3` noisy locations per attempt.
//!
//! By default a block whose checks report a nonzero syndrome is measured a
//! second time and the second syndrome is used. A single pass cannot be
//! fault tolerant: a data fault between two checks yields a partial syndrome
//! whose correction completes a logical operator.

use std::fmt::Write as _;

use rand::Rng;

use crate::circuit::Gate;
use crate::codes::{Block, CodeKind, Lookup, Syndrome};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};
use crate::sim::{Executor, FaultSource, Simulator};

/// Register layout shared by every two-block simulation.
pub mod layout {
    pub const STEANE_OFFSET: usize = 0;
    pub const RM15_OFFSET: usize = 7;
    /// Data qubits of both blocks.
    pub const DATA: usize = 22;
    pub const ANCILLA_OFFSET: usize = 22;
    /// Largest check weight plus the verification qubit.
    pub const ANCILLA_POOL: usize = 9;
    /// Reference qubits Bell-paired with each block's logical qubit (tableau only).
    pub const REF_STEANE: usize = 31;
    pub const REF_RM15: usize = 32;
    pub const REGISTER: usize = 33;
}

pub const DEFAULT_MAX_RETRIES: u32 = 3;

/// The block at its fixed place in the register.
pub fn block(kind: CodeKind) -> Block {
    match kind {
        CodeKind::Steane => Block::new(kind, layout::STEANE_OFFSET),
        CodeKind::ReedMuller15 => Block::new(kind, layout::RM15_OFFSET),
    }
}

/// How a segment turns its syndrome bits into a correction.
#[derive(Clone, Debug)]
pub enum CorrectionMode {
    /// The code's minimal-weight lookup over all generators.
    FullLookup,
    /// Minimal-weight lookup restricted to one error type over the measured checks.
    ContagiousOnly { error_type: Pauli, lookup: Lookup },
    /// Record the syndrome only.
    None,
}

/// One stabilizer measured on one block.
#[derive(Clone, Debug)]
pub struct Check {
    /// Generator index within the block's code.
    pub generator: usize,
    pub x_type: bool,
    /// Data qubits in register coordinates.
    pub support: Vec<usize>,
}

/// The checks a gadget measures on one block, and the correction rule.
#[derive(Clone, Debug)]
pub struct Segment {
    pub block: Block,
    pub checks: Vec<Check>,
    pub correction: CorrectionMode,
}

impl Segment {
    fn new(block: Block, generators: &[usize], correction: CorrectionMode) -> Self {
        let code = block.code;
        let checks = generators
            .iter()
            .map(|&i| {
                let g = &code.generators()[i];
                Check {
                    generator: i,
                    x_type: g.is_x_type(),
                    support: g.support().into_iter().map(|q| q + block.offset).collect(),
                }
            })
            .collect();
        Self { block, checks, correction }
    }

    /// All generators of the block, corrected by the full lookup.
    pub fn full(block: Block) -> Self {
        let all: Vec<usize> = (0..block.code.num_generators()).collect();
        Self::new(block, &all, CorrectionMode::FullLookup)
    }

    /// A subset of generators whose syndrome corrects only `error_type` errors.
    pub fn contagious(block: Block, generators: &[usize], error_type: Pauli) -> Result<Self> {
        let local: Vec<PauliOperator> =
            generators.iter().map(|&i| block.code.generators()[i].clone()).collect();
        let lookup = Lookup::build(&local, &[error_type])?;
        Ok(Self::new(block, generators, CorrectionMode::ContagiousOnly { error_type, lookup }))
    }

    fn correction(&self, bits: Syndrome) -> Option<&PauliOperator> {
        match &self.correction {
            CorrectionMode::FullLookup => Some(self.block.code.decode(bits)),
            CorrectionMode::ContagiousOnly { lookup, .. } => lookup.correction(bits),
            CorrectionMode::None => None,
        }
    }
}

/// Syndrome repetition policy, applied per segment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SyndromeRounds {
    /// One pass; the first syndrome is final.
    Single,
    /// A nonzero first syndrome is discarded and the segment measured again.
    #[default]
    RepeatIfNonzero,
}

impl std::str::FromStr for SyndromeRounds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Self::Single),
            "adaptive" => Ok(Self::RepeatIfNonzero),
            _ => Err(Error::Config(format!("unknown syndrome rounds {s:?}"))),
        }
    }
}

impl std::fmt::Display for SyndromeRounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::RepeatIfNonzero => "adaptive",
        })
    }
}

/// An error-correction gadget: segments measured in order.
#[derive(Clone, Debug)]
pub struct ECGadget {
    pub name: String,
    pub segments: Vec<Segment>,
    pub max_retries: u32,
    pub rounds: SyndromeRounds,
}

/// Result of one gadget run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeOutcome {
    /// Bit `i` is check `i` in gadget order; the syndrome the correction used.
    pub bits: u32,
    pub retries_used: u32,
    /// Segments that were measured twice.
    pub repeats: u32,
    /// Correction applied, in register coordinates.
    pub applied_correction: PauliOperator,
}

impl ECGadget {
    /// Full error correction on each block in turn.
    pub fn full(name: impl Into<String>, blocks: &[Block]) -> Self {
        Self {
            name: name.into(),
            segments: blocks.iter().map(|&b| Segment::full(b)).collect(),
            max_retries: DEFAULT_MAX_RETRIES,
            rounds: SyndromeRounds::default(),
        }
    }

    pub fn from_segments(name: impl Into<String>, segments: Vec<Segment>) -> Self {
        Self {
            name: name.into(),
            segments,
            max_retries: DEFAULT_MAX_RETRIES,
            rounds: SyndromeRounds::default(),
        }
    }

    pub fn with_max_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self
    }

    pub fn with_rounds(mut self, rounds: SyndromeRounds) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn num_checks(&self) -> usize {
        self.segments.iter().map(|s| s.checks.len()).sum()
    }

    pub fn cat_sizes(&self) -> Vec<usize> {
        self.segments.iter().flat_map(|s| s.checks.iter().map(|c| c.support.len())).collect()
    }

    /// Noisy locations in a fault-free run (single round, no retries).
    pub fn location_count(&self) -> usize {
        self.cat_sizes().iter().map(|w| 4 * w + 3).sum()
    }

    /// Every measured operator in register coordinates, in gadget order.
    pub fn measured_operators(&self, total: usize) -> Vec<PauliOperator> {
        self.segments
            .iter()
            .flat_map(|s| {
                s.checks.iter().map(move |c| s.block.embed(&s.block.code.generators()[c.generator], total))
            })
            .collect()
    }

    /// Text dump for auditing: one line per check plus totals.
    pub fn structure_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gadget {} retries={} rounds={}", self.name, self.max_retries, self.rounds);
        let mut bit = 0;
        for seg in &self.segments {
            let mode = match &seg.correction {
                CorrectionMode::FullLookup => "full_lookup".to_string(),
                CorrectionMode::ContagiousOnly { error_type, .. } => {
                    format!("contagious_only({})", error_type.symbol())
                }
                CorrectionMode::None => "none".to_string(),
            };
            let _ = writeln!(s, "segment {} offset={} correction={}", seg.block.code.name(), seg.block.offset, mode);
            for c in &seg.checks {
                let g = &seg.block.code.generators()[c.generator];
                let _ = writeln!(
                    s,
                    "  bit {bit:2} g{} {} cat={} locations={}",
                    c.generator,
                    g.sparse_string(),
                    c.support.len(),
                    4 * c.support.len() + 3
                );
                bit += 1;
            }
        }
        let _ = writeln!(s, "checks={} cat_sizes={:?} locations={}", self.num_checks(), self.cat_sizes(), self.location_count());
        s
    }
}

fn measure_check<S: Simulator, F: FaultSource, R: Rng>(
    ex: &mut Executor<S, F, R>,
    check: &Check,
    max_retries: u32,
) -> Result<(bool, u32)> {
    use layout::ANCILLA_OFFSET as A;
    let w = check.support.len();
    let v = A + w;
    let mut retries = 0;
    loop {
        ex.gate(Gate::PrepX(A));
        for k in 1..w {
            ex.gate(Gate::PrepZ(A + k));
        }
        for k in 0..w - 1 {
            ex.gate(Gate::Cnot(A + k, A + k + 1));
        }
        ex.gate(Gate::PrepZ(v));
        ex.gate(Gate::Cnot(A, v));
        ex.gate(Gate::Cnot(A + w - 1, v));
        let failed = ex.gate(Gate::MeasureZ(v)).unwrap_or(false);
        if !failed {
            break;
        }
        if retries == max_retries {
            return Err(Error::VerificationExhausted { retries: max_retries });
        }
        retries += 1;
    }
    for (k, &d) in check.support.iter().enumerate() {
        if check.x_type {
            ex.gate(Gate::Cnot(A + k, d));
        } else {
            ex.gate(Gate::Cz(A + k, d));
        }
    }
    let mut parity = false;
    for k in 0..w {
        parity ^= ex.gate(Gate::MeasureX(A + k)).unwrap_or(false);
    }
    Ok((parity, retries))
}

/// Runs a gadget and applies its correction.
///
/// Fails with [`Error::VerificationExhausted`] when some cat state fails
/// verification more than `max_retries` times; the trial is then void.
pub fn run_gadget<S: Simulator, F: FaultSource, R: Rng>(
    ex: &mut Executor<S, F, R>,
    gadget: &ECGadget,
) -> Result<SyndromeOutcome> {
    let total = ex.sim.num_qubits();
    let mut bits = 0u32;
    let mut retries_used = 0;
    let mut repeats = 0;
    let mut applied = PauliOperator::identity(total);
    let mut shift = 0;
    for seg in &gadget.segments {
        let mut seg_bits: Syndrome = 0;
        for (i, check) in seg.checks.iter().enumerate() {
            let (b, r) = measure_check(ex, check, gadget.max_retries)?;
            retries_used += r;
            seg_bits |= (b as Syndrome) << i;
        }
        if seg_bits != 0 && gadget.rounds == SyndromeRounds::RepeatIfNonzero {
            repeats += 1;
            seg_bits = 0;
            for (i, check) in seg.checks.iter().enumerate() {
                let (b, r) = measure_check(ex, check, gadget.max_retries)?;
                retries_used += r;
                seg_bits |= (b as Syndrome) << i;
            }
        }
        if let Some(c) = seg.correction(seg_bits) {
            if !c.is_trivial() {
                for q in c.support() {
                    let p = c.get(q);
                    ex.sim.apply_single(seg.block.offset + q, p);
                    applied.set(seg.block.offset + q, p);
                }
            }
        }
        bits |= seg_bits << shift;
        shift += seg.checks.len();
    }
    Ok(SyndromeOutcome { bits, retries_used, repeats, applied_correction: applied })
}
