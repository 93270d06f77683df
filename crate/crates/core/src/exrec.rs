//! One extended rectangle: leading EC, the two pieces with their gadgets, and
//! trailing EC, run on either simulation backend.

use rand::Rng;

use crate::circuit::Gate;
use crate::codes::{ideal_project, prepare_logical, Basis, Block, CodeKind};
use crate::ec::{self, layout, run_gadget, ECGadget, SyndromeRounds};
use crate::error::{Error, Result};
use crate::frame::PauliFrame;
use crate::logical::{LogicalMap, LogicalPauli2};
use crate::pauli::{Pauli, PauliOperator};
use crate::pieceable::{ConversionCircuit, TwoBlockCircuit};
use crate::sim::{Executor, FaultSource, Simulator};
use crate::tableau::CliffordTableau;

/// Syndrome widths of the decoder input.
pub const LEC_BITS: usize = 20;
pub const E1_BITS: usize = 7;
pub const TEC_BITS: usize = 20;
pub const KEY_BITS: usize = LEC_BITS + E1_BITS + TEC_BITS;

/// Packs the three syndromes into one key, `s_lec` in the low bits.
pub fn pack_key(s_lec: u32, s1: u32, s2: u32) -> u64 {
    s_lec as u64 | (s1 as u64) << LEC_BITS | (s2 as u64) << (LEC_BITS + E1_BITS)
}

pub fn unpack_key(key: u64) -> (u32, u32, u32) {
    let mask = |w: usize| (1u64 << w) - 1;
    (
        (key & mask(LEC_BITS)) as u32,
        ((key >> LEC_BITS) & mask(E1_BITS)) as u32,
        ((key >> (LEC_BITS + E1_BITS)) & mask(TEC_BITS)) as u32,
    )
}

/// The two blocks, Steane first.
pub fn data_blocks() -> [Block; 2] {
    [ec::block(CodeKind::Steane), ec::block(CodeKind::ReedMuller15)]
}

/// A simulator that can start a trial and report the logical error.
pub trait Backend: Simulator {
    /// Resets to the trial's initial encoded state.
    fn prepare<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()>;

    /// Noiseless syndrome measurement and minimal-weight correction of both blocks.
    fn project<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()>;

    /// Logical Pauli separating the state, after ideal decoding of both
    /// blocks, from the noiseless state with `map` applied.
    fn logical_error<R: Rng + ?Sized>(&self, map: &LogicalMap, rng: &mut R) -> Result<LogicalPauli2>;
}

impl Backend for PauliFrame {
    fn prepare<R: Rng + ?Sized>(&mut self, _: &mut R) -> Result<()> {
        self.reset();
        Ok(())
    }

    fn project<R: Rng + ?Sized>(&mut self, _: &mut R) -> Result<()> {
        for b in data_blocks() {
            let e = self.error_on(b.offset, b.code.n());
            let c = b.code.decode(b.code.syndrome_unchecked(&e));
            for q in c.support() {
                self.apply_single(b.offset + q, c.get(q));
            }
        }
        Ok(())
    }

    fn logical_error<R: Rng + ?Sized>(&self, _: &LogicalMap, _: &mut R) -> Result<LogicalPauli2> {
        let mut l = LogicalPauli2::I;
        for b in data_blocks() {
            let e = self.error_on(b.offset, b.code.n());
            l = l.with_block(b.code.kind(), b.code.ideal_decode_class(&e));
        }
        Ok(l)
    }
}

/// Each block's logical qubit is Bell-paired with a reference qubit, so one
/// run reveals the whole logical error.
impl Backend for CliffordTableau {
    fn prepare<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.num_qubits() != layout::REGISTER {
            return Err(Error::DimensionMismatch { left: self.num_qubits(), right: layout::REGISTER });
        }
        *self = CliffordTableau::new(layout::REGISTER);
        for (b, r) in data_blocks().iter().zip([layout::REF_STEANE, layout::REF_RM15]) {
            prepare_logical(self, b, Basis::Z, rng)?;
            self.apply_gate(&Gate::PrepX(r), rng)?;
            for q in b.qubits() {
                self.apply_gate(&Gate::Cnot(r, q), rng)?;
            }
        }
        Ok(())
    }

    fn project<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        ideal_project(self, &data_blocks(), rng).map(|_| ())
    }

    fn logical_error<R: Rng + ?Sized>(&self, map: &LogicalMap, rng: &mut R) -> Result<LogicalPauli2> {
        let mut t = self.clone();
        ideal_project(&mut t, &data_blocks(), rng)?;
        let refs = [
            (layout::REF_STEANE, Pauli::X),
            (layout::REF_STEANE, Pauli::Z),
            (layout::REF_RM15, Pauli::X),
            (layout::REF_RM15, Pauli::Z),
        ];
        let mut flips = [false; 4];
        for (k, (&(r, p), img)) in refs.iter().zip(map.images()).enumerate() {
            let mut op = physical_logical(*img)?;
            op.set(r, p);
            flips[k] = t.measure_deterministic(&op)?;
        }
        let images = map.images();
        LogicalPauli2::all()
            .find(|e| (0..4).all(|k| e.anticommutes_with(images[k]) == flips[k]))
            .ok_or(Error::NonDeterministic)
    }
}

/// `X̄`/`Z̄` products on the register; rejects images with Y on a block.
fn physical_logical(l: LogicalPauli2) -> Result<PauliOperator> {
    let n = layout::REGISTER;
    let mut op = PauliOperator::identity(n);
    for b in data_blocks() {
        let rep = match l.on(b.code.kind()) {
            (false, false) => continue,
            (true, false) => b.code.logical_x(),
            (false, true) => b.code.logical_z(),
            (true, true) => {
                return Err(Error::Unsupported(format!("logical image {l} has Y on a block")));
            }
        };
        op.mul_assign_right(&b.embed(rep, n));
    }
    Ok(op)
}

/// What happens to the LEC output before the pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LecMode {
    /// Noiseless projection onto the codespace: the pieces start from a
    /// codeword and LEC faults can only shift the reference state.
    #[default]
    Project,
    /// The residual error is kept and only its decoded class is taken as the
    /// reference. This also covers errors handed over by a preceding gadget.
    Virtual,
}

impl std::str::FromStr for LecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "project" => Ok(Self::Project),
            "virtual" => Ok(Self::Virtual),
            _ => Err(Error::Config(format!("unknown LEC mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for LecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Project => "project",
            Self::Virtual => "virtual",
        })
    }
}

/// A pieceable CNOT with leading and trailing error correction.
#[derive(Clone, Debug)]
pub struct ExRec {
    pub circuit: TwoBlockCircuit,
    pub lec: ECGadget,
    pub tec: ECGadget,
    pub lec_mode: LecMode,
}

impl ExRec {
    pub fn new(circuit: TwoBlockCircuit) -> Self {
        let blocks = data_blocks();
        Self {
            circuit,
            lec: ECGadget::full("lec", &blocks),
            tec: ECGadget::full("tec", &blocks),
            lec_mode: LecMode::default(),
        }
    }

    pub fn with_lec_mode(mut self, mode: LecMode) -> Self {
        self.lec_mode = mode;
        self
    }

    pub fn with_rounds(mut self, rounds: SyndromeRounds) -> Self {
        for g in [&mut self.lec, &mut self.tec, &mut self.circuit.e1, &mut self.circuit.e2] {
            g.rounds = rounds;
        }
        self
    }

    pub fn with_max_retries(mut self, retries: u32) -> Self {
        for g in [&mut self.lec, &mut self.tec, &mut self.circuit.e1, &mut self.circuit.e2] {
            g.max_retries = retries;
        }
        self
    }

    /// Noisy locations of a fault-free run.
    pub fn location_count(&self) -> usize {
        self.lec.location_count()
            + self.circuit.num_data_gates()
            + self.circuit.e1.location_count()
            + self.tec.location_count()
    }
}

/// Named stretches of an exRec run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Lec,
    Piece1,
    E1,
    Piece2,
    Tec,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Lec, Phase::Piece1, Phase::E1, Phase::Piece2, Phase::Tec];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lec => "lec",
            Self::Piece1 => "piece1",
            Self::E1 => "e1",
            Self::Piece2 => "piece2",
            Self::Tec => "tec",
        }
    }
}

/// Outcome of one exRec run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub s_lec: u32,
    pub s1: u32,
    pub s2: u32,
    /// Logical error with no decoder correction beyond the TEC's own.
    pub error: LogicalPauli2,
    pub retries: u32,
    pub repeats: u32,
    /// Location count at the end of each phase.
    pub marks: [usize; 5],
}

impl TrialRecord {
    pub fn key(&self) -> u64 {
        pack_key(self.s_lec, self.s1, self.s2)
    }

    pub fn phase_of(&self, location: usize) -> Phase {
        let k = self.marks.iter().position(|&m| location < m).unwrap_or(4);
        Phase::ALL[k]
    }
}

/// Runs one exRec. The error is `L_end ⊕ cnot(L_lec)`, where `L_lec` is the
/// logical class after ideally decoding the LEC output.
pub fn run_trial<S: Backend, F: FaultSource, R: Rng>(
    rec: &ExRec,
    ex: &mut Executor<S, F, R>,
) -> Result<TrialRecord> {
    ex.sim.prepare(&mut ex.rng)?;
    ex.reset_locations();
    let mut marks = [0; 5];
    let lec = run_gadget(ex, &rec.lec)?;
    marks[0] = ex.locations();
    if rec.lec_mode == LecMode::Project {
        ex.sim.project(&mut ex.rng)?;
    }
    let l_lec = ex.sim.logical_error(&LogicalMap::identity(), &mut ex.rng)?;
    for g in rec.circuit.piece1.gates() {
        ex.gate(g.clone());
    }
    marks[1] = ex.locations();
    let e1 = run_gadget(ex, &rec.circuit.e1)?;
    marks[2] = ex.locations();
    for g in rec.circuit.piece2.gates() {
        ex.gate(g.clone());
    }
    marks[3] = ex.locations();
    let tec = run_gadget(ex, &rec.tec)?;
    marks[4] = ex.locations();
    let map = rec.circuit.intended_action();
    let l_end = ex.sim.logical_error(&map, &mut ex.rng)?;
    Ok(TrialRecord {
        s_lec: lec.bits,
        s1: e1.bits,
        s2: tec.bits,
        error: l_end ^ map.apply(l_lec),
        retries: lec.retries_used + e1.retries_used + tec.retries_used,
        repeats: lec.repeats + e1.repeats + tec.repeats,
        marks,
    })
}

/// Runs a trial, redrawing while cat verification is exhausted. Returns the
/// record and the number of rejected attempts.
pub fn run_accepted<S: Backend, F: FaultSource, R: Rng>(
    rec: &ExRec,
    ex: &mut Executor<S, F, R>,
) -> Result<(TrialRecord, u32)> {
    let mut rejected = 0;
    loop {
        match run_trial(rec, ex) {
            Ok(r) => return Ok((r, rejected)),
            Err(Error::VerificationExhausted { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Outcome of one noisy conversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversionRecord {
    /// Per-stage decoder keys: input EC, e1, output EC.
    pub keys: [u64; 3],
    pub error: LogicalPauli2,
    /// Location count at the start of each stage's pieces and at the end.
    pub marks: [usize; 4],
}

/// Full EC, then each stage's pieces followed by full EC. The EC after a
/// stage doubles as the leading EC of the next.
pub fn run_conversion_trial<S: Backend, F: FaultSource, R: Rng>(
    conv: &ConversionCircuit,
    rounds: SyndromeRounds,
    ex: &mut Executor<S, F, R>,
) -> Result<ConversionRecord> {
    let blocks = data_blocks();
    let full = ECGadget::full("ec", &blocks).with_rounds(rounds);
    ex.sim.prepare(&mut ex.rng)?;
    ex.reset_locations();
    let mut s_in = run_gadget(ex, &full)?.bits;
    let mut marks = [0; 4];
    let l_start = ex.sim.logical_error(&LogicalMap::identity(), &mut ex.rng)?;
    let mut keys = [0; 3];
    let mut map = LogicalMap::identity();
    for (k, stage) in conv.stages.iter().enumerate() {
        marks[k] = ex.locations();
        for g in stage.piece1.gates() {
            ex.gate(g.clone());
        }
        let mut e1 = stage.e1.clone();
        e1.rounds = rounds;
        let s1 = run_gadget(ex, &e1)?.bits;
        for g in stage.piece2.gates() {
            ex.gate(g.clone());
        }
        let s_out = run_gadget(ex, &full)?.bits;
        keys[k] = pack_key(s_in, s1, s_out);
        s_in = s_out;
        map = map.then(&stage.intended_action());
    }
    marks[3] = ex.locations();
    let l_end = ex.sim.logical_error(&map, &mut ex.rng)?;
    Ok(ConversionRecord { keys, error: l_end ^ map.apply(l_start), marks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseParams;
    use crate::pieceable::{build_ccnot_a, build_ccnot_b, build_conversion, Direction};
    use crate::sim::{InjectMany, LocalFault, NoFaults, Recorder};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame_ex<F: FaultSource>(f: F) -> Executor<PauliFrame, F, ChaCha8Rng> {
        Executor::new(PauliFrame::new(layout::REGISTER), f, ChaCha8Rng::seed_from_u64(1))
    }

    fn tableau_ex<F: FaultSource>(f: F, seed: u64) -> Executor<CliffordTableau, F, ChaCha8Rng> {
        Executor::new(CliffordTableau::new(layout::REGISTER), f, ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn key_packing_round_trips() {
        let k = pack_key(0xABCDE, 0x55, 0xFFFFF);
        assert_eq!(unpack_key(k), (0xABCDE, 0x55, 0xFFFFF));
        assert!(k < 1 << KEY_BITS);
    }

    #[test]
    fn noiseless_trials_are_clean() {
        for rec in [ExRec::new(build_ccnot_a()), ExRec::new(build_ccnot_b())] {
            let r = run_trial(&rec, &mut frame_ex(NoFaults)).unwrap();
            assert_eq!((r.key(), r.error), (0, LogicalPauli2::I));
            assert_eq!(r.marks[4], rec.location_count());
            let t = run_trial(&rec, &mut tableau_ex(NoFaults, 3)).unwrap();
            assert_eq!((t.key(), t.error), (0, LogicalPauli2::I));
        }
    }

    #[test]
    fn recorder_matches_location_count() {
        let rec = ExRec::new(build_ccnot_a());
        let mut ex = frame_ex(Recorder::default());
        let r = run_trial(&rec, &mut ex).unwrap();
        assert_eq!(ex.faults.kinds.len(), rec.location_count());
        assert_eq!(r.phase_of(0), Phase::Lec);
        assert_eq!(r.phase_of(r.marks[0]), Phase::Piece1);
        assert_eq!(r.phase_of(r.marks[4] - 1), Phase::Tec);
    }

    /// A logical X̄ on the control before the pieces is an LEC-level error
    /// and must not count against the exRec.
    #[test]
    fn lec_logical_is_reference_not_error() {
        let rec = ExRec::new(build_ccnot_a());
        let mut ex = frame_ex(NoFaults);
        ex.sim.prepare(&mut ex.rng).unwrap();
        run_gadget(&mut ex, &rec.lec).unwrap();
        let xbar = PauliOperator::x_on(layout::REGISTER, &(0..7).collect::<Vec<_>>());
        ex.apply_operator(&xbar);
        let l = ex.sim.logical_error(&LogicalMap::identity(), &mut ex.rng).unwrap();
        assert_eq!(l, LogicalPauli2::X_STEANE);
        let m = rec.circuit.intended_action();
        assert_eq!(m.apply(l).label(), "XX");
    }

    /// Two faults placed on identical data qubits in both backends give the
    /// same logical error.
    #[test]
    fn backends_agree_on_forced_faults() {
        let rec = ExRec::new(build_ccnot_a());
        let lec = rec.lec.location_count();
        let cases = [
            vec![(lec + 3, LocalFault(Pauli::X, Pauli::I)), (lec + 40, LocalFault(Pauli::I, Pauli::Z))],
            vec![(lec + 1, LocalFault(Pauli::Z, Pauli::Z)), (lec + 2, LocalFault(Pauli::Y, Pauli::X))],
            vec![(10, LocalFault(Pauli::Z, Pauli::I)), (lec + 100, LocalFault(Pauli::X, Pauli::X))],
        ];
        for faults in cases {
            let map: std::collections::HashMap<_, _> = faults.into_iter().collect();
            let f = run_trial(&rec, &mut frame_ex(InjectMany(map.clone()))).unwrap();
            for seed in 0..3 {
                let t = run_trial(&rec, &mut tableau_ex(InjectMany(map.clone()), seed)).unwrap();
                assert_eq!((t.key(), t.error), (f.key(), f.error));
            }
        }
    }

    #[test]
    fn statistical_agreement_small() {
        let rec = ExRec::new(build_ccnot_b());
        let noise = NoiseParams::quarter_eps(5e-3).unwrap();
        let n = 300;
        let mut ef = 0;
        let mut et = 0;
        let mut fx = frame_ex(noise);
        let mut tx = tableau_ex(noise, 9);
        for _ in 0..n {
            ef += !run_accepted(&rec, &mut fx).unwrap().0.error.is_identity() as u32;
            et += !run_accepted(&rec, &mut tx).unwrap().0.error.is_identity() as u32;
        }
        // both rates are small; a gross backend mismatch would show here
        assert!((ef as i64 - et as i64).abs() < 40, "{ef} {et}");
    }

    #[test]
    fn noiseless_conversion_is_clean() {
        for dir in [Direction::SteaneToRm15, Direction::Rm15ToSteane] {
            let conv = build_conversion(dir);
            let r = run_conversion_trial(&conv, SyndromeRounds::default(), &mut frame_ex(NoFaults)).unwrap();
            assert_eq!(r.keys, [0; 3]);
            assert!(r.error.is_identity());
            let t = run_conversion_trial(&conv, SyndromeRounds::default(), &mut tableau_ex(NoFaults, 2))
                .unwrap();
            assert!(t.error.is_identity());
        }
    }
}
