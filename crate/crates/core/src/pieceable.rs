//! Two-piece round-robin logical CNOTs between the Steane and RM15 blocks,
//! and the three-CNOT conversion circuit built from them.
//!
//! The round robin is every physical CNOT from a control-block qubit to a
//! target-block qubit. Since both codes have `X̄ = X^⊗n`, `Z̄ = Z^⊗n`, odd `n`
//! and even-weight generators, this preserves the tensor-product stabilizer
//! group and acts as a logical CNOT.

use std::fmt::Write as _;

use rand::Rng;

use crate::circuit::{CliffordCircuit, Gate};
use crate::codes::{logical_measure, prepare_logical, Basis, Block, CodeKind};
use crate::ec::{self, layout, run_gadget, ECGadget, Segment};
use crate::error::{Error, Result};
use crate::logical::{LogicalMap, LogicalPauli2};
use crate::pauli::{Pauli, PauliOperator};
use crate::sim::{Executor, NoFaults};
use crate::tableau::CliffordTableau;

/// Which block is the control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Steane control, RM15 target.
    A,
    /// RM15 control, Steane target.
    B,
}

impl Orientation {
    pub fn control(self) -> CodeKind {
        match self {
            Self::A => CodeKind::Steane,
            Self::B => CodeKind::ReedMuller15,
        }
    }

    pub fn target(self) -> CodeKind {
        match self {
            Self::A => CodeKind::ReedMuller15,
            Self::B => CodeKind::Steane,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            _ => Err(Error::Config(format!("unknown circuit {s:?}, expected A or B"))),
        }
    }
}

/// Assignment of each round-robin gate `(c, t)` to piece 1 or piece 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    nc: usize,
    nt: usize,
    second: Vec<bool>,
}

impl Partition {
    /// Controls `0..split` in piece 1, the rest in piece 2.
    pub fn by_control(nc: usize, nt: usize, split: usize) -> Self {
        let second = (0..nc * nt).map(|i| i / nt >= split).collect();
        Self { nc, nt, second }
    }

    /// One row per control qubit, one `0`/`1` character per target; `1`
    /// places the gate in piece 2.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let nc = rows.len();
        let nt = rows.first().map_or(0, |r| r.len());
        let mut second = Vec::with_capacity(nc * nt);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != nt {
                return Err(Error::parse(i + 1, format!("row has {} entries, expected {nt}", r.len())));
            }
            for ch in r.chars() {
                second.push(match ch {
                    '0' => false,
                    '1' => true,
                    _ => return Err(Error::parse(i + 1, format!("bad partition entry {ch:?}"))),
                });
            }
        }
        Ok(Self { nc, nt, second })
    }

    pub fn rows(&self) -> Vec<String> {
        self.second
            .chunks(self.nt)
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }

    pub fn in_second(&self, c: usize, t: usize) -> bool {
        self.second[c * self.nt + t]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nc, self.nt)
    }

    /// Swaps the two pieces.
    pub fn complement(&self) -> Self {
        Self { nc: self.nc, nt: self.nt, second: self.second.iter().map(|b| !b).collect() }
    }
}

/// Piece partitions found by exhaustive single-fault verification.
pub mod partitions {
    pub const A: [&str; 7] = [
        "010001000010001",
        "001011110100010",
        "111110111101100",
        "001110111101110",
        "000101010100110",
        "110001110100000",
        "100101100100101",
    ];

    pub const B: [&str; 15] = [
        "0011101", "0010001", "1100010", "1011110", "0010010", "1101111", "1010001", "1100100",
        "1001010", "0100111", "0100100", "0100011", "0011111", "1000010", "0111101",
    ];
}

/// A logical CNOT split into two pieces with intermediate error correction.
#[derive(Clone, Debug)]
pub struct TwoBlockCircuit {
    pub name: String,
    pub orientation: Orientation,
    pub control: Block,
    pub target: Block,
    pub partition: Partition,
    /// CNOTs over the data register, location ids shared with `piece2`.
    pub piece1: CliffordCircuit,
    pub piece2: CliffordCircuit,
    /// Stabilizers commuting with every gate, over the data register.
    pub constant_control: Vec<PauliOperator>,
    pub constant_target: Vec<PauliOperator>,
    /// Corrects contagious errors between the pieces.
    pub e1: ECGadget,
    /// Full error correction after the second piece.
    pub e2: ECGadget,
}

/// Steane `[3, 4, 5]` detect X on the control; RM15 `[0..4]` detect Z on the target.
const E1_A: ([usize; 3], [usize; 4]) = ([3, 4, 5], [0, 1, 2, 3]);
/// Steane `[0, 1, 2]` detect Z on the target; four RM15 Z checks detect X on the control.
const E1_B: ([usize; 3], [usize; 4]) = ([0, 1, 2], [4, 5, 6, 7]);

pub fn build_ccnot(orientation: Orientation, partition: Partition) -> Result<TwoBlockCircuit> {
    let control = ec::block(orientation.control());
    let target = ec::block(orientation.target());
    let (nc, nt) = (control.code.n(), target.code.n());
    if partition.shape() != (nc, nt) {
        return Err(Error::DimensionMismatch { left: partition.nc * partition.nt, right: nc * nt });
    }
    let n = layout::DATA;
    let mut piece1 = CliffordCircuit::new(n);
    let mut piece2 = CliffordCircuit::new(n);
    let mut id = 0u32;
    for c in 0..nc {
        for t in 0..nt {
            let g = Gate::Cnot(control.offset + c, target.offset + t);
            if partition.in_second(c, t) {
                piece2.push_with_id(id, g)?;
            } else {
                piece1.push_with_id(id, g)?;
            }
            id += 1;
        }
    }
    // piece2 ids must follow piece1 in execution order
    let mut renumbered = CliffordCircuit::new(n);
    for (k, g) in piece2.gates().iter().enumerate() {
        renumbered.push_with_id(piece1.len() as u32 + k as u32, g.clone())?;
    }
    let mut p1 = CliffordCircuit::new(n);
    for (k, g) in piece1.gates().iter().enumerate() {
        p1.push_with_id(k as u32, g.clone())?;
    }

    let embed_gens = |b: &Block, gens: Vec<usize>| -> Vec<PauliOperator> {
        gens.into_iter().map(|i| b.embed(&b.code.generators()[i], n)).collect()
    };
    let steane = ec::block(CodeKind::Steane);
    let rm15 = ec::block(CodeKind::ReedMuller15);
    let (constant_control, constant_target, e1) = match orientation {
        Orientation::A => (
            embed_gens(&control, control.code.generator_indices(false)),
            embed_gens(&target, target.code.generator_indices(true)),
            ECGadget::from_segments(
                "e1",
                vec![
                    Segment::contagious(steane, &E1_A.0, Pauli::X)?,
                    Segment::contagious(rm15, &E1_A.1, Pauli::Z)?,
                ],
            ),
        ),
        Orientation::B => (
            embed_gens(&control, control.code.generator_indices(false)),
            embed_gens(&target, target.code.generator_indices(true)),
            ECGadget::from_segments(
                "e1",
                vec![
                    Segment::contagious(steane, &E1_B.0, Pauli::Z)?,
                    Segment::contagious(rm15, &E1_B.1, Pauli::X)?,
                ],
            ),
        ),
    };
    Ok(TwoBlockCircuit {
        name: format!("ccnot-{}", orientation.name()),
        orientation,
        control,
        target,
        partition,
        piece1: p1,
        piece2: renumbered,
        constant_control,
        constant_target,
        e1,
        e2: ECGadget::full("e2", &[steane, rm15]),
    })
}

/// Steane control, RM15 target, with the verified partition.
pub fn build_ccnot_a() -> TwoBlockCircuit {
    let p = Partition::from_rows(&partitions::A).expect("valid table");
    build_ccnot(Orientation::A, p).expect("fixed construction")
}

/// RM15 control, Steane target, with the verified partition.
pub fn build_ccnot_b() -> TwoBlockCircuit {
    let p = Partition::from_rows(&partitions::B).expect("valid table");
    build_ccnot(Orientation::B, p).expect("fixed construction")
}

pub fn build(orientation: Orientation) -> TwoBlockCircuit {
    match orientation {
        Orientation::A => build_ccnot_a(),
        Orientation::B => build_ccnot_b(),
    }
}

impl TwoBlockCircuit {
    /// Data gates in execution order.
    pub fn data_gates(&self) -> impl Iterator<Item = (u32, &Gate)> {
        self.piece1.iter().chain(self.piece2.iter())
    }

    pub fn num_data_gates(&self) -> usize {
        self.piece1.len() + self.piece2.len()
    }

    pub fn constant_stabilizers(&self) -> impl Iterator<Item = &PauliOperator> {
        self.constant_control.iter().chain(&self.constant_target)
    }

    fn conjugate_all(&self, p: &PauliOperator) -> Result<PauliOperator> {
        let q = self.piece1.conjugate(p)?;
        self.piece2.conjugate(&q)
    }

    fn blocks(&self) -> [Block; 2] {
        [ec::block(CodeKind::Steane), ec::block(CodeKind::ReedMuller15)]
    }

    /// Generators of `S₇ ⊗ S₁₅` whose image under the data gates leaves the
    /// group, as (block kind, generator index, image).
    pub fn stabilizer_violations(&self) -> Result<Vec<(CodeKind, usize, PauliOperator)>> {
        let n = layout::DATA;
        let mut out = Vec::new();
        for b in self.blocks() {
            for (i, g) in b.code.generators().iter().enumerate() {
                let img = self.conjugate_all(&b.embed(g, n))?;
                let ok = self.blocks().iter().all(|blk| {
                    let part = img.restrict(blk.offset, blk.code.n());
                    blk.code.in_stabilizer_group(&part)
                });
                if !ok {
                    out.push((b.code.kind(), i, img));
                }
            }
        }
        Ok(out)
    }

    /// `(constant stabilizer index, location id)` pairs where a gate does not
    /// fix the stabilizer.
    pub fn constant_violations(&self) -> Result<Vec<(usize, u32)>> {
        let mut out = Vec::new();
        for (i, s) in self.constant_stabilizers().enumerate() {
            for (id, g) in self.data_gates() {
                let mut img = s.clone();
                crate::circuit::conjugate_in_place(&mut img, g)?;
                if img != *s {
                    out.push((i, id));
                }
            }
        }
        Ok(out)
    }

    /// The logical map the data gates implement, read off by conjugating the
    /// logical operators.
    pub fn logical_action(&self) -> Result<LogicalMap> {
        let n = layout::DATA;
        let [steane, rm15] = self.blocks();
        let basis = [
            steane.embed(steane.code.logical_x(), n),
            steane.embed(steane.code.logical_z(), n),
            rm15.embed(rm15.code.logical_x(), n),
            rm15.embed(rm15.code.logical_z(), n),
        ];
        let mut images = [LogicalPauli2::I; 4];
        for (k, op) in basis.iter().enumerate() {
            let img = self.conjugate_all(op)?;
            let mut l = LogicalPauli2::I;
            for b in [steane, rm15] {
                let part = img.restrict(b.offset, b.code.n());
                if b.code.syndrome(&part)? != 0 {
                    return Err(Error::Unsupported(format!(
                        "{} maps a logical operator outside the centralizer",
                        self.name
                    )));
                }
                l = l.with_block(b.code.kind(), b.code.logical_class(&part));
            }
            images[k] = l;
        }
        Ok(LogicalMap::from_images(images))
    }

    /// The logical CNOT this circuit is meant to implement.
    pub fn intended_action(&self) -> LogicalMap {
        LogicalMap::cnot(self.orientation.control())
    }

    /// Gate list with location ids, piece markers and the constant stabilizers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# circuit {}", self.name);
        let _ = writeln!(
            s,
            "# control {} qubits {}..{}, target {} qubits {}..{}",
            self.control.code.name(),
            self.control.offset,
            self.control.offset + self.control.code.n(),
            self.target.code.name(),
            self.target.offset,
            self.target.offset + self.target.code.n()
        );
        for p in self.constant_stabilizers() {
            let _ = writeln!(s, "# constant {}", p.sparse_string());
        }
        let _ = writeln!(s, "# qubits {}", layout::DATA);
        let _ = writeln!(s, "# piece 1: {} gates", self.piece1.len());
        for (id, g) in self.piece1.iter() {
            let _ = writeln!(s, "{id}: {g}");
        }
        let _ = writeln!(s, "# piece 2: {} gates", self.piece2.len());
        for (id, g) in self.piece2.iter() {
            let _ = writeln!(s, "{id}: {g}");
        }
        s
    }
}

/// Direction of a code conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    SteaneToRm15,
    Rm15ToSteane,
}

impl Direction {
    pub fn source(self) -> CodeKind {
        match self {
            Self::SteaneToRm15 => CodeKind::Steane,
            Self::Rm15ToSteane => CodeKind::ReedMuller15,
        }
    }

    pub fn destination(self) -> CodeKind {
        match self {
            Self::SteaneToRm15 => CodeKind::ReedMuller15,
            Self::Rm15ToSteane => CodeKind::Steane,
        }
    }
}

/// A logical SWAP made of three pieceable CNOTs; the destination starts in `|0̄⟩`.
#[derive(Clone, Debug)]
pub struct ConversionCircuit {
    pub direction: Direction,
    pub stages: [TwoBlockCircuit; 3],
}

pub fn build_conversion(direction: Direction) -> ConversionCircuit {
    let (a, b) = (build_ccnot_a(), build_ccnot_b());
    let stages = match direction {
        Direction::SteaneToRm15 => [a.clone(), b, a],
        Direction::Rm15ToSteane => [b.clone(), a, b],
    };
    ConversionCircuit { direction, stages }
}

impl ConversionCircuit {
    pub fn logical_action(&self) -> Result<LogicalMap> {
        let mut m = LogicalMap::identity();
        for s in &self.stages {
            m = m.then(&s.logical_action()?);
        }
        Ok(m)
    }

    /// Runs the conversion without noise on a source prepared in `|0̄⟩`,
    /// `|1̄⟩` or `|+̄⟩` (`basis`, `flipped`), and reads the destination in
    /// the same basis. Returns the destination readout bit.
    pub fn transfer<R: Rng>(&self, basis: Basis, flipped: bool, rng: R) -> Result<bool> {
        let src = ec::block(self.direction.source());
        let dst = ec::block(self.direction.destination());
        let mut ex = Executor::new(CliffordTableau::new(layout::REGISTER), NoFaults, rng);
        prepare_logical(&mut ex.sim, &src, basis, &mut ex.rng)?;
        prepare_logical(&mut ex.sim, &dst, Basis::Z, &mut ex.rng)?;
        if flipped {
            let flip = match basis {
                Basis::Z => src.code.logical_x(),
                Basis::X => src.code.logical_z(),
            };
            ex.apply_operator(&src.embed(flip, layout::REGISTER));
        }
        for stage in &self.stages {
            for (_, g) in stage.piece1.iter() {
                ex.gate(g.clone());
            }
            run_gadget(&mut ex, &stage.e1)?;
            for (_, g) in stage.piece2.iter() {
                ex.gate(g.clone());
            }
            run_gadget(&mut ex, &stage.e2)?;
        }
        logical_measure(&ex.sim, &dst, basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gate_counts_and_order() {
        for c in [build_ccnot_a(), build_ccnot_b()] {
            assert_eq!(c.num_data_gates(), 105);
            let ids: Vec<u32> = c.data_gates().map(|(id, _)| id).collect();
            assert_eq!(ids, (0..105).collect::<Vec<_>>());
            for (_, g) in c.data_gates() {
                let Gate::Cnot(a, b) = *g else { panic!("non-CNOT data gate") };
                assert!(c.control.qubits().contains(&a));
                assert!(c.target.qubits().contains(&b));
            }
            // every (control, target) pair exactly once
            let mut pairs: Vec<(usize, usize)> = c
                .data_gates()
                .map(|(_, g)| match *g {
                    Gate::Cnot(a, b) => (a, b),
                    _ => unreachable!(),
                })
                .collect();
            pairs.sort();
            pairs.dedup();
            assert_eq!(pairs.len(), 105);
        }
    }

    #[test]
    fn stabilizer_group_is_preserved() {
        for c in [build_ccnot_a(), build_ccnot_b()] {
            assert!(c.stabilizer_violations().unwrap().is_empty(), "{}", c.name);
        }
    }

    #[test]
    fn constant_stabilizers_commute_with_each_gate() {
        let a = build_ccnot_a();
        assert_eq!(a.constant_control.len(), 3);
        assert_eq!(a.constant_target.len(), 4);
        assert_eq!(a.constant_control[0], PauliOperator::parse(22, "Z0 Z2 Z4 Z6").unwrap());
        let b = build_ccnot_b();
        assert_eq!(b.constant_control.len(), 10);
        assert_eq!(b.constant_target.len(), 3);
        assert_eq!(b.constant_target[2], PauliOperator::parse(22, "X3 X4 X5 X6").unwrap());
        for c in [a, b] {
            assert!(c.constant_violations().unwrap().is_empty());
        }
    }

    /// Independent check: Z on a single target qubit must not be fixed by the
    /// round robin, so the commutation test is not vacuous.
    #[test]
    fn non_constant_operator_is_flagged() {
        let mut a = build_ccnot_a();
        a.constant_target.push(PauliOperator::parse(22, "Z7").unwrap());
        assert!(!a.constant_violations().unwrap().is_empty());
    }

    #[test]
    fn logical_action_is_cnot() {
        for c in [build_ccnot_a(), build_ccnot_b()] {
            let m = c.logical_action().unwrap();
            assert_eq!(m, c.intended_action());
            // fixes Z̄ on the control and X̄ on the target
            let zc = LogicalPauli2::I.with_block(c.orientation.control(), (false, true));
            let xt = LogicalPauli2::I.with_block(c.orientation.target(), (true, false));
            assert_eq!(m.apply(zc), zc);
            assert_eq!(m.apply(xt), xt);
        }
    }

    /// Oracle: an X-type Steane generator (weight 4) picks up X̄_t⁴, which is a
    /// product of RM15 stabilizers times identity.
    #[test]
    fn even_weight_generator_image() {
        let a = build_ccnot_a();
        let g = PauliOperator::parse(22, "X0 X2 X4 X6").unwrap();
        let img = a.piece2.conjugate(&a.piece1.conjugate(&g).unwrap()).unwrap();
        assert_eq!(img.restrict(0, 7), g.restrict(0, 7));
        assert!(img.restrict(7, 15).is_trivial());
    }

    #[test]
    fn removing_a_gate_breaks_preservation() {
        let mut c = build_ccnot_a();
        let mut p1 = CliffordCircuit::new(layout::DATA);
        for (id, g) in c.piece1.iter().skip(1) {
            p1.push_with_id(id, g.clone()).unwrap();
        }
        c.piece1 = p1;
        assert!(!c.stabilizer_violations().unwrap().is_empty());
    }

    #[test]
    fn conversion_transfers_basis_states() {
        for dir in [Direction::SteaneToRm15, Direction::Rm15ToSteane] {
            let conv = build_conversion(dir);
            let swap = conv.logical_action().unwrap();
            let x_src = LogicalPauli2::I.with_block(dir.source(), (true, false));
            let x_dst = LogicalPauli2::I.with_block(dir.destination(), (true, false));
            assert_eq!(swap.apply(x_src), x_dst);
            for (basis, flipped, expect) in
                [(Basis::Z, false, false), (Basis::Z, true, true), (Basis::X, false, false)]
            {
                let rng = ChaCha8Rng::seed_from_u64(11);
                assert_eq!(conv.transfer(basis, flipped, rng).unwrap(), expect, "{dir:?} {basis:?}");
            }
        }
    }

    #[test]
    fn partition_text_round_trip() {
        let p = Partition::from_rows(&partitions::B).unwrap();
        let rows = p.rows();
        let back = Partition::from_rows(&rows.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.complement().complement(), p);
        assert!(Partition::from_rows(&["01", "0"]).is_err());
        assert!(Partition::from_rows(&["0x"]).is_err());
    }

    #[test]
    fn export_lists_every_gate() {
        let a = build_ccnot_a();
        let text = a.to_text();
        assert!(text.contains("# constant Z0 Z2 Z4 Z6"));
        let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        let parsed = CliffordCircuit::parse(22, &body).unwrap();
        assert_eq!(parsed.len(), 105);
    }
}
