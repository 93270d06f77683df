//! Recovery operators and logical decoders for exRec records.

use std::collections::HashMap;

use crate::codes::{StabilizerCode, Syndrome};
use crate::logical::LogicalPauli2;
use crate::pauli::PauliOperator;

/// Minimal-weight correction for a syndrome.
pub fn mwd_decode(code: &StabilizerCode, s: Syndrome) -> PauliOperator {
    code.decode(s).clone()
}

/// `X̄^gx Z̄^gz T(s)`, with `T(s)` the minimal-weight correction and the
/// stabilizer factor fixed to identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryOperator {
    pub pure_part: PauliOperator,
    pub g_x: bool,
    pub g_z: bool,
}

impl RecoveryOperator {
    pub fn operator(&self, code: &StabilizerCode) -> PauliOperator {
        let mut op = self.pure_part.clone();
        if self.g_x {
            op.mul_assign_right(code.logical_x());
        }
        if self.g_z {
            op.mul_assign_right(code.logical_z());
        }
        op
    }
}

pub fn assemble_recovery(code: &StabilizerCode, s: Syndrome, g_x: bool, g_z: bool) -> PauliOperator {
    RecoveryOperator { pure_part: mwd_decode(code, s), g_x, g_z }.operator(code)
}

/// Logical correction applied on top of the TEC's minimal-weight step.
pub trait LogicalDecoder: Sync {
    fn correction(&self, key: u64) -> LogicalPauli2;

    /// Batch form; decoders with a per-call cost override this.
    fn corrections(&self, keys: &[u64]) -> Vec<LogicalPauli2> {
        keys.iter().map(|&k| self.correction(k)).collect()
    }

    fn name(&self) -> String;
}

/// Minimal-weight decoding alone: no logical correction.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mwd;

impl LogicalDecoder for Mwd {
    fn correction(&self, _: u64) -> LogicalPauli2 {
        LogicalPauli2::I
    }

    fn name(&self) -> String {
        "mwd".into()
    }
}

/// Logical corrections for syndrome keys seen in single-fault events; every
/// other key falls back to no correction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultTable {
    table: HashMap<u64, LogicalPauli2>,
}

impl FaultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps the first value for each key; returns the stored value.
    pub fn insert(&mut self, key: u64, correction: LogicalPauli2) -> LogicalPauli2 {
        *self.table.entry(key).or_insert(correction)
    }

    pub fn get(&self, key: u64) -> Option<LogicalPauli2> {
        self.table.get(&key).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Entries with a nontrivial correction.
    pub fn nontrivial(&self) -> usize {
        self.table.values().filter(|l| !l.is_identity()).count()
    }
}

impl LogicalDecoder for FaultTable {
    fn correction(&self, key: u64) -> LogicalPauli2 {
        self.get(key).unwrap_or(LogicalPauli2::I)
    }

    fn name(&self) -> String {
        "lookup".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{RM15, STEANE};
    use crate::pauli::Pauli;

    fn bits(s: &str) -> Syndrome {
        s.chars().enumerate().map(|(i, c)| ((c == '1') as Syndrome) << i).sum()
    }

    #[test]
    fn examples() {
        assert!(mwd_decode(&STEANE, 0).is_trivial());
        assert_eq!(mwd_decode(&STEANE, bits("000100")), PauliOperator::parse(7, "X0").unwrap());
        let z7 = PauliOperator::single(15, 7, Pauli::Z);
        assert_eq!(mwd_decode(&RM15, RM15.syndrome(&z7).unwrap()), z7);
        assert!(assemble_recovery(&STEANE, 0, false, false).is_trivial());
        assert_eq!(assemble_recovery(&STEANE, 0, true, false), *STEANE.logical_x());
        let r = assemble_recovery(&STEANE, bits("000100"), false, true);
        let expect = PauliOperator::parse(7, "Y0 Z1 Z2 Z3 Z4 Z5 Z6").unwrap();
        assert_eq!(r.x_words(), expect.x_words());
        assert_eq!(r.z_words(), expect.z_words());
    }

    /// Every weight-≤1 error times its recovery is a stabilizer, both codes.
    #[test]
    fn single_errors_are_recovered() {
        for code in [&*STEANE, &*RM15] {
            for q in 0..code.n() {
                for p in Pauli::NON_IDENTITY {
                    let e = PauliOperator::single(code.n(), q, p);
                    let mut r = assemble_recovery(code, code.syndrome(&e).unwrap(), false, false);
                    r.mul_assign_right(&e);
                    assert!(code.in_stabilizer_group(&r), "{} {q} {p:?}", code.name());
                }
            }
        }
    }

    /// Logical bits select the four classes bijectively.
    #[test]
    fn logical_bits_are_bijective() {
        for code in [&*STEANE, &*RM15] {
            let mut seen = std::collections::HashSet::new();
            for (gx, gz) in [(false, false), (true, false), (false, true), (true, true)] {
                let r = assemble_recovery(code, 0, gx, gz);
                assert_eq!(code.logical_class(&r), (gx, gz));
                seen.insert(code.logical_class(&r));
            }
            assert_eq!(seen.len(), 4);
        }
    }

    #[test]
    fn table_keeps_first_entry() {
        let mut t = FaultTable::new();
        assert_eq!(t.insert(5, LogicalPauli2::X_STEANE), LogicalPauli2::X_STEANE);
        assert_eq!(t.insert(5, LogicalPauli2::Z_RM15), LogicalPauli2::X_STEANE);
        assert_eq!(t.correction(5), LogicalPauli2::X_STEANE);
        assert_eq!(t.correction(6), LogicalPauli2::I);
        assert_eq!((t.len(), t.nontrivial()), (1, 1));
        assert_eq!(Mwd.correction(5), LogicalPauli2::I);
    }
}
