//! Logical Paulis and Cliffords on the two encoded qubits (Steane, RM15).

use std::fmt;

use crate::codes::CodeKind;

/// A two-qubit logical Pauli, phase dropped.
///
/// Bit 0 is X̄ on the Steane block, bit 1 Z̄ on Steane, bit 2 X̄ on RM15,
/// bit 3 Z̄ on RM15.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogicalPauli2(u8);

impl LogicalPauli2 {
    pub const I: Self = Self(0);
    pub const X_STEANE: Self = Self(1);
    pub const Z_STEANE: Self = Self(2);
    pub const X_RM15: Self = Self(4);
    pub const Z_RM15: Self = Self(8);

    pub fn from_index(i: u8) -> Self {
        Self(i & 15)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// `(x̄, z̄)` on one block.
    pub fn on(self, kind: CodeKind) -> (bool, bool) {
        let b = match kind {
            CodeKind::Steane => self.0,
            CodeKind::ReedMuller15 => self.0 >> 2,
        };
        (b & 1 == 1, b & 2 == 2)
    }

    pub fn from_blocks(steane: (bool, bool), rm15: (bool, bool)) -> Self {
        Self(steane.0 as u8 | (steane.1 as u8) << 1 | (rm15.0 as u8) << 2 | (rm15.1 as u8) << 3)
    }

    /// Same operator, with `(x̄, z̄)` set on one block.
    pub fn with_block(self, kind: CodeKind, xz: (bool, bool)) -> Self {
        let v = xz.0 as u8 | (xz.1 as u8) << 1;
        match kind {
            CodeKind::Steane => Self(self.0 & 0b1100 | v),
            CodeKind::ReedMuller15 => Self(self.0 & 0b0011 | v << 2),
        }
    }

    /// Symplectic product: true when the operators anticommute.
    pub fn anticommutes_with(self, other: Self) -> bool {
        let swap = |v: u8| (v & 0b0101) << 1 | (v & 0b1010) >> 1;
        (self.0 & swap(other.0)).count_ones() % 2 == 1
    }

    /// Two-character label, Steane block first (e.g. `XI`, `IZ`).
    pub fn label(self) -> String {
        let c = |(x, z): (bool, bool)| match (x, z) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        };
        [c(self.on(CodeKind::Steane)), c(self.on(CodeKind::ReedMuller15))].iter().collect()
    }

    /// All sixteen, identity first.
    pub fn all() -> impl Iterator<Item = Self> {
        (0..16).map(Self)
    }
}

impl std::ops::BitXor for LogicalPauli2 {
    type Output = Self;

    fn bitxor(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl std::ops::BitXorAssign for LogicalPauli2 {
    fn bitxor_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl fmt::Display for LogicalPauli2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A logical Clifford up to Pauli corrections, stored as the images of the
/// four basis Paulis in bit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogicalMap([LogicalPauli2; 4]);

impl LogicalMap {
    pub fn identity() -> Self {
        Self([LogicalPauli2(1), LogicalPauli2(2), LogicalPauli2(4), LogicalPauli2(8)])
    }

    pub fn from_images(images: [LogicalPauli2; 4]) -> Self {
        Self(images)
    }

    pub fn images(&self) -> &[LogicalPauli2; 4] {
        &self.0
    }

    /// Logical CNOT with the given block as control.
    pub fn cnot(control: CodeKind) -> Self {
        let (xc, zc, xt, zt) = match control {
            CodeKind::Steane => (1, 2, 4, 8),
            CodeKind::ReedMuller15 => (4, 8, 1, 2),
        };
        let mut img = [LogicalPauli2::I; 4];
        let pos = |bit: u8| bit.trailing_zeros() as usize;
        img[pos(xc)] = LogicalPauli2(xc | xt);
        img[pos(zc)] = LogicalPauli2(zc);
        img[pos(xt)] = LogicalPauli2(xt);
        img[pos(zt)] = LogicalPauli2(zc | zt);
        Self(img)
    }

    pub fn apply(&self, p: LogicalPauli2) -> LogicalPauli2 {
        let mut out = LogicalPauli2::I;
        for (i, img) in self.0.iter().enumerate() {
            if (p.0 >> i) & 1 == 1 {
                out ^= *img;
            }
        }
        out
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Self) -> Self {
        Self(self.0.map(|p| other.apply(p)))
    }

    /// Preserves commutation of every basis pair.
    pub fn is_symplectic(&self) -> bool {
        let basis = Self::identity().0;
        (0..4).all(|i| {
            (0..4).all(|j| {
                basis[i].anticommutes_with(basis[j]) == self.0[i].anticommutes_with(self.0[j])
            })
        })
    }
}

impl Default for LogicalMap {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cnot_images() {
        let m = LogicalMap::cnot(CodeKind::Steane);
        assert_eq!(m.apply(LogicalPauli2::X_STEANE).label(), "XX");
        assert_eq!(m.apply(LogicalPauli2::Z_RM15).label(), "ZZ");
        assert_eq!(m.apply(LogicalPauli2::Z_STEANE).label(), "ZI");
        assert_eq!(m.apply(LogicalPauli2::X_RM15).label(), "IX");
        let b = LogicalMap::cnot(CodeKind::ReedMuller15);
        assert_eq!(b.apply(LogicalPauli2::X_RM15).label(), "XX");
        assert_eq!(b.apply(LogicalPauli2::Z_STEANE).label(), "ZZ");
    }

    #[test]
    fn three_cnots_swap() {
        let a = LogicalMap::cnot(CodeKind::Steane);
        let b = LogicalMap::cnot(CodeKind::ReedMuller15);
        let swap = a.then(&b).then(&a);
        for p in LogicalPauli2::all() {
            let (s, r) = (p.on(CodeKind::Steane), p.on(CodeKind::ReedMuller15));
            assert_eq!(swap.apply(p), LogicalPauli2::from_blocks(r, s));
        }
    }

    #[test]
    fn labels() {
        assert_eq!(LogicalPauli2::I.label(), "II");
        assert_eq!(LogicalPauli2::from_index(3).label(), "YI");
        assert_eq!(LogicalPauli2::from_index(8).to_string(), "IZ");
    }

    proptest! {
        #[test]
        fn cnot_is_symplectic_involution(p in 0u8..16, ctrl in any::<bool>()) {
            let kind = if ctrl { CodeKind::Steane } else { CodeKind::ReedMuller15 };
            let m = LogicalMap::cnot(kind);
            prop_assert!(m.is_symplectic());
            let p = LogicalPauli2::from_index(p);
            prop_assert_eq!(m.apply(m.apply(p)), p);
        }

        #[test]
        fn block_accessors_round_trip(p in 0u8..16) {
            let p = LogicalPauli2::from_index(p);
            let q = LogicalPauli2::from_blocks(p.on(CodeKind::Steane), p.on(CodeKind::ReedMuller15));
            prop_assert_eq!(p, q);
            prop_assert_eq!(LogicalPauli2::I.with_block(CodeKind::ReedMuller15, p.on(CodeKind::ReedMuller15)) ^
                LogicalPauli2::I.with_block(CodeKind::Steane, p.on(CodeKind::Steane)), p);
        }
    }
}
