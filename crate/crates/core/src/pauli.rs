//! n-qubit Pauli operators in symplectic form.
//!
//! An operator is stored as `i^phase · σ(x_0, z_0) ⊗ … ⊗ σ(x_{n-1}, z_{n-1})`
//! where `σ(1, 0) = X`, `σ(0, 1) = Z` and `σ(1, 1) = Y`. The x and z bits are
//! packed little-endian into `u64` words, so commutation checks and products
//! reduce to word-wise AND/XOR and popcounts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Single-qubit Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Tie-break order used by the lookup decoders.
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// An n-qubit Pauli operator with an exact phase in {1, i, -1, -i}.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    /// `p` acting on qubit `q` of an `n`-qubit register.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        op.set(q, p);
        op
    }

    pub fn from_sparse(n: usize, sites: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let mut op = Self::identity(n);
        for (q, p) in sites {
            op.set(q, p);
        }
        op
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        Self::from_sparse(paulis.len(), paulis.iter().copied().enumerate())
    }

    /// X on every listed qubit.
    pub fn x_on(n: usize, qubits: &[usize]) -> Self {
        Self::from_sparse(n, qubits.iter().map(|&q| (q, Pauli::X)))
    }

    /// Z on every listed qubit.
    pub fn z_on(n: usize, qubits: &[usize]) -> Self {
        Self::from_sparse(n, qubits.iter().map(|&q| (q, Pauli::Z)))
    }

    /// Builds an operator straight from packed words. Bits above `n` are cleared.
    pub fn from_words(n: usize, mut x: Vec<u64>, mut z: Vec<u64>, phase: u8) -> Self {
        let w = words_for(n);
        x.resize(w, 0);
        z.resize(w, 0);
        let tail = n % 64;
        if tail != 0 {
            let mask = (1u64 << tail) - 1;
            x[w - 1] &= mask;
            z[w - 1] &= mask;
        }
        Self { n, x, z, phase: phase & 3 }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Exponent of `i` in the global phase.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub(crate) fn raw_mut(&mut self) -> (&mut [u64], &mut [u64], &mut u8) {
        (&mut self.x, &mut self.z, &mut self.phase)
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q >> 6] >> (q & 63)) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (xb, zb) = p.bits();
        let (w, b) = (q >> 6, q & 63);
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    /// True when the operator is a multiple of the identity.
    pub fn is_trivial(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn is_x_type(&self) -> bool {
        self.z.iter().all(|&w| w == 0)
    }

    pub fn is_z_type(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// Symplectic product: true iff the operators anticommute. Sizes must match.
    #[inline]
    pub fn anticommutes_with(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & other.z[i]).count_ones() ^ (self.z[i] & other.x[i]).count_ones();
        }
        acc & 1 == 1
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        Ok(!self.anticommutes_with(other))
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Phase-exact product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        out.mul_assign_right(other);
        Ok(out)
    }

    /// In-place `self ← self · other`, phase-exact. Sizes must match.
    pub fn mul_assign_right(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        // σ(a)σ(b) = i^{x1 z1 + x2 z2 + 2 z1 x2 - x3 z3} σ(a ⊕ b), summed over sites.
        let mut e: i64 = (self.phase + other.phase) as i64;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let (x3, z3) = (x1 ^ x2, z1 ^ z2);
            e += (x1 & z1).count_ones() as i64 + (x2 & z2).count_ones() as i64
                + 2 * (z1 & x2).count_ones() as i64
                - (x3 & z3).count_ones() as i64;
            self.x[i] = x3;
            self.z[i] = z3;
        }
        self.phase = e.rem_euclid(4) as u8;
    }

    /// Product ignoring phase (Pauli-frame bookkeeping).
    #[inline]
    pub fn xor_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for i in 0..self.x.len() {
            self.x[i] ^= other.x[i];
            self.z[i] ^= other.z[i];
        }
    }

    pub fn inverse(&self) -> Self {
        let mut out = self.clone();
        out.phase = (4 - self.phase) & 3;
        out
    }

    /// `self ⊗ other` on `self.n + other.n` qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = self.embed(self.n + other.n, 0);
        for q in other.support() {
            out.set(self.n + q, other.get(q));
        }
        out.phase = (self.phase + other.phase) & 3;
        out
    }

    /// Places this operator on qubits `offset..offset + n` of a `total`-qubit register.
    pub fn embed(&self, total: usize, offset: usize) -> Self {
        assert!(offset + self.n <= total);
        let mut out = Self::identity(total);
        for q in self.support() {
            out.set(offset + q, self.get(q));
        }
        out.phase = self.phase;
        out
    }

    /// The tensor factor on qubits `offset..offset + len`, with phase dropped.
    pub fn restrict(&self, offset: usize, len: usize) -> Self {
        assert!(offset + len <= self.n);
        let mut out = Self::identity(len);
        for q in 0..len {
            let p = self.get(offset + q);
            if p != Pauli::I {
                out.set(q, p);
            }
        }
        out
    }

    /// Parses the debug text form, e.g. `"+1 X0 X2 X4 X6"` or `"-i Y3"`.
    ///
    /// The phase prefix is optional and defaults to `+1`. `I` alone denotes identity.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut op = Self::identity(n);
        let mut tokens = text.split_whitespace().peekable();
        if let Some(&tok) = tokens.peek() {
            let phase = match tok {
                "+1" | "1" => Some(0),
                "+i" | "i" => Some(1),
                "-1" => Some(2),
                "-i" => Some(3),
                _ => None,
            };
            if let Some(ph) = phase {
                op.phase = ph;
                tokens.next();
            }
        }
        for tok in tokens {
            let mut chars = tok.chars();
            let letter = chars.next().and_then(Pauli::from_symbol).ok_or_else(|| {
                Error::parse(0, format!("bad Pauli token {tok:?}"))
            })?;
            let rest = chars.as_str();
            if rest.is_empty() && letter == Pauli::I {
                continue;
            }
            let q: usize = rest
                .parse()
                .map_err(|_| Error::parse(0, format!("bad qubit index in {tok:?}")))?;
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
            if op.get(q) != Pauli::I {
                return Err(Error::parse(0, format!("qubit {q} listed twice")));
            }
            op.set(q, letter);
        }
        Ok(op)
    }

    /// Sparse body without phase, e.g. `"X0 Z3"`; `"I"` for identity.
    pub fn sparse_string(&self) -> String {
        let sites: Vec<String> = self
            .support()
            .into_iter()
            .map(|q| format!("{}{}", self.get(q).symbol(), q))
            .collect();
        if sites.is_empty() {
            "I".to_string()
        } else {
            sites.join(" ")
        }
    }

    /// Dense string such as `"XIZY"`.
    pub fn dense_string(&self) -> String {
        (0..self.n).map(|q| self.get(q).symbol()).collect()
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = ["+1", "+i", "-1", "-i"][self.phase as usize];
        write!(f, "{phase} {}", self.sparse_string())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator({}; n={})", self, self.n)
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next().and_then(Pauli::from_symbol), chars.next()) {
            (Some(p), None) => Ok(p),
            _ => Err(Error::parse(0, format!("bad single-qubit Pauli {s:?}"))),
        }
    }
}
