//! The Steane [[7,1,3]] and Reed-Muller [[15,1,3]] codes, syndromes,
//! minimal-weight lookup tables, pure errors, and ideal projection.
//!
//! Syndromes are `u32` bit masks: bit `i` is the outcome of generator `i` in
//! the fixed generator order of each code.

use std::fmt::Write as _;
use std::sync::{LazyLock, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};
use crate::tableau::CliffordTableau;

pub type Syndrome = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeKind {
    Steane,
    ReedMuller15,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

pub struct StabilizerCode {
    kind: CodeKind,
    name: &'static str,
    n: usize,
    k: usize,
    d: usize,
    generators: Vec<PauliOperator>,
    logical_x: Vec<PauliOperator>,
    logical_z: Vec<PauliOperator>,
    /// Per-qubit syndrome contributions of X and Z errors.
    x_syn: Vec<Syndrome>,
    z_syn: Vec<Syndrome>,
    lookup: OnceLock<Lookup>,
    pure_errors: OnceLock<Vec<PauliOperator>>,
}

impl std::fmt::Debug for StabilizerCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StabilizerCode({} [[{},{},{}]])", self.name, self.n, self.k, self.d)
    }
}

pub static STEANE: LazyLock<StabilizerCode> = LazyLock::new(StabilizerCode::steane);
pub static RM15: LazyLock<StabilizerCode> = LazyLock::new(StabilizerCode::rm15);

impl StabilizerCode {
    fn from_parts(
        kind: CodeKind,
        name: &'static str,
        n: usize,
        d: usize,
        gens: &[(Pauli, &[usize])],
    ) -> Self {
        let generators: Vec<PauliOperator> = gens
            .iter()
            .map(|(p, qs)| PauliOperator::from_sparse(n, qs.iter().map(|&q| (q, *p))))
            .collect();
        let all: Vec<usize> = (0..n).collect();
        let mut x_syn = vec![0; n];
        let mut z_syn = vec![0; n];
        for q in 0..n {
            let x = PauliOperator::single(n, q, Pauli::X);
            let z = PauliOperator::single(n, q, Pauli::Z);
            for (i, g) in generators.iter().enumerate() {
                x_syn[q] |= (g.anticommutes_with(&x) as Syndrome) << i;
                z_syn[q] |= (g.anticommutes_with(&z) as Syndrome) << i;
            }
        }
        Self {
            kind,
            name,
            n,
            k: 1,
            d,
            generators,
            logical_x: vec![PauliOperator::x_on(n, &all)],
            logical_z: vec![PauliOperator::z_on(n, &all)],
            x_syn,
            z_syn,
            lookup: OnceLock::new(),
            pure_errors: OnceLock::new(),
        }
    }

    pub fn steane() -> Self {
        use Pauli::{X, Z};
        Self::from_parts(
            CodeKind::Steane,
            "steane",
            7,
            3,
            &[
                (X, &[0, 2, 4, 6]),
                (X, &[1, 2, 5, 6]),
                (X, &[3, 4, 5, 6]),
                (Z, &[0, 2, 4, 6]),
                (Z, &[1, 2, 5, 6]),
                (Z, &[3, 4, 5, 6]),
            ],
        )
    }

    pub fn rm15() -> Self {
        use Pauli::{X, Z};
        Self::from_parts(
            CodeKind::ReedMuller15,
            "rm15",
            15,
            3,
            &[
                (X, &[7, 8, 9, 10, 11, 12, 13, 14]),
                (X, &[3, 4, 5, 6, 11, 12, 13, 14]),
                (X, &[1, 2, 5, 6, 9, 10, 13, 14]),
                (X, &[0, 2, 4, 6, 8, 10, 12, 14]),
                (Z, &[7, 8, 9, 10, 11, 12, 13, 14]),
                (Z, &[3, 4, 5, 6, 11, 12, 13, 14]),
                (Z, &[1, 2, 5, 6, 9, 10, 13, 14]),
                (Z, &[0, 2, 4, 6, 8, 10, 12, 14]),
                (Z, &[11, 12, 13, 14]),
                (Z, &[9, 10, 13, 14]),
                (Z, &[8, 10, 12, 14]),
                (Z, &[5, 6, 13, 14]),
                (Z, &[4, 6, 12, 14]),
                (Z, &[2, 6, 10, 14]),
            ],
        )
    }

    /// The shared instance for a code kind.
    pub fn get(kind: CodeKind) -> &'static StabilizerCode {
        match kind {
            CodeKind::Steane => &STEANE,
            CodeKind::ReedMuller15 => &RM15,
        }
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of generators, `n − k`.
    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn logical_x(&self) -> &PauliOperator {
        &self.logical_x[0]
    }

    pub fn logical_z(&self) -> &PauliOperator {
        &self.logical_z[0]
    }

    pub fn logical(&self, basis: Basis) -> &PauliOperator {
        match basis {
            Basis::Z => self.logical_z(),
            Basis::X => self.logical_x(),
        }
    }

    /// Indices of the X-type (or Z-type) generators, in generator order.
    pub fn generator_indices(&self, x_type: bool) -> Vec<usize> {
        (0..self.generators.len())
            .filter(|&i| if x_type { self.generators[i].is_x_type() } else { self.generators[i].is_z_type() })
            .collect()
    }

    /// Syndrome contribution of a single-qubit Pauli.
    #[inline]
    pub fn site_syndrome(&self, q: usize, p: Pauli) -> Syndrome {
        let (x, z) = p.bits();
        (if x { self.x_syn[q] } else { 0 }) ^ (if z { self.z_syn[q] } else { 0 })
    }

    pub fn syndrome(&self, e: &PauliOperator) -> Result<Syndrome> {
        if e.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: e.num_qubits(), right: self.n });
        }
        Ok(self.syndrome_unchecked(e))
    }

    pub(crate) fn syndrome_unchecked(&self, e: &PauliOperator) -> Syndrome {
        let (xw, zw) = (e.x_words()[0], e.z_words()[0]);
        let mut s = 0;
        let (mut xs, mut zs) = (xw, zw);
        while xs != 0 {
            s ^= self.x_syn[xs.trailing_zeros() as usize];
            xs &= xs - 1;
        }
        while zs != 0 {
            s ^= self.z_syn[zs.trailing_zeros() as usize];
            zs &= zs - 1;
        }
        s
    }

    /// Syndrome as a bit vector in generator order.
    pub fn syndrome_bits(&self, e: &PauliOperator) -> Result<Vec<bool>> {
        let s = self.syndrome(e)?;
        Ok((0..self.num_generators()).map(|i| (s >> i) & 1 == 1).collect())
    }

    /// Minimal-weight lookup over all Paulis, built on first use.
    pub fn lookup(&self) -> &Lookup {
        self.lookup.get_or_init(|| {
            Lookup::build(&self.generators, &Pauli::NON_IDENTITY)
                .expect("every syndrome of a stabilizer code is reachable")
        })
    }

    /// The minimal-weight correction for a syndrome.
    pub fn decode(&self, s: Syndrome) -> &PauliOperator {
        self.lookup().correction(s).expect("full lookup covers every syndrome")
    }

    /// `T_i`: anticommutes with generator `i` only.
    pub fn pure_errors(&self) -> &[PauliOperator] {
        self.pure_errors.get_or_init(|| {
            (0..self.num_generators()).map(|i| self.decode(1 << i).clone()).collect()
        })
    }

    /// `Π_i T_i^{s_i}`.
    pub fn pure_error(&self, s: Syndrome) -> PauliOperator {
        let mut out = PauliOperator::identity(self.n);
        for (i, t) in self.pure_errors().iter().enumerate() {
            if (s >> i) & 1 == 1 {
                out.mul_assign_right(t);
            }
        }
        out
    }

    /// Logical class `(x̄, z̄)` of an operator that commutes with every generator.
    ///
    /// `x̄` is set when the operator contains X̄ (anticommutes with Z̄).
    pub fn logical_class(&self, op: &PauliOperator) -> (bool, bool) {
        (op.anticommutes_with(self.logical_z()), op.anticommutes_with(self.logical_x()))
    }

    /// Logical class left behind by an error after ideal minimal-weight decoding.
    pub fn ideal_decode_class(&self, e: &PauliOperator) -> (bool, bool) {
        let mut residual = e.clone();
        residual.xor_assign(self.decode(self.syndrome_unchecked(e)));
        self.logical_class(&residual)
    }

    /// True when `op` is a stabilizer element up to phase.
    pub fn in_stabilizer_group(&self, op: &PauliOperator) -> bool {
        self.syndrome_unchecked(op) == 0 && self.logical_class(op) == (false, false)
    }

    /// Check-matrix text: one `X-bits|Z-bits` row per generator, then the logicals.
    pub fn check_matrix_text(&self) -> String {
        let row = |p: &PauliOperator| -> String {
            let xs: String = (0..self.n).map(|q| if p.x_bit(q) { '1' } else { '0' }).collect();
            let zs: String = (0..self.n).map(|q| if p.z_bit(q) { '1' } else { '0' }).collect();
            format!("{xs}|{zs}")
        };
        let mut s = String::new();
        let _ = writeln!(s, "# code {} n={} k={} d={}", self.name, self.n, self.k, self.d);
        let _ = writeln!(s, "# generators (X|Z), syndrome bit order");
        for g in &self.generators {
            let _ = writeln!(s, "{}", row(g));
        }
        let _ = writeln!(s, "# logical X");
        let _ = writeln!(s, "{}", row(self.logical_x()));
        let _ = writeln!(s, "# logical Z");
        let _ = writeln!(s, "{}", row(self.logical_z()));
        s
    }
}

/// Syndrome → minimal-weight Pauli, for an arbitrary list of commuting checks
/// and an alphabet of allowed single-qubit Paulis.
///
/// Candidates are enumerated by weight, then by qubit set in lexicographic
/// order, then by Pauli assignment in alphabet order (first qubit most
/// significant). The first candidate reaching a syndrome is kept.
#[derive(Clone, Debug)]
pub struct Lookup {
    num_checks: usize,
    table: Vec<Option<PauliOperator>>,
}

impl Lookup {
    /// Fails if some syndrome is unreachable with the given alphabet.
    pub fn build(checks: &[PauliOperator], alphabet: &[Pauli]) -> Result<Self> {
        let lookup = Self::build_partial(checks, alphabet)?;
        if lookup.table.iter().any(Option::is_none) {
            return Err(Error::Unsupported("some syndromes are unreachable".into()));
        }
        Ok(lookup)
    }

    /// Like [`Lookup::build`] but leaves unreachable syndromes empty.
    pub fn build_partial(checks: &[PauliOperator], alphabet: &[Pauli]) -> Result<Self> {
        let m = checks.len();
        if m > 20 {
            return Err(Error::Unsupported(format!("{m} checks is too many for a table")));
        }
        let n = checks.first().map_or(0, PauliOperator::num_qubits);
        let site: Vec<Vec<Syndrome>> = (0..n)
            .map(|q| {
                alphabet
                    .iter()
                    .map(|&p| {
                        let e = PauliOperator::single(n, q, p);
                        checks
                            .iter()
                            .enumerate()
                            .fold(0, |s, (i, c)| s | ((c.anticommutes_with(&e) as Syndrome) << i))
                    })
                    .collect()
            })
            .collect();
        let size = 1usize << m;
        let mut table: Vec<Option<PauliOperator>> = vec![None; size];
        table[0] = Some(PauliOperator::identity(n));
        let mut filled = 1;
        let a = alphabet.len();
        'weights: for w in 1..=n {
            let mut combo: Vec<usize> = (0..w).collect();
            loop {
                let total = a.pow(w as u32);
                for code in 0..total {
                    let mut s = 0;
                    let mut rem = code;
                    let mut digits = [0usize; 64];
                    for i in (0..w).rev() {
                        digits[i] = rem % a;
                        rem /= a;
                    }
                    for i in 0..w {
                        s ^= site[combo[i]][digits[i]];
                    }
                    let slot = &mut table[s as usize];
                    if slot.is_none() {
                        *slot = Some(PauliOperator::from_sparse(
                            n,
                            (0..w).map(|i| (combo[i], alphabet[digits[i]])),
                        ));
                        filled += 1;
                        if filled == size {
                            break 'weights;
                        }
                    }
                }
                // next combination in lexicographic order
                let mut i = w;
                while i > 0 && combo[i - 1] == n - w + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..w {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        Ok(Self { num_checks: m, table })
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn correction(&self, s: Syndrome) -> Option<&PauliOperator> {
        self.table.get(s as usize).and_then(Option::as_ref)
    }

    /// Largest correction weight in the table.
    pub fn max_weight(&self) -> usize {
        self.table.iter().flatten().map(PauliOperator::weight).max().unwrap_or(0)
    }
}

/// A code block placed at `offset..offset + n` of a larger register.
#[derive(Clone, Copy, Debug)]
pub struct Block {
    pub code: &'static StabilizerCode,
    pub offset: usize,
}

impl Block {
    pub fn new(kind: CodeKind, offset: usize) -> Self {
        Self { code: StabilizerCode::get(kind), offset }
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.code.n()
    }

    pub fn embed(&self, op: &PauliOperator, total: usize) -> PauliOperator {
        op.embed(total, self.offset)
    }
}

/// Noiselessly measures every generator of every block and applies the
/// minimal-weight correction. Returns the measured syndromes.
pub fn ideal_project<R: Rng + ?Sized>(
    state: &mut CliffordTableau,
    blocks: &[Block],
    rng: &mut R,
) -> Result<Vec<Syndrome>> {
    let total = state.num_qubits();
    let mut out = Vec::with_capacity(blocks.len());
    for b in blocks {
        if b.offset + b.code.n() > total {
            return Err(Error::QubitOutOfRange { index: b.offset + b.code.n() - 1, n: total });
        }
        let mut s = 0;
        for (i, g) in b.code.generators().iter().enumerate() {
            let (bit, _) = state.measure(&b.embed(g, total), rng)?;
            s |= (bit as Syndrome) << i;
        }
        state.apply_pauli(&b.embed(b.code.decode(s), total));
        out.push(s);
    }
    Ok(out)
}

/// Deterministic logical readout of one block.
pub fn logical_measure(state: &CliffordTableau, block: &Block, basis: Basis) -> Result<bool> {
    state.measure_deterministic(&block.embed(block.code.logical(basis), state.num_qubits()))
}

/// Prepares `|0̄⟩` (or `|+̄⟩`) on a block of a tableau whose block qubits are
/// fresh, by projecting onto the generators and fixing signs with pure errors.
pub fn prepare_logical<R: Rng + ?Sized>(
    state: &mut CliffordTableau,
    block: &Block,
    basis: Basis,
    rng: &mut R,
) -> Result<()> {
    let total = state.num_qubits();
    for q in block.qubits() {
        let g = match basis {
            Basis::Z => crate::circuit::Gate::PrepZ(q),
            Basis::X => crate::circuit::Gate::PrepX(q),
        };
        state.apply_gate(&g, rng)?;
    }
    let mut s = 0;
    for (i, g) in block.code.generators().iter().enumerate() {
        let (bit, _) = state.measure(&block.embed(g, total), rng)?;
        s |= (bit as Syndrome) << i;
    }
    state.apply_pauli(&block.embed(&block.code.pure_error(s), total));
    // a product state in one basis already fixes the logical of that basis
    debug_assert_eq!(logical_measure(state, block, basis).ok(), Some(false));
    Ok(())
}
