//! Exact stabilizer-state simulation with destabilizer bookkeeping.

use rand::Rng;

use crate::circuit::{conjugate_unchecked, Gate};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};

/// Stabilizer tableau of an `n`-qubit state.
///
/// Row `i` of `destabilizers` pairs with row `i` of `stabilizers`: they
/// anticommute, and every other pair of rows commutes. Stabilizer rows carry
/// phase 0 or 2 (a sign); destabilizer phases are not tracked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordTableau {
    n: usize,
    destabilizers: Vec<PauliOperator>,
    stabilizers: Vec<PauliOperator>,
}

impl CliffordTableau {
    /// The state `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            destabilizers: (0..n).map(|q| PauliOperator::single(n, q, Pauli::X)).collect(),
            stabilizers: (0..n).map(|q| PauliOperator::single(n, q, Pauli::Z)).collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabilizers
    }

    pub fn destabilizers(&self) -> &[PauliOperator] {
        &self.destabilizers
    }

    /// Applies one gate. Measurements return their outcome bit (1 for the -1 eigenvalue).
    pub fn apply_gate<R: Rng + ?Sized>(&mut self, gate: &Gate, rng: &mut R) -> Result<Option<bool>> {
        gate.validate(self.n)?;
        Ok(self.apply_gate_unchecked(gate, rng))
    }

    pub(crate) fn apply_gate_unchecked<R: Rng + ?Sized>(
        &mut self,
        gate: &Gate,
        rng: &mut R,
    ) -> Option<bool> {
        match gate {
            Gate::PrepZ(q) => {
                let z = PauliOperator::single(self.n, *q, Pauli::Z);
                if self.measure_unchecked(&z, rng).0 {
                    self.apply_pauli(&PauliOperator::single(self.n, *q, Pauli::X));
                }
                None
            }
            Gate::PrepX(q) => {
                let x = PauliOperator::single(self.n, *q, Pauli::X);
                if self.measure_unchecked(&x, rng).0 {
                    self.apply_pauli(&PauliOperator::single(self.n, *q, Pauli::Z));
                }
                None
            }
            Gate::MeasureZ(q) => {
                Some(self.measure_unchecked(&PauliOperator::single(self.n, *q, Pauli::Z), rng).0)
            }
            Gate::MeasureX(q) => {
                Some(self.measure_unchecked(&PauliOperator::single(self.n, *q, Pauli::X), rng).0)
            }
            Gate::Measure(p) => Some(self.measure_unchecked(p, rng).0),
            unitary => {
                for row in self.destabilizers.iter_mut().chain(self.stabilizers.iter_mut()) {
                    conjugate_unchecked(row, unitary);
                }
                None
            }
        }
    }

    /// Measures a Hermitian Pauli. Returns `(outcome, deterministic)`.
    pub fn measure<R: Rng + ?Sized>(&mut self, p: &PauliOperator, rng: &mut R) -> Result<(bool, bool)> {
        Gate::Measure(p.clone()).validate(self.n)?;
        Ok(self.measure_unchecked(p, rng))
    }

    fn measure_unchecked<R: Rng + ?Sized>(&mut self, p: &PauliOperator, rng: &mut R) -> (bool, bool) {
        let pivot = self.stabilizers.iter().position(|s| s.anticommutes_with(p));
        match pivot {
            None => (self.deterministic_outcome(p), true),
            Some(k) => {
                let row = self.stabilizers[k].clone();
                for (i, d) in self.destabilizers.iter_mut().enumerate() {
                    if i != k && d.anticommutes_with(p) {
                        d.mul_assign_right(&row);
                        *d = d.clone().with_phase(0);
                    }
                }
                for (i, s) in self.stabilizers.iter_mut().enumerate() {
                    if i != k && s.anticommutes_with(p) {
                        s.mul_assign_right(&row);
                    }
                }
                let outcome: bool = rng.random();
                self.destabilizers[k] = row.with_phase(0);
                let sign = if outcome { 2 } else { 0 };
                self.stabilizers[k] = p.clone().with_phase(p.phase() + sign);
                debug_assert!(self.pivot_consistent(k));
                (outcome, false)
            }
        }
    }

    /// Outcome of measuring `p` if it is determined by the state, else `None`.
    pub fn peek(&self, p: &PauliOperator) -> Option<bool> {
        if self.stabilizers.iter().any(|s| s.anticommutes_with(p)) {
            None
        } else {
            Some(self.deterministic_outcome(p))
        }
    }

    fn deterministic_outcome(&self, p: &PauliOperator) -> bool {
        let mut acc = PauliOperator::identity(self.n);
        for (d, s) in self.destabilizers.iter().zip(&self.stabilizers) {
            if d.anticommutes_with(p) {
                acc.mul_assign_right(s);
            }
        }
        debug_assert_eq!(acc.x_words(), p.x_words());
        debug_assert_eq!(acc.z_words(), p.z_words());
        acc.phase() != p.phase()
    }

    /// Applies a Pauli operator to the state (as an error or a correction).
    pub fn apply_pauli(&mut self, p: &PauliOperator) {
        for s in &mut self.stabilizers {
            if s.anticommutes_with(p) {
                *s = s.clone().with_phase(s.phase() + 2);
            }
        }
    }

    /// O(n) check of the rows touched by a random measurement.
    fn pivot_consistent(&self, k: usize) -> bool {
        let s = &self.stabilizers[k];
        self.destabilizers.iter().enumerate().all(|(i, d)| d.anticommutes_with(s) == (i == k))
            && self.stabilizers.iter().all(|t| !t.anticommutes_with(s))
    }

    /// Symplectic-basis and sign checks. O(n²); tests call it after every step.
    pub fn check_invariants(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            if self.stabilizers[i].phase() & 1 == 1 {
                return false;
            }
            for j in 0..n {
                let ds = self.destabilizers[i].anticommutes_with(&self.stabilizers[j]);
                if ds != (i == j) {
                    return false;
                }
                if j > i
                    && (self.stabilizers[i].anticommutes_with(&self.stabilizers[j])
                        || self.destabilizers[i].anticommutes_with(&self.destabilizers[j]))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Measurement that must be deterministic, e.g. a logical readout on an eigenstate.
    pub fn measure_deterministic(&self, p: &PauliOperator) -> Result<bool> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: p.num_qubits(), right: self.n });
        }
        self.peek(p).ok_or(Error::NonDeterministic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CliffordCircuit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(n: usize, text: &str, rng: &mut ChaCha8Rng) -> (CliffordTableau, Vec<bool>) {
        let c = CliffordCircuit::parse(n, text).unwrap();
        let mut t = CliffordTableau::new(n);
        let mut outs = Vec::new();
        for g in c.gates() {
            if let Some(b) = t.apply_gate(g, rng).unwrap() {
                outs.push(b);
            }
        }
        (t, outs)
    }

    #[test]
    fn h_then_measure_x_is_deterministic_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut t, _) = run(1, "H 0", &mut rng);
        let x = PauliOperator::parse(1, "X0").unwrap();
        assert_eq!(t.measure(&x, &mut rng).unwrap(), (false, true));
    }

    #[test]
    fn fresh_state_measures_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = CliffordTableau::new(3);
        let z0 = PauliOperator::parse(3, "Z0").unwrap();
        assert_eq!(t.measure(&z0, &mut rng).unwrap(), (false, true));
    }

    #[test]
    fn repeated_random_measurement_repeats() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = CliffordTableau::new(1);
            let x = PauliOperator::parse(1, "X0").unwrap();
            let (first, det) = t.measure(&x, &mut rng).unwrap();
            assert!(!det);
            assert_eq!(t.measure(&x, &mut rng).unwrap(), (first, true));
        }
    }

    #[test]
    fn bell_pair_correlations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (t, _) = run(2, "H 0\nCNOT 0 1", &mut rng);
        assert_eq!(t.peek(&PauliOperator::parse(2, "X0 X1").unwrap()), Some(false));
        assert_eq!(t.peek(&PauliOperator::parse(2, "Z0 Z1").unwrap()), Some(false));
        assert_eq!(t.peek(&PauliOperator::parse(2, "Y0 Y1").unwrap()), Some(true));
        assert_eq!(t.peek(&PauliOperator::parse(2, "Z0").unwrap()), None);
    }

    #[test]
    fn cz_conjugation_on_stabilizer_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // |+0⟩ is stabilized by X0; after CZ by X0 Z1.
        let (t, _) = run(2, "H 0\nCZ 0 1", &mut rng);
        assert_eq!(t.peek(&PauliOperator::parse(2, "X0 Z1").unwrap()), Some(false));
    }

    #[test]
    fn preparation_resets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (t, _) = run(2, "H 0\nCNOT 0 1\nX 1\nPREPZ 1\nPREPX 0", &mut rng);
        assert_eq!(t.peek(&PauliOperator::parse(2, "Z1").unwrap()), Some(false));
        assert_eq!(t.peek(&PauliOperator::parse(2, "X0").unwrap()), Some(false));
    }

    #[test]
    fn multi_qubit_measurement_and_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (t, outs) = run(3, "X 0\nMZ Z0 Z1\nM -1 Z0 Z2", &mut rng);
        assert_eq!(outs, vec![true, false]);
        assert!(t.check_invariants());
    }

    #[test]
    fn ghz_parity_is_deterministic_under_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut t, _) = run(4, "H 0\nCNOT 0 1\nCNOT 1 2\nCNOT 2 3", &mut rng);
        let mut parity = false;
        for q in 0..4 {
            let (b, det) = t.measure(&PauliOperator::single(4, q, Pauli::X), &mut rng).unwrap();
            assert!(!det || q == 3);
            parity ^= b;
        }
        assert!(!parity);
    }

    #[test]
    fn invalid_gate_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut t = CliffordTableau::new(2);
        assert!(t.apply_gate(&Gate::H(2), &mut rng).is_err());
    }
}
