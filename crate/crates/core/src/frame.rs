//! Pauli-frame propagation: tracks only the deviation from the noiseless run.

use std::collections::HashMap;

use crate::circuit::{CliffordCircuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{words_for, Pauli, PauliOperator};

/// Accumulated Pauli error plus one flip bit per executed measurement.
///
/// Signs are ignored: a frame is an element of the Pauli group modulo phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    flips: Vec<bool>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        let w = words_for(n);
        Self { n, x: vec![0; w], z: vec![0; w], flips: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Clears the frame and the flip record, keeping allocations.
    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|w| *w = 0);
        self.z.iter_mut().for_each(|w| *w = 0);
        self.flips.clear();
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn error(&self) -> PauliOperator {
        PauliOperator::from_words(self.n, self.x.clone(), self.z.clone(), 0)
    }

    /// The frame restricted to qubits `offset..offset + len`.
    pub fn error_on(&self, offset: usize, len: usize) -> PauliOperator {
        let mut out = PauliOperator::identity(len);
        for q in 0..len {
            let p = self.get(offset + q);
            if p != Pauli::I {
                out.set(q, p);
            }
        }
        out
    }

    #[inline]
    fn xb(&self, q: usize) -> bool {
        (self.x[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    fn zb(&self, q: usize) -> bool {
        (self.z[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    fn flip_x(&mut self, q: usize) {
        self.x[q >> 6] ^= 1 << (q & 63);
    }

    #[inline]
    fn flip_z(&mut self, q: usize) {
        self.z[q >> 6] ^= 1 << (q & 63);
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.xb(q), self.zb(q))
    }

    /// Multiplies a single-qubit Pauli into the frame.
    #[inline]
    pub fn apply_single(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        if x {
            self.flip_x(q);
        }
        if z {
            self.flip_z(q);
        }
    }

    /// Multiplies an operator into the frame (phase dropped). Sizes must match.
    pub fn apply_operator(&mut self, p: &PauliOperator) {
        debug_assert_eq!(p.num_qubits(), self.n);
        for (w, v) in self.x.iter_mut().zip(p.x_words()) {
            *w ^= v;
        }
        for (w, v) in self.z.iter_mut().zip(p.z_words()) {
            *w ^= v;
        }
    }

    fn anticommutes(&self, p: &PauliOperator) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & p.z_words()[i]).count_ones() ^ (self.z[i] & p.x_words()[i]).count_ones();
        }
        acc & 1 == 1
    }

    /// Propagates the frame through one gate; measurements return and record a flip bit.
    #[inline]
    pub fn apply_gate(&mut self, gate: &Gate) -> Option<bool> {
        match *gate {
            Gate::H(q) => {
                let (x, z) = (self.xb(q), self.zb(q));
                if x != z {
                    self.flip_x(q);
                    self.flip_z(q);
                }
                None
            }
            Gate::S(q) => {
                if self.xb(q) {
                    self.flip_z(q);
                }
                None
            }
            Gate::X(_) | Gate::Y(_) | Gate::Z(_) => None,
            Gate::Cnot(a, b) => {
                if self.xb(a) {
                    self.flip_x(b);
                }
                if self.zb(b) {
                    self.flip_z(a);
                }
                None
            }
            Gate::Cz(a, b) => {
                let (xa, xb) = (self.xb(a), self.xb(b));
                if xa {
                    self.flip_z(b);
                }
                if xb {
                    self.flip_z(a);
                }
                None
            }
            Gate::PrepZ(q) | Gate::PrepX(q) => {
                let m = !(1u64 << (q & 63));
                self.x[q >> 6] &= m;
                self.z[q >> 6] &= m;
                None
            }
            Gate::MeasureZ(q) => {
                let f = self.xb(q);
                self.flips.push(f);
                Some(f)
            }
            Gate::MeasureX(q) => {
                let f = self.zb(q);
                self.flips.push(f);
                Some(f)
            }
            Gate::Measure(ref p) => {
                let f = self.anticommutes(p);
                self.flips.push(f);
                Some(f)
            }
        }
    }
}

/// Runs `circuit` from an empty frame, applying `injected[id]` at location `id`.
///
/// Faults land after the gate, or before it for measurements, matching the
/// noise model's placement.
pub fn frame_propagate(
    circuit: &CliffordCircuit,
    injected: &HashMap<u32, PauliOperator>,
) -> Result<PauliFrame> {
    let n = circuit.num_qubits();
    let ids: std::collections::HashSet<u32> = circuit.location_ids().iter().copied().collect();
    for (id, p) in injected {
        if !ids.contains(id) {
            return Err(Error::Config(format!("no location with id {id}")));
        }
        if p.num_qubits() != n {
            return Err(Error::DimensionMismatch { left: p.num_qubits(), right: n });
        }
    }
    let mut frame = PauliFrame::new(n);
    for (id, gate) in circuit.iter() {
        let fault = injected.get(&id);
        if gate.is_measurement() {
            if let Some(f) = fault {
                frame.apply_operator(f);
            }
            frame.apply_gate(gate);
        } else {
            frame.apply_gate(gate);
            if let Some(f) = fault {
                frame.apply_operator(f);
            }
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::conjugate_in_place;
    use proptest::prelude::*;

    #[test]
    fn empty_injection_gives_zero_frame() {
        let c = CliffordCircuit::parse(3, "H 0\nCNOT 0 1\nMZ 1\nMX 2").unwrap();
        let f = frame_propagate(&c, &HashMap::new()).unwrap();
        assert!(f.error().is_trivial());
        assert_eq!(f.flips(), &[false, false]);
    }

    #[test]
    fn data_x_flips_steane_z_check() {
        let c = CliffordCircuit::parse(7, "H 1\nH 1\nMZ Z0 Z2 Z4 Z6").unwrap();
        let mut inj = HashMap::new();
        inj.insert(0, PauliOperator::parse(7, "X0").unwrap());
        let f = frame_propagate(&c, &inj).unwrap();
        assert_eq!(f.flips(), &[true]);
    }

    #[test]
    fn measurement_fault_lands_before_readout() {
        let c = CliffordCircuit::parse(1, "MZ 0").unwrap();
        let mut inj = HashMap::new();
        inj.insert(0, PauliOperator::parse(1, "X0").unwrap());
        assert_eq!(frame_propagate(&c, &inj).unwrap().flips(), &[true]);
    }

    #[test]
    fn unknown_location_is_an_error() {
        let c = CliffordCircuit::parse(1, "H 0").unwrap();
        let mut inj = HashMap::new();
        inj.insert(5, PauliOperator::parse(1, "X0").unwrap());
        assert!(frame_propagate(&c, &inj).is_err());
    }

    fn arb_unitary(n: usize) -> impl Strategy<Value = Gate> {
        (0u8..7, 0..n, 0..n).prop_filter_map("distinct", move |(k, a, b)| {
            let g = match k {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::X(a),
                3 => Gate::Y(a),
                4 => Gate::Z(a),
                5 if a != b => Gate::Cnot(a, b),
                6 if a != b => Gate::Cz(a, b),
                _ => return None,
            };
            Some(g)
        })
    }

    proptest! {
        /// Frame propagation agrees with phase-exact conjugation modulo phase.
        #[test]
        fn frame_matches_conjugation(
            gates in proptest::collection::vec(arb_unitary(5), 0..40),
            xs in 0u64..32, zs in 0u64..32,
        ) {
            let start = PauliOperator::from_words(5, vec![xs], vec![zs], 0);
            let mut frame = PauliFrame::new(5);
            frame.apply_operator(&start);
            let mut exact = start.clone();
            for g in &gates {
                frame.apply_gate(g);
                conjugate_in_place(&mut exact, g).unwrap();
            }
            prop_assert_eq!(frame.error(), exact.with_phase(0));
        }
    }
}
