//! Backend-agnostic execution: a [`Simulator`] runs gates, an [`Executor`]
//! wraps it with per-location fault injection.

use rand::Rng;

use crate::circuit::{Gate, LocationKind};
use crate::frame::PauliFrame;
use crate::noise::NoiseParams;
use crate::pauli::{Pauli, PauliOperator};
use crate::tableau::CliffordTableau;

/// A state that gates can act on. Gates are assumed valid for the register.
pub trait Simulator {
    fn num_qubits(&self) -> usize;

    /// Runs one noiseless gate. Measurements return a bit: the outcome for the
    /// tableau, the flip relative to the noiseless run for a frame.
    fn execute<R: Rng + ?Sized>(&mut self, gate: &Gate, rng: &mut R) -> Option<bool>;

    fn apply_single(&mut self, q: usize, p: Pauli);

    fn apply_operator(&mut self, p: &PauliOperator);
}

impl Simulator for CliffordTableau {
    fn num_qubits(&self) -> usize {
        CliffordTableau::num_qubits(self)
    }

    fn execute<R: Rng + ?Sized>(&mut self, gate: &Gate, rng: &mut R) -> Option<bool> {
        debug_assert!(gate.validate(self.num_qubits()).is_ok());
        self.apply_gate_unchecked(gate, rng)
    }

    fn apply_single(&mut self, q: usize, p: Pauli) {
        if p != Pauli::I {
            let n = CliffordTableau::num_qubits(self);
            self.apply_pauli(&PauliOperator::single(n, q, p));
        }
    }

    fn apply_operator(&mut self, p: &PauliOperator) {
        self.apply_pauli(p);
    }
}

impl Simulator for PauliFrame {
    fn num_qubits(&self) -> usize {
        PauliFrame::num_qubits(self)
    }

    #[inline]
    fn execute<R: Rng + ?Sized>(&mut self, gate: &Gate, _rng: &mut R) -> Option<bool> {
        self.apply_gate(gate)
    }

    #[inline]
    fn apply_single(&mut self, q: usize, p: Pauli) {
        PauliFrame::apply_single(self, q, p);
    }

    fn apply_operator(&mut self, p: &PauliOperator) {
        PauliFrame::apply_operator(self, p);
    }
}

/// Pauli applied at one location: `.0` on the first qubit, `.1` on the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalFault(pub Pauli, pub Pauli);

impl LocalFault {
    pub const NONE: LocalFault = LocalFault(Pauli::I, Pauli::I);

    pub fn is_none(self) -> bool {
        self == Self::NONE
    }

    /// Every nontrivial fault for a location kind: 3 single-qubit or 15 two-qubit Paulis.
    pub fn all_for(kind: LocationKind) -> Vec<LocalFault> {
        if kind.is_two_qubit() {
            (1..16)
                .map(|k| {
                    let (a, b) = crate::noise::two_qubit_pauli(k);
                    LocalFault(a, b)
                })
                .collect()
        } else {
            Pauli::NON_IDENTITY.iter().map(|&p| LocalFault(p, Pauli::I)).collect()
        }
    }
}

/// Decides what fault, if any, strikes each executed location.
pub trait FaultSource {
    /// `index` counts noisy locations in execution order from zero.
    fn draw<R: Rng + ?Sized>(&mut self, index: usize, kind: LocationKind, rng: &mut R) -> LocalFault;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoFaults;

impl FaultSource for NoFaults {
    #[inline]
    fn draw<R: Rng + ?Sized>(&mut self, _: usize, _: LocationKind, _: &mut R) -> LocalFault {
        LocalFault::NONE
    }
}

impl FaultSource for NoiseParams {
    #[inline]
    fn draw<R: Rng + ?Sized>(&mut self, _: usize, kind: LocationKind, rng: &mut R) -> LocalFault {
        if kind.is_two_qubit() {
            let (a, b) = self.sample_2q(rng);
            LocalFault(a, b)
        } else {
            LocalFault(self.sample_1q(rng), Pauli::I)
        }
    }
}

/// Exactly one fault at a given location index.
#[derive(Clone, Copy, Debug)]
pub struct InjectAt {
    pub index: usize,
    pub fault: LocalFault,
}

impl FaultSource for InjectAt {
    fn draw<R: Rng + ?Sized>(&mut self, index: usize, _: LocationKind, _: &mut R) -> LocalFault {
        if index == self.index {
            self.fault
        } else {
            LocalFault::NONE
        }
    }
}

/// Faults at several location indices.
#[derive(Clone, Debug, Default)]
pub struct InjectMany(pub std::collections::HashMap<usize, LocalFault>);

impl FaultSource for InjectMany {
    fn draw<R: Rng + ?Sized>(&mut self, index: usize, _: LocationKind, _: &mut R) -> LocalFault {
        self.0.get(&index).copied().unwrap_or(LocalFault::NONE)
    }
}

/// Records location kinds and injects nothing.
#[derive(Clone, Debug, Default)]
pub struct Recorder {
    pub kinds: Vec<LocationKind>,
}

impl FaultSource for Recorder {
    fn draw<R: Rng + ?Sized>(&mut self, _: usize, kind: LocationKind, _: &mut R) -> LocalFault {
        self.kinds.push(kind);
        LocalFault::NONE
    }
}

/// Runs gates on a simulator, consulting a fault source at every location.
///
/// Faults act after gates and preparations and before measurements.
pub struct Executor<S, F, R> {
    pub sim: S,
    pub faults: F,
    pub rng: R,
    locations: usize,
    trace: Option<Vec<Gate>>,
}

impl<S: Simulator, F: FaultSource, R: Rng> Executor<S, F, R> {
    pub fn new(sim: S, faults: F, rng: R) -> Self {
        Self { sim, faults, rng, locations: 0, trace: None }
    }

    /// Keeps a copy of every noisy gate executed from now on.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<Gate> {
        self.trace.take().unwrap_or_default()
    }

    /// Noisy locations executed so far.
    pub fn locations(&self) -> usize {
        self.locations
    }

    /// Zeroes the location counter, e.g. between independent trials.
    pub fn reset_locations(&mut self) {
        self.locations = 0;
    }

    /// Runs a noisy location.
    #[inline]
    pub fn gate(&mut self, gate: Gate) -> Option<bool> {
        let kind = gate.location_kind();
        let fault = self.faults.draw(self.locations, kind, &mut self.rng);
        self.locations += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(gate.clone());
        }
        if fault.is_none() {
            return self.sim.execute(&gate, &mut self.rng);
        }
        let (q0, q1) = gate.fault_qubits();
        if kind == LocationKind::Measurement {
            self.sim.apply_single(q0, fault.0);
            self.sim.execute(&gate, &mut self.rng)
        } else {
            let out = self.sim.execute(&gate, &mut self.rng);
            self.sim.apply_single(q0, fault.0);
            if let Some(q1) = q1 {
                self.sim.apply_single(q1, fault.1);
            }
            out
        }
    }

    /// Runs a gate with no fault and no location count (ideal operations).
    pub fn ideal(&mut self, gate: &Gate) -> Option<bool> {
        self.sim.execute(gate, &mut self.rng)
    }

    /// Applies a Pauli correction noiselessly.
    pub fn apply_operator(&mut self, p: &PauliOperator) {
        self.sim.apply_operator(p);
    }
}
