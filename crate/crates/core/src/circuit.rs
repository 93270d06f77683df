//! Clifford gate vocabulary, circuits with stable location ids, and the
//! line-oriented text format used by fixtures and exports.

use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};

/// Noisy-location categories. Every gate in the vocabulary is one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocationKind {
    PrepZero,
    PrepPlus,
    Measurement,
    TwoQubitGate,
    OneQubitGate,
}

impl LocationKind {
    pub fn is_two_qubit(self) -> bool {
        self == LocationKind::TwoQubitGate
    }

    pub fn name(self) -> &'static str {
        match self {
            LocationKind::PrepZero => "prep0",
            LocationKind::PrepPlus => "prep+",
            LocationKind::Measurement => "meas",
            LocationKind::TwoQubitGate => "2q",
            LocationKind::OneQubitGate => "1q",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    /// Phase gate `diag(1, i)`.
    S(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    PrepZ(usize),
    PrepX(usize),
    MeasureZ(usize),
    MeasureX(usize),
    /// Measurement of an arbitrary Hermitian Pauli product.
    Measure(PauliOperator),
}

impl Gate {
    pub fn location_kind(&self) -> LocationKind {
        match self {
            Gate::H(_) | Gate::S(_) | Gate::X(_) | Gate::Y(_) | Gate::Z(_) => {
                LocationKind::OneQubitGate
            }
            Gate::Cnot(..) | Gate::Cz(..) => LocationKind::TwoQubitGate,
            Gate::PrepZ(_) => LocationKind::PrepZero,
            Gate::PrepX(_) => LocationKind::PrepPlus,
            Gate::MeasureZ(_) | Gate::MeasureX(_) | Gate::Measure(_) => LocationKind::Measurement,
        }
    }

    pub fn is_measurement(&self) -> bool {
        self.location_kind() == LocationKind::Measurement
    }

    /// Qubits a location fault acts on. Multi-qubit measurements use their
    /// lowest support qubit.
    pub fn fault_qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q)
            | Gate::S(q)
            | Gate::X(q)
            | Gate::Y(q)
            | Gate::Z(q)
            | Gate::PrepZ(q)
            | Gate::PrepX(q)
            | Gate::MeasureZ(q)
            | Gate::MeasureX(q) => (q, None),
            Gate::Cnot(a, b) | Gate::Cz(a, b) => (a, Some(b)),
            Gate::Measure(ref p) => (p.support().first().copied().unwrap_or(0), None),
        }
    }

    /// The measured operator on an `n`-qubit register, if this is a measurement.
    pub fn measured_operator(&self, n: usize) -> Option<PauliOperator> {
        match self {
            Gate::MeasureZ(q) => Some(PauliOperator::single(n, *q, Pauli::Z)),
            Gate::MeasureX(q) => Some(PauliOperator::single(n, *q, Pauli::X)),
            Gate::Measure(p) => Some(p.clone()),
            _ => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let check = |q: usize| {
            if q >= n {
                Err(Error::QubitOutOfRange { index: q, n })
            } else {
                Ok(())
            }
        };
        match self {
            Gate::Cnot(a, b) | Gate::Cz(a, b) => {
                check(*a)?;
                check(*b)?;
                if a == b {
                    return Err(Error::RepeatedQubit(*a));
                }
                Ok(())
            }
            Gate::Measure(p) => {
                if p.num_qubits() != n {
                    return Err(Error::DimensionMismatch { left: p.num_qubits(), right: n });
                }
                if p.is_trivial() || p.phase() & 1 == 1 {
                    return Err(Error::Unsupported(format!("cannot measure {p}")));
                }
                Ok(())
            }
            other => check(other.fault_qubits().0),
        }
    }

    fn parse_line(line: &str, n: usize, lineno: usize) -> Result<Gate> {
        let mut tokens = line.split_whitespace();
        let name = tokens.next().ok_or_else(|| Error::parse(lineno, "empty gate line"))?;
        let rest: Vec<&str> = tokens.collect();
        let index = |i: usize| -> Result<usize> {
            rest.get(i)
                .ok_or_else(|| Error::parse(lineno, format!("{name}: missing qubit")))?
                .parse()
                .map_err(|_| Error::parse(lineno, format!("{name}: bad qubit index")))
        };
        let arity = |k: usize| -> Result<()> {
            if rest.len() != k {
                return Err(Error::parse(lineno, format!("{name} takes {k} qubit(s)")));
            }
            Ok(())
        };
        let upper = name.to_ascii_uppercase();
        let gate = match upper.as_str() {
            "H" => { arity(1)?; Gate::H(index(0)?) }
            "S" | "P" => { arity(1)?; Gate::S(index(0)?) }
            "X" => { arity(1)?; Gate::X(index(0)?) }
            "Y" => { arity(1)?; Gate::Y(index(0)?) }
            "Z" => { arity(1)?; Gate::Z(index(0)?) }
            "CNOT" | "CX" => { arity(2)?; Gate::Cnot(index(0)?, index(1)?) }
            "CZ" => { arity(2)?; Gate::Cz(index(0)?, index(1)?) }
            "R" | "RZ" | "PREPZ" => { arity(1)?; Gate::PrepZ(index(0)?) }
            "RX" | "PREPX" => { arity(1)?; Gate::PrepX(index(0)?) }
            "M" | "MZ" | "MX" | "MPP" => {
                let bare_index = rest.len() == 1 && rest[0].chars().all(|c| c.is_ascii_digit());
                if bare_index && upper != "MX" {
                    Gate::MeasureZ(index(0)?)
                } else if bare_index {
                    Gate::MeasureX(index(0)?)
                } else {
                    let op = PauliOperator::parse(n, &rest.join(" ")).map_err(|e| match e {
                        Error::Parse { message, .. } => Error::parse(lineno, message),
                        other => other,
                    })?;
                    Gate::Measure(op)
                }
            }
            _ => return Err(Error::parse(lineno, format!("unknown gate {name:?}"))),
        };
        gate.validate(n).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(lineno, message),
            other => other,
        })?;
        Ok(gate)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::Y(q) => write!(f, "Y {q}"),
            Gate::Z(q) => write!(f, "Z {q}"),
            Gate::Cnot(a, b) => write!(f, "CNOT {a} {b}"),
            Gate::Cz(a, b) => write!(f, "CZ {a} {b}"),
            Gate::PrepZ(q) => write!(f, "PREPZ {q}"),
            Gate::PrepX(q) => write!(f, "PREPX {q}"),
            Gate::MeasureZ(q) => write!(f, "MZ {q}"),
            Gate::MeasureX(q) => write!(f, "MX {q}"),
            Gate::Measure(p) => {
                if p.phase() == 2 {
                    write!(f, "M -1 {}", p.sparse_string())
                } else {
                    write!(f, "M {}", p.sparse_string())
                }
            }
        }
    }
}

/// Conjugates `p` by a unitary gate in place: `p ← G p G†`, phase-exact.
///
/// Returns an error for preparations and measurements.
pub fn conjugate_in_place(p: &mut PauliOperator, gate: &Gate) -> Result<()> {
    gate.validate(p.num_qubits())?;
    if !conjugate_unchecked(p, gate) {
        return Err(Error::Unsupported(format!("cannot conjugate through {gate}")));
    }
    Ok(())
}

#[inline]
fn bit(v: &[u64], q: usize) -> u64 {
    (v[q >> 6] >> (q & 63)) & 1
}

#[inline]
fn put(v: &mut [u64], q: usize, b: u64) {
    let m = 1u64 << (q & 63);
    v[q >> 6] = (v[q >> 6] & !m) | (b << (q & 63));
}

/// Hot-path conjugation without index checks. Returns false for non-unitary gates.
#[inline]
pub(crate) fn conjugate_unchecked(p: &mut PauliOperator, gate: &Gate) -> bool {
    let (x, z, phase) = p.raw_mut();
    let sign = match *gate {
        Gate::H(q) => {
            let (xq, zq) = (bit(x, q), bit(z, q));
            put(x, q, zq);
            put(z, q, xq);
            xq & zq
        }
        Gate::S(q) => {
            let (xq, zq) = (bit(x, q), bit(z, q));
            put(z, q, zq ^ xq);
            xq & zq
        }
        Gate::X(q) => bit(z, q),
        Gate::Z(q) => bit(x, q),
        Gate::Y(q) => bit(x, q) ^ bit(z, q),
        Gate::Cnot(a, b) => {
            let (xa, za, xb, zb) = (bit(x, a), bit(z, a), bit(x, b), bit(z, b));
            put(x, b, xb ^ xa);
            put(z, a, za ^ zb);
            xa & zb & (xb ^ za ^ 1)
        }
        Gate::Cz(a, b) => {
            // CZ = H_b CNOT H_b
            let (xa, za, xb, zb) = (bit(x, a), bit(z, a), bit(x, b), bit(z, b));
            put(z, b, zb ^ xa);
            put(z, a, za ^ xb);
            xa & xb & (za ^ zb)
        }
        _ => return false,
    };
    *phase = (*phase + 2 * sign as u8) & 3;
    true
}

/// An ordered gate list on `n` qubits. Each gate carries a stable location id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordCircuit {
    n: usize,
    gates: Vec<Gate>,
    ids: Vec<u32>,
}

impl CliffordCircuit {
    pub fn new(n: usize) -> Self {
        Self { n, gates: Vec::new(), ids: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Appends a gate; its id is one past the current largest id.
    pub fn push(&mut self, gate: Gate) -> Result<u32> {
        gate.validate(self.n)?;
        let id = self.ids.last().map_or(0, |&last| last + 1);
        self.gates.push(gate);
        self.ids.push(id);
        Ok(id)
    }

    /// Appends a gate with an explicit id, which must exceed every existing id.
    pub fn push_with_id(&mut self, id: u32, gate: Gate) -> Result<()> {
        gate.validate(self.n)?;
        if let Some(&last) = self.ids.last() {
            if id <= last {
                return Err(Error::Format(format!("location id {id} not increasing")));
            }
        }
        self.gates.push(gate);
        self.ids.push(id);
        Ok(())
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn location_ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Gate)> {
        self.ids.iter().copied().zip(&self.gates)
    }

    /// Appends `other`'s gates, renumbering them after this circuit's ids.
    pub fn extend(&mut self, other: &CliffordCircuit) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(())
    }

    /// `C e C†` for the whole gate list.
    pub fn conjugate(&self, e: &PauliOperator) -> Result<PauliOperator> {
        if e.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: e.num_qubits(), right: self.n });
        }
        let mut out = e.clone();
        for g in &self.gates {
            conjugate_in_place(&mut out, g)?;
        }
        Ok(out)
    }

    /// Parses one gate per line. Lines may carry an `id:` prefix; `#` starts a comment.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut circuit = Self::new(n);
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (id, body) = match line.split_once(':') {
                Some((id, body)) => {
                    let id: u32 = id
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad location id {id:?}")))?;
                    (Some(id), body.trim())
                }
                None => (None, line),
            };
            let gate = Gate::parse_line(body, n, lineno)?;
            match id {
                Some(id) => circuit
                    .push_with_id(id, gate)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?,
                None => {
                    circuit.push(gate)?;
                }
            }
        }
        Ok(circuit)
    }

    /// Export with location ids, one `id: GATE` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# qubits {}\n", self.n);
        for (id, g) in self.iter() {
            s.push_str(&format!("{id}: {g}\n"));
        }
        s
    }
}
