//! Depolarizing noise per location type.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::circuit::{CliffordCircuit, LocationKind};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// How `ε` maps to single-qubit error probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DepolarizingConvention {
    /// Each of X, Y, Z with probability ε/4 (total 3ε/4).
    #[default]
    QuarterEps,
    /// Each of X, Y, Z with probability ε/3 (total ε).
    TotalEps,
}

impl FromStr for DepolarizingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter-eps" => Ok(Self::QuarterEps),
            "total-eps" => Ok(Self::TotalEps),
            _ => Err(Error::Config(format!("unknown depolarizing convention {s:?}"))),
        }
    }
}

impl fmt::Display for DepolarizingConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QuarterEps => "quarter-eps",
            Self::TotalEps => "total-eps",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    epsilon: f64,
    convention: DepolarizingConvention,
}

impl NoiseParams {
    pub fn new(epsilon: f64, convention: DepolarizingConvention) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self { epsilon, convention })
    }

    pub fn quarter_eps(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, DepolarizingConvention::QuarterEps)
    }

    pub fn noiseless() -> Self {
        Self { epsilon: 0.0, convention: DepolarizingConvention::QuarterEps }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn convention(&self) -> DepolarizingConvention {
        self.convention
    }

    /// Probability of each nontrivial single-qubit Pauli.
    pub fn p1_each(&self) -> f64 {
        match self.convention {
            DepolarizingConvention::QuarterEps => self.epsilon / 4.0,
            DepolarizingConvention::TotalEps => self.epsilon / 3.0,
        }
    }

    /// Probability of each of the 15 nontrivial two-qubit Paulis.
    pub fn p2_each(&self) -> f64 {
        self.epsilon / 16.0
    }

    pub fn sample_1q<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let p = self.p1_each();
        let u: f64 = rng.random();
        if u >= 3.0 * p {
            return Pauli::I;
        }
        Pauli::NON_IDENTITY[((u / p) as usize).min(2)]
    }

    /// Returns the Paulis on the (first, second) qubit of the location.
    pub fn sample_2q<R: Rng + ?Sized>(&self, rng: &mut R) -> (Pauli, Pauli) {
        let p = self.p2_each();
        let u: f64 = rng.random();
        if u >= 15.0 * p {
            return (Pauli::I, Pauli::I);
        }
        two_qubit_pauli(((u / p) as usize).min(14) + 1)
    }
}

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// The `k`-th two-qubit Pauli, `k` in 0..16, with `k = 0` the identity.
pub fn two_qubit_pauli(k: usize) -> (Pauli, Pauli) {
    (PAULIS[k & 3], PAULIS[(k >> 2) & 3])
}

/// A noisy location of a static circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoisyLocation {
    pub location_id: u32,
    pub kind: LocationKind,
    pub qubits: (usize, Option<usize>),
}

/// One location per gate; every gate in the vocabulary is a noisy location type
/// and idle qubits carry none.
pub fn annotate(circuit: &CliffordCircuit) -> Vec<NoisyLocation> {
    circuit
        .iter()
        .map(|(id, g)| NoisyLocation { location_id: id, kind: g.location_kind(), qubits: g.fault_qubits() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn within_sigmas(count: u64, n: u64, p: f64, k: f64) -> bool {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= k * sd
    }

    #[test]
    fn zero_epsilon_is_silent() {
        let params = NoiseParams::quarter_eps(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            assert_eq!(params.sample_1q(&mut rng), Pauli::I);
            assert_eq!(params.sample_2q(&mut rng), (Pauli::I, Pauli::I));
        }
    }

    #[test]
    fn one_qubit_marginals() {
        let params = NoiseParams::quarter_eps(0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000u64;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[params.sample_1q(&mut rng) as usize] += 1;
        }
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            assert!(within_sigmas(counts[p as usize], n, 0.0025, 4.0), "{p:?} {counts:?}");
        }
        assert!(within_sigmas(n - counts[0], n, 0.0075, 4.0));
    }

    #[test]
    fn total_eps_convention() {
        let params = NoiseParams::new(0.03, DepolarizingConvention::TotalEps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000u64;
        let hits = (0..n).filter(|_| params.sample_1q(&mut rng) != Pauli::I).count() as u64;
        assert!(within_sigmas(hits, n, 0.03, 4.0));
    }

    #[test]
    fn two_qubit_marginals_and_uniformity() {
        let params = NoiseParams::quarter_eps(0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000u64;
        let mut counts = [0u64; 16];
        for _ in 0..n {
            let (a, b) = params.sample_2q(&mut rng);
            counts[a as usize + 4 * b as usize] += 1;
        }
        let nontrivial: u64 = counts[1..].iter().sum();
        assert!(within_sigmas(nontrivial, n, 0.009375, 4.0));
        // χ² over the 15 nontrivial bins; 14 dof, 99.9% quantile ≈ 36.1.
        let expect = nontrivial as f64 / 15.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 36.1, "chi2 = {chi2}");
    }

    #[test]
    fn two_qubit_enumeration_covers_all() {
        let all: HashSet<(Pauli, Pauli)> = (1..16).map(two_qubit_pauli).collect();
        assert_eq!(all.len(), 15);
        assert!(!all.contains(&(Pauli::I, Pauli::I)));
    }

    /// Probabilities sum to one exactly in rational arithmetic: 1 − 3ε/4 + 3·ε/4
    /// and 1 − 15ε/16 + 15·ε/16, with ε = a/b.
    #[test]
    fn rational_probabilities_sum_to_one() {
        for (a, b) in [(1i64, 1000i64), (3, 7), (1, 1)] {
            // denominators 4b and 16b
            assert_eq!((4 * b - 3 * a) + 3 * a, 4 * b);
            assert_eq!((16 * b - 15 * a) + 15 * a, 16 * b);
        }
    }

    #[test]
    fn annotate_counts_kinds() {
        let c = CliffordCircuit::parse(2, "PREPZ 0\nH 0\nCNOT 0 1\nMZ 1").unwrap();
        let locs = annotate(&c);
        let kinds: HashSet<LocationKind> = locs.iter().map(|l| l.kind).collect();
        assert_eq!(locs.len(), 4);
        assert_eq!(kinds.len(), 4);
    }

    #[test]
    fn rejects_out_of_range_epsilon() {
        assert!(NoiseParams::quarter_eps(-0.1).is_err());
        assert!(NoiseParams::quarter_eps(1.5).is_err());
        assert!("bogus".parse::<DepolarizingConvention>().is_err());
    }
}
