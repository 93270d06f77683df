//! Noisy exRec and conversion shots on either backend.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ec::{layout, SyndromeRounds};
use crate::error::{Error, Result};
use crate::exrec::{run_accepted, run_conversion_trial, Backend, ConversionRecord, ExRec, TrialRecord};
use crate::frame::PauliFrame;
use crate::noise::NoiseParams;
use crate::parallel::{shot_seed, Execution};
use crate::pieceable::ConversionCircuit;
use crate::sim::Executor;
use crate::tableau::CliffordTableau;

const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BackendKind {
    #[default]
    Frame,
    Tableau,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(Self::Frame),
            "tableau" => Ok(Self::Tableau),
            _ => Err(Error::Config(format!("unknown backend {s:?}, expected frame or tableau"))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Frame => "frame",
            Self::Tableau => "tableau",
        })
    }
}

/// Where a batch of shots draws its randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub shots: u64,
    pub seed: u64,
    /// Separates batches under one seed, e.g. the index of an ε grid point.
    pub stream: u64,
    pub backend: BackendKind,
    pub exec: Execution,
}

fn run_generic<S, T, F>(
    plan: &ShotPlan,
    fresh: impl Fn() -> S + Sync,
    noise: NoiseParams,
    shot: F,
) -> Result<(Vec<T>, u64)>
where
    S: Backend,
    T: Send,
    F: Fn(&mut Executor<S, NoiseParams, ChaCha8Rng>) -> Result<(T, u32)> + Sync,
{
    let n = plan.shots as usize;
    let chunks = plan.exec.map_chunks(n, CHUNK, |range| -> Result<(Vec<T>, u64)> {
        let mut ex = Executor::new(fresh(), noise, ChaCha8Rng::seed_from_u64(0));
        let mut out = Vec::with_capacity(range.len());
        let mut rejected = 0u64;
        for i in range {
            ex.rng = ChaCha8Rng::seed_from_u64(shot_seed(plan.seed, plan.stream, i as u64));
            let (t, r) = shot(&mut ex)?;
            rejected += r as u64;
            out.push(t);
        }
        Ok((out, rejected))
    });
    let mut all = Vec::with_capacity(n);
    let mut rejected = 0;
    for c in chunks {
        let (v, r) = c?;
        all.extend(v);
        rejected += r;
    }
    Ok((all, rejected))
}

/// Runs `plan.shots` accepted exRec trials in shot order, mapping each with
/// `f`. Also returns how many attempts were redrawn after cat verification
/// ran out of retries.
pub fn exrec_shots<T, F>(rec: &ExRec, noise: NoiseParams, plan: &ShotPlan, f: F) -> Result<(Vec<T>, u64)>
where
    T: Send,
    F: Fn(&TrialRecord) -> T + Sync,
{
    match plan.backend {
        BackendKind::Frame => run_generic(plan, || PauliFrame::new(layout::REGISTER), noise, |ex| {
            run_accepted(rec, ex).map(|(r, rej)| (f(&r), rej))
        }),
        BackendKind::Tableau => run_generic(plan, || CliffordTableau::new(layout::REGISTER), noise, |ex| {
            run_accepted(rec, ex).map(|(r, rej)| (f(&r), rej))
        }),
    }
}

/// Conversion trials, redrawn like [`exrec_shots`].
pub fn conversion_shots<T, F>(
    conv: &ConversionCircuit,
    rounds: SyndromeRounds,
    noise: NoiseParams,
    plan: &ShotPlan,
    f: F,
) -> Result<(Vec<T>, u64)>
where
    T: Send,
    F: Fn(&ConversionRecord) -> T + Sync,
{
    fn accepted<S: Backend>(
        conv: &ConversionCircuit,
        rounds: SyndromeRounds,
        ex: &mut Executor<S, NoiseParams, ChaCha8Rng>,
    ) -> Result<(ConversionRecord, u32)> {
        let mut rejected = 0;
        loop {
            match run_conversion_trial(conv, rounds, ex) {
                Ok(r) => return Ok((r, rejected)),
                Err(Error::VerificationExhausted { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
    }
    match plan.backend {
        BackendKind::Frame => run_generic(plan, || PauliFrame::new(layout::REGISTER), noise, |ex| {
            accepted(conv, rounds, ex).map(|(r, rej)| (f(&r), rej))
        }),
        BackendKind::Tableau => run_generic(plan, || CliffordTableau::new(layout::REGISTER), noise, |ex| {
            accepted(conv, rounds, ex).map(|(r, rej)| (f(&r), rej))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pieceable::build_ccnot_a;

    #[test]
    fn shots_are_independent_of_execution_mode() {
        let rec = ExRec::new(build_ccnot_a());
        let noise = NoiseParams::quarter_eps(4e-3).unwrap();
        let plan = |exec| ShotPlan { shots: 700, seed: 9, stream: 2, backend: BackendKind::Frame, exec };
        let f = |r: &TrialRecord| (r.key(), r.error);
        let seq = exrec_shots(&rec, noise, &plan(Execution::Sequential), f).unwrap();
        let par = exrec_shots(&rec, noise, &plan(Execution::Workers(3)), f).unwrap();
        assert_eq!(seq, par);
        assert!(seq.0.iter().any(|(k, _)| *k != 0));
        let other = exrec_shots(&rec, noise, &ShotPlan { stream: 3, ..plan(Execution::Sequential) }, f).unwrap();
        assert_ne!(other.0, seq.0);
    }

    #[test]
    fn noiseless_shots_are_clean() {
        let rec = ExRec::new(build_ccnot_a());
        for backend in [BackendKind::Frame, BackendKind::Tableau] {
            let plan = ShotPlan { shots: 5, seed: 1, stream: 0, backend, exec: Execution::Sequential };
            let (v, rej) = exrec_shots(&rec, NoiseParams::noiseless(), &plan, |r| (r.key(), r.error)).unwrap();
            assert_eq!(rej, 0);
            assert!(v.iter().all(|(k, e)| *k == 0 && e.is_identity()));
        }
    }
}
