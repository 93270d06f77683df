//! Exhaustive single-fault injection.
//!
//! A fault-free run fixes the location sequence; every nontrivial Pauli is
//! then injected at every location in turn. Locations reached only after a
//! retry or repeat need a second fault and are skipped. A circuit is 1-fault
//! tolerant under the lookup decoder when no syndrome key is produced by two
//! events with different logical errors (the fault-free run counts, with key
//! 0 and no error).

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::LocationKind;
use crate::decoders::{FaultTable, LogicalDecoder};
use crate::ec::{layout, SyndromeRounds};
use crate::error::{Error, Result};
use crate::exrec::{run_conversion_trial, run_trial, unpack_key, ExRec, Phase, TrialRecord};
use crate::frame::PauliFrame;
use crate::logical::{LogicalMap, LogicalPauli2};
use crate::parallel::Execution;
use crate::pieceable::ConversionCircuit;
use crate::sim::{Executor, InjectAt, LocalFault, NoFaults, Recorder};

/// One injected fault and what it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultEvent {
    pub location: usize,
    pub phase: Phase,
    pub kind: LocationKind,
    pub fault: LocalFault,
    pub key: u64,
    pub error: LogicalPauli2,
}

impl FaultEvent {
    pub fn describe(&self) -> String {
        let (a, b, c) = unpack_key(self.key);
        format!(
            "location {} ({}, {}) fault {}{} -> s_lec={a:05x} s1={b:02x} s2={c:05x} error {}",
            self.location,
            self.phase.name(),
            self.kind.name(),
            self.fault.0.symbol(),
            self.fault.1.symbol(),
            self.error
        )
    }
}

/// Two events sharing a key but not a logical error. `first == None` is the
/// fault-free run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub first: Option<FaultEvent>,
    pub second: FaultEvent,
}

#[derive(Clone, Debug)]
pub struct FtReport {
    pub name: String,
    pub locations: usize,
    pub events: Vec<FaultEvent>,
    /// Events where cat verification ran out of retries.
    pub rejected: usize,
    pub conflicts: Vec<Conflict>,
}

impl FtReport {
    pub fn is_fault_tolerant(&self) -> bool {
        self.conflicts.is_empty()
    }

    /// Single-fault events left with a logical error by minimal-weight decoding alone.
    pub fn mwd_failures(&self) -> usize {
        self.events.iter().filter(|e| !e.error.is_identity()).count()
    }

    /// Lookup decoder built from the events.
    pub fn table(&self) -> FaultTable {
        let mut t = FaultTable::new();
        t.insert(0, LogicalPauli2::I);
        for e in &self.events {
            t.insert(e.key, e.error);
        }
        t
    }

    /// Events still wrong after decoding with `decoder`.
    pub fn residual_failures(&self, decoder: &dyn LogicalDecoder) -> Vec<&FaultEvent> {
        self.events.iter().filter(|e| !(e.error ^ decoder.correction(e.key)).is_identity()).collect()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}: {} locations, {} single-fault events, {} rejected, {} logical under MWD alone, {} conflicts",
            self.name,
            self.locations,
            self.events.len(),
            self.rejected,
            self.mwd_failures(),
            self.conflicts.len()
        );
        for c in self.conflicts.iter().take(20) {
            match &c.first {
                Some(f) => {
                    let _ = writeln!(s, "  conflict: {}\n        vs: {}", c.second.describe(), f.describe());
                }
                None => {
                    let _ = writeln!(s, "  conflict: {}\n        vs: fault-free run", c.second.describe());
                }
            }
        }
        s
    }
}

/// Fault-free location kinds and phase marks.
fn reference_run(rec: &ExRec) -> Result<(Vec<LocationKind>, TrialRecord)> {
    let mut ex =
        Executor::new(PauliFrame::new(layout::REGISTER), Recorder::default(), ChaCha8Rng::seed_from_u64(0));
    let r = run_trial(rec, &mut ex)?;
    if r.key() != 0 || !r.error.is_identity() {
        return Err(Error::Unsupported("fault-free exRec run is not clean".into()));
    }
    Ok((ex.faults.kinds, r))
}

fn sites(kinds: &[LocationKind]) -> Vec<(usize, LocalFault)> {
    kinds
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| LocalFault::all_for(k).into_iter().map(move |f| (i, f)))
        .collect()
}

fn find_conflicts(events: &[FaultEvent]) -> Vec<Conflict> {
    let mut first: std::collections::HashMap<u64, Option<usize>> = std::collections::HashMap::new();
    first.insert(0, None);
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match first.get(&e.key) {
            None => {
                first.insert(e.key, Some(i));
            }
            Some(None) => {
                if !e.error.is_identity() {
                    out.push(Conflict { first: None, second: e.clone() });
                }
            }
            Some(Some(j)) => {
                if events[*j].error != e.error {
                    out.push(Conflict { first: Some(events[*j].clone()), second: e.clone() });
                }
            }
        }
    }
    out
}

/// Injects every single fault into the exRec (LEC, both pieces, e1, TEC) on
/// the frame backend.
pub fn verify_fault_tolerance(rec: &ExRec, exec: Execution) -> Result<FtReport> {
    let (kinds, reference) = reference_run(rec)?;
    let all = sites(&kinds);
    let results = exec.map_chunks(all.len(), 256, |range| {
        let mut ex = Executor::new(
            PauliFrame::new(layout::REGISTER),
            InjectAt { index: 0, fault: LocalFault::NONE },
            ChaCha8Rng::seed_from_u64(0),
        );
        all[range]
            .iter()
            .map(|&(index, fault)| {
                ex.faults = InjectAt { index, fault };
                match run_trial(rec, &mut ex) {
                    Ok(r) => Ok(Some(FaultEvent {
                        location: index,
                        phase: reference.phase_of(index),
                        kind: kinds[index],
                        fault,
                        key: r.key(),
                        error: r.error,
                    })),
                    Err(Error::VerificationExhausted { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut events = Vec::with_capacity(all.len());
    let mut rejected = 0;
    for chunk in results {
        for e in chunk? {
            match e {
                Some(e) => events.push(e),
                None => rejected += 1,
            }
        }
    }
    let conflicts = find_conflicts(&events);
    Ok(FtReport { name: rec.circuit.name.clone(), locations: kinds.len(), events, rejected, conflicts })
}

/// A conversion fault left uncorrected by stage-wise lookup decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversionFailure {
    pub location: usize,
    pub stage: usize,
    pub fault: LocalFault,
    pub error: LogicalPauli2,
}

#[derive(Clone, Debug)]
pub struct ConversionReport {
    pub locations: usize,
    pub events: usize,
    pub rejected: usize,
    pub failures: Vec<ConversionFailure>,
}

impl ConversionReport {
    pub fn is_fault_tolerant(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sum over stages of each stage's table correction, carried to the output
/// through the later stages.
pub fn conversion_correction(conv: &ConversionCircuit, tables: &[&FaultTable; 3], keys: &[u64; 3]) -> LogicalPauli2 {
    let mut total = LogicalPauli2::I;
    for k in 0..3 {
        let mut c = tables[k].correction(keys[k]);
        for later in &conv.stages[k + 1..] {
            c = later.intended_action().apply(c);
        }
        total ^= c;
    }
    total
}

/// Injects every single fault into the conversion and decodes each stage with
/// the table for its orientation.
pub fn verify_conversion(
    conv: &ConversionCircuit,
    rounds: SyndromeRounds,
    tables: &[&FaultTable; 3],
    exec: Execution,
) -> Result<ConversionReport> {
    let mut ex =
        Executor::new(PauliFrame::new(layout::REGISTER), Recorder::default(), ChaCha8Rng::seed_from_u64(0));
    let clean = run_conversion_trial(conv, rounds, &mut ex)?;
    if clean.keys != [0; 3] || !clean.error.is_identity() {
        return Err(Error::Unsupported("fault-free conversion run is not clean".into()));
    }
    let kinds = ex.faults.kinds;
    let all = sites(&kinds);
    let stage_of = |loc: usize| clean.marks[1..].iter().position(|&m| loc < m).unwrap_or(2);
    let results = exec.map_chunks(all.len(), 256, |range| {
        let mut ex = Executor::new(
            PauliFrame::new(layout::REGISTER),
            InjectAt { index: 0, fault: LocalFault::NONE },
            ChaCha8Rng::seed_from_u64(0),
        );
        all[range]
            .iter()
            .map(|&(index, fault)| {
                ex.faults = InjectAt { index, fault };
                match run_conversion_trial(conv, rounds, &mut ex) {
                    Ok(r) => {
                        let residual = r.error ^ conversion_correction(conv, tables, &r.keys);
                        Ok(Some((!residual.is_identity()).then_some(ConversionFailure {
                            location: index,
                            stage: stage_of(index),
                            fault,
                            error: residual,
                        })))
                    }
                    Err(Error::VerificationExhausted { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut report = ConversionReport { locations: kinds.len(), events: 0, rejected: 0, failures: Vec::new() };
    for chunk in results {
        for r in chunk? {
            match r {
                Some(f) => {
                    report.events += 1;
                    report.failures.extend(f);
                }
                None => report.rejected += 1,
            }
        }
    }
    Ok(report)
}

/// Logical map of the conversion, for callers checking the SWAP identity.
pub fn conversion_map(conv: &ConversionCircuit) -> LogicalMap {
    conv.stages.iter().fold(LogicalMap::identity(), |m, s| m.then(&s.intended_action()))
}

/// Fault-free sanity run on the frame backend.
pub fn clean_run(rec: &ExRec) -> Result<TrialRecord> {
    let mut ex = Executor::new(PauliFrame::new(layout::REGISTER), NoFaults, ChaCha8Rng::seed_from_u64(0));
    run_trial(rec, &mut ex)
}
