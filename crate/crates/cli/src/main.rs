//! Command-line driver: verification, training data, NN training, Monte Carlo
//! runs and threshold reports.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pftconv::circuit::CliffordCircuit;
use pftconv::codes::Basis;
use pftconv::decoders::{FaultTable, LogicalDecoder, Mwd};
use pftconv::ec::{layout, SyndromeRounds};
use pftconv::exrec::{ExRec, LecMode};
use pftconv::ft::{conversion_map, verify_conversion, verify_fault_tolerance};
use pftconv::logical::LogicalPauli2;
use pftconv::nn::{
    default_schedule, generate_dataset, train_decoder, Dataset, DatasetConfig, LabelSet, NnDecoder, TrainConfig,
    DEFAULT_DIMS, DEFAULT_SHOTS_PER_EPSILON,
};
use pftconv::noise::DepolarizingConvention;
use pftconv::parallel::Execution;
use pftconv::pieceable::{build, build_conversion, Direction, Orientation, TwoBlockCircuit};
use pftconv::sampling::{BackendKind, ShotPlan};
use pftconv::threshold::{
    fit_quadratic, loglog_slope, parse_results, pseudo_threshold, results_header, results_row, swap_pseudo_threshold,
    sweep, BareLine, FitModel, QuadraticFit, RateEstimate, RatePoint, ResultRow, RootSearch, SwapFormula,
};

/// Published pseudo-thresholds, printed next to ours for comparison.
const REFERENCES: [(&str, &str, f64); 4] = [("A", "mwd", 9.36e-7), ("B", "mwd", 1.99e-6), ("A", "nn", 1.06e-4), ("B", "nn", 1.98e-4)];
const SWAP_REFERENCE_NN: f64 = 1.07e-4;

/// Default ε grid for simulations and threshold fits.
const THRESHOLD_GRID: &str = "3e-5,1e-4,3e-4,1e-3";

#[derive(Parser, Debug)]
#[command(name = "pftconv", version, about = "Pieceable CNOTs between the Steane and 15-qubit Reed-Muller codes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Worker threads for simulation; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// key = value file providing defaults for any option.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "quarter-eps")]
    depolarizing_convention: DepolarizingConvention,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

impl Global {
    fn exec(&self) -> Execution {
        Execution::from_workers(self.workers)
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check stabilizer preservation, constant stabilizers, single-fault
    /// tolerance and conversion; exits nonzero on any violation.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Sample syndrome records for training.
    #[command(args_override_self = true)]
    GenData(GenDataArgs),
    /// Train an NN decoder on a dataset.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Monte Carlo logical failure rates, one CSV row per circuit, decoder and ε.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Quadratic fits and pseudo-thresholds with plot series.
    #[command(args_override_self = true)]
    Threshold(ThresholdArgs),
    /// SWAP pseudo-threshold from the fits of both circuits.
    #[command(args_override_self = true)]
    SwapThreshold(SwapArgs),
    /// Every fit, threshold and SWAP threshold in a results file, with references.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

/// Comma-separated values as a single option value.
#[derive(Clone, Debug, PartialEq)]
struct List<T>(Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|e| format!("{x:?}: {e}")))
            .collect::<std::result::Result<Vec<T>, String>>()
            .map(List)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum DecoderKind {
    Mwd,
    Lookup,
    Nn,
}

impl DecoderKind {
    fn name(self) -> &'static str {
        match self {
            Self::Mwd => "mwd",
            Self::Lookup => "lookup",
            Self::Nn => "nn",
        }
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mwd" => Ok(Self::Mwd),
            "lookup" => Ok(Self::Lookup),
            "nn" => Ok(Self::Nn),
            _ => Err(format!("unknown decoder {s:?}, expected mwd, lookup or nn")),
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Drop the data gate with this location id before checking.
    #[arg(long, value_name = "ID")]
    remove_gate: Option<u32>,
    #[arg(long, default_value = "project")]
    lec_mode: LecMode,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long, default_value = "A")]
    circuit: Orientation,
    /// Physical error rates; defaults to four log-spaced points over [1e-4, 1e-3].
    #[arg(long)]
    eps: Option<List<f64>>,
    #[arg(long, default_value_t = DEFAULT_SHOTS_PER_EPSILON)]
    shots: u64,
    #[arg(long, default_value = "full")]
    labels: LabelSet,
    #[arg(long, default_value = "project")]
    lec_mode: LecMode,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Decoder checkpoint to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Loss trajectory CSV; standard output when absent.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    epochs: usize,
    #[arg(long, default_value_t = 30)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1e-5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    validation_fraction: f64,
    #[arg(long)]
    dims: Option<List<usize>>,
    /// Keep the weights of the epoch with the lowest validation loss.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    keep_best: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, default_value = "A")]
    circuit: List<Orientation>,
    #[arg(long, default_value = THRESHOLD_GRID)]
    eps: List<f64>,
    /// Accepted shots per ε.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Use 10⁶ shots per ε.
    #[arg(long)]
    full_n: bool,
    #[arg(long, default_value = "mwd")]
    decoder: List<DecoderKind>,
    /// NN checkpoints; each file names its circuit.
    #[arg(long)]
    model: Option<List<PathBuf>>,
    #[arg(long, default_value = "frame")]
    backend: BackendKind,
    #[arg(long, default_value = "project")]
    lec_mode: LecMode,
    #[arg(long, default_value = "adaptive")]
    rounds: SyndromeRounds,
}

impl SimArgs {
    fn shots(&self) -> u64 {
        if self.full_n {
            1_000_000
        } else {
            self.shots
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// `origin` fixes the constant term at zero; `full` fits it.
    #[arg(long, default_value = "origin")]
    fit: FitModel,
    #[arg(long, default_value = "epsilon")]
    bare_line: BareLine,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Results files from `simulate`; without them the simulation runs here.
    #[arg(long)]
    input: Option<List<PathBuf>>,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Points per fitted curve in the plot series.
    #[arg(long, default_value_t = 40)]
    series_points: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SwapArgs {
    #[arg(long)]
    input: Option<List<PathBuf>>,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    input: List<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<bool> {
    let mut args: Vec<String> = std::env::args().collect();
    let command = Cli::command();
    if let Some(path) = config::path(&args) {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
        args = config::merge(&command, args, &config::parse(&text)?)?;
    }
    let matches = command.get_matches_from(args);
    let cli = Cli::from_arg_matches(&matches)?;
    let header = header(&matches);
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Verify(a) => cmd_verify(g, a, &header),
        Cmd::GenData(a) => cmd_gen_data(g, a).map(|_| true),
        Cmd::Train(a) => cmd_train(g, a, &header).map(|_| true),
        Cmd::Simulate(a) => cmd_simulate(g, a, &header).map(|_| true),
        Cmd::Threshold(a) => cmd_threshold(g, a, &header).map(|_| true),
        Cmd::SwapThreshold(a) => cmd_swap(g, a, &header).map(|_| true),
        Cmd::Report(a) => cmd_report(a, &header).map(|_| true),
    }
}

/// `# key=value` lines for every option of the run, defaults included, so an
/// output file can be reproduced (and read back as a config file).
fn header(m: &ArgMatches) -> String {
    let Some((name, sub)) = m.subcommand() else {
        return String::new();
    };
    let mut s = format!("# pftconv {} {name}\n", env!("CARGO_PKG_VERSION"));
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(name) else {
        return s;
    };
    for arg in cmd.get_arguments().chain(sub_cmd.get_arguments()) {
        let id = arg.get_id().as_str();
        if matches!(id, "config" | "help" | "version") {
            continue;
        }
        if let Ok(Some(vals)) = sub.try_get_raw(id) {
            let v: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
            let _ = writeln!(s, "# {}={}", arg.get_long().unwrap_or(id), v.join(","));
        }
    }
    s
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn exrec(o: Orientation, lec_mode: LecMode, rounds: SyndromeRounds) -> ExRec {
    ExRec::new(build(o)).with_lec_mode(lec_mode).with_rounds(rounds)
}

fn without_gate(c: &TwoBlockCircuit, id: u32) -> Result<TwoBlockCircuit> {
    let strip = |piece: &CliffordCircuit| -> Result<(CliffordCircuit, bool)> {
        let mut out = CliffordCircuit::new(layout::DATA);
        let mut found = false;
        for (i, g) in piece.iter() {
            if i == id {
                found = true;
            } else {
                out.push_with_id(i, g.clone())?;
            }
        }
        Ok((out, found))
    };
    let (p1, f1) = strip(&c.piece1)?;
    let (p2, f2) = strip(&c.piece2)?;
    if !(f1 || f2) {
        bail!("{} has no data gate with location id {id}", c.name);
    }
    Ok(TwoBlockCircuit { piece1: p1, piece2: p2, ..c.clone() })
}

fn cmd_verify(g: &Global, a: &VerifyArgs, header: &str) -> Result<bool> {
    let mut out = sink(None)?;
    write!(out, "{header}")?;
    let mut ok = true;
    let mut check = |out: &mut dyn Write, name: &str, pass: bool, detail: String| -> Result<()> {
        ok &= pass;
        writeln!(out, "{name}: {} {detail}", if pass { "ok" } else { "VIOLATION" })?;
        Ok(())
    };
    for o in [Orientation::A, Orientation::B] {
        let mut c = build(o);
        if let Some(id) = a.remove_gate {
            c = without_gate(&c, id)?;
        }
        let n = c.name.clone();
        let v = c.stabilizer_violations()?;
        check(&mut out, &format!("{n} stabilizer preservation"), v.is_empty(), format!("20 generators, {} leave S7 x S15", v.len()))?;
        for (kind, i, img) in &v {
            writeln!(out, "  {kind:?} generator {i} -> {}", img.sparse_string())?;
        }
        for (i, s) in c.constant_stabilizers().enumerate() {
            writeln!(out, "  constant stabilizer {i}: {}", s.sparse_string())?;
        }
        let cv = c.constant_violations()?;
        check(
            &mut out,
            &format!("{n} constant stabilizers"),
            cv.is_empty(),
            format!("{} operators x {} gates, {} fail", c.constant_stabilizers().count(), c.num_data_gates(), cv.len()),
        )?;
        for (i, id) in &cv {
            writeln!(out, "  constant stabilizer {i} moved by location {id}")?;
        }
        let action = c.logical_action();
        let pass = matches!(&action, Ok(m) if *m == c.intended_action());
        let detail = match &action {
            Ok(m) => {
                let images: Vec<String> = m.images().iter().map(|p| p.label()).collect();
                format!("XI, ZI, IX, IZ (Steane, RM15) map to {}", images.join(", "))
            }
            Err(e) => e.to_string(),
        };
        check(&mut out, &format!("{n} logical action"), pass, detail)?;
        let rec = ExRec::new(c).with_lec_mode(a.lec_mode);
        match verify_fault_tolerance(&rec, g.exec()) {
            Ok(r) => {
                let detail = format!("{} events over {} locations, {} conflicts", r.events.len(), r.locations, r.conflicts.len());
                check(&mut out, &format!("{n} single-fault tolerance"), r.is_fault_tolerant(), detail)?;
                for conflict in r.conflicts.iter().take(20) {
                    writeln!(out, "  conflict: {}", conflict.second.describe())?;
                }
            }
            Err(e) => check(&mut out, &format!("{n} single-fault tolerance"), false, e.to_string())?,
        }
    }
    if a.remove_gate.is_some() {
        writeln!(out, "conversion checks skipped: circuits were modified")?;
        out.flush()?;
        return Ok(ok);
    }
    let table = |o| -> Result<FaultTable> {
        Ok(verify_fault_tolerance(&exrec(o, LecMode::Virtual, SyndromeRounds::default()), g.exec())?.table())
    };
    let (ta, tb) = (table(Orientation::A)?, table(Orientation::B)?);
    for dir in [Direction::SteaneToRm15, Direction::Rm15ToSteane] {
        let conv = build_conversion(dir);
        let swap = conversion_map(&conv);
        let x = |k| LogicalPauli2::I.with_block(k, (true, false));
        let z = |k| LogicalPauli2::I.with_block(k, (false, true));
        let pass = swap.apply(x(dir.source())) == x(dir.destination()) && swap.apply(z(dir.source())) == z(dir.destination());
        check(&mut out, &format!("conversion {dir:?} logical swap"), pass, String::new())?;
        let tables: [&FaultTable; 3] = std::array::from_fn(|k| match conv.stages[k].orientation {
            Orientation::A => &ta,
            Orientation::B => &tb,
        });
        let r = verify_conversion(&conv, SyndromeRounds::default(), &tables, g.exec())?;
        check(
            &mut out,
            &format!("conversion {dir:?} single-fault tolerance"),
            r.is_fault_tolerant(),
            format!("{} events over {} locations, {} failures", r.events, r.locations, r.failures.len()),
        )?;
        for (basis, flipped, want, label) in [(Basis::Z, false, false, "|0>"), (Basis::Z, true, true, "|1>"), (Basis::X, false, false, "|+>")] {
            let reads: Vec<bool> = (0..4)
                .map(|s| conv.transfer(basis, flipped, ChaCha8Rng::seed_from_u64(g.seed.wrapping_add(s))))
                .collect::<pftconv::Result<_>>()?;
            check(&mut out, &format!("conversion {dir:?} transfers {label}"), reads.iter().all(|&r| r == want), format!("{reads:?}"))?;
        }
    }
    out.flush()?;
    Ok(ok)
}

fn cmd_gen_data(g: &Global, a: &GenDataArgs) -> Result<()> {
    let rec = exrec(a.circuit, a.lec_mode, SyndromeRounds::default());
    let cfg = DatasetConfig {
        epsilons: a.eps.clone().map(|l| l.0).unwrap_or_else(default_schedule),
        shots_per_epsilon: a.shots,
        seed: g.seed,
        labels: a.labels,
        convention: g.depolarizing_convention,
        exec: g.exec(),
    };
    let data = generate_dataset(&rec, &cfg)?;
    let mut out = sink(a.out.as_deref())?;
    data.write(&rec, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_train(g: &Global, a: &TrainArgs, header: &str) -> Result<()> {
    let file = File::open(&a.data).with_context(|| format!("opening {}", a.data.display()))?;
    let data = Dataset::read(BufReader::new(file)).with_context(|| format!("reading {}", a.data.display()))?;
    let cfg = TrainConfig {
        dims: a.dims.clone().map(|l| l.0).unwrap_or_else(|| DEFAULT_DIMS.to_vec()),
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        lambda: a.lambda,
        epochs: a.epochs,
        seed: g.seed,
        validation_fraction: a.validation_fraction,
        keep_best: a.keep_best,
        ..TrainConfig::default()
    };
    let (decoder, reports) = train_decoder(&data, &cfg)?;
    let mut model = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    decoder.save(&mut model)?;
    model.flush()?;
    let mut log = sink(a.log.as_deref())?;
    write!(log, "{header}")?;
    writeln!(log, "# records={}", data.records.len())?;
    writeln!(log, "head,epoch,train_loss,validation_loss,kept")?;
    for (h, r) in reports.iter().enumerate() {
        for (e, (t, v)) in r.train_loss.iter().zip(&r.validation_loss).enumerate() {
            writeln!(log, "{},{e},{t:.6e},{v:.6e},{}", data.labels.names()[h], (e == r.kept_epoch) as u8)?;
        }
    }
    log.flush()?;
    Ok(())
}

/// Decoders for one circuit, named as in the results file.
fn decoders_for(g: &Global, s: &SimArgs, o: Orientation, rec: &ExRec) -> Result<Vec<(String, Box<dyn LogicalDecoder>)>> {
    let mut out: Vec<(String, Box<dyn LogicalDecoder>)> = Vec::new();
    for &d in &s.decoder.0 {
        let dec: Box<dyn LogicalDecoder> = match d {
            DecoderKind::Mwd => Box::new(Mwd),
            DecoderKind::Lookup => Box::new(verify_fault_tolerance(rec, g.exec())?.table()),
            DecoderKind::Nn => {
                let paths = s.model.as_ref().map(|l| l.0.as_slice()).unwrap_or_default();
                let mut found = None;
                for p in paths {
                    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    let nn = NnDecoder::load(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?;
                    if nn.orientation == o {
                        found = Some(nn);
                        break;
                    }
                }
                Box::new(found.ok_or_else(|| anyhow!("no --model checkpoint for circuit {}", o.name()))?)
            }
        };
        out.push((d.name().to_string(), dec));
    }
    Ok(out)
}

/// Simulates every circuit once per ε and decodes the same shots with each
/// decoder, so rows for different decoders are paired.
fn simulate_rows(g: &Global, s: &SimArgs) -> Result<Vec<ResultRow>> {
    let points: Vec<(f64, u64)> = s.eps.0.iter().map(|&e| (e, s.shots())).collect();
    let plan = ShotPlan { shots: 0, seed: g.seed, stream: 0, backend: s.backend, exec: g.exec() };
    let mut rows = Vec::new();
    for &o in &s.circuit.0 {
        let rec = exrec(o, s.lec_mode, s.rounds);
        let decoders = decoders_for(g, s, o, &rec)?;
        for t in sweep(&rec, g.depolarizing_convention, &points, &plan)? {
            for (name, d) in &decoders {
                rows.push(ResultRow {
                    circuit: o.name().into(),
                    decoder: name.clone(),
                    estimate: t.estimate(d.as_ref()),
                    rejected: t.rejected,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_simulate(g: &Global, a: &SimulateArgs, header: &str) -> Result<()> {
    let rows = simulate_rows(g, &a.sim)?;
    let mut out = sink(a.out.as_deref())?;
    write!(out, "{header}")?;
    writeln!(out, "{}", results_header())?;
    for r in &rows {
        writeln!(out, "{}", results_row(&r.circuit, &r.decoder, &r.estimate, r.rejected))?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows(paths: &[PathBuf]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        rows.extend(parse_results(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    Ok(rows)
}

/// Rows grouped by (circuit, decoder), each group sorted by ε with repeated
/// ε merged.
fn group(rows: &[ResultRow]) -> BTreeMap<(String, String), Vec<RateEstimate>> {
    let mut groups: BTreeMap<(String, String), Vec<RateEstimate>> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.circuit.clone(), r.decoder.clone())).or_default();
        match g.iter_mut().find(|e| e.epsilon == r.estimate.epsilon) {
            Some(e) => {
                e.shots += r.estimate.shots;
                for (c, n) in e.counts.iter_mut().zip(&r.estimate.counts) {
                    *c += n;
                }
            }
            None => g.push(r.estimate.clone()),
        }
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    }
    groups
}

fn reference(circuit: &str, decoder: &str) -> Option<f64> {
    REFERENCES.iter().find(|(c, d, _)| *c == circuit && *d == decoder).map(|r| r.2)
}

/// Fit and threshold lines for one group; returns the fit when there is one.
fn fit_section(out: &mut dyn Write, key: &(String, String), est: &[RateEstimate], fit: &FitArgs) -> Result<Option<QuadraticFit>> {
    let prefix = format!("{}.{}", key.0, key.1);
    let points: Vec<RatePoint> = est.iter().map(RatePoint::from).collect();
    if let Some(s) = loglog_slope(&points) {
        writeln!(out, "{prefix}.loglog_slope={s:.4}")?;
    }
    match fit_quadratic(&points, fit.fit) {
        Ok(f) => {
            let t = pseudo_threshold(&f, fit.bare_line, RootSearch::default());
            write!(out, "{}", pftconv::threshold::fit_report(&prefix, &f, &t, reference(&key.0, &key.1)))?;
            Ok(Some(f))
        }
        Err(e) => {
            writeln!(out, "{prefix}.fit=none")?;
            writeln!(out, "{prefix}.fit_note={e}")?;
            Ok(None)
        }
    }
}

fn rows_for(g: &Global, input: &Option<List<PathBuf>>, sim: &SimArgs) -> Result<Vec<ResultRow>> {
    match input {
        Some(paths) => {
            let circuits: Vec<&str> = sim.circuit.0.iter().map(|o| o.name()).collect();
            let decoders: Vec<&str> = sim.decoder.0.iter().map(|d| d.name()).collect();
            let rows: Vec<ResultRow> = read_rows(&paths.0)?
                .into_iter()
                .filter(|r| circuits.contains(&r.circuit.as_str()) && decoders.contains(&r.decoder.as_str()))
                .collect();
            if rows.is_empty() {
                bail!("no rows for circuits {circuits:?} and decoders {decoders:?} in the input");
            }
            Ok(rows)
        }
        None => simulate_rows(g, sim),
    }
}

fn cmd_threshold(g: &Global, a: &ThresholdArgs, header: &str) -> Result<()> {
    let rows = rows_for(g, &a.input, &a.sim)?;
    let mut out = sink(a.out.as_deref())?;
    write!(out, "{header}")?;
    let groups = group(&rows);
    let mut series = String::new();
    for (key, est) in &groups {
        let fit = fit_section(&mut out, key, est, &a.fit)?;
        for e in est {
            let (lo, hi) = e.interval(1.96);
            let _ = writeln!(series, "point,{},{},{:e},{:e},{lo:e},{hi:e}", key.0, key.1, e.epsilon, e.rate());
        }
        if let (Some(f), Some(first), Some(last)) = (fit, est.first(), est.last()) {
            let n = a.series_points.max(2);
            let (lo, hi) = (first.epsilon.min(1e-6), last.epsilon);
            for i in 0..n {
                let e = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
                let _ = writeln!(series, "curve,{},{},{e:e},{:e},{:e}", key.0, key.1, f.eval(e), a.fit.bare_line.rate(e));
            }
        }
    }
    writeln!(out, "# plot series: point rows carry (rate, ci_low, ci_high), curve rows (fit, bare)")?;
    writeln!(out, "kind,circuit,decoder,epsilon,y,y2,y3")?;
    write!(out, "{series}")?;
    out.flush()?;
    Ok(())
}

fn swap_section(out: &mut dyn Write, groups: &BTreeMap<(String, String), Vec<RateEstimate>>, fit: &FitArgs) -> Result<()> {
    let decoders: Vec<String> = groups.keys().map(|k| k.1.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for d in decoders {
        let fits: Vec<Option<QuadraticFit>> = ["A", "B"]
            .iter()
            .map(|c| {
                groups.get(&(c.to_string(), d.clone())).and_then(|est| {
                    let pts: Vec<RatePoint> = est.iter().map(RatePoint::from).collect();
                    fit_quadratic(&pts, fit.fit).ok()
                })
            })
            .collect();
        let (Some(fa), Some(fb)) = (fits[0], fits[1]) else {
            writeln!(out, "swap.{d}.threshold=none")?;
            writeln!(out, "swap.{d}.threshold_note=needs fits for both circuits")?;
            continue;
        };
        for (name, formula) in [("printed", SwapFormula::Printed), ("symmetric", SwapFormula::Symmetric)] {
            match swap_pseudo_threshold(&fa, &fb, formula, RootSearch::default()) {
                Ok(t) => writeln!(out, "swap.{d}.threshold_{name}={t:e}")?,
                Err(e) => {
                    writeln!(out, "swap.{d}.threshold_{name}=none")?;
                    writeln!(out, "swap.{d}.threshold_{name}_note={e}")?;
                }
            }
        }
        if d == "nn" {
            writeln!(out, "swap.nn.reference={SWAP_REFERENCE_NN:e}")?;
        }
    }
    Ok(())
}

fn cmd_swap(g: &Global, a: &SwapArgs, header: &str) -> Result<()> {
    let mut sim_rows = rows_for(g, &a.input, &a.sim)?;
    sim_rows.retain(|r| r.circuit == "A" || r.circuit == "B");
    let mut out = sink(a.out.as_deref())?;
    write!(out, "{header}")?;
    let groups = group(&sim_rows);
    for (key, est) in &groups {
        fit_section(&mut out, key, est, &a.fit)?;
    }
    swap_section(&mut out, &groups, &a.fit)?;
    out.flush()?;
    Ok(())
}

fn cmd_report(a: &ReportArgs, header: &str) -> Result<()> {
    let rows = read_rows(&a.input.0)?;
    let mut out = sink(a.out.as_deref())?;
    write!(out, "{header}")?;
    let groups = group(&rows);
    for (key, est) in &groups {
        let shots: u64 = est.iter().map(|e| e.shots).sum();
        writeln!(out, "{}.{}.points={} shots={shots}", key.0, key.1, est.len())?;
        fit_section(&mut out, key, est, &a.fit)?;
    }
    swap_section(&mut out, &groups, &a.fit)?;
    for (c, d, r) in REFERENCES {
        writeln!(out, "reference.{c}.{d}={r:e}")?;
    }
    writeln!(out, "reference.swap.nn={SWAP_REFERENCE_NN:e}")?;
    out.flush()?;
    Ok(())
}
