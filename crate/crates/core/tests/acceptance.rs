//! Acceptance run: prints one PASS or FAIL line per criterion and never
//! panics on a FAIL, so the numbers are always reported.
//!
//! The NN training budget can be changed with `PFTCONV_NN_SHOTS` (shots per
//! training ε) and `PFTCONV_NN_EPOCHS`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pftconv::codes::Basis;
use pftconv::decoders::{FaultTable, LogicalDecoder, Mwd};
use pftconv::ec::SyndromeRounds;
use pftconv::exrec::{ExRec, LecMode, KEY_BITS};
use pftconv::ft::{conversion_map, verify_conversion, verify_fault_tolerance};
use pftconv::logical::LogicalPauli2;
use pftconv::nn::{
    default_schedule, finite_difference_error, generate_dataset, train_decoder, DatasetConfig, LabelSet, Mlp,
    NnDecoder, TrainConfig, DEFAULT_SHOTS_PER_EPSILON,
};
use pftconv::noise::{DepolarizingConvention, NoiseParams};
use pftconv::parallel::Execution;
use pftconv::pieceable::{build, build_conversion, Direction, Orientation};
use pftconv::sampling::{BackendKind, ShotPlan};
use pftconv::threshold::{
    fit_quadratic, loglog_slope, pseudo_threshold, rate_points, simulate, swap_pseudo_threshold, swap_rate, sweep,
    BareLine, FitModel, QuadraticFit, RootSearch, SwapFormula, Tally,
};
use pftconv::Result;

const MWD_REFERENCE: [f64; 2] = [9.36e-7, 1.99e-6];
const SWAP_REFERENCE: f64 = 1.07e-4;
/// Threshold grid: (ε, shots). Lower ε gets more shots so every point sees
/// a comparable number of failures.
const GRID: [(f64, u64); 4] = [(3e-5, 1_000_000), (1e-4, 400_000), (3e-4, 200_000), (1e-3, 100_000)];
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(n: usize, name: &str, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let t = Instant::now();
    let (pass, detail) = match f() {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {n} {} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    pass
}

fn orientations() -> [Orientation; 2] {
    [Orientation::A, Orientation::B]
}

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn structural() -> Result<Outcome> {
    let t = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for o in orientations() {
        let c = build(o);
        let v = c.stabilizer_violations()?;
        pass &= v.is_empty();
        detail.push(format!("{}: 20 checks, {} violations", c.name, v.len()));
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 1.0;
    Ok(Outcome { pass, detail: format!("{} in {secs:.3}s", detail.join("; ")) })
}

fn constant_stabilizers() -> Result<Outcome> {
    let mut detail = Vec::new();
    let mut pass = true;
    for o in orientations() {
        let c = build(o);
        let v = c.constant_violations()?;
        pass &= v.is_empty() && c.constant_control.len() >= 3 && c.constant_target.len() >= 3;
        detail.push(format!(
            "{}: {} operators x {} gates, {} failures",
            c.name,
            c.constant_stabilizers().count(),
            c.num_data_gates(),
            v.len()
        ));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn fault_tolerance() -> Result<Outcome> {
    let exec = Execution::Parallel;
    let mut detail = Vec::new();
    let mut pass = true;
    let mut tables = Vec::new();
    for o in orientations() {
        let r = verify_fault_tolerance(&ExRec::new(build(o)), exec)?;
        pass &= r.is_fault_tolerant() && r.residual_failures(&r.table()).is_empty();
        detail.push(format!("{}: {} events, {} conflicts", r.name, r.events.len(), r.conflicts.len()));
        let v = verify_fault_tolerance(&ExRec::new(build(o)).with_lec_mode(LecMode::Virtual), exec)?;
        pass &= v.is_fault_tolerant();
        tables.push(v.table());
    }
    for dir in [Direction::SteaneToRm15, Direction::Rm15ToSteane] {
        let conv = build_conversion(dir);
        let t: [&FaultTable; 3] = std::array::from_fn(|k| match conv.stages[k].orientation {
            Orientation::A => &tables[0],
            Orientation::B => &tables[1],
        });
        let r = verify_conversion(&conv, SyndromeRounds::default(), &t, exec)?;
        pass &= r.is_fault_tolerant();
        detail.push(format!("conversion {dir:?}: {} events, {} failures", r.events, r.failures.len()));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn conversion() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for dir in [Direction::SteaneToRm15, Direction::Rm15ToSteane] {
        let conv = build_conversion(dir);
        let m = conversion_map(&conv);
        let x = |k| LogicalPauli2::I.with_block(k, (true, false));
        let z = |k| LogicalPauli2::I.with_block(k, (false, true));
        pass &= m.apply(x(dir.source())) == x(dir.destination()) && m.apply(z(dir.source())) == z(dir.destination());
        for (basis, flipped, want) in [(Basis::Z, false, false), (Basis::Z, true, true), (Basis::X, false, false)] {
            // several measurement seeds: the readout must not depend on them
            for s in 0..8 {
                pass &= conv.transfer(basis, flipped, ChaCha8Rng::seed_from_u64(s))? == want;
            }
        }
        detail.push(format!("{dir:?}: |0>, |1>, |+> transferred over 8 seeds"));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn plan(shots: u64, stream: u64, backend: BackendKind) -> ShotPlan {
    ShotPlan { shots, seed: SEED, stream, backend, exec: Execution::Parallel }
}

fn quadratic_scaling() -> Result<Outcome> {
    let rec = ExRec::new(build(Orientation::A));
    let points: Vec<(f64, u64)> = [3e-4, 1e-3, 3e-3].iter().map(|&e| (e, 100_000)).collect();
    let tallies = sweep(&rec, DepolarizingConvention::QuarterEps, &points, &plan(0, 100, BackendKind::Frame))?;
    let pts = rate_points(&tallies, &Mwd);
    let slope = loglog_slope(&pts).unwrap_or(f64::NAN);
    let rates: Vec<String> = pts.iter().map(|p| format!("{:.3e}", p.rate)).collect();
    Ok(Outcome {
        pass: (1.7..=2.3).contains(&slope),
        detail: format!("MWD slope {slope:.3} over [3e-4, 3e-3], rates {}", rates.join(", ")),
    })
}

fn fit(tallies: &[Tally], d: &dyn LogicalDecoder) -> Result<QuadraticFit> {
    fit_quadratic(&rate_points(tallies, d), FitModel::ThroughOrigin)
}

fn threshold_text(t: &Result<f64>) -> String {
    match t {
        Ok(v) => format!("{v:.3e}"),
        Err(e) => format!("none ({e})"),
    }
}

fn mwd_thresholds(tallies: &[Vec<Tally>; 2]) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, o) in orientations().iter().enumerate() {
        let f = fit(&tallies[k], &Mwd)?;
        let t = pseudo_threshold(&f, BareLine::Epsilon, RootSearch::default());
        let r = MWD_REFERENCE[k];
        pass &= matches!(t, Ok(v) if v >= r / 5.0 && v <= r * 5.0);
        detail.push(format!("{}: a {:.3e} b {:.3} eps* {} vs {r:e}", o.name(), f.a, f.b, threshold_text(&t)));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn train_nn(o: Orientation) -> Result<(NnDecoder, String)> {
    let shots = env_or("PFTCONV_NN_SHOTS", DEFAULT_SHOTS_PER_EPSILON);
    let epochs = env_or("PFTCONV_NN_EPOCHS", 6usize);
    let rec = ExRec::new(build(o));
    let cfg = DatasetConfig {
        epsilons: default_schedule(),
        shots_per_epsilon: shots,
        seed: SEED + 1,
        labels: LabelSet::Full,
        convention: DepolarizingConvention::QuarterEps,
        exec: Execution::Parallel,
    };
    let t = Instant::now();
    let data = generate_dataset(&rec, &cfg)?;
    eprintln!("{}: {} training records [{:.0}s]", o.name(), data.records.len(), t.elapsed().as_secs_f64());
    let (nn, reports) = train_decoder(&data, &TrainConfig { epochs, ..Default::default() })?;
    eprintln!("{}: trained [{:.0}s]", o.name(), t.elapsed().as_secs_f64());
    let ft = verify_fault_tolerance(&rec, Execution::Parallel)?;
    let kept: Vec<String> = reports.iter().map(|r| format!("{:.4}", r.validation_loss[r.kept_epoch])).collect();
    let note = format!(
        "{}: {} records x {epochs} epochs, validation loss [{}], single faults missed {} (mwd {})",
        o.name(),
        data.records.len(),
        kept.join(", "),
        ft.residual_failures(&nn).len(),
        ft.residual_failures(&Mwd).len()
    );
    Ok((nn, note))
}

fn nn_improvement(tallies: &[Vec<Tally>; 2], nns: &[NnDecoder], notes: &[String]) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = notes.to_vec();
    let search = RootSearch::default();
    for (k, o) in orientations().iter().enumerate() {
        let fm = fit(&tallies[k], &Mwd)?;
        let fnn = fit(&tallies[k], &nns[k])?;
        let tm = pseudo_threshold(&fm, BareLine::Epsilon, search);
        let tn = pseudo_threshold(&fnn, BareLine::Epsilon, search);
        // without an MWD crossing above the search floor, MWD's ε* lies below it
        let floor = tm.as_ref().copied().unwrap_or(search.lo);
        pass &= matches!(tn, Ok(v) if v >= 10.0 * floor);
        let at = tallies[k].iter().find(|t| t.epsilon == 1e-3).expect("grid has 1e-3");
        let (rm, rn) = (at.estimate(&Mwd).rate(), at.estimate(&nns[k]).rate());
        pass &= rn <= rm;
        detail.push(format!(
            "{}: nn a {:.3e} b {:.3} eps* {} vs mwd eps* {}; at 1e-3 nn {rn:.3e} <= mwd {rm:.3e}",
            o.name(),
            fnn.a,
            fnn.b,
            threshold_text(&tn),
            threshold_text(&tm)
        ));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn swap(tallies: &[Vec<Tally>; 2], nns: &[NnDecoder]) -> Result<Outcome> {
    let mut exact = swap_rate(0.0, 0.0) == 0.0 && swap_rate(1.0, 0.0) == 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..1000 {
        let p: f64 = rng.random();
        exact &= (swap_rate(p, p) - 3.0 * p * (1.0 - p) * (1.0 - p)).abs() <= 1e-15;
    }
    let fa = fit(&tallies[0], &nns[0])?;
    let fb = fit(&tallies[1], &nns[1])?;
    let search = RootSearch::default();
    let printed = swap_pseudo_threshold(&fa, &fb, SwapFormula::Printed, search);
    let symmetric = swap_pseudo_threshold(&fa, &fb, SwapFormula::Symmetric, search);
    let within = matches!(printed, Ok(v) if v >= SWAP_REFERENCE / 5.0 && v <= SWAP_REFERENCE * 5.0);
    Ok(Outcome {
        pass: exact && within,
        detail: format!(
            "closed form exact: {exact}; NN SWAP eps* {} (symmetric form {}) vs {SWAP_REFERENCE:e}",
            threshold_text(&printed),
            threshold_text(&symmetric)
        ),
    })
}

fn hygiene() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let model = Mlp::new(&[KEY_BITS, 8, 2], &mut rng)?;
    let x = ndarray::Array2::from_shape_fn((6, KEY_BITS), |_| rng.random_range(0..2) as f64);
    let labels = [0, 1, 1, 0, 1, 0];
    let mut grad = 0.0f64;
    for lambda in [0.0, 1e-2] {
        grad = grad.max(finite_difference_error(&model, x.view(), &labels, lambda, 1e-5)?);
    }
    let mut softmax = 0.0f64;
    for row in x.rows() {
        let p = model.forward(row.as_slice().expect("rows are contiguous"))?;
        softmax = softmax.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    // two full retrainings of a small decoder from the same seed
    let rec = ExRec::new(build(Orientation::A));
    let cfg = DatasetConfig {
        epsilons: vec![1e-3],
        shots_per_epsilon: 2000,
        seed: SEED,
        labels: LabelSet::Full,
        convention: DepolarizingConvention::QuarterEps,
        exec: Execution::Parallel,
    };
    let data = generate_dataset(&rec, &cfg)?;
    let tc = TrainConfig { dims: vec![KEY_BITS, 16, 2], epochs: 2, ..Default::default() };
    let (a, _) = train_decoder(&data, &tc)?;
    let (b, _) = train_decoder(&data, &tc)?;
    let same = a == b;
    Ok(Outcome {
        pass: grad <= 1e-4 && softmax <= 4.0 * f64::EPSILON && same,
        detail: format!("gradient rel. error {grad:.2e}, softmax |sum - 1| {softmax:.1e}, retraining identical: {same}"),
    })
}

fn backends() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    let n = 10_000;
    for (k, o) in orientations().iter().enumerate() {
        let rec = ExRec::new(build(*o));
        let noise = NoiseParams::quarter_eps(2e-3)?;
        let frame = simulate(&rec, noise, &plan(n, 200 + k as u64, BackendKind::Frame))?.estimate(&Mwd);
        let tab = simulate(&rec, noise, &plan(n, 300 + k as u64, BackendKind::Tableau))?.estimate(&Mwd);
        let (p, q) = (frame.rate(), tab.rate());
        let sigma = (p * (1.0 - p) / n as f64 + q * (1.0 - q) / n as f64).sqrt();
        let z = (p - q).abs() / sigma.max(f64::MIN_POSITIVE);
        pass &= z <= 3.0;
        detail.push(format!("{}: frame {p:.4} tableau {q:.4} ({z:.2} sigma)", o.name()));
    }
    Ok(Outcome { pass, detail: detail.join("; ") })
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let start = Instant::now();
    let mut passed = 0;
    passed += criterion(1, "structural exactness", structural) as usize;
    passed += criterion(2, "constant stabilizers", constant_stabilizers) as usize;
    passed += criterion(3, "single-fault tolerance", fault_tolerance) as usize;
    passed += criterion(4, "conversion correctness", conversion) as usize;
    passed += criterion(5, "quadratic scaling", quadratic_scaling) as usize;

    let tallies: Result<[Vec<Tally>; 2]> = (|| {
        let a = sweep(&ExRec::new(build(Orientation::A)), DepolarizingConvention::QuarterEps, &GRID, &plan(0, 0, BackendKind::Frame))?;
        let b = sweep(&ExRec::new(build(Orientation::B)), DepolarizingConvention::QuarterEps, &GRID, &plan(0, 0, BackendKind::Frame))?;
        Ok([a, b])
    })();
    eprintln!("threshold sweeps done [{:.0}s]", start.elapsed().as_secs_f64());
    let nns: Result<Vec<(NnDecoder, String)>> = orientations().into_iter().map(train_nn).collect();
    match (&tallies, &nns) {
        (Ok(t), Ok(n)) => {
            let (decoders, notes): (Vec<NnDecoder>, Vec<String>) = n.iter().cloned().unzip();
            passed += criterion(6, "MWD pseudo-thresholds", || mwd_thresholds(t)) as usize;
            passed += criterion(7, "NN improvement", || nn_improvement(t, &decoders, &notes)) as usize;
            passed += criterion(8, "SWAP combination", || swap(t, &decoders)) as usize;
        }
        _ => {
            let e = tallies.as_ref().err().map(ToString::to_string).or(nns.as_ref().err().map(ToString::to_string));
            for (n, name) in [(6, "MWD pseudo-thresholds"), (7, "NN improvement"), (8, "SWAP combination")] {
                println!("criterion {n} FAIL {name}: error: {}", e.clone().unwrap_or_default());
            }
        }
    }
    passed += criterion(9, "numerical hygiene", hygiene) as usize;
    passed += criterion(10, "backend equivalence", backends) as usize;
    println!("acceptance: {passed}/10 criteria pass [{:.0}s]", start.elapsed().as_secs_f64());
}
