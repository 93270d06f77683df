//! Logical failure rates from Monte Carlo tallies, quadratic fits and
//! pseudo-thresholds for the CNOT exRecs and the conversion.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::decoders::LogicalDecoder;
use crate::error::{Error, Result};
use crate::exrec::ExRec;
use crate::logical::LogicalPauli2;
use crate::noise::{DepolarizingConvention, NoiseParams};
use crate::sampling::{exrec_shots, ShotPlan};

/// Raw outcomes of accepted shots: how often each (key, undecoded error)
/// pair occurred. Decoders are applied afterwards, so one batch of shots
/// serves every decoder with paired records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub epsilon: f64,
    pub shots: u64,
    pub rejected: u64,
    pub outcomes: HashMap<(u64, LogicalPauli2), u64>,
}

pub fn simulate(rec: &ExRec, noise: NoiseParams, plan: &ShotPlan) -> Result<Tally> {
    let (shots, rejected) = exrec_shots(rec, noise, plan, |r| (r.key(), r.error))?;
    let mut outcomes = HashMap::new();
    for s in shots {
        *outcomes.entry(s).or_insert(0) += 1;
    }
    Ok(Tally { epsilon: noise.epsilon(), shots: plan.shots, rejected, outcomes })
}

/// Simulates every `(ε, shots)` point; point `i` draws from stream
/// `plan.stream + i`.
pub fn sweep(
    rec: &ExRec,
    convention: DepolarizingConvention,
    points: &[(f64, u64)],
    plan: &ShotPlan,
) -> Result<Vec<Tally>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(eps, shots))| {
            let p = ShotPlan { shots, stream: plan.stream + i as u64, ..*plan };
            simulate(rec, NoiseParams::new(eps, convention)?, &p)
        })
        .collect()
}

pub fn rate_points(tallies: &[Tally], decoder: &dyn LogicalDecoder) -> Vec<RatePoint> {
    tallies.iter().map(|t| RatePoint::from(&t.estimate(decoder))).collect()
}

impl Tally {
    /// Counts of the residual error after `decoder`'s correction.
    pub fn estimate(&self, decoder: &dyn LogicalDecoder) -> RateEstimate {
        let mut keys: Vec<u64> = self.outcomes.keys().map(|&(k, _)| k).collect();
        keys.sort_unstable();
        keys.dedup();
        let fixes: HashMap<u64, LogicalPauli2> = keys.iter().copied().zip(decoder.corrections(&keys)).collect();
        let mut counts = [0u64; 16];
        for (&(k, e), &n) in &self.outcomes {
            counts[(e ^ fixes[&k]).index() as usize] += n;
        }
        RateEstimate { epsilon: self.epsilon, shots: self.shots, counts }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.shots += other.shots;
        self.rejected += other.rejected;
        for (&k, &n) in &other.outcomes {
            *self.outcomes.entry(k).or_insert(0) += n;
        }
    }
}

/// Shots and residual-error counts at one ε; `counts[0]` is the number of
/// clean shots.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub epsilon: f64,
    pub shots: u64,
    pub counts: [u64; 16],
}

impl RateEstimate {
    pub fn failures(&self) -> u64 {
        self.counts[1..].iter().sum()
    }

    pub fn rate(&self) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        self.failures() as f64 / self.shots as f64
    }

    pub fn rate_of(&self, e: LogicalPauli2) -> f64 {
        self.counts[e.index() as usize] as f64 / self.shots.max(1) as f64
    }

    /// Binomial standard error `√(p(1-p)/N)`.
    pub fn std_error(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.shots.max(1) as f64).sqrt()
    }

    /// Wilson score interval at `z` standard deviations.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.failures(), self.shots, z)
    }
}

pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One fit input: ε, estimated rate and its standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub epsilon: f64,
    pub rate: f64,
    pub sigma: f64,
}

impl From<&RateEstimate> for RatePoint {
    /// σ is the 1σ Wilson half-width, which stays positive when no
    /// failures were seen.
    fn from(r: &RateEstimate) -> Self {
        let (lo, hi) = r.interval(1.0);
        Self { epsilon: r.epsilon, rate: r.rate(), sigma: ((hi - lo) / 2.0).max(f64::MIN_POSITIVE) }
    }
}

/// `P(ε) ≈ aε² + bε + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Standard errors of `(a, b, c)`; zero for a coefficient held fixed.
    pub errors: (f64, f64, f64),
}

impl QuadraticFit {
    pub fn eval(&self, eps: f64) -> f64 {
        (self.a * eps + self.b) * eps + self.c
    }

    pub fn zero() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0, errors: (0.0, 0.0, 0.0) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitModel {
    /// All three coefficients free.
    Full,
    /// `c = 0`: the rate vanishes exactly at ε = 0.
    #[default]
    ThroughOrigin,
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "origin" => Ok(Self::ThroughOrigin),
            _ => Err(Error::Config(format!("unknown fit model {s:?}, expected full or origin"))),
        }
    }
}

/// Weighted least squares with weights `1/σ²`.
pub fn fit_quadratic(points: &[RatePoint], model: FitModel) -> Result<QuadraticFit> {
    let basis: &[fn(f64) -> f64] = match model {
        FitModel::Full => &[|e| e * e, |e| e, |_| 1.0],
        FitModel::ThroughOrigin => &[|e| e * e, |e| e],
    };
    let k = basis.len();
    if points.len() < k {
        return Err(Error::DegenerateFit(format!("{} points for {k} coefficients", points.len())));
    }
    // Columns are scaled to unit size before solving; ε² and ε differ by
    // orders of magnitude.
    let scale: Vec<f64> = (0..k)
        .map(|j| points.iter().map(|p| basis[j](p.epsilon).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE))
        .collect();
    let mut m = vec![vec![0.0; k]; k];
    let mut v = vec![0.0; k];
    for p in points {
        if !(p.sigma > 0.0) {
            return Err(Error::DegenerateFit(format!("nonpositive sigma at ε = {}", p.epsilon)));
        }
        let w = 1.0 / (p.sigma * p.sigma);
        let row: Vec<f64> = (0..k).map(|j| basis[j](p.epsilon) / scale[j]).collect();
        for i in 0..k {
            v[i] += w * row[i] * p.rate;
            for j in 0..k {
                m[i][j] += w * row[i] * row[j];
            }
        }
    }
    let inv = invert(&m).ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let coef: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * v[j]).sum::<f64>() / scale[i]).collect();
    let err: Vec<f64> = (0..k).map(|i| inv[i][i].max(0.0).sqrt() / scale[i]).collect();
    Ok(match model {
        FitModel::Full => QuadraticFit { a: coef[0], b: coef[1], c: coef[2], errors: (err[0], err[1], err[2]) },
        FitModel::ThroughOrigin => QuadraticFit { a: coef[0], b: coef[1], c: 0.0, errors: (err[0], err[1], 0.0) },
    })
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().copied().chain((0..n).map(|j| (i == j) as u8 as f64)).collect())
        .collect();
    let norm = m.iter().flatten().fold(0.0f64, |x, v| x.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * norm {
            return None;
        }
        a.swap(col, piv);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Least-squares slope of `ln P` against `ln ε`, skipping zero rates.
pub fn loglog_slope(points: &[RatePoint]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.rate > 0.0 && p.epsilon > 0.0).map(|p| (p.epsilon.ln(), p.rate.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Search range and precision for crossings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootSearch {
    pub lo: f64,
    pub hi: f64,
    /// Scan points per decade before bisection.
    pub per_decade: usize,
    pub rel_tol: f64,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self { lo: 1e-8, hi: 1e-1, per_decade: 50, rel_tol: 1e-3 }
    }
}

/// Smallest ε in range where `logical(ε)` rises through `bare(ε)`.
pub fn crossing(logical: impl Fn(f64) -> f64, bare: impl Fn(f64) -> f64, search: RootSearch) -> Result<f64> {
    let g = |e: f64| logical(e) - bare(e);
    let decades = (search.hi / search.lo).log10();
    let steps = ((decades * search.per_decade as f64).ceil() as usize).max(1);
    let at = |i: usize| search.lo * (search.hi / search.lo).powf(i as f64 / steps as f64);
    let mut prev = at(0);
    if g(prev) >= 0.0 {
        return Err(Error::NoCrossing(format!("logical rate is above the bare rate already at ε = {:e}", search.lo)));
    }
    for i in 1..=steps {
        let e = at(i);
        if g(e) >= 0.0 {
            let (mut lo, mut hi) = (prev, e);
            while (hi - lo) > search.rel_tol * lo {
                let mid = (lo * hi).sqrt();
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok((lo * hi).sqrt());
        }
        prev = e;
    }
    Err(Error::NoCrossing(format!("logical rate stays below the bare rate up to ε = {:e}", search.hi)))
}

/// Which unencoded rate a CNOT is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BareLine {
    /// The bare failure rate is ε.
    #[default]
    Epsilon,
    /// The bare rate is the chance of a nontrivial two-qubit Pauli, 15ε/16.
    FifteenSixteenths,
}

impl BareLine {
    pub fn rate(self, eps: f64) -> f64 {
        match self {
            Self::Epsilon => eps,
            Self::FifteenSixteenths => 15.0 * eps / 16.0,
        }
    }
}

impl std::str::FromStr for BareLine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Self::Epsilon),
            "15/16" => Ok(Self::FifteenSixteenths),
            _ => Err(Error::Config(format!("unknown bare line {s:?}, expected epsilon or 15/16"))),
        }
    }
}

pub fn pseudo_threshold(fit: &QuadraticFit, line: BareLine, search: RootSearch) -> Result<f64> {
    crossing(|e| fit.eval(e), |e| line.rate(e), search)
}

/// `2·pA(1−pB)(1−pA) + pA(1−pB)²`.
pub fn swap_rate(pa: f64, pb: f64) -> f64 {
    2.0 * pa * (1.0 - pb) * (1.0 - pa) + pa * (1.0 - pb) * (1.0 - pb)
}

/// Probability that exactly one of the three CNOTs (A, B, A) fails.
pub fn swap_rate_symmetric(pa: f64, pb: f64) -> f64 {
    2.0 * pa * (1.0 - pb) * (1.0 - pa) + pb * (1.0 - pa) * (1.0 - pa)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SwapFormula {
    #[default]
    Printed,
    Symmetric,
}

impl SwapFormula {
    pub fn rate(self, pa: f64, pb: f64) -> f64 {
        match self {
            Self::Printed => swap_rate(pa, pb),
            Self::Symmetric => swap_rate_symmetric(pa, pb),
        }
    }
}

impl std::str::FromStr for SwapFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "symmetric" => Ok(Self::Symmetric),
            _ => Err(Error::Config(format!("unknown swap formula {s:?}, expected printed or symmetric"))),
        }
    }
}

/// Three bare SWAP CNOTs failing once: `3ε(1−ε)²`.
pub fn bare_swap_rate(eps: f64) -> f64 {
    3.0 * eps * (1.0 - eps) * (1.0 - eps)
}

pub fn swap_pseudo_threshold(
    fit_a: &QuadraticFit,
    fit_b: &QuadraticFit,
    formula: SwapFormula,
    search: RootSearch,
) -> Result<f64> {
    let clamp = |p: f64| p.clamp(0.0, 1.0);
    crossing(|e| formula.rate(clamp(fit_a.eval(e)), clamp(fit_b.eval(e))), bare_swap_rate, search)
}

/// Header for [`results_row`].
pub fn results_header() -> String {
    let labels: Vec<String> = LogicalPauli2::all().skip(1).map(|e| format!("n_{}", e.label())).collect();
    format!("circuit,decoder,epsilon,shots,rejected,{},failures,rate,ci_low,ci_high", labels.join(","))
}

/// One comma-separated results line; the CI is the 95% Wilson interval.
pub fn results_row(circuit: &str, decoder: &str, r: &RateEstimate, rejected: u64) -> String {
    let counts: Vec<String> = r.counts[1..].iter().map(u64::to_string).collect();
    let (lo, hi) = r.interval(1.96);
    format!(
        "{circuit},{decoder},{:e},{},{rejected},{},{},{:e},{:e},{:e}",
        r.epsilon,
        r.shots,
        counts.join(","),
        r.failures(),
        r.rate(),
        lo,
        hi
    )
}

/// A parsed [`results_row`] line.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub circuit: String,
    pub decoder: String,
    pub estimate: RateEstimate,
    pub rejected: u64,
}

/// Reads rows written by [`results_row`]. Lines starting with `#` and the
/// column header are skipped.
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("circuit,") {
            continue;
        }
        let bad = |what: &str| Error::parse(n + 1, what);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 + 15 + 4 {
            return Err(bad(&format!("expected 24 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(&format!("bad count {s:?}")));
        let epsilon: f64 = f[2].parse().map_err(|_| bad("bad epsilon"))?;
        let shots = num(f[3])?;
        let mut counts = [0u64; 16];
        for (i, c) in f[5..20].iter().enumerate() {
            counts[i + 1] = num(c)?;
        }
        let failures: u64 = counts.iter().sum();
        if failures > shots || num(f[20])? != failures {
            return Err(bad("failure counts do not add up"));
        }
        counts[0] = shots - failures;
        rows.push(ResultRow {
            circuit: f[0].to_string(),
            decoder: f[1].to_string(),
            estimate: RateEstimate { epsilon, shots, counts },
            rejected: num(f[4])?,
        });
    }
    Ok(rows)
}

/// `key=value` lines for a fit and its pseudo-threshold.
pub fn fit_report(prefix: &str, fit: &QuadraticFit, threshold: &Result<f64>, reference: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{prefix}.a={:e}", fit.a);
    let _ = writeln!(s, "{prefix}.b={:e}", fit.b);
    let _ = writeln!(s, "{prefix}.c={:e}", fit.c);
    let _ = writeln!(s, "{prefix}.a_err={:e}", fit.errors.0);
    let _ = writeln!(s, "{prefix}.b_err={:e}", fit.errors.1);
    let _ = writeln!(s, "{prefix}.c_err={:e}", fit.errors.2);
    match threshold {
        Ok(t) => {
            let _ = writeln!(s, "{prefix}.threshold={t:e}");
            if let Some(r) = reference {
                let _ = writeln!(s, "{prefix}.reference={r:e}");
                let _ = writeln!(s, "{prefix}.ratio_to_reference={:.4}", t / r);
            }
        }
        Err(e) => {
            let _ = writeln!(s, "{prefix}.threshold=none");
            let _ = writeln!(s, "{prefix}.threshold_note={e}");
            if let Some(r) = reference {
                let _ = writeln!(s, "{prefix}.reference={r:e}");
            }
        }
    }
    s
}
