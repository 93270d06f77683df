//! Syndrome records for training, their generation and text format.

use std::io::{BufRead, Write};

use super::decoder::LabelSet;
use crate::ec::layout;
use crate::error::{Error, Result};
use crate::exrec::{pack_key, unpack_key, ExRec, E1_BITS, LEC_BITS, TEC_BITS};
use crate::noise::{DepolarizingConvention, NoiseParams};
use crate::parallel::{shot_seed, Execution};
use crate::pieceable::Orientation;
use crate::sampling::{exrec_shots, BackendKind, ShotPlan};

const FORMAT_LINE: &str = "# pftconv dataset 1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyndromeRecord {
    /// `s_lec | s1 << 20 | s2 << 27`.
    pub key: u64,
    /// Bit `h` is the label of head `h`.
    pub labels: u8,
    pub epsilon: f64,
}

impl SyndromeRecord {
    pub fn label(&self, head: usize) -> usize {
        (self.labels >> head & 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub orientation: Orientation,
    pub labels: LabelSet,
    /// `key=value` provenance written into the header.
    pub meta: Vec<(String, String)>,
    pub records: Vec<SyndromeRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub epsilons: Vec<f64>,
    pub shots_per_epsilon: u64,
    pub seed: u64,
    pub labels: LabelSet,
    pub convention: DepolarizingConvention,
    pub exec: Execution,
}

/// Shots per grid point of the default training schedule.
pub const DEFAULT_SHOTS_PER_EPSILON: u64 = 100_000;

/// Physical error rates of the default training schedule.
pub fn default_schedule() -> Vec<f64> {
    log_grid(1e-4, 1e-3, 4)
}

/// `n` points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                i if i == n - 1 => hi,
                i => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect(),
    }
}

/// Noisy exRec shots at each ε in turn; records whose 47 syndrome bits are
/// all zero are dropped. Labels are the logical error left by the TEC.
pub fn generate_dataset(rec: &ExRec, cfg: &DatasetConfig) -> Result<Dataset> {
    let o = rec.circuit.orientation;
    let mut records = Vec::new();
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let noise = NoiseParams::new(eps, cfg.convention)?;
        let plan = ShotPlan {
            shots: cfg.shots_per_epsilon,
            seed: cfg.seed,
            stream: i as u64,
            backend: BackendKind::Frame,
            exec: cfg.exec,
        };
        let (shots, _) = exrec_shots(rec, noise, &plan, |r| (r.key(), cfg.labels.encode(r.error, o)))?;
        records.extend(
            shots.into_iter().filter(|&(k, _)| k != 0).map(|(key, labels)| SyndromeRecord { key, labels, epsilon: eps }),
        );
    }
    let grid: Vec<String> = cfg.epsilons.iter().map(|e| format!("{e:e}")).collect();
    let meta = vec![
        ("circuit".into(), o.name().into()),
        ("labels".into(), cfg.labels.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("shots_per_epsilon".into(), cfg.shots_per_epsilon.to_string()),
        ("epsilons".into(), grid.join(",")),
        ("convention".into(), cfg.convention.to_string()),
        ("lec_mode".into(), rec.lec_mode.to_string()),
        ("rounds".into(), rec.tec.rounds.to_string()),
    ];
    Ok(Dataset { orientation: o, labels: cfg.labels, meta, records })
}

fn bit_string(v: u32, width: usize) -> String {
    (0..width).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, width: usize, line: usize) -> Result<u32> {
    if s.len() != width {
        return Err(Error::parse(line, format!("expected {width} bits, found {s:?}")));
    }
    s.bytes().enumerate().try_fold(0u32, |acc, (i, b)| match b {
        b'0' => Ok(acc),
        b'1' => Ok(acc | 1 << i),
        _ => Err(Error::parse(line, format!("bad bit string {s:?}"))),
    })
}

fn column_line(labels: LabelSet) -> String {
    format!("s_lec({LEC_BITS}b);s1({E1_BITS}b);s2({TEC_BITS}b);{};epsilon", labels.names().join(";"))
}

impl Dataset {
    /// Header, then one `;`-separated record per line. Bit strings list
    /// generator 0 first; the header names each measured operator.
    pub fn write<W: Write>(&self, rec: &ExRec, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_LINE}")?;
        let meta: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(w, "# {}", meta.join(" "))?;
        for (name, gadget) in [("s_lec", &rec.lec), ("s1", &rec.circuit.e1), ("s2", &rec.tec)] {
            let ops: Vec<String> =
                gadget.measured_operators(layout::REGISTER).iter().map(|p| p.sparse_string()).collect();
            writeln!(w, "# {name} order: {}", ops.join(", "))?;
        }
        writeln!(w, "{}", column_line(self.labels))?;
        let heads = self.labels.heads();
        for r in &self.records {
            let (a, b, c) = unpack_key(r.key);
            let labels: Vec<String> = (0..heads).map(|h| r.label(h).to_string()).collect();
            writeln!(
                w,
                "{};{};{};{};{}",
                bit_string(a, LEC_BITS),
                bit_string(b, E1_BITS),
                bit_string(c, TEC_BITS),
                labels.join(";"),
                r.epsilon
            )?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = Vec::new();
        let mut labels = None;
        let mut records = Vec::new();
        let mut seen_format = false;
        for (i, line) in r.lines().enumerate() {
            let n = i + 1;
            let line = line?;
            if let Some(comment) = line.strip_prefix('#') {
                if line == FORMAT_LINE {
                    seen_format = true;
                } else if !comment.contains(" order: ") {
                    for f in comment.split_whitespace() {
                        if let Some((k, v)) = f.split_once('=') {
                            meta.push((k.to_string(), v.to_string()));
                        }
                    }
                }
                continue;
            }
            if !seen_format {
                return Err(Error::Format("missing dataset format line".into()));
            }
            let Some(set) = labels else {
                let set = [LabelSet::Pair, LabelSet::Full]
                    .into_iter()
                    .find(|s| column_line(*s) == line)
                    .ok_or_else(|| Error::parse(n, format!("unexpected column header {line:?}")))?;
                labels = Some(set);
                continue;
            };
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(';').collect();
            if fields.len() != 4 + set.heads() {
                return Err(Error::parse(n, format!("expected {} fields", 4 + set.heads())));
            }
            let key = pack_key(
                parse_bits(fields[0], LEC_BITS, n)?,
                parse_bits(fields[1], E1_BITS, n)?,
                parse_bits(fields[2], TEC_BITS, n)?,
            );
            let mut bits = 0u8;
            for h in 0..set.heads() {
                match fields[3 + h] {
                    "0" => {}
                    "1" => bits |= 1 << h,
                    other => return Err(Error::parse(n, format!("bad label {other:?}"))),
                }
            }
            let epsilon: f64 = fields[3 + set.heads()]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad epsilon {:?}", fields[3 + set.heads()])))?;
            records.push(SyndromeRecord { key, labels: bits, epsilon });
        }
        let labels = labels.ok_or_else(|| Error::Format("missing column header".into()))?;
        let orientation = meta
            .iter()
            .find(|(k, _)| k == "circuit")
            .ok_or_else(|| Error::Format("header lacks circuit=".into()))?
            .1
            .parse()?;
        Ok(Self { orientation, labels, meta, records })
    }

    /// Deterministic split by hashed record position: `(train, validation)`.
    pub fn split(&self, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let cut = (validation_fraction * u64::MAX as f64) as u64;
        (0..self.records.len()).partition(|&i| shot_seed(seed, u64::MAX, i as u64) >= cut)
    }

    pub fn head_labels(&self, head: usize) -> Vec<usize> {
        self.records.iter().map(|r| r.label(head)).collect()
    }

    pub fn keys(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.key).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pieceable::build_ccnot_a;

    fn cfg(eps: Vec<f64>) -> DatasetConfig {
        DatasetConfig {
            epsilons: eps,
            shots_per_epsilon: 400,
            seed: 3,
            labels: LabelSet::Full,
            convention: DepolarizingConvention::QuarterEps,
            exec: Execution::Sequential,
        }
    }

    #[test]
    fn noiseless_dataset_is_empty() {
        let d = generate_dataset(&ExRec::new(build_ccnot_a()), &cfg(vec![0.0])).unwrap();
        assert!(d.records.is_empty());
    }

    #[test]
    fn generation_is_deterministic_and_round_trips() {
        let rec = ExRec::new(build_ccnot_a());
        let c = cfg(vec![1e-3, 5e-3]);
        let d = generate_dataset(&rec, &c).unwrap();
        assert!(!d.records.is_empty());
        assert!(d.records.iter().all(|r| r.key != 0));
        let par = generate_dataset(&rec, &DatasetConfig { exec: Execution::Workers(2), ..c }).unwrap();
        assert_eq!(par, d);
        let mut buf = Vec::new();
        d.write(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("s_lec(20b);s1(7b);s2(20b);xc;zc;xt;zt;epsilon"));
        assert!(text.contains("# s1 order: "));
        let back = Dataset::read(buf.as_slice()).unwrap();
        assert_eq!(back.records, d.records);
        assert_eq!(back.orientation, Orientation::A);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let head = format!("{FORMAT_LINE}\n# circuit=A\n{}\n", column_line(LabelSet::Pair));
        let good = format!("{head}{};{};{};1;0;0.001\n", "0".repeat(19) + "1", "0".repeat(7), "0".repeat(20));
        let d = Dataset::read(good.as_bytes()).unwrap();
        assert_eq!(d.records[0].key, 1 << 19);
        assert_eq!(d.records[0].labels, 1);
        for bad in ["0;0;0;1;0;0.1", &good.lines().last().unwrap().replace(";1;0;", ";2;0;")] {
            assert!(Dataset::read(format!("{head}{bad}\n").as_bytes()).is_err());
        }
        assert!(Dataset::read("s_lec;".as_bytes()).is_err());
    }

    #[test]
    fn split_is_stable() {
        let d = Dataset {
            orientation: Orientation::A,
            labels: LabelSet::Pair,
            meta: vec![],
            records: vec![SyndromeRecord { key: 1, labels: 0, epsilon: 0.1 }; 2000],
        };
        let (t, v) = d.split(0.1, 5);
        assert_eq!(t.len() + v.len(), 2000);
        assert!((150..250).contains(&v.len()), "{}", v.len());
        assert_eq!(d.split(0.1, 5), (t, v));
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-4, 1e-2, 3);
        assert_eq!((g[0], g[2]), (1e-4, 1e-2));
        assert!((g[1] / 1e-3 - 1.0).abs() < 1e-12);
    }
}
