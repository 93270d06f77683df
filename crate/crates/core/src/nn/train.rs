//! Mini-batch training with Adam.

use ndarray::{Array1, Array2, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Gradients, Layer, Mlp, Workspace};
use crate::error::{Error, Result};

/// Layer widths of the decoder network.
pub const DEFAULT_DIMS: [usize; 6] = [47, 256, 512, 1024, 256, 2];

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dims: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the summed Frobenius norms of the weight matrices.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Share of records held out for validation loss.
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Restore the weights of the epoch with the lowest validation loss.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dims: DEFAULT_DIMS.to_vec(),
            batch_size: 30,
            learning_rate: 1e-4,
            lambda: 1e-5,
            epochs: 6,
            seed: 1,
            validation_fraction: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            keep_best: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!("validation fraction {} outside [0, 1)", self.validation_fraction)));
        }
        if self.learning_rate <= 0.0 || self.lambda < 0.0 {
            return Err(Error::Config("learning rate must be positive and lambda nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean loss per record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub steps: usize,
    /// Epoch whose weights were kept (0-based).
    pub kept_epoch: usize,
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    pub fn new(model: &Mlp, cfg: &TrainConfig) -> Self {
        let zeros = || {
            model
                .layers()
                .iter()
                .map(|l| Layer { weight: Array2::zeros(l.weight.raw_dim()), bias: Array1::zeros(l.bias.len()) })
                .collect::<Vec<_>>()
        };
        Self { lr: cfg.learning_rate, beta1: cfg.beta1, beta2: cfg.beta2, eps: cfg.adam_epsilon, t: 0, m: zeros(), v: zeros() }
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let (lr, eps) = (self.lr, self.eps);
        for (((p, g), m), v) in model.layers_mut().iter_mut().zip(&grads.layers).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut p.weight).and(&g.weight).and(&mut m.weight).and(&mut v.weight).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
            Zip::from(&mut p.bias).and(&g.bias).and(&mut m.bias).and(&mut v.bias).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Training examples: a feature function over sample indices plus labels.
pub struct Examples<'a> {
    pub features: &'a (dyn Fn(usize, &mut [f64]) + Sync),
    pub labels: &'a [usize],
    pub train: &'a [usize],
    pub validation: &'a [usize],
}

fn batch_matrix(ex: &Examples, idx: &[usize], width: usize) -> Array2<f64> {
    let mut x = Array2::zeros((idx.len(), width));
    for (row, &i) in x.rows_mut().into_iter().zip(idx) {
        if let Some(s) = row.into_slice() {
            (ex.features)(i, s);
        }
    }
    x
}

/// Mean cross-entropy per record over `idx`, without the regularizer.
pub fn mean_loss(model: &Mlp, ex: &Examples, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for chunk in idx.chunks(1024) {
        let x = batch_matrix(ex, chunk, model.input_dim());
        let labels: Vec<usize> = chunk.iter().map(|&i| ex.labels[i]).collect();
        total += model.loss(x.view(), &labels, 0.0)?;
    }
    Ok(total / idx.len() as f64)
}

/// Trains `model` in place. Shuffling uses a generator seeded from
/// `cfg.seed`, so a fixed seed reproduces the weights exactly.
pub fn train(model: &mut Mlp, ex: &Examples, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if ex.train.is_empty() {
        return Err(Error::Config("no training records".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_7a1e);
    let mut adam = Adam::new(model, cfg);
    let mut ws = Workspace::new(model);
    let mut order = ex.train.to_vec();
    let mut report = TrainReport::default();
    let mut best: Option<(f64, Mlp)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = batch_matrix(ex, batch, model.input_dim());
            let labels: Vec<usize> = batch.iter().map(|&i| ex.labels[i]).collect();
            model.backprop(x.view(), &labels, cfg.lambda, &mut ws)?;
            epoch_loss += ws.cross_entropy;
            adam.step(model, &ws.grads);
            report.steps += 1;
        }
        report.train_loss.push(epoch_loss / order.len() as f64);
        let val = mean_loss(model, ex, ex.validation)?;
        report.validation_loss.push(val);
        report.kept_epoch = epoch;
        if cfg.keep_best && !ex.validation.is_empty() {
            match &best {
                Some((b, _)) if *b <= val => {}
                _ => best = Some((val, model.clone())),
            }
        }
    }
    if let Some((b, m)) = best {
        report.kept_epoch = report.validation_loss.iter().position(|&v| v == b).unwrap_or(report.kept_epoch);
        *model = m;
    }
    Ok(report)
}
