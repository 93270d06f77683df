//! Fully connected ReLU network with a softmax output.

use std::io::{BufRead, Write};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &str = "pftconv-mlp";
const CHECKPOINT_VERSION: u32 = 1;

/// One affine layer. `weight` is `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Gradients, laid out like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Buffers reused across backpropagation calls.
#[derive(Clone, Debug)]
pub struct Workspace {
    acts: Vec<Array2<f64>>,
    deltas: Vec<Array2<f64>>,
    pub grads: Gradients,
    /// Cross-entropy part of the last loss.
    pub cross_entropy: f64,
}

impl Workspace {
    pub fn new(model: &Mlp) -> Self {
        let grads = model
            .layers
            .iter()
            .map(|l| Layer { weight: Array2::zeros(l.weight.raw_dim()), bias: Array1::zeros(l.bias.len()) })
            .collect();
        Self { acts: Vec::new(), deltas: Vec::new(), grads: Gradients { layers: grads }, cross_entropy: 0.0 }
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Config(format!("invalid layer dims {dims:?}")));
    }
    Ok(())
}

/// Row-wise log-softmax.
fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

impl Mlp {
    /// Weights uniform in `±1/√fan_in`, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        check_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weight: Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-bound..bound)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| Layer { weight: Array2::zeros((w[1], w[0])), bias: Array1::zeros(w[1]) })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::DimensionMismatch { left: l.bias.len(), right: l.outputs() });
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(Error::DimensionMismatch { left: layers[i - 1].outputs(), right: l.inputs() });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs()).chain(self.layers.iter().map(Layer::outputs)).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { left: x.ncols(), right: self.input_dim() });
        }
        Ok(())
    }

    /// Pre-activations of every layer; the last entry holds the logits.
    fn forward_all(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = match i {
                0 => x.dot(&l.weight.t()),
                _ => zs[i - 1].mapv(|v| v.max(0.0)).dot(&l.weight.t()),
            };
            z += &l.bias;
            zs.push(z);
        }
        zs
    }

    /// Logits for a batch (one row per sample).
    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        Ok(self.forward_all(x).pop().unwrap_or_default())
    }

    /// Softmax probabilities for a batch.
    pub fn probabilities(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(log_softmax(&self.logits(x)?).mapv(f64::exp))
    }

    /// Probabilities for a single input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Config(e.to_string()))?;
        Ok(self.probabilities(view)?.row(0).to_vec())
    }

    /// Argmax class per row; ties go to the lower index.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok(logits.rows().into_iter().map(|r| argmax(r.as_slice().unwrap_or(&r.to_vec()))).collect())
    }

    /// `λ Σ ‖W‖_F` over weight matrices.
    pub fn regularizer(&self, lambda: f64) -> f64 {
        lambda * self.layers.iter().map(|l| frobenius(&l.weight)).sum::<f64>()
    }

    /// Summed cross-entropy over the batch plus the regularizer.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[usize], lambda: f64) -> Result<f64> {
        self.check_batch(&x, labels)?;
        let lp = log_softmax(&self.logits(x)?);
        let ce: f64 = labels.iter().enumerate().map(|(i, &l)| -lp[[i, l]]).sum();
        Ok(ce + self.regularizer(lambda))
    }

    fn check_batch(&self, x: &ArrayView2<f64>, labels: &[usize]) -> Result<()> {
        self.check_input(x)?;
        if x.nrows() != labels.len() || x.nrows() == 0 {
            return Err(Error::DimensionMismatch { left: x.nrows(), right: labels.len() });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.output_dim()) {
            return Err(Error::Config(format!("label {l} out of range")));
        }
        Ok(())
    }

    /// Loss and its gradient by backpropagation.
    pub fn gradients(&self, x: ArrayView2<f64>, labels: &[usize], lambda: f64) -> Result<(f64, Gradients)> {
        let mut ws = Workspace::new(self);
        let loss = self.backprop(x, labels, lambda, &mut ws)?;
        Ok((loss, ws.grads))
    }

    /// [`Mlp::gradients`] into reused buffers; the result is left in
    /// `ws.grads`.
    pub fn backprop(&self, x: ArrayView2<f64>, labels: &[usize], lambda: f64, ws: &mut Workspace) -> Result<f64> {
        self.check_batch(&x, labels)?;
        let b = x.nrows();
        let n = self.layers.len();
        if ws.acts.len() != n || ws.acts[0].nrows() != b {
            ws.acts = self.layers.iter().map(|l| Array2::zeros((b, l.outputs()))).collect();
            ws.deltas = ws.acts.clone();
        }
        for k in 0..n {
            let (done, rest) = ws.acts.split_at_mut(k);
            let out = &mut rest[0];
            out.assign(&self.layers[k].bias.broadcast((b, self.layers[k].outputs())).expect("bias row"));
            let input = if k == 0 { x } else { done[k - 1].view() };
            general_mat_mul(1.0, &input, &self.layers[k].weight.t(), 1.0, out);
            if k + 1 < n {
                out.mapv_inplace(|v| v.max(0.0));
            }
        }
        let lp = log_softmax(&ws.acts[n - 1]);
        let ce: f64 = labels.iter().enumerate().map(|(i, &l)| -lp[[i, l]]).sum();
        // d(loss)/d(logits) = softmax - onehot
        ws.deltas[n - 1].assign(&lp.mapv(f64::exp));
        for (i, &l) in labels.iter().enumerate() {
            ws.deltas[n - 1][[i, l]] -= 1.0;
        }
        let mut reg = 0.0;
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let (lower, upper) = ws.deltas.split_at_mut(k);
            let delta = &upper[0];
            let g = &mut ws.grads.layers[k];
            let input = if k == 0 { x } else { ws.acts[k - 1].view() };
            general_mat_mul(1.0, &delta.t(), &input, 0.0, &mut g.weight);
            let norm = frobenius(&layer.weight);
            reg += norm;
            if lambda != 0.0 && norm > 0.0 {
                g.weight.scaled_add(lambda / norm, &layer.weight);
            }
            g.bias.assign(&delta.sum_axis(Axis(0)));
            if k > 0 {
                let prev = &mut lower[k - 1];
                general_mat_mul(1.0, delta, &layer.weight, 0.0, prev);
                // ReLU derivative: hidden activations are zero exactly where
                // the pre-activation was not positive.
                prev.zip_mut_with(&ws.acts[k - 1], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
        }
        ws.cross_entropy = ce;
        Ok(ce + lambda * reg)
    }

    /// Text checkpoint: a header, the dims, then each layer's weights (row
    /// by row, `out × in`) and biases. Floats are written with round-trip
    /// precision.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}")?;
        let dims: Vec<String> = self.dims().iter().map(usize::to_string).collect();
        writeln!(w, "dims {}", dims.join(" "))?;
        for (i, l) in self.layers.iter().enumerate() {
            writeln!(w, "layer {i} weight")?;
            for row in l.weight.rows() {
                let vals: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                writeln!(w, "{}", vals.join(" "))?;
            }
            writeln!(w, "layer {i} bias")?;
            let vals: Vec<String> = l.bias.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", vals.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
        let mut next = || -> Result<(usize, String)> {
            lines.next().ok_or_else(|| Error::Format("checkpoint ends early".into()))?.map_err(Error::from)
        };
        let (n, head) = next()?;
        let version = head
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::parse(n, "not a model checkpoint"))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let (n, dims_line) = next()?;
        let dims: Vec<usize> = dims_line
            .strip_prefix("dims ")
            .ok_or_else(|| Error::parse(n, "expected dims"))?
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| Error::parse(n, format!("bad dim {d:?}"))))
            .collect::<Result<_>>()?;
        check_dims(&dims)?;
        let floats = |n: usize, line: &str, len: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(n, format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if v.len() != len {
                return Err(Error::parse(n, format!("expected {len} values, found {}", v.len())));
            }
            Ok(v)
        };
        let mut layers = Vec::new();
        for (i, w) in dims.windows(2).enumerate() {
            let (n, tag) = next()?;
            if tag != format!("layer {i} weight") {
                return Err(Error::parse(n, format!("expected layer {i} weight")));
            }
            let mut weight = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[1] {
                let (n, line) = next()?;
                weight.extend(floats(n, &line, w[0])?);
            }
            let (n, tag) = next()?;
            if tag != format!("layer {i} bias") {
                return Err(Error::parse(n, format!("expected layer {i} bias")));
            }
            let (n, line) = next()?;
            let bias = floats(n, &line, w[1])?;
            layers.push(Layer {
                weight: Array2::from_shape_vec((w[1], w[0]), weight).map_err(|e| Error::Format(e.to_string()))?,
                bias: Array1::from(bias),
            });
        }
        Self::from_layers(layers)
    }
}

fn frobenius(w: &Array2<f64>) -> f64 {
    w.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest relative gap between `gradients` and central differences of
/// `loss` with step `h`, over every parameter.
pub fn finite_difference_error(model: &Mlp, x: ArrayView2<f64>, labels: &[usize], lambda: f64, h: f64) -> Result<f64> {
    let (_, g) = model.gradients(x, labels, lambda)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-7);
    for k in 0..model.layers.len() {
        for idx in 0..model.layers[k].weight.len() {
            let at = |m: &mut Mlp, v: f64| {
                let w = m.layers[k].weight.as_slice_mut().expect("standard layout");
                w[idx] = v;
            };
            let w0 = model.layers[k].weight.as_slice().expect("standard layout")[idx];
            at(&mut probe, w0 + h);
            let up = probe.loss(x, labels, lambda)?;
            at(&mut probe, w0 - h);
            let down = probe.loss(x, labels, lambda)?;
            at(&mut probe, w0);
            let analytic = g.layers[k].weight.as_slice().expect("standard layout")[idx];
            worst = worst.max(rel(analytic, (up - down) / (2.0 * h)));
        }
        for j in 0..model.layers[k].bias.len() {
            let b0 = model.layers[k].bias[j];
            probe.layers[k].bias[j] = b0 + h;
            let up = probe.loss(x, labels, lambda)?;
            probe.layers[k].bias[j] = b0 - h;
            let down = probe.loss(x, labels, lambda)?;
            probe.layers[k].bias[j] = b0;
            worst = worst.max(rel(g.layers[k].bias[j], (up - down) / (2.0 * h)));
        }
    }
    Ok(worst)
}

/// Index of the largest value, first one on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
