//! Neural-network decoder: syndrome datasets, the MLP and its training.

mod dataset;
mod decoder;
mod mlp;
mod train;

pub use dataset::{
    default_schedule, generate_dataset, log_grid, Dataset, DatasetConfig, SyndromeRecord, DEFAULT_SHOTS_PER_EPSILON,
};
pub use decoder::{key_features, LabelSet, NnDecoder};
pub use mlp::{argmax, finite_difference_error, Gradients, Layer, Mlp, Workspace};
pub use train::{mean_loss, train, Adam, Examples, TrainConfig, TrainReport, DEFAULT_DIMS};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Trains one freshly initialized head per label bit. Head `h` uses seed
/// `cfg.seed + h`.
pub fn train_decoder(data: &Dataset, cfg: &TrainConfig) -> Result<(NnDecoder, Vec<TrainReport>)> {
    if data.records.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let (train_idx, val_idx) = data.split(cfg.validation_fraction, cfg.seed);
    let keys = data.keys();
    let features = |i: usize, out: &mut [f64]| key_features(keys[i], out);
    let mut heads = Vec::new();
    let mut reports = Vec::new();
    for h in 0..data.labels.heads() {
        let labels = data.head_labels(h);
        let head_cfg = TrainConfig { seed: cfg.seed.wrapping_add(h as u64), ..cfg.clone() };
        let mut model = Mlp::new(&cfg.dims, &mut ChaCha8Rng::seed_from_u64(head_cfg.seed))?;
        let ex = Examples { features: &features, labels: &labels, train: &train_idx, validation: &val_idx };
        reports.push(train(&mut model, &ex, &head_cfg)?);
        heads.push(model);
    }
    Ok((NnDecoder::new(data.orientation, data.labels, heads)?, reports))
}
