//! Shot-level parallelism with a sequential fallback, and per-shot seeds.
//!
//! Every shot draws from its own generator seeded by [`shot_seed`], so results
//! never depend on the worker count or on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How independent work items are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `workers == 0` uses every available core. Runs sequentially when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
    Workers(usize),
}

impl Execution {
    /// `1` is sequential, `0` is all cores.
    pub fn from_workers(workers: usize) -> Self {
        match workers {
            1 => Self::Sequential,
            0 => Self::Parallel,
            n => Self::Workers(n),
        }
    }

    /// `f(0), …, f(n - 1)` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Self::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Self::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Self::Workers(w) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                    Err(_) => (0..n).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => (0..n).map(f).collect(),
        }
    }

    /// Splits `0..n` into chunks of at most `chunk` items and maps each range.
    pub fn map_chunks<T, F>(self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let count = n.div_ceil(chunk);
        self.map(count, |i| f(i * chunk..((i + 1) * chunk).min(n)))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for shot `shot` of stream `stream` (e.g. an ε index) under `master`.
pub fn shot_seed(master: u64, stream: u64, shot: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ shot)
}

pub fn shot_rng(master: u64, stream: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(shot_seed(master, stream, shot))
}
