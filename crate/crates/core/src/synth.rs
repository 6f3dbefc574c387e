//! Synthetic benchmark data: 125 binary, 125 twenty-level categorical and
//! 250 uniform continuous features with a linear latent score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{Column, Dataset, FeatureDescriptor, LabelDescriptor, Labels, Schema};
use crate::error::{Error, Result};

pub const BINARY_FEATURES: usize = 125;
pub const CATEGORICAL_FEATURES: usize = 125;
pub const CONTINUOUS_FEATURES: usize = 250;
pub const CATEGORY_LEVELS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthTask {
    /// Score quantile bins; two classes split at the median.
    Classification {
        num_classes: u32,
    },
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub task: SynthTask,
    pub seed: u64,
    /// Label noise as a multiple of the score's standard deviation.
    pub noise_std: f64,
}

impl SynthConfig {
    pub fn new(n_samples: usize, task: SynthTask, seed: u64) -> Self {
        SynthConfig {
            n_samples,
            task,
            seed,
            noise_std: 0.1,
        }
    }
}

pub fn schema(task: SynthTask) -> Result<Schema> {
    let mut features = Vec::with_capacity(BINARY_FEATURES + CATEGORICAL_FEATURES + CONTINUOUS_FEATURES);
    features.extend((0..BINARY_FEATURES).map(|i| FeatureDescriptor::categorical(format!("bin_{i:03}"), 2)));
    features.extend(
        (0..CATEGORICAL_FEATURES).map(|i| FeatureDescriptor::categorical(format!("cat_{i:03}"), CATEGORY_LEVELS)),
    );
    features.extend((0..CONTINUOUS_FEATURES).map(|i| FeatureDescriptor::continuous(format!("num_{i:03}"))));
    let label = match task {
        SynthTask::Classification { num_classes } => LabelDescriptor::class("label", num_classes),
        SynthTask::Regression => LabelDescriptor::real("label"),
    };
    Schema::new(features, label)
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    if config.n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    if !(config.noise_std >= 0.0 && config.noise_std.is_finite()) {
        return Err(Error::invalid("noise_std must be a finite nonnegative number"));
    }
    if let SynthTask::Classification { num_classes } = config.task {
        if num_classes < 2 {
            return Err(Error::invalid("classification needs at least 2 classes"));
        }
    }
    let schema = schema(config.task)?;
    let n = config.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = BINARY_FEATURES + CATEGORICAL_FEATURES + CONTINUOUS_FEATURES;
    let weights: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
    let effects: Vec<Vec<f64>> = (0..CATEGORICAL_FEATURES)
        .map(|_| (0..CATEGORY_LEVELS).map(|_| rng.sample(StandardNormal)).collect())
        .collect();

    let mut binary = vec![vec![0u32; n]; BINARY_FEATURES];
    let mut categorical = vec![vec![0u32; n]; CATEGORICAL_FEATURES];
    let mut continuous = vec![vec![0f64; n]; CONTINUOUS_FEATURES];
    let mut score = vec![0f64; n];
    for row in 0..n {
        let mut s = 0.0;
        for (f, col) in binary.iter_mut().enumerate() {
            let b = rng.random_range(0..2u32);
            col[row] = b;
            s += weights[f] * f64::from(b);
        }
        for (f, col) in categorical.iter_mut().enumerate() {
            let c = rng.random_range(0..CATEGORY_LEVELS);
            col[row] = c;
            s += weights[BINARY_FEATURES + f] * effects[f][c as usize];
        }
        for (f, col) in continuous.iter_mut().enumerate() {
            let x: f64 = rng.random();
            col[row] = x;
            s += weights[BINARY_FEATURES + CATEGORICAL_FEATURES + f] * x;
        }
        score[row] = s;
    }

    let labels = match config.task {
        SynthTask::Regression => {
            let mean = score.iter().sum::<f64>() / n as f64;
            let var = score.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
            let sd = config.noise_std * var.sqrt();
            if sd > 0.0 {
                let noise = Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()))?;
                Labels::Real(score.iter().map(|s| s + noise.sample(&mut rng)).collect())
            } else {
                Labels::Real(score)
            }
        }
        SynthTask::Classification { num_classes } => {
            let mut sorted = score.clone();
            sorted.sort_by(f64::total_cmp);
            let cuts: Vec<f64> = (1..num_classes)
                .map(|j| quantile(&sorted, f64::from(j) / f64::from(num_classes)))
                .collect();
            Labels::Class(
                score
                    .iter()
                    .map(|s| cuts.iter().filter(|&&c| *s > c).count() as u32)
                    .collect(),
            )
        }
    };

    let columns = binary
        .into_iter()
        .chain(categorical)
        .map(Column::Categorical)
        .chain(continuous.into_iter().map(Column::Continuous))
        .collect();
    Dataset::new(schema, columns, labels)
}
