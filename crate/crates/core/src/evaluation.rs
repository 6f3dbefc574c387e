//! Error metrics and the significance-threshold sweep.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::baseline::greedy_tree;
use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::graph::{DsModel, Prediction};
use crate::synth::{generate, SynthConfig, SynthTask};
use crate::training::{train, TrainConfig};

/// Grid used by `tune_plim` when none is given.
pub const DEFAULT_GRID: [f64; 10] = [1e-4, 5e-4, 1e-3, 5e-3, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5];

fn check_lengths(predictions: &[f64], labels: &[f64]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no labels to score"));
    }
    Ok(())
}

/// Percentage of mismatched class codes.
pub fn accuracy_error(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(predictions, labels)?;
    let wrong = predictions.iter().zip(labels).filter(|(p, y)| p != y).count();
    Ok(100.0 * wrong as f64 / labels.len() as f64)
}

/// Weighted absolute percentage error, `100 * sum|y - p| / |sum y|`.
pub fn wape(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(predictions, labels)?;
    let denom = labels.iter().sum::<f64>().abs();
    if denom == 0.0 {
        return Err(Error::invalid("WAPE is undefined when the labels sum to zero"));
    }
    let abs: f64 = predictions.iter().zip(labels).map(|(p, y)| (y - p).abs()).sum();
    Ok(100.0 * abs / denom)
}

/// Accuracy error for class labels, WAPE for real labels.
pub fn task_error(predictions: &[f64], data: &Dataset) -> Result<f64> {
    match data.num_classes() {
        Some(_) => accuracy_error(predictions, data.label_values()),
        None => wape(predictions, data.label_values()),
    }
}

pub fn as_values(predictions: &[Prediction]) -> Vec<f64> {
    predictions.iter().map(|p| p.as_f64()).collect()
}

/// Validation error of a model on a labelled dataset.
pub fn model_error(model: &DsModel, data: &Dataset) -> Result<f64> {
    let predictions = model.predict_batch(data.features())?;
    task_error(&as_values(&predictions), data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<(f64, f64)>,
    pub best_p_lim: f64,
    pub best_error: f64,
}

impl SweepResult {
    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p_lim", "error"])?;
        for (p, e) in &self.grid {
            w.write_record([p.to_string(), e.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("sweep", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }
}

fn grid_minimum(curve: &[(f64, f64)]) -> (f64, f64) {
    let mut best = curve[0];
    for &(p, e) in &curve[1..] {
        if e < best.1 || (e == best.1 && p < best.0) {
            best = (p, e);
        }
    }
    best
}

/// Trains one model per grid value and keeps the lowest validation error
/// (ties to the smaller threshold).
pub fn tune_plim(train_set: &Dataset, valid: &Dataset, grid: &[f64], base: TrainConfig) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty p_lim grid"));
    }
    if let Some(bad) = grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid(format!("grid value {bad} outside (0, 1)")));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &p_lim in grid {
        let (model, _) = train(train_set, TrainConfig { p_lim, ..base })?;
        let error = model_error(&model, valid)?;
        log::info!("p_lim {p_lim}: error {error:.4}");
        curve.push((p_lim, error));
    }
    let best = grid_minimum(&curve);
    Ok(SweepResult {
        grid: curve,
        best_p_lim: best.0,
        best_error: best.1,
    })
}

/// Synthetic DS-versus-tree comparison: per seed, generate data, hold out a
/// test set, tune `p_lim` on a validation split of the rest, and score both
/// models on the test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: SynthTask,
    pub n_samples: usize,
    pub noise_std: f64,
    pub seeds: Vec<u64>,
    pub grid: Vec<f64>,
    pub base: TrainConfig,
    pub tree_depth: usize,
    /// Fraction held out for testing, and again for validation.
    pub holdout: f64,
}

impl ExperimentConfig {
    pub fn new(task: SynthTask, n_samples: usize, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            task,
            n_samples,
            noise_std: 0.1,
            seeds,
            grid: DEFAULT_GRID.iter().copied().filter(|&p| p <= 0.01).collect(),
            base: TrainConfig::default(),
            tree_depth: 5,
            holdout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub seed: u64,
    pub model: String,
    pub p_lim: Option<f64>,
    pub error: f64,
    pub depth: usize,
    pub nodes: usize,
    pub leaves: usize,
}

impl ExperimentRow {
    fn new(seed: u64, name: &str, p_lim: Option<f64>, model: &DsModel, error: f64) -> Self {
        ExperimentRow {
            seed,
            model: name.into(),
            p_lim,
            error,
            depth: model.depth(),
            nodes: model.nodes.len(),
            leaves: model.leaves().count(),
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::with_capacity(2 * config.seeds.len());
    for &seed in &config.seeds {
        let data = generate(&SynthConfig {
            noise_std: config.noise_std,
            ..SynthConfig::new(config.n_samples, config.task, seed)
        })?;
        let (rest, test) = split_indices(data.row_count(), config.holdout, seed)?;
        let (fit, valid) = split_indices(rest.len(), config.holdout, seed.wrapping_add(1))?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| rest[i]).collect::<Vec<_>>();
        let (fit, valid, test) = (data.subset(&pick(&fit)), data.subset(&pick(&valid)), data.subset(&test));

        let base = TrainConfig { seed, ..config.base };
        let sweep = tune_plim(&fit, &valid, &config.grid, base)?;
        let (ds, _) = train(
            &fit,
            TrainConfig {
                p_lim: sweep.best_p_lim,
                ..base
            },
        )?;
        let tree = greedy_tree(&fit, config.tree_depth)?;
        let ds_row = ExperimentRow::new(seed, "ds", Some(sweep.best_p_lim), &ds, model_error(&ds, &test)?);
        let tree_row = ExperimentRow::new(seed, "tree", None, &tree, model_error(&tree, &test)?);
        log::info!("seed {seed}: ds {:.3}, tree {:.3}", ds_row.error, tree_row.error);
        rows.push(ds_row);
        rows.push(tree_row);
    }
    Ok(rows)
}

pub fn write_experiment_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("experiment", e))?;
    Ok(())
}
