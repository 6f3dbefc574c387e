//! Bagging, random-subspace and forest-style ensembles of Decision Streams.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::task_of;
use crate::data::{Dataset, FeatureTable};
use crate::error::{Error, Result};
use crate::graph::io::ModelDoc;
use crate::graph::{DsModel, Prediction, Task};
use crate::training::{train, TrainConfig};

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Bootstrap resamples, all features.
    Bagging,
    /// Full data, a random feature subset per member.
    Subspace,
    /// Bootstrap resamples and random feature subsets.
    Forest,
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bagging" => Ok(EnsembleKind::Bagging),
            "subspace" => Ok(EnsembleKind::Subspace),
            "forest" => Ok(EnsembleKind::Forest),
            other => Err(Error::invalid(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_members: usize,
    pub bootstrap: bool,
    pub feature_fraction: f64,
    pub base: TrainConfig,
    pub seed: u64,
}

impl EnsembleConfig {
    /// Preset for `kind`; subspace presets use `sqrt(F)/F` features for
    /// classification and a third of them for regression.
    pub fn preset(kind: EnsembleKind, n_members: usize, data: &Dataset, base: TrainConfig, seed: u64) -> Self {
        let f = data.num_features() as f64;
        let subspace = match task_of(data) {
            Task::Classification { .. } => f.sqrt() / f,
            Task::Regression => 1.0 / 3.0,
        };
        let (bootstrap, feature_fraction) = match kind {
            EnsembleKind::Bagging => (true, 1.0),
            EnsembleKind::Subspace => (false, subspace),
            EnsembleKind::Forest => (true, subspace),
        };
        EnsembleConfig {
            n_members,
            bootstrap,
            feature_fraction,
            base,
            seed,
        }
    }

    /// Number of features each member sees.
    pub fn features_per_member(&self, num_features: usize) -> Result<usize> {
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        let k = (self.feature_fraction * num_features as f64).round() as usize;
        if k == 0 {
            return Err(Error::invalid(format!(
                "feature_fraction {} of {num_features} features rounds to zero",
                self.feature_fraction
            )));
        }
        Ok(k.min(num_features))
    }

    /// Seed of member `i`: word `i` of the ChaCha8 stream keyed by the
    /// ensemble seed, so any member can be rebuilt on its own.
    pub fn member_seed(&self, i: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng.next_u64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Most frequent class, ties to the lowest code.
    MajorityVote,
    Mean,
}

impl Aggregation {
    pub fn combine(self, votes: &[Prediction]) -> Result<Prediction> {
        if votes.is_empty() {
            return Err(Error::invalid("no member predictions to aggregate"));
        }
        match self {
            Aggregation::Mean => Ok(Prediction::Value(
                votes.iter().map(|p| p.as_f64()).sum::<f64>() / votes.len() as f64,
            )),
            Aggregation::MajorityVote => {
                let mut codes: Vec<u32> = votes
                    .iter()
                    .map(|p| match p {
                        Prediction::Class(c) => Ok(*c),
                        Prediction::Value(_) => Err(Error::invalid("majority vote over real predictions")),
                    })
                    .collect::<Result<_>>()?;
                codes.sort_unstable();
                let mut best = (codes[0], 0usize);
                let mut i = 0;
                while i < codes.len() {
                    let j = codes[i..]
                        .iter()
                        .position(|&c| c != codes[i])
                        .map_or(codes.len(), |k| i + k);
                    if j - i > best.1 {
                        best = (codes[i], j - i);
                    }
                    i = j;
                }
                Ok(Prediction::Class(best.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    /// Indices into the full feature table, ascending.
    pub features: Vec<usize>,
    pub model: DsModel,
}

impl Member {
    fn project(&self, row: &[f64]) -> Vec<f64> {
        self.features.iter().map(|&f| row[f]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub aggregation: Aggregation,
    pub task: Task,
    pub num_features: usize,
    pub schema_fingerprint: String,
    pub members: Vec<Member>,
}

fn train_member(data: &Dataset, config: &EnsembleConfig, k: usize, i: usize) -> Result<Member> {
    let seed = config.member_seed(i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.row_count();
    let mut features = sample(&mut rng, data.num_features(), k).into_vec();
    features.sort_unstable();
    let rows: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let view = data.subset(&rows).select_features(&features);
    let (model, _) = train(&view, TrainConfig { seed, ..config.base })?;
    log::debug!("member {i}: {} nodes, depth {}", model.nodes.len(), model.depth());
    Ok(Member { features, model })
}

/// Trains every member independently (in parallel) from its own seed.
pub fn train_ensemble(data: &Dataset, config: EnsembleConfig) -> Result<Ensemble> {
    if data.row_count() == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if config.n_members == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    config.base.validate()?;
    let k = config.features_per_member(data.num_features())?;
    let members = (0..config.n_members)
        .into_par_iter()
        .map(|i| train_member(data, &config, k, i))
        .collect::<Result<Vec<_>>>()?;
    let task = task_of(data);
    Ok(Ensemble {
        config,
        aggregation: match task {
            Task::Classification { .. } => Aggregation::MajorityVote,
            Task::Regression => Aggregation::Mean,
        },
        task,
        num_features: data.num_features(),
        schema_fingerprint: data.schema().fingerprint(),
        members,
    })
}

#[derive(Serialize, Deserialize)]
struct MemberDoc {
    features: Vec<usize>,
    model: ModelDoc,
}

#[derive(Serialize, Deserialize)]
struct EnsembleDoc {
    format_version: u32,
    config: EnsembleConfig,
    aggregation: Aggregation,
    num_features: usize,
    schema_fingerprint: String,
    members: Vec<MemberDoc>,
}

impl Ensemble {
    pub fn predict_one(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.num_features {
            return Err(Error::invalid(format!(
                "sample has {} features, ensemble expects {}",
                row.len(),
                self.num_features
            )));
        }
        let votes = self
            .members
            .iter()
            .map(|m| m.model.predict_one(&m.project(row)))
            .collect::<Result<Vec<_>>>()?;
        self.aggregation.combine(&votes)
    }

    pub fn predict_batch(&self, table: &FeatureTable) -> Result<Vec<Prediction>> {
        let found = table.schema().fingerprint();
        if found != self.schema_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.schema_fingerprint.clone(),
                found,
            });
        }
        (0..table.row_count())
            .into_par_iter()
            .map(|r| self.predict_one(&table.row(r)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(MemberDoc {
                    features: m.features.clone(),
                    model: m.model.to_doc()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let doc = EnsembleDoc {
            format_version: ENSEMBLE_FORMAT_VERSION,
            config: self.config,
            aggregation: self.aggregation,
            num_features: self.num_features,
            schema_fingerprint: self.schema_fingerprint.clone(),
            members,
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Ensemble> {
        let doc: EnsembleDoc = serde_json::from_str(text)?;
        if doc.format_version != ENSEMBLE_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported ensemble format version {}",
                doc.format_version
            )));
        }
        let members = doc
            .members
            .into_iter()
            .map(|m| {
                if m.features.iter().any(|&f| f >= doc.num_features) {
                    return Err(Error::Model("member feature index out of range".into()));
                }
                Ok(Member {
                    features: m.features,
                    model: DsModel::from_doc(m.model)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let task = members
            .first()
            .map(|m| m.model.task)
            .ok_or_else(|| Error::Model("ensemble has no members".into()))?;
        if members.iter().any(|m| m.model.task != task) {
            return Err(Error::Model("ensemble members disagree on the task".into()));
        }
        Ok(Ensemble {
            config: doc.config,
            aggregation: doc.aggregation,
            task,
            num_features: doc.num_features,
            schema_fingerprint: doc.schema_fingerprint,
            members,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Ensemble> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, FeatureDescriptor, LabelDescriptor, Labels, Schema};

    fn toy() -> Dataset {
        let schema = Schema::new(
            vec![FeatureDescriptor::continuous("x"), FeatureDescriptor::continuous("z")],
            LabelDescriptor::class("y", 2),
        )
        .unwrap();
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let z: Vec<f64> = (0..40).map(|i| f64::from((i * 7) % 13)).collect();
        let y = (0..40).map(|i| u32::from(i >= 20)).collect();
        Dataset::new(
            schema,
            vec![Column::Continuous(x), Column::Continuous(z)],
            Labels::Class(y),
        )
        .unwrap()
    }

    #[test]
    fn votes() {
        let c = |v: &[u32]| v.iter().map(|&x| Prediction::Class(x)).collect::<Vec<_>>();
        assert_eq!(
            Aggregation::MajorityVote.combine(&c(&[0, 1, 1])).unwrap(),
            Prediction::Class(1)
        );
        assert_eq!(
            Aggregation::MajorityVote.combine(&c(&[1, 1, 0, 0])).unwrap(),
            Prediction::Class(0)
        );
        let r = [1.0, 2.0, 3.0].map(Prediction::Value);
        assert_eq!(Aggregation::Mean.combine(&r).unwrap(), Prediction::Value(2.0));
        assert!(Aggregation::Mean.combine(&[]).is_err());
    }

    #[test]
    fn single_full_member_matches_single_model() {
        let d = toy();
        let cfg = EnsembleConfig {
            n_members: 1,
            bootstrap: false,
            feature_fraction: 1.0,
            base: TrainConfig::default(),
            seed: 3,
        };
        let e = train_ensemble(&d, cfg).unwrap();
        let (m, _) = train(
            &d,
            TrainConfig {
                seed: cfg.member_seed(0),
                ..cfg.base
            },
        )
        .unwrap();
        for r in 0..d.row_count() {
            let row = d.features().row(r);
            assert_eq!(e.predict_one(&row).unwrap(), m.predict_one(&row).unwrap());
        }
    }

    #[test]
    fn feature_counts_and_roundtrip() {
        let d = toy();
        let cfg = EnsembleConfig::preset(EnsembleKind::Forest, 4, &d, TrainConfig::default(), 9);
        assert_eq!(cfg.features_per_member(2).unwrap(), 1);
        let e = train_ensemble(&d, cfg).unwrap();
        assert!(e.members.iter().all(|m| m.features.len() == 1));
        let text = e.to_json().unwrap();
        let back = Ensemble::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(train_ensemble(&d, cfg).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn zero_features_rejected() {
        let d = toy();
        let cfg = EnsembleConfig {
            feature_fraction: 0.1,
            ..EnsembleConfig::preset(EnsembleKind::Bagging, 2, &d, TrainConfig::default(), 0)
        };
        assert!(train_ensemble(&d, cfg).is_err());
    }
}
