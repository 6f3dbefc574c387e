//! Bagging, random subspaces and forests of Decision Streams.

use decision_stream::data::split_train_valid;
use decision_stream::ensemble::{train_ensemble, Ensemble, EnsembleConfig, EnsembleKind};
use decision_stream::evaluation::{as_values, model_error, task_error};
use decision_stream::graph::SplitMode;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(1500, SynthTask::Classification { num_classes: 2 }, 5))?;
    let (fit, test) = split_train_valid(&data, 0.2, 5)?;
    let base = TrainConfig {
        p_lim: 0.01,
        split_mode: SplitMode::Scalable,
        ..TrainConfig::default()
    };

    let (single, _) = train(&fit, base)?;
    println!("single     error={:.2}", model_error(&single, &test)?);

    for kind in [EnsembleKind::Bagging, EnsembleKind::Subspace, EnsembleKind::Forest] {
        let config = EnsembleConfig::preset(kind, 8, &fit, base, 1);
        let ensemble = train_ensemble(&fit, config)?;
        let predictions = as_values(&ensemble.predict_batch(test.features())?);
        println!(
            "{:<10} error={:.2} features/member={}",
            format!("{kind:?}"),
            task_error(&predictions, &test)?,
            ensemble.members[0].features.len()
        );
        let back = Ensemble::from_json(&ensemble.to_json()?)?;
        assert_eq!(
            back.predict_batch(test.features())?,
            ensemble.predict_batch(test.features())?
        );
    }
    Ok(())
}
