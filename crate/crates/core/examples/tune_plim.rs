//! Sweep the significance threshold and retrain at the best value.

use decision_stream::data::split_train_valid;
use decision_stream::evaluation::{model_error, tune_plim};
use decision_stream::graph::SplitMode;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(1000, SynthTask::Regression, 11))?;
    let (rest, test) = split_train_valid(&data, 0.1, 11)?;
    let (fit, valid) = split_train_valid(&rest, 0.1, 12)?;
    let base = TrainConfig {
        split_mode: SplitMode::Scalable,
        ..TrainConfig::default()
    };

    let sweep = tune_plim(&fit, &valid, &[1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.2], base)?;
    for (p, e) in &sweep.grid {
        println!("p_lim={p:<8} wape={e:.2}");
    }
    let (model, _) = train(
        &rest,
        TrainConfig {
            p_lim: sweep.best_p_lim,
            ..base
        },
    )?;
    println!(
        "best p_lim={} test wape={:.2}",
        sweep.best_p_lim,
        model_error(&model, &test)?
    );
    Ok(())
}
