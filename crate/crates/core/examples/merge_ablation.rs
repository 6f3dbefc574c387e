//! Decision Stream against the same learner with merging switched off.

use decision_stream::data::split_train_valid;
use decision_stream::evaluation::model_error;
use decision_stream::graph::SplitMode;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(
        3000,
        SynthTask::Classification { num_classes: 10 },
        7,
    ))?;
    let (fit, valid) = split_train_valid(&data, 0.1, 7)?;
    let base = TrainConfig {
        p_lim: 0.01,
        split_mode: SplitMode::Scalable,
        ..TrainConfig::default()
    };

    for (name, config) in [
        ("merge", base),
        (
            "no merge",
            TrainConfig {
                merge_enabled: false,
                ..base
            },
        ),
    ] {
        let (model, trace) = train(&fit, config)?;
        println!(
            "{name:<9} {}  error={:.2}",
            model.summary(),
            model_error(&model, &valid)?
        );
        let leaves: Vec<String> = trace
            .records
            .iter()
            .map(|r| format!("{}>{}", r.leaves_after_split, r.leaves_after_merge))
            .collect();
        println!("          leaves per iteration: {}", leaves.join(" "));
    }
    Ok(())
}
