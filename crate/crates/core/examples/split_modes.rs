//! Exact binary splits against range-partition splits on the same rows.

use std::time::Instant;

use decision_stream::context::SplitContext;
use decision_stream::data::SampleIndexSet;
use decision_stream::graph::SplitMode;
use decision_stream::splitting::{best_binary_split, most_correlated_feature, scalable_split};
use decision_stream::stats::TestFamily;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(400, SynthTask::Regression, 3))?;
    let ctx = SplitContext::new(&data, TestFamily::Parametric)?;
    let rows = SampleIndexSet::all(data.row_count());

    if let Some(s) = best_binary_split(&rows, &ctx, 0.05) {
        println!("exact:    {:?}  p={:.3e}", s.rule, s.p_value);
    }
    println!("most correlated feature: {}", most_correlated_feature(&rows, &ctx)?);
    if let Some(s) = scalable_split(&rows, &ctx, 0.05)? {
        let sizes: Vec<usize> = s.parts.iter().map(SampleIndexSet::len).collect();
        println!("scalable: feature {} into {sizes:?}", s.rule.feature());
    }

    for mode in [SplitMode::Exact, SplitMode::Scalable] {
        let start = Instant::now();
        let (model, _) = train(
            &data,
            TrainConfig {
                split_mode: mode,
                ..TrainConfig::default()
            },
        )?;
        println!("{mode:?}: {} in {:.2?}", model.summary(), start.elapsed());
    }
    Ok(())
}
