//! Tuned Decision Streams against a depth-limited greedy tree.

use decision_stream::baseline::greedy_tree;
use decision_stream::evaluation::{run_experiment, write_experiment_csv, ExperimentConfig};
use decision_stream::synth::{generate, SynthConfig, SynthTask};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(800, SynthTask::Classification { num_classes: 2 }, 1))?;
    let tree = greedy_tree(&data, 3)?;
    println!("depth-3 tree: {}  tree={}", tree.summary(), tree.is_tree());

    let mut config = ExperimentConfig::new(SynthTask::Regression, 1500, vec![1, 2]);
    config.grid = vec![1e-4, 1e-3, 0.01];
    let rows = run_experiment(&config)?;
    write_experiment_csv(&rows, std::io::stdout().lock())
}
