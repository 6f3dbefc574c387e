//! Drive training one iteration at a time and check the graph after each step.

use decision_stream::graph::validate_dag;
use decision_stream::stats::TestFamily;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{TrainConfig, Trainer};

fn main() -> decision_stream::Result<()> {
    let data = generate(&SynthConfig::new(300, SynthTask::Classification { num_classes: 4 }, 8))?;
    let config = TrainConfig {
        family: TestFamily::Nonparametric,
        p_lim: 0.05,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&data, config)?;
    while let Some(r) = trainer.step()? {
        let snapshot = trainer.snapshot();
        println!(
            "iter {:>2}: split {:>3} merged {:>3} impurity {:.4}  violations {}  {}",
            r.iteration,
            r.leaves_after_split,
            r.leaves_after_merge,
            r.impurity,
            validate_dag(&snapshot).len(),
            snapshot.summary()
        );
    }
    let (model, _) = trainer.finish()?;
    let fan_in = model.nodes.values().filter(|n| n.parents.len() > 1).count();
    println!("{fan_in} nodes have more than one parent");
    Ok(())
}
