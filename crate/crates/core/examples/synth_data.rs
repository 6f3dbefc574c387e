//! Generate the synthetic benchmark and write it as CSV plus schema.

use decision_stream::synth::{generate, SynthConfig, SynthTask};

fn main() -> decision_stream::Result<()> {
    let config = SynthConfig {
        noise_std: 0.2,
        ..SynthConfig::new(1000, SynthTask::Classification { num_classes: 3 }, 42)
    };
    let data = generate(&config)?;
    let kinds = data.schema().features.iter().fold([0usize; 2], |mut acc, f| {
        acc[usize::from(f.kind.is_categorical())] += 1;
        acc
    });
    println!(
        "{} rows, {} continuous and {} categorical features",
        data.row_count(),
        kinds[0],
        kinds[1]
    );
    let mut counts = [0usize; 3];
    for &y in data.label_values() {
        counts[y as usize] += 1;
    }
    println!("class sizes {counts:?}");

    let out = std::env::temp_dir().join("ds-synth.csv");
    data.write_csv(&out)?;
    data.schema().write(out.with_extension("schema.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}
