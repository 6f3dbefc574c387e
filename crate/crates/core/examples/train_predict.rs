//! Train on an in-memory table, predict, and round-trip the model through JSON.

use decision_stream::data::{Column, Dataset, FeatureDescriptor, LabelDescriptor, Labels, Schema};
use decision_stream::graph::DsModel;
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let schema = Schema::new(
        vec![
            FeatureDescriptor::continuous("x"),
            FeatureDescriptor::categorical("colour", 3),
        ],
        LabelDescriptor::class("y", 2),
    )?;
    let x: Vec<f64> = (0..60).map(|i| f64::from(i) / 10.0).collect();
    let colour: Vec<u32> = (0..60).map(|i| i % 3).collect();
    let y: Vec<u32> = x
        .iter()
        .zip(&colour)
        .map(|(&x, &c)| u32::from(x > 3.0 || c == 2))
        .collect();
    let data = Dataset::new(
        schema,
        vec![Column::Continuous(x), Column::Categorical(colour)],
        Labels::Class(y),
    )?;

    let (model, trace) = train(&data, TrainConfig::default())?;
    println!("{}", model.summary());
    println!("iterations: {}", trace.records.len() - 1);

    for row in [[1.0, 0.0], [1.0, 2.0], [4.5, 1.0]] {
        println!("{row:?} -> {:?}", model.predict_one(&row)?);
    }

    let text = model.to_json()?;
    let back = DsModel::from_json(&text)?;
    assert_eq!(back, model);
    println!("serialized {} bytes", text.len());
    Ok(())
}
