//! Load a CSV with inferred column kinds, save the schema, and reload it.

use decision_stream::data::{load_csv, load_features_csv, Schema, SchemaSource};
use decision_stream::training::{train, TrainConfig};

fn main() -> decision_stream::Result<()> {
    let dir = std::env::temp_dir().join(format!("ds-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| decision_stream::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let data_path = dir.join("weather.csv");
    let mut text = String::from("temp,outlook,play\n");
    for i in 0..40 {
        let outlook = ["sunny", "rain", "overcast"][i % 3];
        let play = if outlook == "overcast" || i < 20 { "yes" } else { "no" };
        text.push_str(&format!("{},{outlook},{play}\n", 10 + i));
    }
    std::fs::write(&data_path, text).map_err(|e| decision_stream::Error::Io {
        path: data_path.clone(),
        source: e,
    })?;

    let data = load_csv(&data_path, SchemaSource::Infer, "play")?;
    println!("{}", data.schema().to_json());
    let schema_path = dir.join("weather.schema.json");
    data.schema().write(&schema_path)?;

    let (model, _) = train(&data, TrainConfig::default())?;
    let schema = Schema::read(&schema_path)?;
    let table = load_features_csv(&data_path, &schema)?;
    let predictions = model.predict_batch(&table)?;
    let right = predictions
        .iter()
        .zip(data.label_values())
        .filter(|(p, &y)| p.as_f64() == y)
        .count();
    println!("{}  training accuracy {right}/{}", model.summary(), data.row_count());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
