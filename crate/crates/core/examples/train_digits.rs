//! Train on the 8×8 optical digits shipped with the tests and print the
//! held-out confusion matrix.

use std::path::Path;

use ndarray::Array2;
use rnnkit::io::{load_dataset, DatasetSource, LabelColumn, MinMaxScaler};
use rnnkit::mlrnn::{accuracy, train};
use rnnkit::TrainConfig;

fn main() -> rnnkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/optdigits.csv");
    let data = load_dataset(&DatasetSource::csv(path, LabelColumn::Name("digit".into())))?;
    let (mut train_set, mut test) = data.split(0.75, 1);
    let scaler = MinMaxScaler::fit(train_set.x.view());
    train_set.x = scaler.transform(train_set.x.view())?;
    test.x = scaler.transform(test.x.view())?;

    let started = std::time::Instant::now();
    let model = train(&train_set, &TrainConfig::default())?;
    let elapsed = started.elapsed();
    let predicted = model.predict(test.x.view())?;
    let truth = test.labels();
    println!("layers {:?}, trained in {elapsed:.2?}", model.layer_sizes());
    println!("test accuracy {:.4}", accuracy(&predicted, &truth));

    let k = data.class_names.len();
    let mut confusion = Array2::<usize>::zeros((k, k));
    for (&t, &p) in truth.iter().zip(&predicted) {
        confusion[[t, p]] += 1;
    }
    println!("true\\pred {}", data.class_names.join("   "));
    for (name, row) in data.class_names.iter().zip(confusion.rows()) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>3}")).collect();
        println!("{name:>9} {}", cells.join(" "));
    }
    Ok(())
}
