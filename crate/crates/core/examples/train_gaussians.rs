//! Two Gaussian classes, 400 rows of 8 attributes, class means 3σ apart in
//! every coordinate, classified by a small multi-layer RNN.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rnnkit::io::MinMaxScaler;
use rnnkit::mlrnn::{accuracy, train_with_log};
use rnnkit::{LabeledDataset, TrainConfig};

fn main() -> rnnkit::Result<()> {
    let (rows, dims, separation) = (400, 8, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels: Vec<usize> = (0..rows).map(|i| i % 2).collect();
    let x = Array2::from_shape_fn((rows, dims), |(i, _)| {
        let noise: f64 = rng.sample(StandardNormal);
        noise + separation * labels[i] as f64
    });
    let data = LabeledDataset::from_labels(x, &labels, vec!["a".into(), "b".into()])?;
    // hold out 25%; scaling uses training statistics only
    let (mut train, mut test) = data.split(0.75, 5);
    let scaler = MinMaxScaler::fit(train.x.view());
    train.x = scaler.transform(train.x.view())?;
    test.x = scaler.transform(test.x.view())?;

    let cfg = TrainConfig {
        hidden_layer_sizes: vec![8],
        readout_width: 40,
        ..TrainConfig::default()
    };
    let started = std::time::Instant::now();
    let (model, log) = train_with_log(&train, &cfg)?;
    println!("trained {:?} in {:.2?}", model.layer_sizes(), started.elapsed());
    for l in &log.encoder_layers {
        println!("  encoder layer {}: objective {:.4}, rate {:.4}", l.layer, l.objective, l.rate);
    }
    println!("  readout alpha {:.4}, offset {:.4}", log.alpha, log.offset);
    let acc = accuracy(&model.predict(test.x.view())?, &test.labels());
    println!("held-out accuracy {acc:.4}");
    Ok(())
}
