//! Split each digit image into its left and right halves, give each half its
//! own encoder stack, and share one readout across both.

use std::path::Path;

use ndarray::{s, Array2};
use rnnkit::io::{load_dataset, DatasetSource, LabelColumn, MinMaxScaler};
use rnnkit::mlrnn::{accuracy, train, train_multichannel};
use rnnkit::TrainConfig;

fn halves(x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let img = x.view().into_shape_with_order((x.nrows(), 8, 8)).expect("8x8 digits");
    let left = img.slice(s![.., .., ..4]).to_owned().into_shape_with_order((x.nrows(), 32)).unwrap();
    let right = img.slice(s![.., .., 4..]).to_owned().into_shape_with_order((x.nrows(), 32)).unwrap();
    (left, right)
}

fn main() -> rnnkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/optdigits.csv");
    let data = load_dataset(&DatasetSource::csv(path, LabelColumn::Name("digit".into())))?;
    let (mut tr, mut te) = data.split(0.75, 3);
    let scaler = MinMaxScaler::fit(tr.x.view());
    tr.x = scaler.transform(tr.x.view())?;
    te.x = scaler.transform(te.x.view())?;

    let cfg = TrainConfig {
        hidden_layer_sizes: vec![40],
        ..TrainConfig::default()
    };
    let (l, r) = halves(&tr.x);
    let model = train_multichannel(&[l.view(), r.view()], tr.y.view(), &cfg)?;
    let (tl, trr) = halves(&te.x);
    let multi = accuracy(&model.predict_multi(&[tl.view(), trr.view()])?, &te.labels());
    println!("two channels, layer sizes {:?}: test accuracy {multi:.4}", model.layer_sizes());

    let single = train(&tr, &cfg)?;
    let acc = accuracy(&single.predict(te.x.view())?, &te.labels());
    println!("one channel,  layer sizes {:?}: test accuracy {acc:.4}", single.layer_sizes());
    println!("encoding width {} vs {}", model.encoding_width(), single.encoding_width());
    Ok(())
}
