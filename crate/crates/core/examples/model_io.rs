//! Save a trained model and a network description, read both back and show
//! that nothing changed.

use ndarray::array;
use rnnkit::io::model::{encode_model, load_model, save_model, ModelFile};
use rnnkit::io::netfile::{format_network, read_network, write_network};
use rnnkit::mlrnn::train;
use rnnkit::{LabeledDataset, RnnNetwork, TrainConfig};

fn main() -> rnnkit::Result<()> {
    let dir = std::env::temp_dir().join("rnnkit-model-io");
    std::fs::create_dir_all(&dir)?;

    let x = array![[0.1, 0.9], [0.2, 0.8], [0.9, 0.1], [0.8, 0.3], [0.15, 0.7], [0.7, 0.2]];
    let data = LabeledDataset::from_labels(x, &[0, 0, 1, 1, 0, 1], vec!["left".into(), "right".into()])?;
    let cfg = TrainConfig {
        hidden_layer_sizes: vec![3],
        readout_width: 6,
        ..TrainConfig::default()
    };
    let model = train(&data, &cfg)?;
    let file = ModelFile {
        class_names: data.class_names.clone(),
        ..ModelFile::from(model)
    };
    let path = dir.join("toy.mlrn");
    save_model(&file, &path)?;
    let back = load_model(&path)?;
    let same = back.model.forward(data.x.view())? == file.model.forward(data.x.view())?;
    println!("{} bytes written, reloaded outputs identical: {same}", encode_model(&file).len());

    let net = RnnNetwork::new(
        array![[0.0, 0.4], [0.0, 0.0]],
        array![[0.0, 0.6], [0.5, 0.0]],
        array![1.0, 1.0],
        array![0.5, 0.2],
        array![0.0, 0.1],
    )?;
    let net_path = dir.join("pair.net");
    write_network(&net_path, &net)?;
    print!("{}", format_network(&net));
    println!("network round trip exact: {}", read_network(&net_path)? == net);
    Ok(())
}
