//! File formats: CSV and IDX datasets, the binary model container, the
//! network description, kernels and PGM images, and the training config.

pub mod config;
pub mod dataset;
pub mod image;
pub mod model;
pub mod netfile;

pub use config::TrainFile;
pub use dataset::{load_dataset, DatasetFormat, DatasetSource, LabelColumn, MinMaxScaler, Normalization};
pub use model::{load_model, save_model, ModelFile};
pub use netfile::{read_network, write_network};
