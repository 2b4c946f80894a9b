//! Numerical toolkit for Gelenbe random neural networks.
//!
//! * [`network`]: network description, validation and the steady-state solver
//! * [`sim`]: continuous-time spiking simulator used to check the solver
//! * [`conv`]: RNN cell activations and RNN-based image convolution
//! * [`numeric`]: projected FISTA, SVD pseudo-inverse, column standardisation
//! * [`mlrnn`]: the multi-layer classifier and its gradient-free training
//! * [`io`]: dataset, model, network, kernel and image file formats
//! * [`cli`]: the `rnnkit` command-line front end

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod cli;
pub mod conv;
pub mod error;
pub mod io;
pub mod mlrnn;
pub mod network;
pub mod numeric;
pub mod sim;

pub use error::{Result, RnnError};
pub use mlrnn::{LabeledDataset, MlrnnModel, TrainConfig};
pub use network::{RnnNetwork, SteadyState};
