//! Multi-layer random neural network classifier trained without gradients.
//!
//! The network has an input layer of quasi-linear cells, `L − 1` encoder
//! layers fed only by inhibitory spikes, a paired hidden layer `L + 1`, and a
//! quasi-linear output layer. With `X` the attribute matrix:
//!
//! ```text
//! Q₁      = min(X, 1)
//! Q_l     = φ(0, Q_{l−1} W⁻_{l−1})|_{R_l, R_l}                 2 ≤ l ≤ L
//! Q_{L+1} = φ(Q_L W⁺_L, Q_L W⁻_L)|_{λ_{L+1}, α}
//! Q_out   = min(λ_out + Q_{L+1} W⁺_{L+1}, 1)
//! ```
//!
//! Training is layer by layer. Each encoder layer solves a non-negative
//! reconstruction problem with projected FISTA. The last two layers are
//! mapped from a single-hidden-layer network (SLANN) with activation
//! `α/(α + x)` whose readout comes from a pseudo-inverse. The first half of
//! layer `L + 1` reproduces `α/(α + x)` and the second half reproduces
//! `x/(α + x)`, so the positive and negative parts of the readout can both be
//! carried by excitatory spikes. The result is `Q_out = ō + c` with `ō` the
//! SLANN output and `c` a single constant, which leaves the argmax unchanged.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RnnError};
use crate::network::{validate_network, RnnNetwork, ValidationReport};
use crate::numeric::{fista_nnls, pinv, sigma_transform, FistaConfig, NnlsProblem};

/// Non-negative attributes with their target rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>, class_names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(RnnError::arg(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if class_names.len() != y.ncols() {
            return Err(RnnError::arg("one class name per target column is required"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RnnError::arg("attributes must be finite"));
        }
        if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(RnnError::arg("targets must lie in [0, 1]"));
        }
        Ok(Self { x, y, class_names })
    }

    /// One-hot targets from class indices.
    pub fn from_labels(x: Array2<f64>, labels: &[usize], class_names: Vec<String>) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(RnnError::arg("one label per row is required"));
        }
        let mut y = Array2::zeros((labels.len(), class_names.len()));
        for (row, &label) in labels.iter().enumerate() {
            if label >= class_names.len() {
                return Err(RnnError::arg(format!("label {label} has no class name")));
            }
            y[[row, label]] = 1.0;
        }
        Self::new(x, y, class_names)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn labels(&self) -> Vec<usize> {
        argmax_rows(self.y.view())
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            class_names: self.class_names.clone(),
        }
    }

    /// Seeded random split; the first part holds `round(train_fraction · D)`
    /// rows.
    pub fn split(&self, train_fraction: f64, seed: u64) -> (Self, Self) {
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.len() as f64) * train_fraction).round() as usize;
        let (a, b) = idx.split_at(cut.min(self.len()));
        (self.select(a), self.select(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Widths `N₂ … N_L` of the encoder layers (may be empty).
    pub hidden_layer_sizes: Vec<usize>,
    /// Width `N_{L+1}` of the paired layer; must be even.
    pub readout_width: usize,
    pub fista: FistaConfig,
    /// ℓ1 weight of the reconstruction problems.
    pub reg: f64,
    pub seed: u64,
    /// Rates of each layer are `max(X W)/rate_divisor`.
    pub rate_divisor: f64,
    /// Absolute sum of the SLANN readout after rescaling, in `(0, 1]`.
    pub slann_weight_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layer_sizes: vec![100],
            readout_width: 200,
            fista: FistaConfig::default(),
            reg: 1.0,
            seed: 0,
            rate_divisor: 5.0,
            slann_weight_scale: 1.0,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<()> {
        if self.hidden_layer_sizes.contains(&0) {
            return Err(RnnError::arg("hidden layer sizes must be at least 1"));
        }
        if self.readout_width == 0 || self.readout_width % 2 != 0 {
            return Err(RnnError::arg(format!(
                "readout width must be a positive even number, got {}",
                self.readout_width
            )));
        }
        if !(self.rate_divisor > 0.0) || !self.rate_divisor.is_finite() {
            return Err(RnnError::arg("rate_divisor must be positive"));
        }
        if !(self.slann_weight_scale > 0.0 && self.slann_weight_scale <= 1.0) {
            return Err(RnnError::arg("slann_weight_scale must lie in (0, 1]"));
        }
        if !(self.reg >= 0.0) {
            return Err(RnnError::arg("reg must be non-negative"));
        }
        Ok(())
    }
}

/// Inhibitory connections into an encoder layer plus that layer's shared
/// external excitatory rate and firing rate (equal by construction).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub w_minus: Array2<f64>,
    pub rate: f64,
}

/// The private encoder stack of one input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub input_width: usize,
    pub layers: Vec<EncoderLayer>,
}

impl Channel {
    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(self.input_width, |l| l.w_minus.ncols())
    }

    /// Firing rate of the cells emitting into the paired layer.
    pub fn output_rate(&self) -> f64 {
        self.layers.last().map_or(1.0, |l| l.rate)
    }

    /// `Q₁ … Q_L` of this channel.
    fn encode_layers(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        out.push(x.mapv(|v| v.min(1.0)));
        for layer in &self.layers {
            let prev = out.last().unwrap();
            let inh = prev.dot(&layer.w_minus);
            let rate = layer.rate;
            out.push(inh.mapv(|v| (rate / (rate + v)).min(1.0)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlrnnModel {
    pub channels: Vec<Channel>,
    /// `W⁺_L = [0 | W̄₁]`.
    pub w_plus_l: Array2<f64>,
    /// `W⁻_L = [W̄₁ | W̄₁]`.
    pub w_minus_l: Array2<f64>,
    pub alpha: f64,
    /// `W⁺_{L+1} = [W̄₂⁺; W̄₂⁻]`.
    pub w_plus_readout: Array2<f64>,
    pub output_lambda: Array1<f64>,
    pub offset: f64,
}

/// All layer outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Per channel: `Q₁ … Q_L`.
    pub channels: Vec<Vec<Array2<f64>>>,
    /// Concatenated `Q_L` of all channels.
    pub encoding: Array2<f64>,
    pub paired: Array2<f64>,
    pub output: Array2<f64>,
}

impl ForwardTrace {
    pub fn all_layers(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.channels
            .iter()
            .flatten()
            .chain([&self.encoding, &self.paired, &self.output])
    }
}

impl MlrnnModel {
    pub fn input_widths(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.input_width).collect()
    }

    pub fn encoding_width(&self) -> usize {
        self.w_plus_l.nrows()
    }

    pub fn paired_width(&self) -> usize {
        self.w_plus_l.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.w_plus_readout.ncols()
    }

    /// `N₁, …, N_{L+2}` for a single-channel model; for several channels the
    /// encoder widths are listed channel after channel.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for c in &self.channels {
            sizes.push(c.input_width);
            sizes.extend(c.layers.iter().map(|l| l.w_minus.ncols()));
        }
        sizes.extend([self.paired_width(), self.output_width()]);
        sizes
    }

    /// External excitatory rate of each paired-layer cell: `α` in the first
    /// half, 0 in the second.
    pub fn paired_lambda(&self) -> Array1<f64> {
        let half = self.paired_width() / 2;
        Array1::from_shape_fn(self.paired_width(), |j| if j < half { self.alpha } else { 0.0 })
    }

    /// Firing rate of every cell of layer `L`.
    pub fn encoding_rates(&self) -> Array1<f64> {
        let mut rates = Vec::with_capacity(self.encoding_width());
        for c in &self.channels {
            rates.extend(std::iter::repeat_n(c.output_rate(), c.output_width()));
        }
        Array1::from(rates)
    }

    /// SLANN weights `(W̄₁, W̄₂)` recovered from the stored RNN weights.
    pub fn slann_parts(&self) -> (Array2<f64>, Array2<f64>) {
        let half = self.paired_width() / 2;
        let w1 = self.w_minus_l.slice(s![.., ..half]).to_owned();
        let w2 = &self.w_plus_readout.slice(s![..half, ..]) - &self.w_plus_readout.slice(s![half.., ..]);
        (w1, w2)
    }

    fn check_inputs(&self, channels: &[ArrayView2<f64>]) -> Result<usize> {
        if channels.len() != self.channels.len() {
            return Err(RnnError::arg(format!(
                "model has {} channels, got {}",
                self.channels.len(),
                channels.len()
            )));
        }
        let rows = channels[0].nrows();
        for (c, (x, ch)) in channels.iter().zip(&self.channels).enumerate() {
            if x.ncols() != ch.input_width {
                return Err(RnnError::arg(format!(
                    "channel {c}: expected {} attributes, got {}",
                    ch.input_width,
                    x.ncols()
                )));
            }
            if x.nrows() != rows {
                return Err(RnnError::arg("all channels must have the same number of rows"));
            }
            if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(RnnError::arg(format!("channel {c}: inputs must be finite and non-negative")));
            }
        }
        Ok(rows)
    }

    pub fn forward_trace_multi(&self, channels: &[ArrayView2<f64>]) -> Result<ForwardTrace> {
        self.check_inputs(channels)?;
        let per_channel: Vec<Vec<Array2<f64>>> = channels
            .iter()
            .zip(&self.channels)
            .map(|(x, ch)| ch.encode_layers(*x))
            .collect();
        let views: Vec<_> = per_channel.iter().map(|layers| layers.last().unwrap().view()).collect();
        let encoding = concatenate(Axis(1), &views).expect("channel encodings share rows");

        let exc = encoding.dot(&self.w_plus_l);
        let inh = encoding.dot(&self.w_minus_l);
        let lambda = self.paired_lambda();
        let mut paired = Array2::zeros(exc.raw_dim());
        Zip::from(paired.rows_mut())
            .and(exc.rows())
            .and(inh.rows())
            .for_each(|mut q, e, i| {
                for j in 0..q.len() {
                    q[j] = crate::network::clipped_ratio(lambda[j] + e[j], self.alpha + i[j]);
                }
            });

        let mut output = paired.dot(&self.w_plus_readout);
        for mut row in output.rows_mut() {
            row += &self.output_lambda;
            row.mapv_inplace(|v| v.min(1.0));
        }
        Ok(ForwardTrace {
            channels: per_channel,
            encoding,
            paired,
            output,
        })
    }

    pub fn forward_multi(&self, channels: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
        Ok(self.forward_trace_multi(channels)?.output)
    }

    /// Output excitation probabilities for a single-channel model.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward_multi(&[x])
    }

    /// `Q_L` for a single-channel model: the input of the SLANN.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_trace_multi(&[x])?.encoding)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.forward(x)?.view()))
    }

    pub fn predict_multi(&self, channels: &[ArrayView2<f64>]) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.forward_multi(channels)?.view()))
    }

    /// Each connection block as a small [`RnnNetwork`]: the sending layer's
    /// cells followed by the receiving layer's cells.
    pub fn layer_networks(&self) -> Vec<(String, RnnNetwork)> {
        let mut nets = Vec::new();
        for (c, ch) in self.channels.iter().enumerate() {
            let mut rate_in = 1.0;
            for (k, layer) in ch.layers.iter().enumerate() {
                let zeros = Array2::zeros(layer.w_minus.raw_dim());
                nets.push((
                    format!("channel {c} layer {}", k + 1),
                    block_network(&zeros, &layer.w_minus, rate_in, layer.rate, layer.rate),
                ));
                rate_in = layer.rate;
            }
        }
        nets.push((
            "paired layer".to_string(),
            block_network_rates(
                &self.w_plus_l,
                &self.w_minus_l,
                &self.encoding_rates(),
                &Array1::from_elem(self.paired_width(), self.alpha),
                &self.paired_lambda(),
            ),
        ));
        let zeros = Array2::zeros(self.w_plus_readout.raw_dim());
        nets.push((
            "output layer".to_string(),
            block_network_rates(
                &self.w_plus_readout,
                &zeros,
                &Array1::from_elem(self.paired_width(), self.alpha),
                &Array1::ones(self.output_width()),
                &self.output_lambda,
            ),
        ));
        nets
    }

    /// Runs the network validator over every connection block and checks the
    /// structural invariants. Returns one message per violation.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.paired_width() % 2 != 0 {
            problems.push(format!("paired layer width {} is odd", self.paired_width()));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            problems.push(format!("alpha {} is not positive", self.alpha));
        }
        if self.w_minus_l.nrows() != self.encoding_width()
            || self.w_minus_l.ncols() != self.paired_width()
            || self.w_plus_readout.nrows() != self.paired_width()
            || self.output_lambda.len() != self.output_width()
            || self.channels.iter().map(Channel::output_width).sum::<usize>() != self.encoding_width()
        {
            problems.push("layer shapes are inconsistent".to_string());
            return problems;
        }
        for ch in &self.channels {
            let mut width = ch.input_width;
            for layer in &ch.layers {
                if layer.w_minus.nrows() != width {
                    problems.push("encoder layer shapes are inconsistent".to_string());
                    return problems;
                }
                if !(layer.rate > 0.0) || !layer.rate.is_finite() {
                    problems.push(format!("encoder rate {} is not positive", layer.rate));
                }
                width = layer.w_minus.ncols();
            }
        }
        for (name, net) in self.layer_networks() {
            let report: ValidationReport = validate_network(&net);
            problems.extend(report.violations.iter().map(|v| format!("{name}: {v}")));
        }
        problems
    }
}

fn block_network(w_plus: &Array2<f64>, w_minus: &Array2<f64>, rate_in: f64, rate_out: f64, lambda_out: f64) -> RnnNetwork {
    let (a, b) = w_plus.dim();
    block_network_rates(
        w_plus,
        w_minus,
        &Array1::from_elem(a, rate_in),
        &Array1::from_elem(b, rate_out),
        &Array1::from_elem(b, lambda_out),
    )
}

fn block_network_rates(
    w_plus: &Array2<f64>,
    w_minus: &Array2<f64>,
    rate_in: &Array1<f64>,
    rate_out: &Array1<f64>,
    lambda_out: &Array1<f64>,
) -> RnnNetwork {
    let (a, b) = w_plus.dim();
    let n = a + b;
    let mut wp = Array2::zeros((n, n));
    let mut wm = Array2::zeros((n, n));
    wp.slice_mut(s![..a, a..]).assign(w_plus);
    wm.slice_mut(s![..a, a..]).assign(w_minus);
    let rate = concatenate(Axis(0), &[rate_in.view(), rate_out.view()]).unwrap();
    let exc = concatenate(Axis(0), &[Array1::zeros(a).view(), lambda_out.view()]).unwrap();
    RnnNetwork::new(wp, wm, rate, exc, Array1::zeros(n)).expect("block shapes agree")
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(m: ArrayView2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Forward pass of the single-hidden-layer network,
/// `ō = φ̄(X_L W̄₁)|_α · W̄₂` with `φ̄(x)|_α = α/(α + x)`.
pub fn slann_forward(
    w1_bar: ArrayView2<f64>,
    w2_bar: ArrayView2<f64>,
    alpha: f64,
    x_l: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if !(alpha > 0.0) {
        return Err(RnnError::arg(format!("alpha must be positive, got {alpha}")));
    }
    if w1_bar.iter().any(|&w| w < 0.0) {
        return Err(RnnError::arg("SLANN input weights must be non-negative"));
    }
    if x_l.ncols() != w1_bar.nrows() || w1_bar.ncols() != w2_bar.nrows() {
        return Err(RnnError::arg("SLANN shapes do not chain"));
    }
    let hidden = x_l.dot(&w1_bar).mapv(|v| alpha / (alpha + v));
    Ok(hidden.dot(&w2_bar))
}

/// Reconstruction objective of one encoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerLog {
    pub channel: usize,
    pub layer: usize,
    pub objective: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub encoder_layers: Vec<LayerLog>,
    pub alpha: f64,
    pub readout_abs_sum: f64,
    pub offset: f64,
}

/// Trains a single-channel model.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<MlrnnModel> {
    Ok(train_with_log(data, cfg)?.0)
}

pub fn train_with_log(data: &LabeledDataset, cfg: &TrainConfig) -> Result<(MlrnnModel, TrainLog)> {
    train_multichannel_with_log(&[data.x.view()], data.y.view(), cfg)
}

/// Trains one encoder stack per channel, concatenates the encodings, then
/// fits the shared paired and output layers.
pub fn train_multichannel(channels: &[ArrayView2<f64>], y: ArrayView2<f64>, cfg: &TrainConfig) -> Result<MlrnnModel> {
    Ok(train_multichannel_with_log(channels, y, cfg)?.0)
}

pub fn train_multichannel_with_log(
    channels: &[ArrayView2<f64>],
    y: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<(MlrnnModel, TrainLog)> {
    cfg.check()?;
    if channels.is_empty() {
        return Err(RnnError::arg("at least one channel is required"));
    }
    let rows = y.nrows();
    if rows < 2 {
        return Err(RnnError::arg("at least two instances are required"));
    }
    for (c, x) in channels.iter().enumerate() {
        if x.nrows() != rows {
            return Err(RnnError::arg(format!(
                "channel {c} has {} rows, targets have {rows}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(RnnError::arg(format!("channel {c} has no attributes")));
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RnnError::arg(format!("channel {c}: attributes must be finite and non-negative")));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RnnError::arg("targets must be finite"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::new();
    let mut trained = Vec::with_capacity(channels.len());
    let mut encodings = Vec::with_capacity(channels.len());
    for (c, x) in channels.iter().enumerate() {
        let (channel, encoding) = train_encoder(c, *x, cfg, &mut rng, &mut log)?;
        trained.push(channel);
        encodings.push(encoding);
    }
    let views: Vec<_> = encodings.iter().map(Array2::view).collect();
    let x_l = concatenate(Axis(1), &views).expect("encodings share rows");
    let rates: Vec<f64> = trained
        .iter()
        .flat_map(|ch| std::iter::repeat_n(ch.output_rate(), ch.output_width()))
        .collect();

    let slann = fit_slann(x_l.view(), &rates, y, cfg, &mut rng)?;
    let half = cfg.readout_width / 2;
    let zeros = Array2::zeros((x_l.ncols(), half));
    let w_plus_l = concatenate![Axis(1), zeros, slann.w1];
    let w_minus_l = concatenate![Axis(1), slann.w1, slann.w1];
    let w2_pos = slann.w2.mapv(|v| v.max(0.0));
    let w2_neg = slann.w2.mapv(|v| (-v).max(0.0));
    let neg_colsum = w2_neg.sum_axis(Axis(0));
    let offset = neg_colsum.iter().cloned().fold(0.0, f64::max);
    let output_lambda = neg_colsum.mapv(|s| (offset - s).max(0.0));
    let w_plus_readout = concatenate![Axis(0), w2_pos, w2_neg];

    let model = MlrnnModel {
        channels: trained,
        w_plus_l,
        w_minus_l,
        alpha: slann.alpha,
        w_plus_readout,
        output_lambda,
        offset,
    };
    let log = TrainLog {
        encoder_layers: log,
        alpha: slann.alpha,
        readout_abs_sum: slann.w2.iter().map(|v| v.abs()).sum(),
        offset,
    };
    Ok((model, log))
}


/// Uniform `[0,1)` matrix with each row rescaled to sum to `row_mass`.
fn random_rows<R: Rng>(rng: &mut R, rows: usize, cols: usize, row_mass: &[f64]) -> Array2<f64> {
    let mut w = Array2::from_shape_fn((rows, cols), |_| rng.gen::<f64>());
    for (mut row, &mass) in w.rows_mut().into_iter().zip(row_mass) {
        let s = row.sum();
        if s > 0.0 {
            row *= mass / s;
        }
    }
    w
}

fn max_entry(m: &Array2<f64>) -> f64 {
    m.iter().cloned().fold(0.0, f64::max)
}

fn train_encoder<R: Rng>(
    channel: usize,
    x: ArrayView2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
    log: &mut Vec<LayerLog>,
) -> Result<(Channel, Array2<f64>)> {
    let input_width = x.ncols();
    let mut current = x.mapv(|v| v.min(1.0));
    let mut rate_in = 1.0;
    let mut layers = Vec::with_capacity(cfg.hidden_layer_sizes.len());

    for (k, &width) in cfg.hidden_layer_sizes.iter().enumerate() {
        let layer_no = k + 1;
        let degenerate = || {
            RnnError::Degenerate(format!(
                "channel {channel}: encodings entering layer {layer_no} are all zero"
            ))
        };
        let n_in = current.ncols();
        let probe = random_rows(rng, n_in, width, &vec![rate_in; n_in]);
        let xw = current.dot(&probe);
        let peak = max_entry(&xw);
        if !(peak > 0.0) {
            return Err(degenerate());
        }
        let hidden = xw.mapv(|v| peak / (peak + v));
        let design = sigma_transform(hidden.view());

        let problem = NnlsProblem::new(design.view(), current.view(), cfg.reg)?;
        let fista = FistaConfig {
            seed: rng.gen(),
            ..cfg.fista
        };
        let solution = fista_nnls(&problem, &fista)?;

        // decoder weights map hidden → input; the encoder uses their transpose
        let mut w_minus = solution.weights.t().to_owned();
        for mut row in w_minus.rows_mut() {
            let s = row.sum();
            if s > rate_in {
                row *= rate_in / s;
            }
        }
        let inh = current.dot(&w_minus);
        let rate = max_entry(&inh) / cfg.rate_divisor;
        if !(rate > 0.0) {
            return Err(RnnError::Degenerate(format!(
                "channel {channel}: layer {layer_no} reconstruction weights are all zero"
            )));
        }
        current = inh.mapv(|v| rate / (rate + v));
        log.push(LayerLog {
            channel,
            layer: layer_no,
            objective: solution.objective,
            rate,
        });
        layers.push(EncoderLayer { w_minus, rate });
        rate_in = rate;
    }
    Ok((Channel { input_width, layers }, current))
}

struct Slann {
    w1: Array2<f64>,
    w2: Array2<f64>,
    alpha: f64,
}

fn fit_slann<R: Rng>(
    x_l: ArrayView2<f64>,
    cell_rates: &[f64],
    y: ArrayView2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Slann> {
    let half = cfg.readout_width / 2;
    // each layer-L cell sends w̄ once excitatory and twice inhibitory
    let masses: Vec<f64> = cell_rates.iter().map(|r| r / 3.0).collect();
    let w1 = random_rows(rng, x_l.ncols(), half, &masses);
    let z = x_l.dot(&w1);
    let alpha = max_entry(&z) / cfg.rate_divisor;
    if !(alpha > 0.0) {
        return Err(RnnError::Degenerate("encodings entering the paired layer are all zero".into()));
    }
    let hidden = z.mapv(|v| alpha / (alpha + v));
    let mut w2 = pinv(hidden.view())?.dot(&y);

    let abs_sum: f64 = w2.iter().map(|v| v.abs()).sum();
    if !(abs_sum > 0.0) {
        return Err(RnnError::Degenerate("readout weights are all zero".into()));
    }
    w2 *= cfg.slann_weight_scale / abs_sum;

    // paired-layer cells fire at rate α, so both halves of the readout must
    // keep their row sums at or below α
    let pos_rows = w2.mapv(|v| v.max(0.0)).sum_axis(Axis(1));
    let neg_rows = w2.mapv(|v| (-v).max(0.0)).sum_axis(Axis(1));
    let widest = pos_rows.iter().chain(neg_rows.iter()).cloned().fold(0.0, f64::max);
    if widest > alpha {
        w2 *= alpha / widest;
    }
    Ok(Slann { w1, w2, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn gaussian_blobs(rows: usize, dims: usize, separation: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Array2::zeros((rows, dims));
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            let class = i % 2;
            for j in 0..dims {
                let centre = if class == 0 { 0.0 } else { separation / (dims as f64).sqrt() };
                x[[i, j]] = centre + noise.sample(&mut rng);
            }
            labels.push(class);
        }
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        x.mapv_inplace(|v| (v - lo) / (hi - lo));
        LabeledDataset::from_labels(x, &labels, vec!["a".into(), "b".into()]).unwrap()
    }

    fn small_cfg(hidden: Vec<usize>) -> TrainConfig {
        TrainConfig {
            hidden_layer_sizes: hidden,
            readout_width: 20,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn dataset_checks() {
        assert!(LabeledDataset::from_labels(array![[0.0], [1.0]], &[0, 2], vec!["a".into(), "b".into()]).is_err());
        assert!(LabeledDataset::new(array![[f64::NAN]], array![[1.0]], vec!["a".into()]).is_err());
        // raw attributes may be negative; training refuses them
        let raw = LabeledDataset::new(array![[-1.0], [1.0]], array![[1.0], [1.0]], vec!["a".into()]).unwrap();
        assert!(train(&raw, &small_cfg(vec![])).is_err());
        let d = LabeledDataset::from_labels(array![[0.0], [1.0], [0.5]], &[0, 1, 0], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(d.y, array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(d.labels(), vec![0, 1, 0]);
        let (a, b) = d.split(2.0 / 3.0, 1);
        assert_eq!((a.len(), b.len()), (2, 1));
    }

    #[test]
    fn config_checks() {
        let data = gaussian_blobs(20, 3, 3.0, 1);
        let mut cfg = small_cfg(vec![]);
        cfg.readout_width = 7;
        assert!(train(&data, &cfg).is_err());
        cfg.readout_width = 8;
        cfg.rate_divisor = 0.0;
        assert!(train(&data, &cfg).is_err());
        let cfg = small_cfg(vec![0]);
        assert!(train(&data, &cfg).is_err());
    }

    #[test]
    fn degenerate_input_names_layer() {
        let data = LabeledDataset::from_labels(Array2::zeros((6, 3)), &[0, 1, 0, 1, 0, 1], vec!["a".into(), "b".into()]).unwrap();
        let err = train(&data, &small_cfg(vec![4])).unwrap_err();
        assert!(err.to_string().contains("layer 1"), "{err}");
    }

    #[test]
    fn single_encoder_free_model_runs_and_validates() {
        let data = gaussian_blobs(60, 4, 3.0, 2);
        let model = train(&data, &small_cfg(vec![])).unwrap();
        assert!(model.audit().is_empty(), "{:?}", model.audit());
        assert_eq!(model.layer_sizes(), vec![4, 20, 2]);
        let out = model.forward(data.x.view()).unwrap();
        assert_eq!(out.dim(), (60, 2));
    }

    #[test]
    fn zero_input_gives_identical_rows() {
        let data = gaussian_blobs(40, 4, 3.0, 4);
        let model = train(&data, &small_cfg(vec![6])).unwrap();
        let trace = model.forward_trace_multi(&[Array2::zeros((3, 4)).view()]).unwrap();
        // encoder cells with no inhibition sit at Λ/R = 1
        assert!(trace.encoding.iter().all(|&v| v == 1.0));
        let out = &trace.output;
        assert_eq!(out.row(0), out.row(1));
        assert_eq!(out.row(0), out.row(2));
    }

    #[test]
    fn output_matches_slann_plus_offset() {
        let data = gaussian_blobs(80, 5, 3.0, 5);
        let model = train(&data, &small_cfg(vec![8, 6])).unwrap();
        let trace = model.forward_trace_multi(&[data.x.view()]).unwrap();
        let (w1, w2) = model.slann_parts();
        let o = slann_forward(w1.view(), w2.view(), model.alpha, trace.encoding.view()).unwrap();
        for (q, ob) in trace.output.iter().zip(o.iter()) {
            assert_abs_diff_eq!(q - ob, model.offset, epsilon = 1e-10);
        }
        assert_eq!(argmax_rows(trace.output.view()), argmax_rows(o.view()));
        for layer in trace.all_layers() {
            assert!(layer.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn slann_examples() {
        let w1 = array![[0.2, 0.1], [0.3, 0.0]];
        let w2 = array![[1.0, -0.5], [0.25, 0.75]];
        let zero = Array2::zeros((3, 2));
        let out = slann_forward(w1.view(), w2.view(), 0.7, zero.view()).unwrap();
        for row in out.rows() {
            assert_eq!(row.to_vec(), vec![1.25, 0.25]);
        }
        let x = array![[0.4, 0.9]];
        let out = slann_forward(w1.view(), w2.view(), 1e6, x.view()).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 1.25, epsilon = 1e-4);
        assert_abs_diff_eq!(out[[0, 1]], 0.25, epsilon = 1e-4);
        assert!(slann_forward(w1.view(), w2.view(), 0.0, x.view()).is_err());

        // scalar loop
        let alpha = 0.3;
        let out = slann_forward(w1.view(), w2.view(), alpha, x.view()).unwrap();
        for n in 0..2 {
            let mut o = 0.0;
            for h in 0..2 {
                let mut z = 0.0;
                for i in 0..2 {
                    z += x[[0, i]] * w1[[i, h]];
                }
                o += alpha / (alpha + z) * w2[[h, n]];
            }
            assert_abs_diff_eq!(out[[0, n]], o, epsilon = 1e-15);
        }
    }

    #[test]
    fn predict_breaks_ties_low() {
        assert_eq!(argmax_rows(array![[0.5, 0.5, 0.1], [0.0, 0.2, 0.2]].view()), vec![0, 1]);
    }

    #[test]
    fn permuting_outputs_permutes_labels() {
        let data = gaussian_blobs(60, 4, 3.0, 6);
        let model = train(&data, &small_cfg(vec![5])).unwrap();
        let mut swapped = model.clone();
        let perm = [1usize, 0];
        swapped.w_plus_readout = model.w_plus_readout.select(Axis(1), &perm);
        swapped.output_lambda = model.output_lambda.select(Axis(0), &perm);
        let a = model.predict(data.x.view()).unwrap();
        let b = swapped.predict(data.x.view()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(perm[*x], *y);
        }
    }

    #[test]
    fn single_channel_multichannel_is_identical() {
        let data = gaussian_blobs(50, 4, 3.0, 7);
        let cfg = small_cfg(vec![5]);
        let a = train(&data, &cfg).unwrap();
        let b = train_multichannel(&[data.x.view()], data.y.view(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multichannel_bookkeeping() {
        let data = gaussian_blobs(50, 4, 3.0, 8);
        let other = data.x.slice(s![.., ..3]).to_owned();
        let cfg = small_cfg(vec![5]);
        let model = train_multichannel(&[data.x.view(), other.view()], data.y.view(), &cfg).unwrap();
        assert_eq!(model.encoding_width(), 10);
        assert!(model.audit().is_empty());
        assert!(train_multichannel(&[data.x.view(), other.slice(s![..10, ..])], data.y.view(), &cfg).is_err());
        assert!(model.forward(data.x.view()).is_err());
    }
}
