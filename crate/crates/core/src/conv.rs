//! Quasi-linear RNN cell activations and RNN-based image convolution.
//!
//! A signed kernel `W` is split into `W⁺ = max(W, 0)` and `W⁻ = max(−W, 0)`,
//! which act as excitatory and inhibitory spike rates from input cells to
//! receptive cells. Three receptive-cell constructions are provided:
//!
//! * single cell: `O = φ(conv(I, W⁺), conv(I, W⁻))|_{λ,r}`
//! * twin cell: inputs first pass through `1/(1+I)` and `I/(1+I)` arrays,
//!   giving `O = min(conv(1/(1+I), W) + 1, 1)`
//! * cluster: `O = ϕ(conv(I, W⁺), conv(I, W⁻)) ≈ 1 − ReLU(conv(I, W))`
//!
//! `conv` is a valid-mode, stride-1 cross-correlation (the kernel is not
//! flipped).

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Result, RnnError};

/// Absolute-sum target of cluster-normalised kernels.
pub const CLUSTER_KERNEL_MASS: f64 = 0.1;

const NORMALIZATION_TOL: f64 = 1e-12;

/// External excitatory rate and firing rate of a receptive cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationParams {
    pub lambda_plus: f64,
    pub rate: f64,
}

impl ActivationParams {
    pub fn new(lambda_plus: f64, rate: f64) -> Result<Self> {
        if !(lambda_plus.is_finite() && rate.is_finite()) || lambda_plus < 0.0 || rate < 0.0 {
            return Err(RnnError::arg("activation parameters must be finite and non-negative"));
        }
        Ok(Self { lambda_plus, rate })
    }
}

impl Default for ActivationParams {
    /// Receptive cells of the single-cell convolution: `λ = 0`, `r = 0.1`.
    fn default() -> Self {
        Self {
            lambda_plus: 0.0,
            rate: 0.1,
        }
    }
}

fn check_rate_input(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        Err(RnnError::arg(format!("{name} must be finite and non-negative, got {x}")))
    } else {
        Ok(())
    }
}

#[inline]
fn phi_unchecked(x_plus: f64, x_minus: f64, p: ActivationParams) -> f64 {
    crate::network::clipped_ratio(p.lambda_plus + x_plus, p.rate + x_minus)
}

/// Steady-state excitation of one cell, `φ(x⁺, x⁻)|_{λ,r} = min((λ + x⁺)/(r + x⁻), 1)`.
///
/// With `λ = 0, r = 1, x⁻ = 0` this is the LRNN-E cell `min(x, 1)`; with
/// `λ = 1, r = 1, x⁺ = 0` it is the exact LRNN-I cell `1/(1 + x)`.
pub fn phi_cell(x_plus: f64, x_minus: f64, params: ActivationParams) -> Result<f64> {
    check_rate_input(x_plus, "x_plus")?;
    check_rate_input(x_minus, "x_minus")?;
    Ok(phi_unchecked(x_plus, x_minus, params))
}

/// Elementwise [`phi_cell`].
pub fn phi_matrix(x_plus: ArrayView2<f64>, x_minus: ArrayView2<f64>, params: ActivationParams) -> Result<Array2<f64>> {
    if x_plus.dim() != x_minus.dim() {
        return Err(RnnError::arg("x_plus and x_minus must have the same shape"));
    }
    if let Some(&bad) = x_plus.iter().chain(x_minus.iter()).find(|v| !v.is_finite() || **v < 0.0) {
        return Err(RnnError::arg(format!("cell inputs must be finite and non-negative, got {bad}")));
    }
    Ok(Zip::from(&x_plus)
        .and(&x_minus)
        .map_collect(|&p, &m| phi_unchecked(p, m, params)))
}

/// Result of the first-order expansion of the cell equation in its
/// inhibitory input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub value: f64,
    /// `(λ⁻ + inh)/r`; the expansion is only accurate when this is small.
    pub inhibition_ratio: f64,
}

impl FirstOrder {
    pub fn well_conditioned(&self, max_ratio: f64) -> bool {
        self.inhibition_ratio <= max_ratio
    }
}

/// `((λ⁺ + exc)/r) · (1 − (λ⁻ + inh)/r)`.
pub fn first_order_approx(
    lambda_plus: f64,
    lambda_minus: f64,
    rate: f64,
    exc_sum: f64,
    inh_sum: f64,
) -> Result<FirstOrder> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(RnnError::arg("firing rate must be positive for the first-order form"));
    }
    let inhibition_ratio = (lambda_minus + inh_sum) / rate;
    Ok(FirstOrder {
        value: (lambda_plus + exc_sum) / rate * (1.0 - inhibition_ratio),
        inhibition_ratio,
    })
}

/// Exact LRNN-I cell, `1/(1 + x)`.
pub fn lrnn_i_exact(x: f64) -> f64 {
    1.0 / (1.0 + x)
}

/// Linearised LRNN-I cell, `min(1 − x, 1)` kept inside `[0, 1]`.
pub fn lrnn_i_approx(x: f64) -> f64 {
    (1.0 - x).clamp(0.0, 1.0)
}

#[inline]
fn cluster_unchecked(x_plus: f64, x_minus: f64) -> f64 {
    (1.0 / (1.0 + x_plus) + x_minus).min(1.0)
}

/// Activation of an LRNN-I / LRNN-E cluster, `ϕ(x⁺, x⁻) = min(1/(1 + x⁺) + x⁻, 1)`,
/// which tracks `1 − ReLU(x⁺ − x⁻)` for small `x⁺`.
pub fn cluster_activation(x_plus: f64, x_minus: f64) -> Result<f64> {
    check_rate_input(x_plus, "x_plus")?;
    check_rate_input(x_minus, "x_minus")?;
    Ok(cluster_unchecked(x_plus, x_minus))
}

/// A greyscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image(Array2<f64>);

impl Image {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(RnnError::arg("image is empty"));
        }
        if let Some(&bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RnnError::arg(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self(pixels))
    }

    pub fn pixels(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Valid-mode, stride-1 cross-correlation: `out[i,j] = Σ_{a,b} I[i+a, j+b] W[a,b]`.
pub fn conv2d(image: ArrayView2<f64>, kernel: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (ih, iw) = image.dim();
    let (kh, kw) = kernel.dim();
    if kh == 0 || kw == 0 {
        return Err(RnnError::arg("kernel is empty"));
    }
    if kh > ih || kw > iw {
        return Err(RnnError::arg(format!(
            "kernel {kh}x{kw} does not fit inside image {ih}x{iw}"
        )));
    }
    let mut out = Array2::zeros((ih - kh + 1, iw - kw + 1));
    Zip::from(&mut out)
        .and(image.windows((kh, kw)))
        .for_each(|o, window| {
            *o = Zip::from(&window).and(&kernel).fold(0.0, |acc, &x, &w| acc + x * w);
        });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Single,
    Twin,
    Cluster,
}

impl Scheme {
    /// Target value of `sum(|W|)` after normalisation.
    pub fn target_mass(self) -> f64 {
        match self {
            Scheme::Single | Scheme::Twin => 1.0,
            Scheme::Cluster => CLUSTER_KERNEL_MASS,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = RnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Scheme::Single),
            "twin" => Ok(Scheme::Twin),
            "cluster" => Ok(Scheme::Cluster),
            other => Err(RnnError::arg(format!("unknown kernel scheme '{other}'"))),
        }
    }
}

/// A normalised kernel together with its non-negative split.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    weights: Array2<f64>,
    positive: Array2<f64>,
    negative: Array2<f64>,
    scheme: Scheme,
}

impl ConvKernel {
    fn from_normalized(weights: Array2<f64>, scheme: Scheme) -> Self {
        let positive = weights.mapv(|w| w.max(0.0));
        let negative = weights.mapv(|w| (-w).max(0.0));
        Self {
            weights,
            positive,
            negative,
            scheme,
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn positive(&self) -> &Array2<f64> {
        &self.positive
    }

    pub fn negative(&self) -> &Array2<f64> {
        &self.negative
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn positive_mass(&self) -> f64 {
        self.positive.sum()
    }

    pub fn negative_mass(&self) -> f64 {
        self.negative.sum()
    }

    /// Shrinks every weight by `factor ∈ (0, 1]`. Shrinking keeps all the
    /// rate constraints of the scheme satisfied.
    pub fn shrunk(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(RnnError::arg("shrink factor must lie in (0, 1]"));
        }
        Ok(Self::from_normalized(&self.weights * factor, self.scheme))
    }

    fn require(&self, scheme: Scheme) -> Result<()> {
        if self.scheme != scheme {
            return Err(RnnError::arg(format!(
                "kernel prepared for {:?} scheme, {:?} required",
                self.scheme, scheme
            )));
        }
        Ok(())
    }
}

/// Normalises `W` so that `sum(|W|)` equals the scheme's target and splits it.
pub fn prepare_kernel(weights: ArrayView2<f64>, scheme: Scheme) -> Result<ConvKernel> {
    if weights.is_empty() {
        return Err(RnnError::arg("kernel is empty"));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(RnnError::arg("kernel has non-finite entries"));
    }
    let mass: f64 = weights.iter().map(|w| w.abs()).sum();
    if mass == 0.0 {
        return Err(RnnError::arg("kernel is all zeros"));
    }
    let normalized = weights.mapv(|w| w / mass * scheme.target_mass());
    Ok(ConvKernel::from_normalized(normalized, scheme))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvOutput {
    pub output: Array2<f64>,
    /// `true` where the `min(·, 1)` clamp was active.
    pub clamped: Array2<bool>,
}

/// Single-cell receptive field. With `swapped` the roles of `W⁺` and `W⁻`
/// are exchanged.
pub fn conv_single(image: &Image, kernel: &ConvKernel, params: ActivationParams, swapped: bool) -> Result<ConvOutput> {
    kernel.require(Scheme::Single)?;
    let pos = conv2d(image.pixels(), kernel.positive.view())?;
    let neg = conv2d(image.pixels(), kernel.negative.view())?;
    let (exc, inh) = if swapped { (neg, pos) } else { (pos, neg) };
    let clamped = Zip::from(&exc)
        .and(&inh)
        .map_collect(|&x, &y| params.lambda_plus + x > params.rate + y);
    let output = Zip::from(&exc)
        .and(&inh)
        .map_collect(|&x, &y| phi_unchecked(x.max(0.0), y.max(0.0), params));
    Ok(ConvOutput { output, clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinOutput {
    /// `min(conv(I₁, W) + 1, 1)`.
    pub output: Array2<f64>,
    /// `min(conv(I₁, W⁺) + conv(I₂, W⁻) + 1 − sum(W⁻), 1)`, the rate-level
    /// construction the closed form is derived from.
    pub constructive: Array2<f64>,
    pub clamped: Array2<bool>,
    /// Kernel after the image-dependent rescale and renormalisation.
    pub kernel: ConvKernel,
    /// Whether `max|conv(I₁, W)| ≤ 1` holds for the final kernel.
    pub bound_holds: bool,
}

/// The two input arrays of the twin-cell construction: `1/(1+I)` and `I/(1+I)`.
pub fn twin_arrays(image: &Image) -> (Array2<f64>, Array2<f64>) {
    let upper = image.pixels().mapv(|i| 1.0 / (1.0 + i));
    let lower = image.pixels().mapv(|i| i / (1.0 + i));
    (upper, lower)
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Twin-cell receptive field.
///
/// The kernel is first divided by `max|conv(I₁, W)|` when that exceeds one,
/// then renormalised to unit absolute sum and split.
pub fn conv_twin(image: &Image, kernel: &ConvKernel) -> Result<TwinOutput> {
    kernel.require(Scheme::Twin)?;
    let (upper, lower) = twin_arrays(image);

    let mut weights = kernel.weights.clone();
    let peak = max_abs(&conv2d(upper.view(), weights.view())?);
    if peak > 1.0 {
        weights.mapv_inplace(|w| w / peak);
    }
    let kernel = prepare_kernel(weights.view(), Scheme::Twin)?;

    let signed = conv2d(upper.view(), kernel.weights.view())?;
    let bound_holds = max_abs(&signed) <= 1.0 + NORMALIZATION_TOL;
    let clamped = signed.mapv(|v| v > 0.0);
    let output = signed.mapv(|v| (v + 1.0).min(1.0));

    let neg_mass = kernel.negative_mass();
    let exc = conv2d(upper.view(), kernel.positive.view())?;
    let inh = conv2d(lower.view(), kernel.negative.view())?;
    let constructive = Zip::from(&exc)
        .and(&inh)
        .map_collect(|&a, &b| (a + b + 1.0 - neg_mass).min(1.0));

    Ok(TwinOutput {
        output,
        constructive,
        clamped,
        kernel,
        bound_holds,
    })
}

/// Cluster receptive field, `ϕ(conv(I, W⁺), conv(I, W⁻))`.
pub fn conv_cluster(image: &Image, kernel: &ConvKernel) -> Result<ConvOutput> {
    kernel.require(Scheme::Cluster)?;
    let limit = CLUSTER_KERNEL_MASS * (1.0 + NORMALIZATION_TOL);
    if kernel.positive_mass() > limit || kernel.negative_mass() > limit {
        return Err(RnnError::arg(format!(
            "cluster kernel masses ({}, {}) exceed {CLUSTER_KERNEL_MASS}",
            kernel.positive_mass(),
            kernel.negative_mass()
        )));
    }
    let exc = conv2d(image.pixels(), kernel.positive.view())?;
    let inh = conv2d(image.pixels(), kernel.negative.view())?;
    let clamped = Zip::from(&exc)
        .and(&inh)
        .map_collect(|&x, &y| 1.0 / (1.0 + x) + y >= 1.0);
    let output = Zip::from(&exc)
        .and(&inh)
        .map_collect(|&x, &y| cluster_unchecked(x.max(0.0), y.max(0.0)));
    Ok(ConvOutput { output, clamped })
}

/// `1 − ReLU(conv(I, W))`, the target the cluster construction approximates.
pub fn inverted_relu_conv(image: &Image, kernel: &ConvKernel) -> Result<Array2<f64>> {
    Ok(conv2d(image.pixels(), kernel.weights.view())?.mapv(|v| 1.0 - v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(lambda_plus: f64, rate: f64) -> ActivationParams {
        ActivationParams::new(lambda_plus, rate).unwrap()
    }

    fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
        Image::new(Array2::from_shape_fn((h, w), |_| rng.gen())).unwrap()
    }

    fn random_kernel(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Array2<f64> {
        Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0..1.0))
    }

    fn naive_conv(image: &Array2<f64>, kernel: &Array2<f64>) -> Array2<f64> {
        let (ih, iw) = image.dim();
        let (kh, kw) = kernel.dim();
        let mut out = Array2::zeros((ih - kh + 1, iw - kw + 1));
        for i in 0..ih - kh + 1 {
            for j in 0..iw - kw + 1 {
                let mut s = 0.0;
                for a in 0..kh {
                    for b in 0..kw {
                        s += image[[i + a, j + b]] * kernel[[a, b]];
                    }
                }
                out[[i, j]] = s;
            }
        }
        out
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_cell(0.5, 0.0, p(0.0, 1.0)).unwrap(), 0.5);
        assert_eq!(phi_cell(0.0, 1.0, p(1.0, 1.0)).unwrap(), 0.5);
        assert_eq!(phi_cell(3.0, 0.0, p(0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(phi_cell(0.2, 0.0, p(0.0, 0.0)).unwrap(), 1.0);
        assert!(phi_cell(-0.1, 0.0, p(0.0, 1.0)).is_err());
        assert!(phi_cell(0.0, f64::NAN, p(0.0, 1.0)).is_err());
    }

    #[test]
    fn first_order_examples() {
        let f = first_order_approx(1.0, 0.0, 1.0, 0.0, 0.05).unwrap();
        assert_abs_diff_eq!(f.value, 0.95, epsilon = 1e-15);
        assert!(f.well_conditioned(0.1));
        let err = (lrnn_i_exact(0.05) - f.value).abs();
        assert_abs_diff_eq!(err, 1.0 / 1.05 - 0.95, epsilon = 1e-15);
        assert!(err <= 0.05 * 0.05);
        assert_eq!(lrnn_i_approx(0.05), f.value);
        assert_eq!(first_order_approx(0.0, 0.3, 2.0, 0.0, 0.7).unwrap().value, 0.0);
        assert!(first_order_approx(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(cluster_activation(0.0, 0.0).unwrap(), 1.0);
        let v = cluster_activation(0.02, 0.0).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 1.02, epsilon = 1e-15);
        assert_abs_diff_eq!(v - 0.98, 0.02 * 0.02 / 1.02, epsilon = 1e-15);
        assert_eq!(cluster_activation(0.0, 0.5).unwrap(), 1.0);
        assert!(cluster_activation(0.0, -1.0).is_err());
    }

    #[test]
    fn conv2d_examples() {
        let ones = Array2::<f64>::ones((3, 3));
        assert_eq!(conv2d(ones.view(), array![[1.0]].view()).unwrap(), ones);
        let out = conv2d(Array2::ones((4, 4)).view(), Array2::ones((2, 2)).view()).unwrap();
        assert_eq!(out, Array2::from_elem((3, 3), 4.0));
        assert!(conv2d(Array2::ones((2, 2)).view(), Array2::ones((3, 1)).view()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let image = Array2::from_shape_fn((8, 8), |_| rng.gen::<f64>());
        let kernel = random_kernel(&mut rng, 3, 3);
        assert_eq!(conv2d(image.view(), kernel.view()).unwrap(), naive_conv(&image, &kernel));
    }

    #[test]
    fn conv2d_orientation_is_cross_correlation() {
        let image = array![[1.0, 2.0, 3.0]];
        assert_eq!(conv2d(image.view(), array![[1.0, 0.0]].view()).unwrap(), array![[1.0, 2.0]]);
    }

    #[test]
    fn prepare_examples() {
        let w = array![[2.0, -2.0]];
        let k = prepare_kernel(w.view(), Scheme::Single).unwrap();
        assert_eq!(k.weights(), &array![[0.5, -0.5]]);
        assert_eq!(k.positive(), &array![[0.5, 0.0]]);
        assert_eq!(k.negative(), &array![[0.0, 0.5]]);
        let k = prepare_kernel(w.view(), Scheme::Cluster).unwrap();
        assert_abs_diff_eq!(k.weights()[[0, 0]], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(k.weights()[[0, 1]], -0.05, epsilon = 1e-15);
        assert!(prepare_kernel(Array2::zeros((2, 2)).view(), Scheme::Single).is_err());
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = random_image(&mut rng, 6, 6);
        let k = prepare_kernel(random_kernel(&mut rng, 3, 3).view(), Scheme::Single).unwrap();
        assert!(conv_cluster(&img, &k).is_err());
        assert!(conv_twin(&img, &k).is_err());
        let k = prepare_kernel(random_kernel(&mut rng, 3, 3).view(), Scheme::Cluster).unwrap();
        assert!(conv_single(&img, &k, ActivationParams::default(), false).is_err());
    }

    #[test]
    fn single_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = p(0.3, 0.5);
        let k = prepare_kernel(random_kernel(&mut rng, 3, 3).view(), Scheme::Single).unwrap();
        let zero = Image::new(Array2::zeros((5, 5))).unwrap();
        let out = conv_single(&zero, &k, params, false).unwrap().output;
        assert!(out.iter().all(|&v| (v - 0.6).abs() < 1e-15));

        let positive = prepare_kernel(array![[1.0, 2.0], [0.5, 0.5]].view(), Scheme::Single).unwrap();
        let img = random_image(&mut rng, 8, 8);
        let out = conv_single(&img, &positive, p(0.0, 0.1), false).unwrap().output;
        let expected = conv2d(img.pixels(), positive.weights().view()).unwrap().mapv(|v| (v / 0.1).min(1.0));
        for (a, b) in out.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }

        let img = random_image(&mut rng, 16, 16);
        let out = conv_single(&img, &k, ActivationParams::default(), false).unwrap();
        let swapped = conv_single(&img, &k, ActivationParams::default(), true).unwrap();
        let pos = naive_conv(&img.pixels().to_owned(), k.positive());
        let neg = naive_conv(&img.pixels().to_owned(), k.negative());
        for idx in 0..pos.len() {
            let (i, j) = (idx / pos.ncols(), idx % pos.ncols());
            let x = pos[[i, j]];
            let y = neg[[i, j]];
            assert_abs_diff_eq!(out.output[[i, j]], (x / (0.1 + y)).min(1.0), epsilon = 1e-14);
            assert_abs_diff_eq!(swapped.output[[i, j]], (y / (0.1 + x)).min(1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn twin_examples() {
        let ones = Image::new(Array2::ones((3, 3))).unwrap();
        let (upper, lower) = twin_arrays(&ones);
        assert!(upper.iter().chain(lower.iter()).all(|&v| v == 0.5));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_image(&mut rng, 8, 8);
        let k = prepare_kernel(random_kernel(&mut rng, 3, 3).view(), Scheme::Twin).unwrap();
        let out = conv_twin(&img, &k).unwrap();
        assert!(out.bound_holds);
        for (a, b) in out.output.iter().zip(out.constructive.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        let negative = prepare_kernel(Array2::from_elem((2, 2), -1.0).view(), Scheme::Twin).unwrap();
        let out = conv_twin(&img, &negative).unwrap();
        assert!(out.output.iter().all(|&v| v < 1.0));
    }

    #[test]
    fn cluster_examples_on_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = prepare_kernel(random_kernel(&mut rng, 7, 7).view(), Scheme::Cluster).unwrap();
        let zero = Image::new(Array2::zeros((10, 10))).unwrap();
        assert!(conv_cluster(&zero, &k).unwrap().output.iter().all(|&v| v == 1.0));

        let img = random_image(&mut rng, 32, 32);
        let out = conv_cluster(&img, &k).unwrap();
        let target = inverted_relu_conv(&img, &k).unwrap();
        let s = k.positive_mass();
        for ((o, t), c) in out.output.iter().zip(target.iter()).zip(out.clamped.iter()) {
            if !c {
                assert!((o - t).abs() <= s * s);
            }
        }

        let too_big = ConvKernel::from_normalized(array![[0.5, -0.1]], Scheme::Cluster);
        assert!(conv_cluster(&img, &too_big).is_err());
    }

    #[test]
    fn shrink_bounds() {
        let k = prepare_kernel(array![[1.0, -1.0]].view(), Scheme::Cluster).unwrap();
        assert!(k.shrunk(0.0).is_err());
        assert!(k.shrunk(1.5).is_err());
        let small = k.shrunk(0.2).unwrap();
        assert_abs_diff_eq!(small.positive_mass(), 0.01, epsilon = 1e-15);
    }
}
