//! Training kernels: projected FISTA for non-negative ℓ1-regularised least
//! squares, an SVD pseudo-inverse, and the column standardisation applied
//! to hidden encodings before reconstruction.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RnnError};

/// Floor of every column after [`sigma_transform`].
pub const SIGMA_FLOOR: f64 = 0.1;

const POWER_ITERATIONS: usize = 500;
const POWER_TOL: f64 = 1e-12;

/// `min_W ||B − A W||² + reg·||W||₁` subject to `W ≥ 0`.
#[derive(Debug, Clone)]
pub struct NnlsProblem<'a> {
    pub design: ArrayView2<'a, f64>,
    pub target: ArrayView2<'a, f64>,
    pub reg: f64,
}

impl<'a> NnlsProblem<'a> {
    pub fn new(design: ArrayView2<'a, f64>, target: ArrayView2<'a, f64>, reg: f64) -> Result<Self> {
        if design.nrows() != target.nrows() {
            return Err(RnnError::arg(format!(
                "design has {} rows, target has {}",
                design.nrows(),
                target.nrows()
            )));
        }
        if design.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(RnnError::arg("problem data must be finite"));
        }
        if !(reg >= 0.0) || !reg.is_finite() {
            return Err(RnnError::arg("reg must be finite and non-negative"));
        }
        Ok(Self { design, target, reg })
    }

    pub fn objective(&self, w: &Array2<f64>) -> f64 {
        let residual = &self.target - &self.design.dot(w);
        residual.iter().map(|r| r * r).sum::<f64>() + self.reg * w.iter().map(|v| v.abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1 / (2 σ_max(A)²)`, with `σ_max` from power iteration.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaConfig {
    pub max_iter: usize,
    pub step: StepSize,
    /// Seeds the start vector of the power iteration.
    pub seed: u64,
}

impl Default for FistaConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            step: StepSize::Auto,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FistaSolution {
    pub weights: Array2<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Largest singular value of `a` by power iteration on `aᵀa`.
pub fn spectral_norm(a: ArrayView2<f64>, seed: u64) -> f64 {
    let gram = a.t().dot(&a);
    spectral_norm_of_gram(&gram, seed)
}

fn spectral_norm_of_gram(gram: &Array2<f64>, seed: u64) -> f64 {
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array1::from_shape_fn(n, |_| rng.gen::<f64>() + 0.5);
    let mut norm = v.dot(&v).sqrt();
    v /= norm;
    let mut eig = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let next = gram.dot(&v);
        norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = next / norm;
        let converged = (norm - eig).abs() <= POWER_TOL * norm;
        eig = norm;
        if converged {
            break;
        }
    }
    eig.sqrt()
}

/// Projected FISTA: gradient step on the quadratic, soft-threshold by
/// `reg·step`, clamp negatives to zero, then momentum extrapolation.
///
/// The iterate with the lowest objective seen (starting from `W = 0`) is
/// returned.
pub fn fista_nnls(problem: &NnlsProblem<'_>, cfg: &FistaConfig) -> Result<FistaSolution> {
    if cfg.max_iter == 0 {
        return Err(RnnError::arg("max_iter must be at least 1"));
    }
    let a = problem.design;
    let b = problem.target;
    if a.iter().all(|&v| v == 0.0) {
        return Err(RnnError::arg("design matrix is all zeros"));
    }
    let gram = a.t().dot(&a);
    let cross = a.t().dot(&b);
    let b_sq: f64 = b.iter().map(|v| v * v).sum();

    let step = match cfg.step {
        StepSize::Fixed(s) if s > 0.0 && s.is_finite() => s,
        StepSize::Fixed(s) => return Err(RnnError::arg(format!("step must be positive, got {s}"))),
        StepSize::Auto => {
            let sigma = spectral_norm_of_gram(&gram, cfg.seed);
            1.0 / (2.0 * sigma * sigma)
        }
    };
    let shrink = problem.reg * step;

    // ||B − AW||² = tr(WᵀGW) − 2 tr(WᵀC) + ||B||²
    let objective = |w: &Array2<f64>, gw: &Array2<f64>| -> f64 {
        let quad: f64 = w.iter().zip(gw.iter()).map(|(x, y)| x * y).sum();
        let lin: f64 = w.iter().zip(cross.iter()).map(|(x, y)| x * y).sum();
        let l1: f64 = w.iter().sum();
        (quad - 2.0 * lin + b_sq).max(0.0) + problem.reg * l1
    };

    let (m, n) = (a.ncols(), b.ncols());
    let mut w = Array2::<f64>::zeros((m, n));
    let mut y = w.clone();
    let mut t = 1.0_f64;
    let mut best = w.clone();
    let mut best_obj = b_sq;

    for iteration in 1..=cfg.max_iter {
        let gy = gram.dot(&y);
        let mut next = y.clone();
        next.zip_mut_with(&gy, |v, &g| *v -= step * 2.0 * g);
        next.zip_mut_with(&cross, |v, &c| *v += step * 2.0 * c);
        next.mapv_inplace(|v| (v - shrink).max(0.0));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(RnnError::NonFinite { iteration });
        }

        let obj = objective(&next, &gram.dot(&next));
        if obj < best_obj {
            best_obj = obj;
            best.assign(&next);
        }

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        y = &next + &((&next - &w) * momentum);
        w = next;
        t = t_next;
    }

    Ok(FistaSolution {
        weights: best,
        objective: best_obj,
        iterations: cfg.max_iter,
    })
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
/// `ε · max(rows, cols) · σ_max` are treated as zero.
pub fn pinv(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Ok(Array2::zeros((cols, rows)));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(RnnError::arg("pinv input must be finite"));
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| a[[i, j]]);
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = f64::EPSILON * rows.max(cols) as f64 * sigma_max;

    let mut out = Array2::<f64>::zeros((cols, rows));
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let inv = 1.0 / s;
        let u_col = u.column(k);
        let v_row = v_t.row(k);
        for i in 0..cols {
            let vi = v_row[i] * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..rows {
                out[[i, j]] += vi * u_col[j];
            }
        }
    }
    Ok(out)
}

/// Per column: affine map to `[0, 1]`, then z-score with the sample standard
/// deviation; finally one global shift so that the smallest entry is
/// [`SIGMA_FLOOR`].
///
/// Constant columns map to 0.5 before standardisation and to 0 after.
pub fn sigma_transform(h: ArrayView2<f64>) -> Array2<f64> {
    let mut out = h.to_owned();
    let rows = out.nrows();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            col.mapv_inplace(|v| (v - lo) / (hi - lo));
        } else {
            col.fill(0.5);
        }
        let mean = col.sum() / rows as f64;
        let var = if rows > 1 {
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rows - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        let shift = -min + SIGMA_FLOOR;
        out.mapv_inplace(|v| v + shift);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.gen::<f64>())
    }

    #[test]
    fn fista_identity_closed_form() {
        let a = Array2::eye(2);
        let b = array![[1.0], [0.2]];
        let p = NnlsProblem::new(a.view(), b.view(), 1.0).unwrap();
        let cfg = FistaConfig {
            max_iter: 200,
            ..Default::default()
        };
        let sol = fista_nnls(&p, &cfg).unwrap();
        assert_abs_diff_eq!(sol.weights[[0, 0]], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.weights[[1, 0]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fista_zero_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 6, 4);
        let b = Array2::zeros((6, 2));
        let p = NnlsProblem::new(a.view(), b.view(), 0.3).unwrap();
        let sol = fista_nnls(&p, &FistaConfig::default()).unwrap();
        assert!(sol.weights.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fista_rejects_bad_input() {
        let a = Array2::zeros((3, 2));
        let b = Array2::ones((3, 1));
        let p = NnlsProblem::new(a.view(), b.view(), 1.0).unwrap();
        assert!(fista_nnls(&p, &FistaConfig::default()).is_err());
        assert!(NnlsProblem::new(a.view(), Array2::ones((2, 1)).view(), 1.0).is_err());
        assert!(NnlsProblem::new(a.view(), b.view(), -1.0).is_err());

        let a = Array2::eye(2);
        let b = Array2::ones((2, 1));
        let p = NnlsProblem::new(a.view(), b.view(), 1.0).unwrap();
        let cfg = FistaConfig {
            step: StepSize::Fixed(0.0),
            ..Default::default()
        };
        assert!(fista_nnls(&p, &cfg).is_err());
        let cfg = FistaConfig {
            step: StepSize::Fixed(1e200),
            ..Default::default()
        };
        assert!(matches!(fista_nnls(&p, &cfg), Err(RnnError::NonFinite { .. })));
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 12, 5);
        let svd = DMatrix::from_fn(12, 5, |i, j| a[[i, j]]).svd(false, false);
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        assert_abs_diff_eq!(spectral_norm(a.view(), 1), top, epsilon = 1e-8 * top);
    }

    #[test]
    fn pinv_examples() {
        let eye = Array2::<f64>::eye(3);
        let p = pinv(eye.view()).unwrap();
        for (a, b) in p.iter().zip(eye.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let p = pinv(array![[2.0]].view()).unwrap();
        assert_abs_diff_eq!(p[[0, 0]], 0.5, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random(&mut rng, 10, 6);
        let p = pinv(a.view()).unwrap();
        let diff = &a.dot(&p).dot(&a) - &a;
        let fro = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(fro(&diff) <= 1e-8 * fro(&a));
    }

    #[test]
    fn pinv_rank_deficient() {
        // rank one: pinv(x yᵀ) = y xᵀ / (|x|²|y|²)
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let p = pinv(a.view()).unwrap();
        let scale = 14.0 * 5.0;
        let expected = array![[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]] / scale;
        for (x, y) in p.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
        assert_eq!(pinv(Array2::<f64>::zeros((2, 3)).view()).unwrap(), Array2::zeros((3, 2)));
    }

    #[test]
    fn sigma_examples() {
        let out = sigma_transform(array![[0.0], [1.0], [2.0]].view());
        for (a, b) in out.iter().zip([0.1, 1.1, 2.1]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let out = sigma_transform(array![[3.0, 0.0], [3.0, 1.0], [3.0, 2.0]].view());
        // constant column becomes 0, global shift is 1.1
        for v in out.column(0) {
            assert_abs_diff_eq!(*v, 1.1, epsilon = 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random(&mut rng, 9, 4);
        let out = sigma_transform(h.view());
        assert_abs_diff_eq!(out.iter().cloned().fold(f64::INFINITY, f64::min), SIGMA_FLOOR, epsilon = 1e-15);
    }
}
