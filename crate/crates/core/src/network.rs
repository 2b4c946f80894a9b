//! Recurrent random neural network description and its stationary
//! excitation probabilities.
//!
//! A network of `L` integer-state neurons receives Poisson spike trains from
//! the outside world (excitatory rate `Λ_l`, inhibitory rate `λ_l`). An
//! excited neuron fires at rate `r_l` and routes each spike to neuron `j` as
//! excitatory (weight `w⁺_{l,j} = r_l p⁺_{l,j}`), as inhibitory
//! (`w⁻_{l,j} = r_l p⁻_{l,j}`), or lets it leave the network.
//!
//! In steady state each neuron is excited with probability
//!
//! ```text
//! q_l = min(λ⁺_l / (r_l + λ⁻_l), 1)
//! λ⁺_l = Λ_l + Σ_k q_k w⁺_{k,l}
//! λ⁻_l = λ_l + Σ_k q_k w⁻_{k,l}
//! ```
//!
//! which [`solve_steady_state`] finds by successive substitution.

use std::fmt;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Result, RnnError};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Row sums may exceed the firing rate by this relative slack before the
/// validator complains; it absorbs rounding from normalisation.
const ROW_SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RnnNetwork {
    w_plus: Array2<f64>,
    w_minus: Array2<f64>,
    rate: Array1<f64>,
    ext_excitatory: Array1<f64>,
    ext_inhibitory: Array1<f64>,
}

impl RnnNetwork {
    /// Builds a network after checking that all shapes agree. Values are not
    /// checked here; use [`validate_network`] for that.
    pub fn new(
        w_plus: Array2<f64>,
        w_minus: Array2<f64>,
        rate: Array1<f64>,
        ext_excitatory: Array1<f64>,
        ext_inhibitory: Array1<f64>,
    ) -> Result<Self> {
        let n = rate.len();
        if n == 0 {
            return Err(RnnError::arg("network must contain at least one neuron"));
        }
        if w_plus.dim() != (n, n) || w_minus.dim() != (n, n) {
            return Err(RnnError::arg(format!(
                "weight matrices must be {n}x{n}, got {:?} and {:?}",
                w_plus.dim(),
                w_minus.dim()
            )));
        }
        if ext_excitatory.len() != n || ext_inhibitory.len() != n {
            return Err(RnnError::arg(format!(
                "external rate vectors must have length {n}"
            )));
        }
        Ok(Self {
            w_plus,
            w_minus,
            rate,
            ext_excitatory,
            ext_inhibitory,
        })
    }

    /// A network with no internal connections.
    pub fn isolated(rate: Array1<f64>, ext_excitatory: Array1<f64>, ext_inhibitory: Array1<f64>) -> Result<Self> {
        let n = rate.len();
        Self::new(
            Array2::zeros((n, n)),
            Array2::zeros((n, n)),
            rate,
            ext_excitatory,
            ext_inhibitory,
        )
    }

    /// Draws a random network that satisfies every constraint checked by
    /// [`validate_network`]. Firing rates lie in `[0.5, 2)`, external rates in
    /// `[0, 1)`, and each neuron keeps a random departure probability.
    pub fn random_valid<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        let rate = Array1::from_shape_fn(size, |_| rng.gen_range(0.5..2.0));
        let ext_excitatory = Array1::from_shape_fn(size, |_| rng.gen::<f64>());
        let ext_inhibitory = Array1::from_shape_fn(size, |_| 0.5 * rng.gen::<f64>());
        let mut w_plus = Array2::zeros((size, size));
        let mut w_minus = Array2::zeros((size, size));
        for i in 0..size {
            // 2L routing masses plus one departure mass, normalised to 1
            let masses: Vec<f64> = (0..2 * size + 1).map(|_| rng.gen::<f64>()).collect();
            let total: f64 = masses.iter().sum();
            for j in 0..size {
                w_plus[[i, j]] = rate[i] * masses[j] / total;
                w_minus[[i, j]] = rate[i] * masses[size + j] / total;
            }
        }
        Self {
            w_plus,
            w_minus,
            rate,
            ext_excitatory,
            ext_inhibitory,
        }
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    pub fn w_plus(&self) -> &Array2<f64> {
        &self.w_plus
    }

    pub fn w_minus(&self) -> &Array2<f64> {
        &self.w_minus
    }

    pub fn rate(&self) -> &Array1<f64> {
        &self.rate
    }

    pub fn ext_excitatory(&self) -> &Array1<f64> {
        &self.ext_excitatory
    }

    pub fn ext_inhibitory(&self) -> &Array1<f64> {
        &self.ext_inhibitory
    }

    /// Departure probability `ν_i` of a spike fired by neuron `i`; `None` for
    /// neurons that never fire.
    pub fn departure_probability(&self, i: usize) -> Option<f64> {
        let r = self.rate[i];
        if r > 0.0 {
            let out: f64 = self.w_plus.row(i).sum() + self.w_minus.row(i).sum();
            Some(1.0 - out / r)
        } else {
            None
        }
    }

    /// Multiplies every rate and weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w_plus: &self.w_plus * factor,
            w_minus: &self.w_minus * factor,
            rate: &self.rate * factor,
            ext_excitatory: &self.ext_excitatory * factor,
            ext_inhibitory: &self.ext_inhibitory * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { neuron: usize, field: &'static str },
    Negative { neuron: usize, field: &'static str, value: f64 },
    RowSumExceedsRate { neuron: usize, row_sum: f64, rate: f64 },
}

impl Violation {
    pub fn neuron(&self) -> usize {
        match *self {
            Violation::NonFinite { neuron, .. }
            | Violation::Negative { neuron, .. }
            | Violation::RowSumExceedsRate { neuron, .. } => neuron,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { neuron, field } => {
                write!(f, "neuron {neuron}: non-finite entry in {field}")
            }
            Violation::Negative { neuron, field, value } => {
                write!(f, "neuron {neuron}: negative entry {value} in {field}")
            }
            Violation::RowSumExceedsRate { neuron, row_sum, rate } => {
                write!(f, "neuron {neuron}: row sum {row_sum} > r {rate}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(RnnError::InvalidArgument(format!(
                "invalid network: {}",
                msg.join("; ")
            )))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "pass");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks non-negativity, finiteness and `Σ_j (w⁺_{i,j} + w⁻_{i,j}) ≤ r_i`.
pub fn validate_network(net: &RnnNetwork) -> ValidationReport {
    let mut violations = Vec::new();
    let n = net.len();
    for i in 0..n {
        let scalars = [
            ("r", net.rate[i]),
            ("Lambda_plus", net.ext_excitatory[i]),
            ("lambda_minus", net.ext_inhibitory[i]),
        ];
        let weights = net
            .w_plus
            .row(i)
            .into_iter()
            .map(|&v| ("W_plus", v))
            .chain(net.w_minus.row(i).into_iter().map(|&v| ("W_minus", v)));
        let mut finite = true;
        for (field, value) in scalars.into_iter().chain(weights) {
            if !value.is_finite() {
                if finite {
                    violations.push(Violation::NonFinite { neuron: i, field });
                }
                finite = false;
            } else if value < 0.0 {
                violations.push(Violation::Negative { neuron: i, field, value });
            }
        }
        if !finite {
            continue;
        }
        let row_sum = net.w_plus.row(i).sum() + net.w_minus.row(i).sum();
        let rate = net.rate[i];
        if row_sum > rate * (1.0 + ROW_SUM_SLACK) && row_sum > 0.0 {
            violations.push(Violation::RowSumExceedsRate { neuron: i, row_sum, rate });
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub q: Array1<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `min(num / den, 1)` with the `0/0 = 0` convention for a neuron that is
/// never excited.
#[inline]
pub(crate) fn clipped_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else if den <= 0.0 {
        1.0
    } else {
        (num / den).min(1.0)
    }
}

/// One Jacobi sweep of the steady-state map, using only `q`.
pub fn steady_state_map(net: &RnnNetwork, q: &Array1<f64>) -> Array1<f64> {
    let exc = &net.ext_excitatory + &net.w_plus.t().dot(q);
    let inh = &net.ext_inhibitory + &net.w_minus.t().dot(q);
    let mut out = Array1::zeros(net.len());
    for l in 0..net.len() {
        out[l] = clipped_ratio(exc[l], net.rate[l] + inh[l]);
    }
    out
}

/// Max-norm distance between `q` and its image under the steady-state map.
pub fn fixed_point_residual(net: &RnnNetwork, q: &Array1<f64>) -> Result<f64> {
    if q.len() != net.len() {
        return Err(RnnError::arg(format!(
            "q has length {}, network has {} neurons",
            q.len(),
            net.len()
        )));
    }
    let next = steady_state_map(net, q);
    Ok(max_abs_diff(&next, q))
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves the steady-state equations starting from `q = 0`.
pub fn solve_steady_state(net: &RnnNetwork, tol: f64, max_iter: usize) -> Result<SteadyState> {
    solve_steady_state_from(net, Array1::zeros(net.len()), tol, max_iter)
}

/// Successive substitution from an arbitrary starting point in `[0,1]^L`.
pub fn solve_steady_state_from(
    net: &RnnNetwork,
    start: Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    validate_network(net).into_result()?;
    if !(tol > 0.0) {
        return Err(RnnError::arg("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(RnnError::arg("max_iter must be at least 1"));
    }
    if start.len() != net.len() {
        return Err(RnnError::arg("starting point has the wrong length"));
    }
    if start.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(RnnError::arg("starting point must lie in [0,1]"));
    }

    let mut q = start;
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = steady_state_map(net, &q);
        residual = max_abs_diff(&next, &q);
        if residual <= tol {
            return Ok(SteadyState {
                q,
                iterations: iteration,
                residual,
            });
        }
        q = next;
    }
    Err(RnnError::NoConvergence {
        iterations: max_iter,
        residual,
        last: q.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(rate: f64, exc: f64, inh: f64) -> RnnNetwork {
        RnnNetwork::isolated(array![rate], array![exc], array![inh]).unwrap()
    }

    fn mutual_inhibition() -> RnnNetwork {
        RnnNetwork::new(
            Array2::zeros((2, 2)),
            array![[0.0, 1.0], [1.0, 0.0]],
            array![1.0, 1.0],
            array![0.5, 0.5],
            array![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_network(&single(1.0, 0.5, 0.0)).is_valid());

        let bad = RnnNetwork::new(
            Array2::zeros((1, 1)),
            array![[2.0]],
            array![1.0],
            array![0.0],
            array![0.0],
        )
        .unwrap();
        let report = validate_network(&bad);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].to_string(), "neuron 0: row sum 2 > r 1");

        let boundary = RnnNetwork::new(
            array![[0.0, 0.4], [0.0, 0.0]],
            array![[0.0, 0.6], [0.0, 0.0]],
            array![1.0, 1.0],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap();
        assert!(validate_network(&boundary).is_valid());
        assert_abs_diff_eq!(boundary.departure_probability(0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn validation_reports_negative_and_nonfinite() {
        let net = RnnNetwork::new(
            array![[0.0, -0.1], [0.0, 0.0]],
            Array2::zeros((2, 2)),
            array![1.0, f64::NAN],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap();
        let report = validate_network(&net);
        assert!(report.violations.contains(&Violation::Negative {
            neuron: 0,
            field: "W_plus",
            value: -0.1
        }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonFinite { neuron: 1, field: "r" })));
    }

    #[test]
    fn zero_rate_with_outgoing_weights_is_rejected() {
        let net = RnnNetwork::new(
            array![[0.0, 0.1], [0.0, 0.0]],
            Array2::zeros((2, 2)),
            array![0.0, 1.0],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap();
        assert!(!validate_network(&net).is_valid());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let res = RnnNetwork::new(
            Array2::zeros((2, 2)),
            Array2::zeros((1, 1)),
            array![1.0, 1.0],
            array![0.0, 0.0],
            array![0.0, 0.0],
        );
        assert!(res.is_err());
    }

    #[test]
    fn isolated_neuron() {
        let s = solve_steady_state(&single(1.0, 0.5, 0.0), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(s.q[0], 0.5, epsilon = 1e-12);
        let s = solve_steady_state(&single(1.0, 2.0, 0.0), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(s.q[0], 1.0);
    }

    #[test]
    fn zero_denominator_conventions() {
        // r = 0, λ = 0, Λ > 0: excitation never drains
        let s = solve_steady_state(&single(0.0, 0.3, 0.0), DEFAULT_TOL, 10).unwrap();
        assert_eq!(s.q[0], 1.0);
        // 0/0 → 0
        let s = solve_steady_state(&single(0.0, 0.0, 0.0), DEFAULT_TOL, 10).unwrap();
        assert_eq!(s.q[0], 0.0);
    }

    #[test]
    fn mutual_inhibition_matches_quadratic_root() {
        // q = 0.5 / (1 + q)  ⇒  q² + q − 0.5 = 0
        let expected = (-1.0 + 3f64.sqrt()) / 2.0;
        let s = solve_steady_state(&mutual_inhibition(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(s.q[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(s.q[1], expected, epsilon = 1e-9);
        assert!(s.residual <= DEFAULT_TOL);
    }

    #[test]
    fn residual_examples() {
        let net = single(1.0, 0.5, 0.0);
        assert_abs_diff_eq!(fixed_point_residual(&net, &array![0.0]).unwrap(), 0.5);
        assert!(fixed_point_residual(&net, &array![0.0, 0.0]).is_err());

        let net = mutual_inhibition();
        let s = solve_steady_state(&net, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fixed_point_residual(&net, &s.q).unwrap() <= DEFAULT_TOL);
        let perturbed = &s.q + 0.1;
        // q' = q + 0.1 maps to 0.5/(1.1 + q); defect = 0.1 + q − 0.5/(1.1 + q)
        let q = s.q[0];
        let expected = (q + 0.1 - 0.5 / (1.1 + q)).abs();
        let r = fixed_point_residual(&net, &perturbed).unwrap();
        assert!(r > 0.0);
        assert_abs_diff_eq!(r, expected, epsilon = 1e-9);
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let err = solve_steady_state(&mutual_inhibition(), 1e-300, 3).unwrap_err();
        match err {
            RnnError::NoConvergence { iterations, last, residual } => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 2);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let net = single(1.0, 0.5, 0.0);
        assert!(solve_steady_state(&net, 0.0, 10).is_err());
        assert!(solve_steady_state(&net, 1e-9, 0).is_err());
        assert!(solve_steady_state_from(&net, array![1.5], 1e-9, 10).is_err());
    }

    #[test]
    fn random_networks_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for size in 1..8 {
            assert!(validate_network(&RnnNetwork::random_valid(size, &mut rng)).is_valid());
        }
    }
}
