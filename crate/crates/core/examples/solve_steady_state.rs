//! Solve the excitation probabilities of two mutually inhibiting neurons and
//! check them against the root of q² + q − 1/2 = 0.

use ndarray::array;
use rnnkit::network::{solve_steady_state, validate_network, DEFAULT_MAX_ITER, DEFAULT_TOL};
use rnnkit::RnnNetwork;

fn main() -> rnnkit::Result<()> {
    let net = RnnNetwork::new(
        array![[0.0, 0.0], [0.0, 0.0]],
        array![[0.0, 1.0], [1.0, 0.0]],
        array![1.0, 1.0],
        array![0.5, 0.5],
        array![0.0, 0.0],
    )?;
    let ss = solve_steady_state(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let exact = (3f64.sqrt() - 1.0) / 2.0;
    println!("q = {:?} after {} sweeps (residual {:.1e})", ss.q.to_vec(), ss.iterations, ss.residual);
    println!("closed form {exact:.12}, error {:.2e}", (ss.q[0] - exact).abs());

    // a neuron that emits more spikes than it fires is rejected
    let bad = RnnNetwork::new(array![[0.0]], array![[2.0]], array![1.0], array![0.5], array![0.0])?;
    for v in &validate_network(&bad).violations {
        println!("rejected: {v}");
    }
    Ok(())
}
