//! Run the spiking process of a random 4-neuron network for a million events
//! and compare the time-averaged busy fraction with the analytic solution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rnnkit::sim::{compare_to_analytic, SimConfig};
use rnnkit::RnnNetwork;

fn main() -> rnnkit::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(11);
    let net = RnnNetwork::random_valid(4, &mut ChaCha8Rng::seed_from_u64(seed));
    let cfg = SimConfig::new(1_000_000, seed);
    let started = std::time::Instant::now();
    let agreement = compare_to_analytic(&net, &cfg, 0.02)?;
    println!("neuron  analytic  simulated");
    for (i, (q, qh)) in agreement.analytic.iter().zip(&agreement.empirical).enumerate() {
        println!("{:>6}  {q:.5}   {qh:.5}", i + 1);
    }
    println!(
        "max deviation {:.5} (tol {}) in {:.2?}: {}",
        agreement.max_deviation,
        agreement.tol,
        started.elapsed(),
        if agreement.pass { "agree" } else { "DISAGREE" }
    );
    Ok(())
}
