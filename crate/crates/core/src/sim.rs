//! Monte Carlo simulation of the spiking dynamics as a continuous-time
//! Markov jump process over integer potentials.
//!
//! Every event is drawn from competing exponential clocks: one clock per
//! external excitatory and inhibitory stream, plus one firing clock per
//! excited neuron. The holding time is exponential in the total rate and the
//! event is chosen proportionally to its rate. The excitation estimate
//! `q̂_l` is the fraction of post-burn-in model time with `k_l > 0`.

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RnnError};
use crate::network::{solve_steady_state, validate_network, RnnNetwork, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Identifier of the pseudo-random generator behind every simulation.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), 64-bit seed";

/// The running firing total is recomputed from scratch this often to stop
/// floating-point drift from accumulating.
const RESYNC_EVERY: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub total_events: u64,
    pub burn_in_fraction: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(total_events: u64, seed: u64) -> Self {
        Self {
            total_events,
            burn_in_fraction: 0.1,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if self.total_events == 0 {
            return Err(RnnError::arg("total_events must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(RnnError::arg("burn_in_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub external_excitatory: u64,
    pub external_inhibitory: u64,
    pub firings: u64,
    pub internal_excitatory: u64,
    pub internal_inhibitory: u64,
    pub departures: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.external_excitatory + self.external_inhibitory + self.firings
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub q_hat: Array1<f64>,
    /// Simulated model time in seconds; infinite if the process reached an
    /// absorbing state (no event can ever fire again).
    pub model_time: f64,
    pub event_counts: EventCounts,
    pub absorbed: bool,
    pub rng_algorithm: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Excitatory(usize),
    Inhibitory(usize),
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    ExternalExcitatory(usize),
    ExternalInhibitory(usize),
    Fire { from: usize, route: Route },
}

/// A single trajectory of the spiking process.
pub struct SpikeProcess<'a> {
    net: &'a RnnNetwork,
    rng: ChaCha8Rng,
    potential: Vec<u64>,
    time: f64,
    // cumulative [Λ_0..Λ_{L-1}, λ_0..λ_{L-1}]
    external_cum: Vec<f64>,
    external_total: f64,
    // cumulative routing probabilities [p⁺_{l,·}, p⁻_{l,·}] per neuron
    routing_cum: Vec<Vec<f64>>,
    // excited neurons with r > 0, with positions for O(1) removal
    firing: Vec<usize>,
    firing_pos: Vec<Option<usize>>,
    firing_total: f64,
    busy_from: f64,
    excited_since: Vec<f64>,
    busy_time: Vec<f64>,
    counts: EventCounts,
}

impl<'a> SpikeProcess<'a> {
    /// Starts from all potentials at zero. Time spent excited is only
    /// accumulated from model time `busy_from` on.
    pub fn new(net: &'a RnnNetwork, seed: u64, busy_from: f64) -> Self {
        let n = net.len();
        let mut external_cum = Vec::with_capacity(2 * n);
        let mut acc = 0.0;
        for &rate in net.ext_excitatory().iter().chain(net.ext_inhibitory().iter()) {
            acc += rate;
            external_cum.push(acc);
        }
        let routing_cum = (0..n)
            .map(|l| {
                let r = net.rate()[l];
                let mut acc = 0.0;
                net.w_plus()
                    .row(l)
                    .iter()
                    .chain(net.w_minus().row(l).iter())
                    .map(|&w| {
                        if r > 0.0 {
                            acc += w / r;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Self {
            net,
            rng: ChaCha8Rng::seed_from_u64(seed),
            potential: vec![0; n],
            time: 0.0,
            external_cum,
            external_total: acc,
            routing_cum,
            firing: Vec::with_capacity(n),
            firing_pos: vec![None; n],
            firing_total: 0.0,
            busy_from,
            excited_since: vec![f64::NAN; n],
            busy_time: vec![0.0; n],
            counts: EventCounts::default(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn potentials(&self) -> &[u64] {
        &self.potential
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    pub fn total_rate(&self) -> f64 {
        self.external_total + self.firing_total
    }

    /// Advances to the next event. Returns `None` once the process is in an
    /// absorbing state.
    pub fn step(&mut self) -> Option<Event> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return None;
        }
        let u: f64 = 1.0 - self.rng.gen::<f64>();
        self.time += -u.ln() / total;

        let pick = self.rng.gen::<f64>() * total;
        let event = if pick < self.external_total {
            let idx = self.external_cum.partition_point(|&c| c <= pick).min(self.external_cum.len() - 1);
            let n = self.net.len();
            if idx < n {
                self.counts.external_excitatory += 1;
                self.excite(idx);
                Event::ExternalExcitatory(idx)
            } else {
                self.counts.external_inhibitory += 1;
                self.inhibit(idx - n);
                Event::ExternalInhibitory(idx - n)
            }
        } else {
            let from = self.pick_firing(pick - self.external_total);
            self.counts.firings += 1;
            self.inhibit(from);
            let route = self.route(from);
            match route {
                Route::Excitatory(to) => {
                    self.counts.internal_excitatory += 1;
                    self.excite(to);
                }
                Route::Inhibitory(to) => {
                    self.counts.internal_inhibitory += 1;
                    self.inhibit(to);
                }
                Route::Departure => self.counts.departures += 1,
            }
            Event::Fire { from, route }
        };

        if self.counts.total() % RESYNC_EVERY == 0 {
            self.firing_total = self.firing.iter().map(|&l| self.net.rate()[l]).sum();
        }
        Some(event)
    }

    fn pick_firing(&self, mut target: f64) -> usize {
        let rates = self.net.rate();
        for &l in &self.firing {
            target -= rates[l];
            if target < 0.0 {
                return l;
            }
        }
        // rounding left a sliver past the last active neuron
        *self.firing.last().expect("firing chosen with no excited neuron")
    }

    fn route(&mut self, from: usize) -> Route {
        let cum = &self.routing_cum[from];
        let u: f64 = self.rng.gen();
        if cum.is_empty() || u >= *cum.last().unwrap() {
            return Route::Departure;
        }
        let idx = cum.partition_point(|&c| c <= u);
        let n = self.net.len();
        if idx < n {
            Route::Excitatory(idx)
        } else {
            Route::Inhibitory(idx - n)
        }
    }

    fn excite(&mut self, l: usize) {
        self.potential[l] += 1;
        if self.potential[l] == 1 {
            self.excited_since[l] = self.time;
            let r = self.net.rate()[l];
            if r > 0.0 {
                self.firing_pos[l] = Some(self.firing.len());
                self.firing.push(l);
                self.firing_total += r;
            }
        }
    }

    fn inhibit(&mut self, l: usize) {
        if self.potential[l] == 0 {
            return;
        }
        self.potential[l] -= 1;
        if self.potential[l] == 0 {
            self.close_busy(l, self.time);
            if let Some(pos) = self.firing_pos[l].take() {
                self.firing.swap_remove(pos);
                if let Some(&moved) = self.firing.get(pos) {
                    self.firing_pos[moved] = Some(pos);
                }
                self.firing_total -= self.net.rate()[l];
                if self.firing.is_empty() {
                    self.firing_total = 0.0;
                }
            }
        }
    }

    fn close_busy(&mut self, l: usize, until: f64) {
        let start = self.excited_since[l].max(self.busy_from);
        if until > start {
            self.busy_time[l] += until - start;
        }
    }

    /// Excited time per neuron accumulated since `busy_from`, with open
    /// intervals closed at the current time.
    pub fn busy_time(&self) -> Vec<f64> {
        let mut busy = self.busy_time.clone();
        for (l, b) in busy.iter_mut().enumerate() {
            if self.potential[l] > 0 {
                let start = self.excited_since[l].max(self.busy_from);
                if self.time > start {
                    *b += self.time - start;
                }
            }
        }
        busy
    }
}

/// Simulates `cfg.total_events` events and estimates the excitation
/// probabilities. The trajectory is replayed twice with the same seed: once
/// to learn the total model time, once to collect post-burn-in statistics.
pub fn simulate(net: &RnnNetwork, cfg: &SimConfig) -> Result<SimResult> {
    cfg.check()?;
    validate_network(net).into_result()?;
    let any_rate = net
        .rate()
        .iter()
        .chain(net.ext_excitatory().iter())
        .chain(net.ext_inhibitory().iter())
        .any(|&v| v > 0.0);
    if !any_rate {
        return Err(RnnError::Degenerate("every rate in the network is zero".into()));
    }

    let mut probe = SpikeProcess::new(net, cfg.seed, f64::INFINITY);
    let mut absorbed = false;
    for _ in 0..cfg.total_events {
        if probe.step().is_none() {
            absorbed = true;
            break;
        }
    }

    if absorbed {
        // the absorbing state persists forever, so it alone sets the average
        let q_hat = probe
            .potentials()
            .iter()
            .map(|&k| if k > 0 { 1.0 } else { 0.0 })
            .collect();
        return Ok(SimResult {
            q_hat,
            model_time: f64::INFINITY,
            event_counts: probe.counts(),
            absorbed: true,
            rng_algorithm: RNG_ALGORITHM,
        });
    }

    let model_time = probe.time();
    let burn_in = cfg.burn_in_fraction * model_time;
    let mut run = SpikeProcess::new(net, cfg.seed, burn_in);
    for _ in 0..cfg.total_events {
        run.step();
    }
    let window = model_time - burn_in;
    let q_hat = run
        .busy_time()
        .into_iter()
        .map(|b| (b / window).clamp(0.0, 1.0))
        .collect();
    Ok(SimResult {
        q_hat,
        model_time,
        event_counts: run.counts(),
        absorbed: false,
        rng_algorithm: RNG_ALGORITHM,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub analytic: Array1<f64>,
    pub empirical: Array1<f64>,
    pub deviation: Array1<f64>,
    pub max_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Runs the simulator and the analytic solver side by side.
pub fn compare_to_analytic(net: &RnnNetwork, cfg: &SimConfig, tol: f64) -> Result<Agreement> {
    let analytic = solve_steady_state(net, DEFAULT_TOL, DEFAULT_MAX_ITER)?.q;
    let empirical = simulate(net, cfg)?.q_hat;
    let deviation: Array1<f64> = (&empirical - &analytic).mapv(f64::abs);
    let max_deviation = deviation.iter().cloned().fold(0.0, f64::max);
    Ok(Agreement {
        pass: max_deviation <= tol,
        analytic,
        empirical,
        deviation,
        max_deviation,
        tol,
    })
}
