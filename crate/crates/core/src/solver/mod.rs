//! The RaCI search loop.
//!
//! Two neuron vectors explore the landscape in parallel. Every iteration each
//! proposes a random multi-bit flip whose maximum size shrinks over the run,
//! both candidates are read through the energy backend, each vector applies
//! its acceptance rule, and occasionally the worse vector takes over the
//! better one's state. The lowest energy ever read is kept together with its
//! state.

mod plan;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::plan::{sample_flip_plan, FlipPlan, FlipSampler, RngSource};
use crate::crossbar::{CrossbarConfig, ProgrammedCrossbar};
use crate::encoder::{
    build_hamiltonian, energy_exact, CapacityEncoding, Decoded, Hamiltonian, NeuronState,
    PenaltyWeights,
};
use crate::error::{Error, Result};
use crate::knapsack::{KnapsackInstance, Selection};
use crate::num::Real;
pub use crate::stats::{repeats_for_confidence, total_iterations};
use crate::stats::{wilson_interval, Interval, Z95};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Flip bound interpolated from the initial to the final value.
    #[default]
    Linear,
    Constant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    /// Accept a candidate iff it reads no higher than the current energy.
    #[default]
    Greedy,
    Always,
    /// Accept uphill moves with probability `exp(-dE / T)`, `T = T0 * decay^t`.
    Metropolis { initial_temperature: f64, decay: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanMode {
    /// Each vector draws its own flip plan.
    #[default]
    Independent,
    /// Both vectors apply the same plan.
    Shared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: u64,
    pub flip_max_initial: usize,
    pub flip_max_final: usize,
    pub schedule: Schedule,
    pub acceptance: Acceptance,
    /// Chance per iteration that the higher-energy vector copies the other.
    pub adopt_probability: f64,
    pub rng_source: RngSource,
    pub plan_mode: PlanMode,
    /// Stop after this many iterations without a new best; 0 disables.
    pub stall_window: u64,
    /// Stop once the best state's exact energy reaches this value.
    pub target_energy: Option<f64>,
    pub record_trace: bool,
}

impl SolverConfig {
    pub fn new(n_neurons: usize, max_iterations: u64) -> Self {
        Self {
            max_iterations,
            flip_max_initial: n_neurons.clamp(1, 5),
            flip_max_final: 1,
            schedule: Schedule::Linear,
            acceptance: Acceptance::Greedy,
            adopt_probability: 0.1,
            rng_source: RngSource::Software,
            plan_mode: PlanMode::Independent,
            stall_window: 0,
            target_energy: None,
            record_trace: true,
        }
    }

    pub fn validate(&self, n_neurons: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSolver(msg));
        if !(1 <= self.flip_max_final
            && self.flip_max_final <= self.flip_max_initial
            && self.flip_max_initial <= n_neurons)
        {
            return bad(format!(
                "flip bounds must satisfy 1 <= {} <= {} <= {n_neurons}",
                self.flip_max_final, self.flip_max_initial
            ));
        }
        if !(0.0..=1.0).contains(&self.adopt_probability) {
            return bad(format!(
                "adopt_probability {} outside [0, 1]",
                self.adopt_probability
            ));
        }
        if let Acceptance::Metropolis {
            initial_temperature,
            decay,
        } = self.acceptance
        {
            if !(initial_temperature > 0.0 && decay > 0.0 && decay <= 1.0) {
                return bad("metropolis needs T0 > 0 and decay in (0, 1]".into());
            }
        }
        Ok(())
    }

    pub fn with_budget(&self, max_iterations: u64) -> Self {
        Self {
            max_iterations,
            ..self.clone()
        }
    }
}

/// Largest flip count allowed at `iteration`.
pub fn flip_bound(iteration: u64, config: &SolverConfig) -> usize {
    let (hi, lo) = (config.flip_max_initial, config.flip_max_final);
    match config.schedule {
        Schedule::Constant => hi,
        Schedule::Linear if config.max_iterations <= 1 => hi,
        Schedule::Linear => {
            let frac = iteration.min(config.max_iterations - 1) as f64
                / (config.max_iterations - 1) as f64;
            (hi as f64 - (hi - lo) as f64 * frac).round() as usize
        }
    }
}

/// Anything that can read the energy of a neuron state.
pub trait EnergyBackend<T: Real> {
    fn dimension(&self) -> usize;
    fn energy<R: Rng + ?Sized>(&self, q: &NeuronState, rng: &mut R) -> Result<T>;
}

impl<T: Real> EnergyBackend<T> for Hamiltonian<T> {
    fn dimension(&self) -> usize {
        Hamiltonian::dimension(self)
    }

    fn energy<R: Rng + ?Sized>(&self, q: &NeuronState, _rng: &mut R) -> Result<T> {
        energy_exact(self, q)
    }
}

impl<T: Real> EnergyBackend<T> for ProgrammedCrossbar<T> {
    fn dimension(&self) -> usize {
        ProgrammedCrossbar::dimension(self)
    }

    fn energy<R: Rng + ?Sized>(&self, q: &NeuronState, rng: &mut R) -> Result<T> {
        self.evaluate_energy(q, rng)
    }
}

/// A knapsack instance with its encoding and known optimum.
#[derive(Clone, Debug)]
pub struct Problem<T> {
    pub instance: KnapsackInstance,
    pub hamiltonian: Hamiltonian<T>,
    pub optimum: Selection,
}

impl<T: Real> Problem<T> {
    pub fn new(
        instance: KnapsackInstance,
        encoding: CapacityEncoding,
        penalties: &PenaltyWeights<T>,
    ) -> Result<Self> {
        let hamiltonian = build_hamiltonian(&instance, encoding, penalties)?;
        let optimum = instance.brute_force_optimum()?;
        Ok(Self {
            instance,
            hamiltonian,
            optimum,
        })
    }

    pub fn with_default_penalties(instance: KnapsackInstance, encoding: CapacityEncoding) -> Result<Self> {
        let penalties = PenaltyWeights::default_for(&instance);
        Self::new(instance, encoding, &penalties)
    }

    pub fn dimension(&self) -> usize {
        self.hamiltonian.dimension()
    }

    pub fn encoding(&self) -> CapacityEncoding {
        self.hamiltonian.layout().encoding
    }

    /// Exact energy of a constraint-satisfying optimal state.
    pub fn optimal_energy(&self) -> T {
        -(self.hamiltonian.penalties().sigma1 * T::of(self.optimum.total_value as f64))
    }

    pub fn decode(&self, q: &NeuronState) -> Result<Decoded> {
        self.hamiltonian.decode(q, &self.instance)
    }

    /// Feasible, optimal in value, and with slot neurons satisfying the encoding.
    pub fn is_success(&self, q: &NeuronState) -> Result<bool> {
        let d = self.decode(q)?;
        Ok(d.consistent
            && d.selection.feasible
            && d.selection.total_value == self.optimum.total_value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub iteration: u64,
    pub e1: T,
    pub e2: T,
    pub running_best: T,
    pub flips_q1: usize,
    pub flips_q2: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult<T> {
    pub best_state: NeuronState,
    pub best_noisy_energy: T,
    pub best_exact_energy: T,
    pub iterations_run: u64,
    pub iteration_of_best: u64,
    pub success: bool,
    /// Row 0 holds the initial vectors; row `t` the candidates of iteration `t`.
    pub energy_trace: Vec<TraceRow<T>>,
}

impl<T: Real> TrialResult<T> {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "E1", "E2", "running_best", "flips_q1", "flips_q2"])?;
        for r in &self.energy_trace {
            w.write_record([
                r.iteration.to_string(),
                r.e1.as_f64().to_string(),
                r.e2.as_f64().to_string(),
                r.running_best.as_f64().to_string(),
                r.flips_q1.to_string(),
                r.flips_q2.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn apply(q: &NeuronState, plan: &FlipPlan) -> NeuronState {
    let mut c = q.clone();
    for &i in &plan.indices {
        c.flip(i);
    }
    c
}

fn accepts<T: Real, R: Rng + ?Sized>(
    rule: Acceptance,
    candidate: T,
    current: T,
    iteration: u64,
    rng: &mut R,
) -> bool {
    match rule {
        Acceptance::Greedy => candidate <= current,
        Acceptance::Always => true,
        Acceptance::Metropolis {
            initial_temperature,
            decay,
        } => {
            let delta = (candidate - current).as_f64();
            if delta <= 0.0 {
                return true;
            }
            let temperature = initial_temperature * decay.powf(iteration as f64);
            rng.random::<f64>() < (-delta / temperature).exp()
        }
    }
}

/// One independent search from uniformly random initial vectors.
pub fn run_trial<T: Real, B: EnergyBackend<T>, R: Rng + ?Sized>(
    backend: &B,
    problem: &Problem<T>,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<TrialResult<T>> {
    let n = problem.dimension();
    if backend.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: backend.dimension(),
        });
    }
    config.validate(n)?;
    let sampler = FlipSampler::new(n, config.flip_max_initial, config.rng_source)?;
    let target = config.target_energy;
    let reached = |e: T| match target {
        Some(t) => e.as_f64() <= t + 1e-9 * t.abs().max(1.0),
        None => false,
    };

    let random_state = |rng: &mut R| {
        let bits = (0..n).map(|_| u8::from(sampler.random_bit(rng))).collect();
        NeuronState::from_bits(bits).expect("binary")
    };
    let mut q1 = random_state(rng);
    let mut q2 = random_state(rng);
    let mut e1 = backend.energy(&q1, rng)?;
    let mut e2 = backend.energy(&q2, rng)?;
    let (mut best_state, mut best) = if e1 <= e2 {
        (q1.clone(), e1)
    } else {
        (q2.clone(), e2)
    };
    let mut best_exact = energy_exact(&problem.hamiltonian, &best_state)?;
    let mut iteration_of_best = 0;
    let mut trace = Vec::new();
    if config.record_trace {
        trace.reserve(config.max_iterations as usize + 1);
        trace.push(TraceRow {
            iteration: 0,
            e1,
            e2,
            running_best: best,
            flips_q1: 0,
            flips_q2: 0,
        });
    }

    let mut iterations_run = 0;
    let mut done = reached(best_exact);
    while !done && iterations_run < config.max_iterations {
        let t = iterations_run;
        iterations_run += 1;
        let bound = flip_bound(t, config);
        let plan1 = sampler.sample(bound, rng)?;
        let plan2 = match config.plan_mode {
            PlanMode::Independent => sampler.sample(bound, rng)?,
            PlanMode::Shared => plan1.clone(),
        };
        let c1 = apply(&q1, &plan1);
        let c2 = apply(&q2, &plan2);
        let ec1 = backend.energy(&c1, rng)?;
        let ec2 = backend.energy(&c2, rng)?;

        let (round_best, round_state) = if ec1 <= ec2 { (ec1, &c1) } else { (ec2, &c2) };
        if round_best < best {
            best = round_best;
            best_state = round_state.clone();
            best_exact = energy_exact(&problem.hamiltonian, &best_state)?;
            iteration_of_best = iterations_run;
            done = reached(best_exact);
        }

        if accepts(config.acceptance, ec1, e1, t, rng) {
            q1 = c1;
            e1 = ec1;
        }
        if accepts(config.acceptance, ec2, e2, t, rng) {
            q2 = c2;
            e2 = ec2;
        }
        if rng.random::<f64>() < config.adopt_probability {
            if e1 < e2 {
                q2 = q1.clone();
                e2 = e1;
            } else if e2 < e1 {
                q1 = q2.clone();
                e1 = e2;
            }
        }

        if config.record_trace {
            trace.push(TraceRow {
                iteration: iterations_run,
                e1: ec1,
                e2: ec2,
                running_best: best,
                flips_q1: plan1.flip_count(),
                flips_q2: plan2.flip_count(),
            });
        }
        if config.stall_window > 0 && iterations_run - iteration_of_best >= config.stall_window {
            done = true;
        }
    }

    let success = problem.is_success(&best_state)?;
    Ok(TrialResult {
        best_state,
        best_noisy_energy: best,
        best_exact_energy: best_exact,
        iterations_run,
        iteration_of_best,
        success,
        energy_trace: trace,
    })
}

/// How candidate energies are read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Exact,
    /// A fresh crossbar is programmed for every trial from its own stream.
    Crossbar(CrossbarConfig),
}

/// Random streams for trial `index` under `seed`: one drives the search,
/// the other programs the crossbar. Both depend only on `(seed, index)`.
pub fn trial_streams(seed: u64, index: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut search = ChaCha8Rng::seed_from_u64(seed);
    search.set_stream(2 * index);
    let mut programming = ChaCha8Rng::seed_from_u64(seed);
    programming.set_stream(2 * index + 1);
    (search, programming)
}

pub fn run_seeded_trial<T: Real>(
    problem: &Problem<T>,
    backend: &Backend,
    config: &SolverConfig,
    seed: u64,
    index: u64,
) -> Result<TrialResult<T>> {
    let (mut search, mut programming) = trial_streams(seed, index);
    match backend {
        Backend::Exact => run_trial(&problem.hamiltonian, problem, config, &mut search),
        Backend::Crossbar(xc) => {
            let xbar = ProgrammedCrossbar::program(&problem.hamiltonian, xc, &mut programming)?;
            run_trial(&xbar, problem, config, &mut search)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub p: f64,
    pub interval: Interval,
}

impl SuccessEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        Self {
            trials,
            successes,
            p: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            interval: wilson_interval(successes, trials, Z95),
        }
    }
}

/// Outcomes of `trials` seeded trials, in trial order. Trials run in
/// parallel; results do not depend on the thread count.
pub fn run_trials<T: Real>(
    problem: &Problem<T>,
    backend: &Backend,
    config: &SolverConfig,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialResult<T>>> {
    let mut config = config.clone();
    config.record_trace = false;
    (0..trials)
        .into_par_iter()
        .map(|i| run_seeded_trial(problem, backend, &config, seed, i))
        .collect()
}

/// Fraction of trials at `config.max_iterations` that end on the optimum,
/// with a Wilson 95% interval.
pub fn success_probability<T: Real>(
    problem: &Problem<T>,
    backend: &Backend,
    config: &SolverConfig,
    trials: u64,
    seed: u64,
) -> Result<SuccessEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let results = run_trials(problem, backend, config, trials, seed)?;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    Ok(SuccessEstimate::from_counts(successes, trials))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub budget: u64,
    pub estimate: SuccessEstimate,
    /// `None` when no trial succeeded.
    pub repeats_99: Option<u64>,
    pub total_iterations: Option<u64>,
}

impl SweepPoint {
    pub fn new(budget: u64, estimate: SuccessEstimate) -> Self {
        let repeats_99 = repeats_for_confidence(estimate.p).ok();
        Self {
            budget,
            estimate,
            repeats_99,
            total_iterations: repeats_99.map(|r| r * budget),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Success probability at each iteration budget. Trial `i` uses the same
/// derived streams at every budget.
pub fn sweep<T: Real>(
    problem: &Problem<T>,
    backend: &Backend,
    config: &SolverConfig,
    budgets: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SweepResult> {
    let points = budgets
        .iter()
        .map(|&budget| {
            let estimate =
                success_probability(problem, backend, &config.with_budget(budget), trials, seed)?;
            Ok(SweepPoint::new(budget, estimate))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points })
}
