//! Seeded, reproducible experiments.
//!
//! An [`ExperimentSpec`] names a problem (a file or generator parameters), an
//! encoding, penalties, an energy backend, solver settings, iteration budgets,
//! a trial count and a master seed. [`ExperimentSpec::resolve`] turns it into
//! an [`Experiment`] with every value concrete, which the study functions in
//! this module then run.

mod generate;
mod studies;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use self::generate::{CapacityRule, GeneratorParams};
pub use self::studies::{
    mitigation, noise_study, rng_test, run_sweep, solve, write_curves_csv, write_sweep_csv,
    Curve, MitigationReport, ReadStd, RngReport, DEFAULT_MULTIPLIERS, DEFAULT_REPLICAS,
};
use crate::crossbar::CrossbarConfig;
use crate::encoder::{CapacityEncoding, PenaltyWeights};
use crate::error::{Error, Result};
use crate::knapsack::KnapsackInstance;
use crate::solver::{Acceptance, Backend, PlanMode, Problem, RngSource, Schedule, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSource {
    File(PathBuf),
    Generated { params: GeneratorParams, seed: u64 },
    Inline(KnapsackInstance),
}

impl ProblemSource {
    pub fn load(&self) -> Result<KnapsackInstance> {
        match self {
            ProblemSource::File(path) => KnapsackInstance::load(path),
            ProblemSource::Generated { params, seed } => params.generate(*seed),
            ProblemSource::Inline(instance) => {
                instance.ensure_valid()?;
                Ok(instance.clone())
            }
        }
    }
}

/// Solver settings that do not depend on the problem size. A missing
/// `flip_max_initial` becomes `min(5, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub flip_max_initial: Option<usize>,
    pub flip_max_final: usize,
    pub schedule: Schedule,
    pub acceptance: Acceptance,
    pub adopt_probability: f64,
    pub rng_source: RngSource,
    pub plan_mode: PlanMode,
    pub stall_window: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = SolverConfig::new(1, 0);
        Self {
            flip_max_initial: None,
            flip_max_final: base.flip_max_final,
            schedule: base.schedule,
            acceptance: base.acceptance,
            adopt_probability: base.adopt_probability,
            rng_source: base.rng_source,
            plan_mode: base.plan_mode,
            stall_window: base.stall_window,
        }
    }
}

impl SolverSettings {
    pub fn for_dimension(&self, n_neurons: usize) -> SolverConfig {
        let mut config = SolverConfig::new(n_neurons, 0);
        if let Some(initial) = self.flip_max_initial {
            config.flip_max_initial = initial;
        }
        config.flip_max_final = self.flip_max_final;
        config.schedule = self.schedule;
        config.acceptance = self.acceptance;
        config.adopt_probability = self.adopt_probability;
        config.rng_source = self.rng_source;
        config.plan_mode = self.plan_mode;
        config.stall_window = self.stall_window;
        config.record_trace = false;
        config
    }
}

/// Iteration budgets 5, 10, .., 100.
pub fn default_budgets() -> Vec<u64> {
    (1..=20).map(|i| 5 * i).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: Option<ProblemSource>,
    pub encoding: CapacityEncoding,
    /// `None` selects the default penalty rule.
    pub penalties: Option<PenaltyWeights<f64>>,
    pub backend: Backend,
    pub solver: SolverSettings,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            problem: None,
            encoding: CapacityEncoding::Unary,
            penalties: None,
            backend: Backend::Crossbar(CrossbarConfig::default()),
            solver: SolverSettings::default(),
            budgets: default_budgets(),
            trials: 100,
            seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn with_problem(problem: ProblemSource) -> Self {
        Self {
            problem: Some(problem),
            ..Self::default()
        }
    }

    /// Loads the problem and checks every setting. All failures here are
    /// configuration errors.
    pub fn resolve(&self) -> Result<Experiment> {
        let config = |e: Error| match e {
            Error::Io(_) | Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let source = self
            .problem
            .clone()
            .ok_or_else(|| Error::Config("no problem given".into()))?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.budgets.is_empty() {
            return Err(Error::Config("at least one iteration budget is needed".into()));
        }
        let instance = source.load().map_err(config)?;
        let penalties = self
            .penalties
            .unwrap_or_else(|| PenaltyWeights::default_for(&instance));
        let problem = Problem::new(instance, self.encoding, &penalties).map_err(config)?;
        let n = problem.dimension();
        let solver = self.solver.for_dimension(n);
        solver.validate(n).map_err(config)?;
        if let Backend::Crossbar(xc) = &self.backend {
            xc.validate().map_err(config)?;
            if !xc.fits(n) {
                return Err(Error::Config(
                    Error::DoesNotFit {
                        dimension: n,
                        rows: xc.rows,
                        cols: xc.cols,
                    }
                    .to_string(),
                ));
            }
        }
        Ok(Experiment {
            source,
            encoding: self.encoding,
            penalties,
            problem,
            backend: self.backend.clone(),
            solver,
            budgets: self.budgets.clone(),
            trials: self.trials,
            seed: self.seed,
        })
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub source: ProblemSource,
    pub encoding: CapacityEncoding,
    pub penalties: PenaltyWeights<f64>,
    pub problem: Problem<f64>,
    pub backend: Backend,
    pub solver: SolverConfig,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
}

impl Experiment {
    pub fn instance(&self) -> &KnapsackInstance {
        &self.problem.instance
    }

    /// Crossbar settings for studies that need a crossbar even when the
    /// experiment itself reads exact energies.
    pub fn crossbar(&self) -> CrossbarConfig {
        match &self.backend {
            Backend::Crossbar(xc) => xc.clone(),
            Backend::Exact => CrossbarConfig::default(),
        }
    }

    /// The resolved settings as JSON, including the instance itself.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "source": self.source,
            "instance": self.problem.instance,
            "optimum": {
                "chosen": self.problem.optimum.chosen,
                "value": self.problem.optimum.total_value,
                "weight": self.problem.optimum.total_weight,
            },
            "neurons": self.problem.dimension(),
            "encoding": self.encoding,
            "penalties": self.penalties,
            "backend": self.backend,
            "solver": self.solver,
            "budgets": self.budgets,
            "trials": self.trials,
            "seed": self.seed,
        })
    }

    /// Writes the JSON sidecar and the instance next to `csv_path`.
    pub fn save_artifacts(&self, csv_path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(sidecar_path(csv_path), text + "\n")?;
        self.instance().save(instance_path(csv_path))
    }
}

/// `results.csv` -> `results.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// `results.csv` -> `results.instance.json`.
pub fn instance_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("instance.json")
}
