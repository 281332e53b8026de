use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use raci::bench::{
    self, CapacityRule, Experiment, ExperimentSpec, GeneratorParams, ProblemSource,
    SolverSettings, DEFAULT_MULTIPLIERS, DEFAULT_REPLICAS,
};
use raci::crossbar::CrossbarConfig;
use raci::encoder::PenaltyWeights;
use raci::solver::{Acceptance, Backend, PlanMode, RngSource, Schedule};
use raci::{build_hamiltonian, CapacityEncoding, Error, KnapsackInstance};

#[derive(Parser, Debug)]
#[command(name = "raci-bench", version, about = "Knapsack experiments with the RaCI solver on a simulated memristor crossbar")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = BackendKind::Crossbar)]
    backend: BackendKind,

    /// Noise multiplier applied to the native crossbar noise.
    #[arg(long, global = true, default_value_t = 1.0)]
    noise: f64,

    /// Devices averaged per weight.
    #[arg(long, global = true, default_value_t = 1)]
    replicas: usize,

    /// Capacity encoding: unary, shrink:<s> or log.
    #[arg(long, global = true, default_value = "unary")]
    encoding: CapacityEncoding,

    /// Comma-separated iteration budgets.
    #[arg(long, global = true, value_delimiter = ',')]
    iterations: Option<Vec<u64>>,

    /// Independent trials per budget.
    #[arg(long, global = true, default_value_t = 100)]
    trials: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Exact,
    Crossbar,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the optimal selection of a problem file as JSON.
    Oracle { problem: PathBuf },
    /// Write the Hamiltonian as CSV.
    Encode {
        problem: PathBuf,
        #[command(flatten)]
        penalties: PenaltyArgs,
    },
    /// Run one traced trial at the first iteration budget.
    Solve(ExperimentArgs),
    /// Success probability for each iteration budget.
    Sweep(ExperimentArgs),
    /// Success curves for several noise multipliers with shared seeds.
    NoiseStudy {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Comma-separated noise multipliers.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_MULTIPLIERS)]
        multipliers: Vec<f64>,
    },
    /// Success curves and read spread for several replica counts.
    Mitigation {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Comma-separated replica counts to compare.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_REPLICAS)]
        replica_counts: Vec<usize>,
        /// Energy reads used to estimate the per-state spread.
        #[arg(long, default_value_t = 10_000)]
        reads: u64,
    },
    /// Uniformity report for the device-bank integer generator.
    RngTest {
        #[arg(long)]
        objects: u64,
        #[arg(long, default_value_t = 100_000)]
        draws: u64,
    },
}

#[derive(Args, Debug)]
struct PenaltyArgs {
    /// Objective weight; all three sigmas must be given together.
    #[arg(long, requires_all = ["sigma2", "sigma3"])]
    sigma1: Option<f64>,
    /// One-hot slot penalty.
    #[arg(long, requires_all = ["sigma1", "sigma3"])]
    sigma2: Option<f64>,
    /// Capacity-balance penalty.
    #[arg(long, requires_all = ["sigma1", "sigma2"])]
    sigma3: Option<f64>,
}

impl PenaltyArgs {
    fn weights(&self) -> Option<PenaltyWeights<f64>> {
        match (self.sigma1, self.sigma2, self.sigma3) {
            (Some(a), Some(b), Some(c)) => Some(PenaltyWeights::new(a, b, c)),
            _ => None,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Problem file; omit to generate an instance.
    problem: Option<PathBuf>,

    /// Objects in a generated instance.
    #[arg(long, conflicts_with = "problem")]
    objects: Option<usize>,
    /// Fixed capacity for a generated instance.
    #[arg(long, requires = "objects", conflicts_with = "capacity_fraction")]
    capacity: Option<u64>,
    /// Capacity as a fraction of the total weight of a generated instance.
    #[arg(long, requires = "objects")]
    capacity_fraction: Option<f64>,
    /// Seed of the instance generator.
    #[arg(long, requires = "objects", default_value_t = 1)]
    instance_seed: u64,

    #[command(flatten)]
    penalties: PenaltyArgs,

    /// Quantization bits per conductance.
    #[arg(long)]
    quant_bits: Option<u32>,

    #[arg(long)]
    flip_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    flip_min: usize,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Linear)]
    schedule: ScheduleArg,
    /// greedy, always or metropolis:<T0>:<decay>.
    #[arg(long, default_value = "greedy", value_parser = parse_acceptance)]
    acceptance: Acceptance,
    #[arg(long, default_value_t = 0.1)]
    adopt: f64,
    #[arg(long, value_enum, default_value_t = SourceArg::Software)]
    rng_source: SourceArg,
    #[arg(long, value_enum, default_value_t = PlanArg::Independent)]
    plan_mode: PlanArg,
    /// Stop after this many iterations without improvement (0 disables).
    #[arg(long, default_value_t = 0)]
    stall_window: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleArg {
    Linear,
    Constant,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SourceArg {
    Software,
    DeviceBank,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlanArg {
    Independent,
    Shared,
}

fn parse_acceptance(s: &str) -> Result<Acceptance, String> {
    match s {
        "greedy" => Ok(Acceptance::Greedy),
        "always" => Ok(Acceptance::Always),
        _ => {
            let rest = s
                .strip_prefix("metropolis:")
                .ok_or_else(|| format!("unknown acceptance rule {s:?}"))?;
            let (t0, decay) = rest
                .split_once(':')
                .ok_or("expected metropolis:<T0>:<decay>")?;
            Ok(Acceptance::Metropolis {
                initial_temperature: t0.parse().map_err(|e| format!("T0: {e}"))?,
                decay: decay.parse().map_err(|e| format!("decay: {e}"))?,
            })
        }
    }
}

impl Cli {
    fn spec(&self, args: &ExperimentArgs) -> Result<ExperimentSpec, Error> {
        let problem = match (&args.problem, args.objects) {
            (Some(path), _) => ProblemSource::File(path.clone()),
            (None, Some(objects)) => {
                let capacity = match (args.capacity, args.capacity_fraction) {
                    (Some(w), _) => CapacityRule::Fixed(w),
                    (None, Some(f)) => CapacityRule::Fraction(f),
                    (None, None) => CapacityRule::default(),
                };
                ProblemSource::Generated {
                    params: GeneratorParams::new(objects, capacity),
                    seed: args.instance_seed,
                }
            }
            (None, None) => {
                return Err(Error::Config(
                    "give a problem file or --objects to generate one".into(),
                ))
            }
        };
        let backend = match self.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Crossbar => {
                let mut xc = CrossbarConfig::default()
                    .with_multiplier(self.noise)
                    .with_replicas(self.replicas);
                if let Some(bits) = args.quant_bits {
                    xc.quant_bits = bits;
                }
                Backend::Crossbar(xc)
            }
        };
        let solver = SolverSettings {
            flip_max_initial: args.flip_max,
            flip_max_final: args.flip_min,
            schedule: match args.schedule {
                ScheduleArg::Linear => Schedule::Linear,
                ScheduleArg::Constant => Schedule::Constant,
            },
            acceptance: args.acceptance,
            adopt_probability: args.adopt,
            rng_source: match args.rng_source {
                SourceArg::Software => RngSource::Software,
                SourceArg::DeviceBank => RngSource::DeviceBank,
            },
            plan_mode: match args.plan_mode {
                PlanArg::Independent => PlanMode::Independent,
                PlanArg::Shared => PlanMode::Shared,
            },
            stall_window: args.stall_window,
        };
        Ok(ExperimentSpec {
            problem: Some(problem),
            encoding: self.encoding,
            penalties: args.penalties.weights(),
            backend,
            solver,
            budgets: self.iterations.clone().unwrap_or_else(bench::default_budgets),
            trials: self.trials,
            seed: self.seed,
        })
    }

    fn experiment(&self, args: &ExperimentArgs) -> Result<Experiment, Error> {
        self.spec(args)?.resolve()
    }

    fn output(&self) -> Result<Box<dyn Write>, Error> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn save_artifacts(&self, exp: &Experiment) -> Result<(), Error> {
        match &self.out {
            Some(path) => exp.save_artifacts(path),
            None => Ok(()),
        }
    }
}

fn print_json(value: &serde_json::Value) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load(path: &Path) -> Result<KnapsackInstance, Error> {
    KnapsackInstance::load(path)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Oracle { problem } => {
            let best = load(problem)?.brute_force_optimum()?;
            print_json(&serde_json::json!({
                "chosen": best.chosen,
                "value": best.total_value,
                "weight": best.total_weight,
            }))
        }
        Command::Encode { problem, penalties } => {
            let instance = load(problem)?;
            let weights = penalties
                .weights()
                .unwrap_or_else(|| PenaltyWeights::default_for(&instance));
            let h = build_hamiltonian(&instance, cli.encoding, &weights)?;
            let mut out = cli.output()?;
            h.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Solve(args) => {
            let exp = cli.experiment(args)?;
            let budget = exp.budgets.first().copied().unwrap_or(100);
            let result = bench::solve(&exp, budget)?;
            if let Some(path) = &cli.out {
                result.write_trace_csv(BufWriter::new(File::create(path)?))?;
                cli.save_artifacts(&exp)?;
            }
            let decoded = exp.problem.decode(&result.best_state)?;
            print_json(&serde_json::json!({
                "best_state": result.best_state.to_string(),
                "best_noisy_energy": result.best_noisy_energy,
                "best_exact_energy": result.best_exact_energy,
                "iterations_run": result.iterations_run,
                "iteration_of_best": result.iteration_of_best,
                "chosen": decoded.selection.chosen,
                "value": decoded.selection.total_value,
                "weight": decoded.selection.total_weight,
                "feasible": decoded.selection.feasible,
                "success": result.success,
            }))
        }
        Command::Sweep(args) => {
            let exp = cli.experiment(args)?;
            let result = bench::run_sweep(&exp)?;
            let mut out = cli.output()?;
            bench::write_sweep_csv(&result, &mut out)?;
            out.flush()?;
            cli.save_artifacts(&exp)
        }
        Command::NoiseStudy {
            experiment,
            multipliers,
        } => {
            let exp = cli.experiment(experiment)?;
            let curves = bench::noise_study(&exp, multipliers)?;
            let mut out = cli.output()?;
            bench::write_curves_csv("multiplier", &curves, &mut out)?;
            out.flush()?;
            cli.save_artifacts(&exp)
        }
        Command::Mitigation {
            experiment,
            replica_counts,
            reads,
        } => {
            let exp = cli.experiment(experiment)?;
            let report = bench::mitigation(&exp, replica_counts, *reads)?;
            let mut out = cli.output()?;
            bench::write_curves_csv("replicas", &report.curves, &mut out)?;
            out.flush()?;
            match &cli.out {
                Some(path) => {
                    let file = File::create(path.with_extension("read_std.csv"))?;
                    report.write_read_std_csv(BufWriter::new(file))?;
                }
                None => report.write_read_std_csv(io::stderr().lock())?,
            }
            cli.save_artifacts(&exp)
        }
        Command::RngTest { objects, draws } => {
            let report = bench::rng_test(*objects, *draws, cli.seed)?;
            let value = serde_json::to_value(&report)?;
            if let Some(path) = &cli.out {
                std::fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
            }
            print_json(&value)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
