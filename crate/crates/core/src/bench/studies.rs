use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Experiment;
use crate::crossbar::{min_devices, redundancy, DeviceBank, ProgrammedCrossbar};
use crate::encoder::NeuronState;
use crate::error::{Error, Result};
use crate::solver::{run_seeded_trial, sweep, trial_streams, Backend, SweepResult, TrialResult};
use crate::stats::{chi_square_uniform, ChiSquareTest};

pub const DEFAULT_MULTIPLIERS: [f64; 4] = [0.0, 1.0, 3.0, 10.0];
pub const DEFAULT_REPLICAS: [usize; 2] = [1, 3];

const SWEEP_HEADER: [&str; 8] = [
    "budget",
    "trials",
    "successes",
    "p",
    "wilson_lo",
    "wilson_hi",
    "repeats_99",
    "total_iterations",
];

/// Success probability at every budget of the experiment.
pub fn run_sweep(exp: &Experiment) -> Result<SweepResult> {
    sweep(
        &exp.problem,
        &exp.backend,
        &exp.solver,
        &exp.budgets,
        exp.trials,
        exp.seed,
    )
}

fn sweep_fields(point: &crate::solver::SweepPoint) -> Vec<String> {
    let na = |v: Option<u64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
    vec![
        point.budget.to_string(),
        point.estimate.trials.to_string(),
        point.estimate.successes.to_string(),
        point.estimate.p.to_string(),
        point.estimate.interval.lo.to_string(),
        point.estimate.interval.hi.to_string(),
        na(point.repeats_99),
        na(point.total_iterations),
    ]
}

/// One row per budget. `repeats_99` and `total_iterations` are `NA` when no
/// trial succeeded.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for point in &result.points {
        w.write_record(sweep_fields(point))?;
    }
    w.flush()?;
    Ok(())
}

/// A sweep labelled by the parameter that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub key: f64,
    pub sweep: SweepResult,
}

/// Stacked sweeps with a leading `key_name` column.
pub fn write_curves_csv<W: Write>(key_name: &str, curves: &[Curve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![key_name];
    header.extend(SWEEP_HEADER);
    w.write_record(&header)?;
    for curve in curves {
        for point in &curve.sweep.points {
            let mut row = vec![curve.key.to_string()];
            row.extend(sweep_fields(point));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One sweep per noise multiplier, all with the experiment's seed so trial
/// `i` starts from the same state under every multiplier.
pub fn noise_study(exp: &Experiment, multipliers: &[f64]) -> Result<Vec<Curve>> {
    if multipliers.is_empty() {
        return Err(Error::Config("no noise multipliers given".into()));
    }
    multipliers
        .iter()
        .map(|&m| {
            let xc = exp.crossbar().with_multiplier(m);
            xc.validate().map_err(|e| Error::Config(e.to_string()))?;
            let sweep = sweep(
                &exp.problem,
                &Backend::Crossbar(xc),
                &exp.solver,
                &exp.budgets,
                exp.trials,
                exp.seed,
            )?;
            Ok(Curve { key: m, sweep })
        })
        .collect()
}

/// Spread of repeated energy reads of one fixed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadStd {
    pub replicas: usize,
    pub reads: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MitigationReport {
    pub curves: Vec<Curve>,
    pub read_std: Vec<ReadStd>,
}

impl MitigationReport {
    pub fn write_read_std_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.read_std {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Paired sweeps over replica counts, plus the read spread of a fixed
/// random state on a crossbar programmed from the experiment's seed.
pub fn mitigation(exp: &Experiment, replicas: &[usize], reads: u64) -> Result<MitigationReport> {
    if replicas.is_empty() {
        return Err(Error::Config("no replica counts given".into()));
    }
    if reads < 2 {
        return Err(Error::Config("need at least 2 reads to estimate a spread".into()));
    }
    let mut curves = Vec::with_capacity(replicas.len());
    let mut read_std = Vec::with_capacity(replicas.len());
    for &r in replicas {
        let xc = exp.crossbar().with_replicas(r);
        xc.validate().map_err(|e| Error::Config(e.to_string()))?;

        let (mut state_rng, mut programming) = trial_streams(exp.seed, u64::MAX / 2);
        let n = exp.problem.dimension();
        let state = NeuronState::from_bits((0..n).map(|_| state_rng.random_range(0..=1u8)).collect())?;
        let xbar = ProgrammedCrossbar::program(&exp.problem.hamiltonian, &xc, &mut programming)?;
        let mut read_rng = ChaCha8Rng::seed_from_u64(exp.seed);
        let samples = (0..reads)
            .map(|_| xbar.evaluate_energy(&state, &mut read_rng))
            .collect::<Result<Vec<f64>>>()?;
        let mean = samples.iter().sum::<f64>() / reads as f64;
        let var = samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reads - 1) as f64;
        read_std.push(ReadStd {
            replicas: r,
            reads,
            mean,
            std: var.sqrt(),
        });

        let sweep = sweep(
            &exp.problem,
            &Backend::Crossbar(xc),
            &exp.solver,
            &exp.budgets,
            exp.trials,
            exp.seed,
        )?;
        curves.push(Curve { key: r as f64, sweep });
    }
    Ok(MitigationReport { curves, read_std })
}

/// Empirical check of the device-bank integer generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RngReport {
    pub objects: u64,
    pub devices: u32,
    /// `2^D mod objects` out of `2^D` patterns.
    pub redundant_patterns: u64,
    pub patterns: u64,
    pub expected_rate: f64,
    pub draws: u64,
    pub redraws: u64,
    /// Rejected patterns over all patterns read.
    pub observed_rate: f64,
    /// Three standard errors of `observed_rate` around `expected_rate`.
    pub rate_tolerance: f64,
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub dof: usize,
    pub critical_99: f64,
    pub uniform: bool,
}

pub fn rng_test(objects: u64, draws: u64, seed: u64) -> Result<RngReport> {
    if objects < 2 {
        return Err(Error::Config(format!("objects must be at least 2, got {objects}")));
    }
    if draws == 0 {
        return Err(Error::Config("draws must be at least 1".into()));
    }
    let devices = min_devices(objects)?;
    let (redundant_patterns, patterns) = redundancy(objects, devices);
    let bank = DeviceBank::new(devices as usize, 1.0, 0.05)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; objects as usize];
    let mut redraws = 0u64;
    for _ in 0..draws {
        let d = bank.draw_uniform_counted(objects, &mut rng)?;
        counts[d.value as usize] += 1;
        redraws += u64::from(d.redraws);
    }
    let expected_rate = redundant_patterns as f64 / patterns as f64;
    let attempts = (draws + redraws) as f64;
    let ChiSquareTest {
        statistic,
        dof,
        critical,
        passed,
    } = chi_square_uniform(&counts, 0.99);
    Ok(RngReport {
        objects,
        devices,
        redundant_patterns,
        patterns,
        expected_rate,
        draws,
        redraws,
        observed_rate: redraws as f64 / attempts,
        rate_tolerance: 3.0 * (expected_rate * (1.0 - expected_rate) / attempts).sqrt(),
        counts,
        chi_square: statistic,
        dof,
        critical_99: critical,
        uniform: passed,
    })
}

/// A single traced trial (index 0 of the experiment's seed) at `budget`.
pub fn solve(exp: &Experiment, budget: u64) -> Result<TrialResult<f64>> {
    let mut config = exp.solver.with_budget(budget);
    config.record_trace = true;
    run_seeded_trial(&exp.problem, &exp.backend, &config, exp.seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{ExperimentSpec, ProblemSource};
    use crate::crossbar::CrossbarConfig;
    use crate::knapsack::KnapsackInstance;

    fn experiment(budgets: Vec<u64>, trials: u64) -> Experiment {
        let k = KnapsackInstance::new(vec![5, 8, 4, 11, 3], vec![3, 2, 8, 5, 4], 10).unwrap();
        let mut spec = ExperimentSpec::with_problem(ProblemSource::Inline(k));
        spec.budgets = budgets;
        spec.trials = trials;
        spec.seed = 3;
        spec.resolve().unwrap()
    }

    fn csv_string(result: &SweepResult) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(result, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn sweep_csv_layout_and_totals() {
        let exp = experiment(vec![5, 200], 20);
        let text = csv_string(&run_sweep(&exp).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "budget,trials,successes,p,wilson_lo,wilson_hi,repeats_99,total_iterations"
        );
        assert_eq!(lines.len(), 3);
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            let budget: u64 = f[0].parse().unwrap();
            let p: f64 = f[3].parse().unwrap();
            if p == 0.0 {
                assert_eq!((f[6], f[7]), ("NA", "NA"));
            } else {
                let r: u64 = f[6].parse().unwrap();
                assert_eq!(f[7].parse::<u64>().unwrap(), budget * r);
            }
        }
    }

    #[test]
    fn certain_success_has_one_repeat() {
        let k = KnapsackInstance::new(vec![5], vec![1], 1).unwrap();
        let mut spec = ExperimentSpec::with_problem(ProblemSource::Inline(k));
        spec.backend = Backend::Exact;
        spec.budgets = vec![50];
        spec.trials = 5;
        let result = run_sweep(&spec.resolve().unwrap()).unwrap();
        let point = result.points[0];
        assert_eq!(point.estimate.successes, 5);
        assert_eq!(point.repeats_99, Some(1));
        assert_eq!(point.total_iterations, Some(50));
    }

    #[test]
    fn sweeps_are_reproducible() {
        let exp = experiment(vec![5, 50], 30);
        assert_eq!(csv_string(&run_sweep(&exp).unwrap()), csv_string(&run_sweep(&exp).unwrap()));
    }

    #[test]
    fn noise_study_produces_one_curve_per_multiplier() {
        let exp = experiment(vec![10, 20], 10);
        let curves = noise_study(&exp, &DEFAULT_MULTIPLIERS).unwrap();
        assert_eq!(curves.len(), 4);
        let mut buf = Vec::new();
        write_curves_csv("multiplier", &curves, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("multiplier,budget,"));
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(7).unwrap().starts_with("10,"));
        assert!(noise_study(&exp, &[]).is_err());
    }

    #[test]
    fn noiseless_replicas_are_redundant() {
        let mut exp = experiment(vec![20, 60], 20);
        exp.backend = Backend::Crossbar(CrossbarConfig::noiseless());
        let report = mitigation(&exp, &[1, 3], 10).unwrap();
        assert_eq!(report.curves[0].sweep, report.curves[1].sweep);
        assert!(report.read_std.iter().all(|r| r.std == 0.0));
    }

    #[test]
    fn replicas_shrink_read_spread() {
        let mut exp = experiment(vec![5], 1);
        exp.backend = Backend::Crossbar(CrossbarConfig::default().with_multiplier(10.0));
        let report = mitigation(&exp, &[1, 3], 10_000).unwrap();
        let ratio = report.read_std[0].std / report.read_std[1].std;
        assert!((ratio - 3f64.sqrt()).abs() < 0.1, "ratio {ratio}");
        let mut buf = Vec::new();
        report.write_read_std_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("replicas,reads,mean,std\n1,10000,"));
    }

    #[test]
    fn rng_report_matches_redundancy() {
        let r = rng_test(5, 100_000, 1).unwrap();
        assert_eq!((r.devices, r.redundant_patterns, r.patterns), (4, 1, 16));
        assert!((r.observed_rate - r.expected_rate).abs() <= r.rate_tolerance);
        assert!(r.uniform);
        let r = rng_test(7, 100_000, 1).unwrap();
        assert_eq!(r.devices, 3);
        assert!((r.observed_rate - 0.125).abs() <= r.rate_tolerance);
        let r = rng_test(16, 10_000, 1).unwrap();
        assert_eq!((r.devices, r.redraws), (4, 0));
        assert!(rng_test(1, 10, 1).is_err());
    }

    #[test]
    fn solve_records_a_trace() {
        let exp = experiment(vec![5], 1);
        let result = solve(&exp, 50).unwrap();
        assert_eq!(result.energy_trace.len(), 51);
    }
}
