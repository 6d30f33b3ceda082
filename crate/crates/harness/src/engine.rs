//! Trial execution shared by the experiment sweeps and the `recover` command.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stftpr::gla::recover_gla_restarts;
use stftpr::rng::derive_seed;
use stftpr::sdp::sigma_from_snr;
use stftpr::{
    add_noise, check_admissibility, default_eta, measure, phase_aligned_error, recover_algebraic, recover_ls,
    recover_sdp, GlaConfig, MagnitudeMeasurements, SdpOptions, Signal, Window, INVERTIBILITY_TOL,
};

use crate::error::{HarnessError, Result};
use crate::spec::{Algorithm, ExperimentSpec, GlaSettings, SdpSettings};

/// Seed of trial `trial` at sweep point `snr_index`. The signal, the noise
/// and any random starts of the trial are all drawn from it.
pub fn trial_seed(master: u64, snr_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[snr_index as u64, trial as u64])
}

/// Random signal, its measurements, and noise at `snr_db` (`INFINITY` for
/// none), all from `seed`.
pub fn simulate(n: usize, g: &Window, snr_db: f64, seed: u64) -> Result<(Signal, MagnitudeMeasurements)> {
    let x = Signal::random_gaussian(n, seed)?;
    let y = measure_noisy(&x, g, snr_db, seed)?;
    Ok((x, y))
}

pub fn measure_noisy(x: &Signal, g: &Window, snr_db: f64, seed: u64) -> Result<MagnitudeMeasurements> {
    let clean = measure(x, g)?;
    Ok(add_noise(&clean, snr_db, seed)?)
}

/// Knobs for a single recovery.
#[derive(Clone, Debug, Default)]
pub struct RecoverOptions {
    pub gla: GlaSettings,
    pub sdp: SdpSettings,
    /// Per-lag SDP noise bounds; derived from the noise level when absent.
    pub eta: Option<Vec<f64>>,
    /// SNR used to size the SDP bounds when the measurements carry no noise
    /// record.
    pub snr_hint: Option<f64>,
    /// Keep per-iteration diagnostics (SDP residuals, GLA objective).
    pub trace: bool,
}

#[derive(Clone, Debug)]
pub struct RecoveryRun {
    pub estimate: Signal,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Algorithm-specific summary for reports.
    pub details: Value,
    /// One JSON object per iteration when tracing was requested.
    pub trace: Vec<Value>,
}

fn sdp_eta(y: &MagnitudeMeasurements, opts: &RecoverOptions) -> Result<Vec<f64>> {
    if let Some(eta) = &opts.eta {
        return Ok(eta.clone());
    }
    let sigma = match (y.noise_sigma(), opts.snr_hint) {
        (s, _) if s > 0.0 => s,
        (_, Some(snr)) if snr.is_finite() => sigma_from_snr(y, snr),
        _ => 0.0,
    };
    Ok(default_eta(sigma, y.n(), &BTreeMap::new())?)
}

/// Runs one algorithm on one set of measurements. `seed` drives the random
/// starts of Griffin-Lim and is ignored by the other algorithms.
pub fn recover_with(
    alg: Algorithm,
    y: &MagnitudeMeasurements,
    g: &Window,
    seed: u64,
    opts: &RecoverOptions,
) -> Result<RecoveryRun> {
    match alg {
        Algorithm::Ls => {
            let out = recover_ls(y, g)?;
            Ok(RecoveryRun {
                details: json!({
                    "lambda_max": out.lambda_max,
                    "degenerate": out.degenerate,
                    "per_ell_residuals": out.per_ell_residuals,
                }),
                estimate: out.estimate,
                iterations: None,
                converged: None,
                trace: Vec::new(),
            })
        }
        Algorithm::Algebraic => Ok(RecoveryRun {
            estimate: recover_algebraic(y, g)?,
            iterations: None,
            converged: None,
            details: json!({}),
            trace: Vec::new(),
        }),
        Algorithm::Sdp { lambda } => {
            let eta = sdp_eta(y, opts)?;
            let sdp_opts = SdpOptions {
                max_iters: opts.sdp.max_iters,
                tol: opts.sdp.tol,
                record_history: opts.trace,
                ..SdpOptions::default()
            };
            let lags: Vec<usize> = (0..lambda).collect();
            let sol = recover_sdp(y, g, &lags, &eta, &sdp_opts)?;
            let trace = sol.history.iter().map(|h| serde_json::to_value(h).expect("plain struct")).collect();
            Ok(RecoveryRun {
                details: json!({
                    "lambda_max": sol.lambda_max,
                    "trace": sol.trace,
                    "feasible": sol.feasible,
                    "primal_residual": sol.primal_residual,
                    "dual_residual": sol.dual_residual,
                    "constraint_residuals": sol.constraint_residuals,
                    "eta": sol.eta,
                    "warnings": sol.warnings,
                }),
                iterations: Some(sol.iterations),
                converged: Some(sol.converged),
                estimate: sol.estimate,
                trace,
            })
        }
        Algorithm::Gla => {
            let cfg = GlaConfig {
                max_iters: opts.gla.max_iters,
                tol: opts.gla.tol,
                record_objective: opts.trace,
                ..GlaConfig::default()
            };
            let out = recover_gla_restarts(y, g, &cfg, opts.gla.restarts, seed)?;
            let objective = stftpr::gla::gla_objective(&out.estimate, y, g)?;
            let trace =
                out.objective.iter().enumerate().map(|(i, v)| json!({ "iteration": i, "objective": v })).collect();
            Ok(RecoveryRun {
                details: json!({ "objective": objective, "final_diff": out.final_diff, "restarts": opts.gla.restarts }),
                iterations: Some(out.iterations),
                converged: Some(out.final_diff < opts.gla.tol),
                estimate: out.estimate,
                trace,
            })
        }
    }
}

/// Fails with a readable report if `g` is singular at a lag `alg` needs.
pub fn precheck(alg: Algorithm, g: &Window) -> Result<()> {
    let lags = alg.required_lags(g.len());
    if lags.is_empty() {
        return Ok(());
    }
    let report = check_admissibility(g, lags, INVERTIBILITY_TOL)?;
    if let Some((ell, status)) = report.first_failure() {
        return Err(HarnessError::Inadmissible(format!(
            "{} window for {alg} at N={}: lag {ell} has |spectrum| {:.3e} at bin {} against max {:.3e}",
            g.label(),
            g.len(),
            status.min_abs_spectrum,
            status.worst_bin,
            status.max_abs_spectrum
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub n: usize,
    pub window: String,
    pub snr_db: f64,
    pub trial: usize,
    pub trial_seed: u64,
    /// `ok`, or the error that stopped the trial.
    pub status: String,
    pub error: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub algorithm: String,
    pub n: usize,
    pub window: String,
    pub snr_db: f64,
    /// Trials that produced an estimate.
    pub count: usize,
    pub failed: usize,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    pub fn aggregate(&self, alg: Algorithm, window: &str, snr_db: f64) -> Option<&Aggregate> {
        let name = alg.to_string();
        self.aggregates
            .iter()
            .find(|a| a.algorithm == name && a.window == window && a.snr_db.total_cmp(&snr_db).is_eq())
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

struct Job {
    alg: Algorithm,
    window: usize,
    snr_index: usize,
    trial: usize,
}

/// Runs every (algorithm, window, snr, trial) combination on the rayon
/// pool. Rows come back in that nesting order whatever the completion order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let windows: Vec<(String, Window)> =
        spec.windows.iter().map(|w| w.build(spec.n).map(|g| (g.label(), g))).collect::<Result<_>>()?;
    for &alg in &spec.algorithms {
        for (_, g) in &windows {
            precheck(alg, g)?;
        }
    }
    let snrs = spec.snr_db.points();
    let mut jobs = Vec::new();
    for &alg in &spec.algorithms {
        for window in 0..windows.len() {
            for snr_index in 0..snrs.len() {
                for trial in 0..spec.trials {
                    jobs.push(Job { alg, window, snr_index, trial });
                }
            }
        }
    }
    let opts = RecoverOptions { gla: spec.gla.clone(), sdp: spec.sdp.clone(), ..RecoverOptions::default() };
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|job| {
            let (label, g) = &windows[job.window];
            let snr = snrs[job.snr_index];
            let seed = trial_seed(spec.seed, job.snr_index, job.trial);
            let start = Instant::now();
            let outcome = simulate(spec.n, g, snr, seed).and_then(|(x, y)| {
                let run = recover_with(job.alg, &y, g, seed, &opts)?;
                Ok((phase_aligned_error(&x, &run.estimate)?, run))
            });
            let seconds = start.elapsed().as_secs_f64();
            let (status, error, iterations, converged) = match outcome {
                Ok((err, run)) => ("ok".to_string(), err, run.iterations, run.converged),
                Err(e) => (e.to_string(), f64::NAN, None, None),
            };
            TrialRecord {
                algorithm: job.alg.to_string(),
                n: spec.n,
                window: label.clone(),
                snr_db: snr,
                trial: job.trial,
                trial_seed: seed,
                status,
                error,
                iterations,
                converged,
                seconds,
            }
        })
        .collect();

    let aggregates = trials
        .chunks(spec.trials)
        .map(|group| {
            let ok: Vec<f64> = group.iter().filter(|t| t.status == "ok").map(|t| t.error).collect();
            let first = &group[0];
            Aggregate {
                algorithm: first.algorithm.clone(),
                n: first.n,
                window: first.window.clone(),
                snr_db: first.snr_db,
                count: ok.len(),
                failed: group.len() - ok.len(),
                median: median(&ok),
                mean: if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 },
                max: ok.iter().copied().fold(f64::NAN, f64::max),
                mean_seconds: group.iter().map(|t| t.seconds).sum::<f64>() / group.len() as f64,
            }
        })
        .collect();
    Ok(ExperimentResult { spec: spec.clone(), trials, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{SnrGrid, WindowSpec};

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            name: "t".into(),
            algorithms: vec![Algorithm::Ls, Algorithm::Algebraic],
            n: 11,
            windows: vec![WindowSpec::Rect { width: 7 }],
            snr_db: SnrGrid::Db(vec![20.0, 40.0]),
            trials: 3,
            seed: 5,
            output_path: None,
            gla: GlaSettings::default(),
            sdp: SdpSettings::default(),
        }
    }

    #[test]
    fn rows_are_in_canonical_order() {
        let res = run_experiment(&small_spec()).unwrap();
        assert_eq!(res.trials.len(), 12);
        assert_eq!(res.aggregates.len(), 4);
        let keys: Vec<(String, u64, usize)> =
            res.trials.iter().map(|t| (t.algorithm.clone(), t.snr_db as u64, t.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|k| (k.0 != "ls", k.1, k.2));
        assert_eq!(keys, sorted);
        assert!(res.trials.iter().all(|t| t.status == "ok"));
    }

    #[test]
    fn trial_rows_are_reproducible_from_their_seed() {
        let spec = small_spec();
        let res = run_experiment(&spec).unwrap();
        let g = Window::rectangular(11, 7).unwrap();
        for t in &res.trials {
            let (x, y) = simulate(11, &g, t.snr_db, t.trial_seed).unwrap();
            let alg: Algorithm = t.algorithm.parse().unwrap();
            let run = recover_with(alg, &y, &g, t.trial_seed, &RecoverOptions::default()).unwrap();
            assert_eq!(phase_aligned_error(&x, &run.estimate).unwrap(), t.error);
        }
    }

    #[test]
    fn inadmissible_window_stops_the_sweep() {
        let spec = ExperimentSpec { n: 12, windows: vec![WindowSpec::Rect { width: 7 }], ..small_spec() };
        let err = run_experiment(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::Inadmissible(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
