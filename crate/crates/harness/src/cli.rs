//! Command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stftpr::io::{
    load_measurements, load_signal, load_window, save_measurements, save_signal, save_window, write_signal,
};
use stftpr::{
    check_admissibility, phase_aligned_error, rect_admissibility_predicate, RectMode, Window, WindowKind,
    INVERTIBILITY_TOL,
};

use crate::engine::{measure_noisy, recover_with, run_experiment, simulate, RecoverOptions};
use crate::error::{HarnessError, Result};
use crate::report::{write_csv, write_json};
use crate::spec::{Algorithm, ExperimentSpec, GlaSettings, Preset, SdpSettings, SnrGrid, WindowSpec};

/// Directory for output files given as relative paths.
pub const OUTPUT_DIR_ENV: &str = "STFTPR_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "stftpr", version, about = "Phase retrieval from STFT magnitudes")]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random signal (or load one), measure it and write the files.
    Simulate(SimulateArgs),
    /// Recover a signal from STFT magnitudes.
    Recover(RecoverArgs),
    /// Test whether a window's circulant systems are invertible.
    CheckWindow(CheckWindowArgs),
    /// Run a sweep from a preset or a JSON config.
    Experiment(ExperimentArgs),
    /// List the presets, show one as a config, or run one.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Window recipe: rect:<W> or gauss:<sigma>.
    #[arg(long, conflicts_with = "window_file")]
    pub window: Option<WindowSpec>,
    /// Window samples as an index,real,imag CSV.
    #[arg(long)]
    pub window_file: Option<PathBuf>,
}

impl WindowArgs {
    fn resolve(&self, n: Option<usize>) -> Result<Window> {
        match (&self.window, &self.window_file) {
            (Some(spec), None) => {
                let n = n.ok_or_else(|| HarnessError::Config("a window recipe needs the signal length".into()))?;
                spec.build(n)
            }
            (None, Some(path)) => Ok(load_window(path)?),
            _ => Err(HarnessError::Config("give exactly one of --window or --window-file".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Signal length; ignored with --signal.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Measure this signal instead of drawing one.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Noise level in dB; omit for clean measurements.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Where to write signal.csv, window.csv and measurements.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// ls, algebraic, gla, sdp or sdp:<lambda>.
    #[arg(long)]
    pub alg: String,
    /// SDP lag count; the lag set is 0..lambda (default N).
    #[arg(long)]
    pub lambda: Option<usize>,
    /// Measurements as an m,k,value CSV.
    #[arg(long, conflicts_with_all = ["signal", "n"])]
    pub measurements: Option<PathBuf>,
    /// Signal to measure and recover.
    #[arg(long, conflicts_with = "n")]
    pub signal: Option<PathBuf>,
    /// Length of a random signal drawn from --seed.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Noise added when simulating; with --measurements, sizes the SDP bounds.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Ground truth for the error when recovering from a measurement file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Same SDP noise bound for every lag.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Iteration cap for Griffin-Lim and SDP.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stopping tolerance for Griffin-Lim and SDP.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Griffin-Lim random starts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Per-iteration diagnostics as JSON lines (SDP and Griffin-Lim).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Estimate as an index,real,imag CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LagSet {
    /// Every lag, as least squares needs.
    Full,
    /// Lags 0 and 1, as the algebraic recursion needs.
    Pair,
}

#[derive(Debug, Args)]
pub struct CheckWindowArgs {
    /// Signal length; taken from the file with --window-file.
    #[arg(long)]
    pub n: Option<usize>,
    /// Rectangular window of this width.
    #[arg(long, conflicts_with_all = ["gaussian", "window_file"])]
    pub rect: Option<usize>,
    /// Gaussian window of this width parameter.
    #[arg(long, conflicts_with = "window_file")]
    pub gaussian: Option<f64>,
    /// Window samples as an index,real,imag CSV.
    #[arg(long)]
    pub window_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LagSet::Full)]
    pub lags: LagSet,
    /// Relative threshold below which a spectrum bin counts as zero.
    #[arg(long, default_value_t = INVERTIBILITY_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Built-in sweep to run.
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// ExperimentSpec as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Trials per (algorithm, window, SNR) cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated dB values replacing the sweep.
    #[arg(long, value_delimiter = ',')]
    pub snr: Option<Vec<f64>>,
    /// Results file; stdout when neither this nor the config names one.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Add wall-clock seconds to the output (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    pub name: Option<Preset>,
    /// Print the preset as a JSON config instead of running it.
    #[arg(long)]
    pub show: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(p)?))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    let format = cli.format;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, seed.unwrap_or(0), format, out),
        Command::Recover(a) => cmd_recover(a, seed.unwrap_or(0), format, out),
        Command::CheckWindow(a) => cmd_check_window(a, format, out),
        Command::Experiment(a) => {
            let spec = match (a.preset, &a.config) {
                (Some(p), None) => p.spec(seed.unwrap_or(0)),
                (None, Some(path)) => {
                    let mut spec: ExperimentSpec = serde_json::from_str(&std::fs::read_to_string(path)?)
                        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                    if let Some(s) = seed {
                        spec.seed = s;
                    }
                    spec
                }
                _ => return Err(HarnessError::Config("give exactly one of --preset or --config".into())),
            };
            run_spec(spec, &a.overrides, format, out)
        }
        Command::Presets(a) => match a.name {
            None => {
                match format {
                    Format::Csv => {
                        writeln!(out, "name,description")?;
                        for p in Preset::ALL {
                            writeln!(out, "{},\"{}\"", p.name(), p.description())?;
                        }
                    }
                    Format::Json => {
                        let list: Vec<_> = Preset::ALL
                            .iter()
                            .map(|p| json!({ "name": p.name(), "description": p.description() }))
                            .collect();
                        writeln!(out, "{}", serde_json::to_string_pretty(&list)?)?;
                    }
                }
                Ok(())
            }
            Some(p) if a.show => {
                writeln!(out, "{}", serde_json::to_string_pretty(&p.spec(seed.unwrap_or(0)))?)?;
                Ok(())
            }
            Some(p) => run_spec(p.spec(seed.unwrap_or(0)), &a.overrides, format, out),
        },
    }
}

fn run_spec(mut spec: ExperimentSpec, o: &Overrides, format: Format, out: &mut dyn Write) -> Result<()> {
    if let Some(t) = o.trials {
        spec.trials = t;
    }
    if let Some(s) = &o.snr {
        spec.snr_db = SnrGrid::Db(s.clone());
    }
    if let Some(p) = &o.output {
        spec.output_path = Some(p.clone());
    }
    let result = run_experiment(&spec)?;
    let write = |w: &mut dyn Write| match format {
        Format::Csv => write_csv(w, &result, o.timing),
        Format::Json => write_json(w, &result, o.timing),
    };
    match &spec.output_path {
        Some(p) => {
            let path = output_path(p);
            let mut w = create(&path)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => write(out)?,
    }
    Ok(())
}

fn snr_or_clean(snr: Option<f64>) -> Result<f64> {
    match snr {
        Some(s) if s.is_nan() => Err(HarnessError::Config("SNR must be a number".into())),
        Some(s) => Ok(s),
        None => Ok(f64::INFINITY),
    }
}

fn cmd_simulate(a: SimulateArgs, seed: u64, format: Format, out: &mut dyn Write) -> Result<()> {
    let snr = snr_or_clean(a.snr)?;
    let (x, g, y) = match &a.signal {
        Some(path) => {
            let x = load_signal(path)?;
            let g = a.window.resolve(Some(x.len()))?;
            let y = measure_noisy(&x, &g, snr, seed)?;
            (x, g, y)
        }
        None => {
            let n = a.n.ok_or_else(|| HarnessError::Config("give --n or --signal".into()))?;
            let g = a.window.resolve(Some(n))?;
            let (x, y) = simulate(n, &g, snr, seed)?;
            (x, g, y)
        }
    };
    let dir = match (&a.out_dir, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(d), _) => output_path(d),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let files = [dir.join("signal.csv"), dir.join("window.csv"), dir.join("measurements.csv")];
    save_signal(&files[0], &x)?;
    save_window(&files[1], &g)?;
    save_measurements(&files[2], &y)?;
    let summary = [
        ("n", json!(x.len())),
        ("window", json!(g.label())),
        ("snr_db", json!(if snr.is_finite() { json!(snr) } else { json!("noise-free") })),
        ("seed", json!(seed)),
        ("noise_sigma", json!(y.noise_sigma())),
        ("signal", json!(files[0].display().to_string())),
        ("window_file", json!(files[1].display().to_string())),
        ("measurements", json!(files[2].display().to_string())),
    ];
    write_summary(out, format, &summary)
}

fn write_summary(out: &mut dyn Write, format: Format, fields: &[(&str, serde_json::Value)]) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in fields {
                match v {
                    serde_json::Value::String(s) => writeln!(out, "{k},{s}")?,
                    other => writeln!(out, "{k},{other}")?,
                }
            }
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&map)?)?;
        }
    }
    Ok(())
}

fn parse_algorithm(alg: &str, lambda: Option<usize>, n: usize) -> Result<Algorithm> {
    match (alg.trim(), lambda) {
        ("sdp", l) => Ok(Algorithm::Sdp { lambda: l.unwrap_or(n) }),
        (s, None) => s.parse(),
        (s, Some(_)) => Err(HarnessError::Config(format!("--lambda only applies to sdp, not `{s}`"))),
    }
}

fn cmd_recover(a: RecoverArgs, seed: u64, format: Format, out: &mut dyn Write) -> Result<()> {
    let snr = snr_or_clean(a.snr)?;
    let (truth, g, y) = if let Some(path) = &a.measurements {
        let y = load_measurements(path)?;
        let g = a.window.resolve(Some(y.n()))?;
        let truth = a.truth.as_deref().map(load_signal).transpose()?;
        (truth, g, y)
    } else if let Some(path) = &a.signal {
        let x = load_signal(path)?;
        let g = a.window.resolve(Some(x.len()))?;
        let y = measure_noisy(&x, &g, snr, seed)?;
        (Some(x), g, y)
    } else {
        let n = a.n.ok_or_else(|| HarnessError::Config("give --measurements, --signal or --n".into()))?;
        let g = a.window.resolve(Some(n))?;
        let (x, y) = simulate(n, &g, snr, seed)?;
        (Some(x), g, y)
    };
    let n = y.n();
    if g.len() != n {
        return Err(HarnessError::Core(stftpr::Error::LengthMismatch { expected: n, found: g.len() }));
    }
    let alg = parse_algorithm(&a.alg, a.lambda, n)?;
    if let Algorithm::Sdp { lambda } = alg {
        if lambda == 0 || lambda > n {
            return Err(HarnessError::Config(format!("lambda must be in 1..={n}, got {lambda}")));
        }
    }
    crate::engine::precheck(alg, &g)?;

    let mut opts = RecoverOptions {
        gla: GlaSettings {
            max_iters: a.max_iters.unwrap_or(GlaSettings::default().max_iters),
            tol: a.tol.unwrap_or(GlaSettings::default().tol),
            restarts: a.restarts.unwrap_or(GlaSettings::default().restarts),
        },
        sdp: SdpSettings {
            max_iters: a.max_iters.unwrap_or(SdpSettings::default().max_iters),
            tol: a.tol.unwrap_or(SdpSettings::default().tol),
        },
        eta: a.eta.map(|e| vec![e; n]),
        snr_hint: a.snr,
        trace: a.trace.is_some(),
    };
    if opts.gla.restarts == 0 || opts.gla.max_iters == 0 || !(opts.gla.tol > 0.0) {
        return Err(HarnessError::Config("need --restarts >= 1, --max-iters >= 1 and --tol > 0".into()));
    }
    if a.eta.is_some_and(|e| !(e >= 0.0)) {
        return Err(HarnessError::Config("--eta must be >= 0".into()));
    }
    if a.measurements.is_some() && a.snr.is_none() {
        opts.snr_hint = None;
    }

    let run = recover_with(alg, &y, &g, seed, &opts)?;
    let error = truth.as_ref().map(|x| phase_aligned_error(x, &run.estimate)).transpose()?;

    if let Some(path) = &a.trace {
        let mut w = create(&output_path(path))?;
        for line in &run.trace {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.output {
        save_signal(&output_path(path), &run.estimate)?;
    }
    let report = json!({
        "algorithm": alg.to_string(),
        "n": n,
        "window": g.label(),
        "seed": seed,
        "snr_db": a.snr,
        "error": error,
        "iterations": run.iterations,
        "converged": run.converged,
        "details": run.details,
        "estimate": run.estimate.values().iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
    });
    if let Some(path) = &a.report {
        let mut w = create(&output_path(path))?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    match format {
        Format::Csv => write_signal(&mut *out, run.estimate.values())?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
    }
    if let Some(e) = error {
        eprintln!("phase-aligned error: {e:e}");
    }
    Ok(())
}

fn cmd_check_window(a: CheckWindowArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let g = match (a.rect, a.gaussian, &a.window_file) {
        (Some(w), None, None) => Window::rectangular(need_n(a.n)?, w)?,
        (None, Some(s), None) => Window::gaussian(need_n(a.n)?, s)?,
        (None, None, Some(p)) => load_window(p)?,
        _ => return Err(HarnessError::Config("give one of --rect, --gaussian or --window-file".into())),
    };
    let n = g.len();
    let mode = match a.lags {
        LagSet::Full => RectMode::Full,
        LagSet::Pair => RectMode::Pair,
    };
    let report = check_admissibility(&g, mode.lags(n), a.tol)?;
    let predicate = match g.kind() {
        WindowKind::Rectangular { width } => Some(rect_admissibility_predicate(n, *width, mode)),
        _ => None,
    };
    let lag_text = match mode {
        RectMode::Full => format!("every lag 0..{n}"),
        RectMode::Pair => "lags 0 and 1".to_string(),
    };
    let message = match (report.overall, report.first_failure()) {
        (true, _) => {
            let extra = if predicate == Some(true) { "; the gcd condition for rectangular windows holds" } else { "" };
            format!("admissible: {} at N={n} is invertible at {lag_text}{extra}", g.label())
        }
        (false, Some((ell, s))) => format!(
            "inadmissible: {} at N={n} is singular at lag {ell} (bin {}, |spectrum| {:.3e} of max {:.3e})",
            g.label(),
            s.worst_bin,
            s.min_abs_spectrum,
            s.max_abs_spectrum
        ),
        (false, None) => unreachable!("a failed report names its failing lag"),
    };
    match format {
        Format::Csv => {
            writeln!(out, "lag,min_abs_spectrum,max_abs_spectrum,relative,worst_bin,invertible")?;
            for (ell, s) in &report.per_ell {
                let rel = if s.max_abs_spectrum > 0.0 { s.min_abs_spectrum / s.max_abs_spectrum } else { 0.0 };
                writeln!(
                    out,
                    "{ell},{:e},{:e},{:e},{},{}",
                    s.min_abs_spectrum, s.max_abs_spectrum, rel, s.worst_bin, s.invertible
                )?;
            }
            eprintln!("{message}");
        }
        Format::Json => {
            let v = json!({
                "n": n,
                "window": g.label(),
                "lags": mode,
                "admissible": report.overall,
                "rect_predicate": predicate,
                "message": message,
                "report": report,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
    }
    if report.overall {
        Ok(())
    } else {
        Err(HarnessError::Inadmissible(message))
    }
}

fn need_n(n: Option<usize>) -> Result<usize> {
    n.ok_or_else(|| HarnessError::Config("--n is required with --rect or --gaussian".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<()>, String) {
        let cli = Cli::try_parse_from(std::iter::once("stftpr").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = run(cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn check_window_reports_admissible_rect() {
        let (r, text) = run_args(&["check-window", "--rect", "13", "--n", "23"]);
        r.unwrap();
        assert_eq!(text.lines().count(), 24);
        let (r, text) = run_args(&["check-window", "--rect", "13", "--n", "23", "--format", "json"]);
        r.unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["admissible"], true);
        assert_eq!(v["rect_predicate"], true);
        assert!(v["message"].as_str().unwrap().starts_with("admissible"));
    }

    #[test]
    fn check_window_fails_with_precondition_code() {
        // gcd(15, 3) = 3 breaks the full lag set but not lags 0 and 1
        let (r, _) = run_args(&["check-window", "--rect", "8", "--n", "15"]);
        assert_eq!(r.unwrap_err().exit_code(), 2);
        let (r, _) = run_args(&["check-window", "--rect", "8", "--n", "15", "--lags", "pair"]);
        r.unwrap();
    }

    #[test]
    fn sdp_lambda_parsing() {
        assert_eq!(parse_algorithm("sdp", Some(4), 9).unwrap(), Algorithm::Sdp { lambda: 4 });
        assert_eq!(parse_algorithm("sdp", None, 9).unwrap(), Algorithm::Sdp { lambda: 9 });
        assert_eq!(parse_algorithm("sdp:3", None, 9).unwrap(), Algorithm::Sdp { lambda: 3 });
        assert!(parse_algorithm("ls", Some(3), 9).is_err());
    }

    #[test]
    fn presets_list_and_show() {
        let (r, text) = run_args(&["presets"]);
        r.unwrap();
        assert_eq!(text.lines().count(), 4);
        let (r, text) = run_args(&["presets", "fig2", "--show", "--seed", "4"]);
        r.unwrap();
        let spec: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, Preset::Fig2.spec(4));
    }
}
