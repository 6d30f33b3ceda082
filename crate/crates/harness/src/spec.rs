//! Experiment configuration and the built-in presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stftpr::{Window, WindowKind};

use crate::error::{HarnessError, Result};

/// Recovery algorithm run by an experiment.
///
/// Written as `ls`, `algebraic`, `gla` or `sdp:<lambda>` in configs and on
/// the command line; `sdp:<lambda>` uses the lag set `0..lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Ls,
    Algebraic,
    Sdp { lambda: usize },
    Gla,
}

impl Algorithm {
    /// Lags whose circulant systems must be invertible before the run starts.
    pub fn required_lags(self, n: usize) -> Vec<usize> {
        match self {
            Algorithm::Ls => (0..n).collect(),
            Algorithm::Algebraic => vec![0, 1],
            Algorithm::Sdp { .. } | Algorithm::Gla => Vec::new(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Ls => f.write_str("ls"),
            Algorithm::Algebraic => f.write_str("algebraic"),
            Algorithm::Sdp { lambda } => write!(f, "sdp:{lambda}"),
            Algorithm::Gla => f.write_str("gla"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ls" => return Ok(Algorithm::Ls),
            "algebraic" => return Ok(Algorithm::Algebraic),
            "gla" => return Ok(Algorithm::Gla),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("sdp:") {
            let lambda: usize =
                rest.parse().map_err(|_| HarnessError::Config(format!("bad SDP lag count in `{s}`")))?;
            if lambda == 0 {
                return Err(HarnessError::Config("SDP needs at least one lag".into()));
            }
            return Ok(Algorithm::Sdp { lambda });
        }
        Err(HarnessError::Config(format!("unknown algorithm `{s}` (expected ls, algebraic, gla or sdp:<lambda>)")))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.to_string()
    }
}

/// Window recipe: `rect:<W>` or `gauss:<sigma>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WindowSpec {
    Rect { width: usize },
    Gauss { sigma: f64 },
}

impl WindowSpec {
    pub fn build(self, n: usize) -> Result<Window> {
        Ok(match self {
            WindowSpec::Rect { width } => Window::rectangular(n, width)?,
            WindowSpec::Gauss { sigma } => Window::gaussian(n, sigma)?,
        })
    }

    pub fn from_kind(kind: &WindowKind) -> Option<Self> {
        match *kind {
            WindowKind::Rectangular { width } => Some(WindowSpec::Rect { width }),
            WindowKind::Gaussian { sigma } => Some(WindowSpec::Gauss { sigma }),
            WindowKind::Custom => None,
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Rect { width } => write!(f, "rect:{width}"),
            WindowSpec::Gauss { sigma } => write!(f, "gauss:{sigma}"),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HarnessError::Config(format!("bad window `{s}` (expected rect:<W> or gauss:<sigma>)"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "rect" => Ok(WindowSpec::Rect { width: arg.parse().map_err(|_| bad())? }),
            "gauss" => {
                let sigma: f64 = arg.parse().map_err(|_| bad())?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                Ok(WindowSpec::Gauss { sigma })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for WindowSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WindowSpec> for String {
    fn from(w: WindowSpec) -> String {
        w.to_string()
    }
}

/// SNR points of a sweep: finite dB values, or the single noise-free point
/// written as `"noise-free"`.
#[derive(Clone, Debug, PartialEq)]
pub enum SnrGrid {
    NoiseFree,
    Db(Vec<f64>),
}

impl SnrGrid {
    /// One entry per sweep point; `INFINITY` stands for noise-free.
    pub fn points(&self) -> Vec<f64> {
        match self {
            SnrGrid::NoiseFree => vec![f64::INFINITY],
            SnrGrid::Db(v) => v.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SnrGridRepr {
    Text(String),
    List(Vec<f64>),
}

impl Serialize for SnrGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SnrGrid::NoiseFree => SnrGridRepr::Text("noise-free".into()),
            SnrGrid::Db(v) => SnrGridRepr::List(v.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SnrGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SnrGridRepr::deserialize(d)? {
            SnrGridRepr::Text(t) if t == "noise-free" => Ok(SnrGrid::NoiseFree),
            SnrGridRepr::Text(t) => Err(serde::de::Error::custom(format!(
                "snr grid must be a list of dB values or \"noise-free\", got \"{t}\""
            ))),
            SnrGridRepr::List(v) => Ok(SnrGrid::Db(v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlaSettings {
    pub max_iters: usize,
    pub tol: f64,
    /// Random starts per trial; the one with the smallest objective is kept.
    pub restarts: usize,
}

impl Default for GlaSettings {
    fn default() -> Self {
        GlaSettings { max_iters: 500, tol: 1e-6, restarts: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdpSettings {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { max_iters: 5000, tol: 1e-7 }
    }
}

/// A full sweep: every algorithm on every window at every SNR point, with
/// `trials` random signals per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub algorithms: Vec<Algorithm>,
    pub n: usize,
    pub windows: Vec<WindowSpec>,
    pub snr_db: SnrGrid,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub gla: GlaSettings,
    #[serde(default)]
    pub sdp: SdpSettings,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if self.algorithms.is_empty() || self.windows.is_empty() {
            return bad("need at least one algorithm and one window".into());
        }
        match &self.snr_db {
            SnrGrid::Db(v) if v.is_empty() => return bad("snr grid is empty".into()),
            SnrGrid::Db(v) if v.iter().any(|s| !s.is_finite()) => {
                return bad("snr values must be finite; use \"noise-free\" for clean data".into())
            }
            _ => {}
        }
        for a in &self.algorithms {
            if let Algorithm::Sdp { lambda } = a {
                if *lambda > self.n {
                    return bad(format!("sdp:{lambda} asks for more lags than N={}", self.n));
                }
            }
        }
        if self.gla.max_iters == 0 || !(self.gla.tol > 0.0) || self.gla.restarts == 0 {
            return bad("gla settings need max_iters >= 1, tol > 0, restarts >= 1".into());
        }
        if self.sdp.max_iters == 0 || !(self.sdp.tol > 0.0) {
            return bad("sdp settings need max_iters >= 1 and tol > 0".into());
        }
        for w in &self.windows {
            w.build(self.n)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Table1,
    Fig1,
    Fig2,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Table1, Preset::Fig1, Preset::Fig2];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Table1 => "algebraic recovery, N=211, rectangular W in {5,23,41}, 100 noise-free trials",
            Preset::Fig1 => "least squares vs Griffin-Lim, N=23, Gaussian sigma=12, 10 trials per SNR",
            Preset::Fig2 => "SDP with lag sets of size 3, 5 and 23, N=23, rectangular W=9, 10 trials per SNR",
        }
    }

    pub fn spec(self, seed: u64) -> ExperimentSpec {
        let sweep = SnrGrid::Db((1..=10).map(|i| 5.0 * i as f64).collect());
        let base = ExperimentSpec {
            name: self.name().into(),
            algorithms: Vec::new(),
            n: 23,
            windows: Vec::new(),
            snr_db: sweep,
            trials: 10,
            seed,
            output_path: None,
            gla: GlaSettings::default(),
            sdp: SdpSettings::default(),
        };
        match self {
            Preset::Table1 => ExperimentSpec {
                algorithms: vec![Algorithm::Algebraic],
                n: 211,
                windows: [5, 23, 41].map(|width| WindowSpec::Rect { width }).to_vec(),
                snr_db: SnrGrid::NoiseFree,
                trials: 100,
                ..base
            },
            Preset::Fig1 => ExperimentSpec {
                algorithms: vec![Algorithm::Ls, Algorithm::Gla],
                windows: vec![WindowSpec::Gauss { sigma: 12.0 }],
                gla: GlaSettings { restarts: 20, ..GlaSettings::default() },
                ..base
            },
            Preset::Fig2 => ExperimentSpec {
                algorithms: [3, 5, 23].map(|lambda| Algorithm::Sdp { lambda }).to_vec(),
                windows: vec![WindowSpec::Rect { width: 9 }],
                ..base
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_strings_round_trip() {
        for a in [Algorithm::Ls, Algorithm::Algebraic, Algorithm::Gla, Algorithm::Sdp { lambda: 5 }] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert!("sdp:0".parse::<Algorithm>().is_err());
        assert!("svd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn window_strings_round_trip() {
        for w in [WindowSpec::Rect { width: 9 }, WindowSpec::Gauss { sigma: 12.5 }] {
            assert_eq!(w.to_string().parse::<WindowSpec>().unwrap(), w);
        }
        assert!("gauss:-1".parse::<WindowSpec>().is_err());
        assert!("hann:4".parse::<WindowSpec>().is_err());
    }

    #[test]
    fn specs_round_trip_through_json() {
        for p in Preset::ALL {
            let spec = p.spec(3);
            spec.validate().unwrap();
            let text = serde_json::to_string(&spec).unwrap();
            let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn config_defaults_and_rejections() {
        let text = r#"{"algorithms":["ls"],"n":11,"windows":["rect:7"],"snr_db":"noise-free","trials":2,"seed":1}"#;
        let spec: ExperimentSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.gla, GlaSettings::default());
        spec.validate().unwrap();

        let zero = ExperimentSpec { trials: 0, ..spec.clone() };
        assert!(zero.validate().is_err());
        let inf = ExperimentSpec { snr_db: SnrGrid::Db(vec![f64::INFINITY]), ..spec.clone() };
        assert!(inf.validate().is_err());
        assert!(serde_json::from_str::<ExperimentSpec>(&text.replace("noise-free", "clean")).is_err());
        assert!(serde_json::from_str::<ExperimentSpec>(&text.replace("\"ls\"", "\"svd\"")).is_err());
    }
}
