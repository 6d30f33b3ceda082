use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, STREAM_SIGNAL};

/// Reduces a possibly negative index into `0..n`.
#[inline]
pub fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// A complex signal of fixed length `N >= 2`, indexed periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: Vec<Complex64>,
}

impl Signal {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!("signal length must be at least 2, got {}", values.len())));
        }
        Ok(Signal { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Signal::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Real and imaginary parts drawn i.i.d. from the standard normal.
    pub fn random_gaussian(n: usize, seed: u64) -> Result<Self> {
        Signal::new(rng::complex_gaussian(n, &mut rng::seeded(seed, STREAM_SIGNAL)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Periodic access: `at(-1)` is the last sample.
    pub fn at(&self, i: isize) -> Complex64 {
        self.values[wrap(i, self.values.len())]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_non_vanishing(&self) -> bool {
        self.values.iter().all(|v| v.norm() > 0.0)
    }

    pub fn is_non_vanishing_with(&self, threshold: f64) -> bool {
        self.values.iter().all(|v| v.norm() > threshold)
    }

    pub fn scaled(&self, c: Complex64) -> Signal {
        Signal { values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn with_global_phase(&self, phi: f64) -> Signal {
        self.scaled(Complex64::from_polar(1.0, phi))
    }
}

/// How a window was constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular { width: usize },
    Gaussian { sigma: f64 },
    Custom,
}

/// STFT window of length `N`, indexed periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    values: Vec<Complex64>,
    kind: WindowKind,
}

impl Window {
    /// Ones on `0..width`, zeros elsewhere.
    pub fn rectangular(n: usize, width: usize) -> Result<Self> {
        if n < 2 || width == 0 || width > n {
            return Err(Error::InvalidParameter(format!(
                "rectangular window needs 1 <= W <= N and N >= 2, got N={n}, W={width}"
            )));
        }
        let values = (0..n).map(|i| Complex64::new(if i < width { 1.0 } else { 0.0 }, 0.0)).collect();
        Ok(Window { values, kind: WindowKind::Rectangular { width } })
    }

    /// `exp(-n^2 / sigma^2)` for `n` in `0..N`, peaking at index 0 and decaying
    /// towards the end of the buffer.
    ///
    /// The tail is not mirrored around 0. A wrapped (even) Gaussian makes the
    /// lag autocorrelations nearly singular, which ruins least-squares recovery
    /// under noise.
    pub fn gaussian(n: usize, sigma: f64) -> Result<Self> {
        if n < 2 || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian window needs N >= 2 and sigma > 0, got N={n}, sigma={sigma}"
            )));
        }
        let values = (0..n)
            .map(|i| {
                let t = i as f64;
                Complex64::new((-(t * t) / (sigma * sigma)).exp(), 0.0)
            })
            .collect();
        Ok(Window { values, kind: WindowKind::Gaussian { sigma } })
    }

    pub fn custom(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("window length must be at least 2".into()));
        }
        Ok(Window { values, kind: WindowKind::Custom })
    }

    /// Rebuilds a window from stored samples and metadata.
    pub fn with_kind(values: Vec<Complex64>, kind: WindowKind) -> Result<Self> {
        let mut w = Window::custom(values)?;
        w.kind = kind;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    pub fn at(&self, i: isize) -> Complex64 {
        self.values[wrap(i, self.values.len())]
    }

    /// Short label used in result tables, e.g. `rect13` or `gauss12`.
    pub fn label(&self) -> String {
        match &self.kind {
            WindowKind::Rectangular { width } => format!("rect{width}"),
            WindowKind::Gaussian { sigma } => format!("gauss{sigma}"),
            WindowKind::Custom => "custom".to_string(),
        }
    }
}
