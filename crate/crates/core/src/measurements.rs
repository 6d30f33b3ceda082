use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::{self, STREAM_NOISE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    Gaussian { sigma: f64 },
}

/// Squared STFT magnitudes `Y[m, k]` on an `N x N` grid.
///
/// Noisy grids are not clipped, so entries may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeMeasurements {
    grid: Grid<f64>,
    noise: NoiseModel,
    seed: Option<u64>,
}

impl MagnitudeMeasurements {
    pub fn new(grid: Grid<f64>) -> Result<Self> {
        Self::with_noise(grid, NoiseModel::None, None)
    }

    pub fn with_noise(grid: Grid<f64>, noise: NoiseModel, seed: Option<u64>) -> Result<Self> {
        if !grid.is_square() || grid.rows() < 2 {
            return Err(Error::InvalidParameter(format!(
                "measurements must be a square grid of side >= 2, got {}x{}",
                grid.rows(),
                grid.cols()
            )));
        }
        Ok(MagnitudeMeasurements { grid, noise, seed })
    }

    pub fn n(&self) -> usize {
        self.grid.rows()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn noise_sigma(&self) -> f64 {
        match self.noise {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => sigma,
        }
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.grid.as_slice().iter().map(|v| v * v).sum()
    }

    /// Scales every entry by `c`; the recorded noise level scales with it.
    pub fn scaled(&self, c: f64) -> Self {
        let noise = match self.noise {
            NoiseModel::None => NoiseModel::None,
            NoiseModel::Gaussian { sigma } => NoiseModel::Gaussian { sigma: sigma * c.abs() },
        };
        MagnitudeMeasurements { grid: self.grid.map(|v| v * c), noise, seed: self.seed }
    }
}

/// Noise standard deviation giving `snr_db` for a clean grid with squared
/// Frobenius norm `energy` and `count` entries.
pub fn sigma_for_snr(energy: f64, count: usize, snr_db: f64) -> f64 {
    (energy / (count as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Adds i.i.d. zero-mean Gaussian noise with the variance that realizes
/// `snr_db` in expectation, i.e. `10 log10(|Y|_F^2 / (N^2 sigma^2)) = snr_db`.
///
/// `f64::INFINITY` is the noise-free sentinel and returns the input unchanged.
pub fn add_noise(clean: &MagnitudeMeasurements, snr_db: f64, seed: u64) -> Result<MagnitudeMeasurements> {
    if snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let n = clean.n();
    let sigma = sigma_for_snr(clean.frobenius_norm_sqr(), n * n, snr_db);
    let noise = rng::real_gaussian(n * n, &mut rng::seeded(seed, STREAM_NOISE));
    let data = clean.grid.as_slice().iter().zip(&noise).map(|(y, e)| y + sigma * e).collect();
    let grid = Grid::from_vec(n, n, data).expect("square grid");
    MagnitudeMeasurements::with_noise(grid, NoiseModel::Gaussian { sigma }, Some(seed))
}

/// Empirical SNR in dB between a clean grid and a perturbed copy.
pub fn realized_snr_db(clean: &MagnitudeMeasurements, noisy: &MagnitudeMeasurements) -> f64 {
    let noise: f64 = clean.grid.as_slice().iter().zip(noisy.grid.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    10.0 * (clean.frobenius_norm_sqr() / noise).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> MagnitudeMeasurements {
        MagnitudeMeasurements::new(Grid::from_fn(n, n, |m, k| 1.0 + (m * n + k) as f64)).unwrap()
    }

    #[test]
    fn infinite_snr_is_identity() {
        let y = sample(5);
        assert_eq!(add_noise(&y, f64::INFINITY, 1).unwrap(), y);
        assert!(add_noise(&y, f64::NAN, 1).is_err());
    }

    #[test]
    fn same_seed_same_noise() {
        let y = sample(7);
        let a = add_noise(&y, 10.0, 42).unwrap();
        let b = add_noise(&y, 10.0, 42).unwrap();
        let c = add_noise(&y, 10.0, 43).unwrap();
        assert_eq!(a.grid().as_slice(), b.grid().as_slice());
        assert_ne!(a.grid().as_slice(), c.grid().as_slice());
        assert!(matches!(a.noise(), NoiseModel::Gaussian { .. }));
        assert_eq!(a.seed(), Some(42));
    }

    #[test]
    fn sigma_matches_definition() {
        let y = sample(4);
        let sigma = sigma_for_snr(y.frobenius_norm_sqr(), 16, 20.0);
        let snr = 10.0 * (y.frobenius_norm_sqr() / (16.0 * sigma * sigma)).log10();
        assert!((snr - 20.0).abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        assert!(MagnitudeMeasurements::new(Grid::zeros(3, 4)).is_err());
    }
}
