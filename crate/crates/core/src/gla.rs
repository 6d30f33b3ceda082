//! Griffin-Lim baseline: alternate between imposing the measured magnitudes
//! and projecting back onto consistent STFTs with least-squares synthesis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measurements::MagnitudeMeasurements;
use crate::rng::{self, STREAM_INIT};
use crate::signal::{Signal, Window};
use crate::transforms::{istft_ls, stft_forward};

#[derive(Clone, Debug, PartialEq)]
pub enum GlaInit {
    /// Complex Gaussian start drawn from the seed.
    Random {
        seed: u64,
    },
    Provided(Signal),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlaConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub init: GlaInit,
    /// Keep the objective value after every iteration.
    pub record_objective: bool,
}

impl Default for GlaConfig {
    fn default() -> Self {
        GlaConfig { max_iters: 500, tol: 1e-6, init: GlaInit::Random { seed: 0 }, record_objective: false }
    }
}

#[derive(Clone, Debug)]
pub struct GlaOutcome {
    pub estimate: Signal,
    pub iterations: usize,
    /// `|x_{t+1} - x_t|` at the last step.
    pub final_diff: f64,
    /// Objective of the starting point followed by one value per iteration,
    /// when recording was requested.
    pub objective: Vec<f64>,
}

/// `c / |c|`, with `phase(0) = 1`.
fn unit_phase(c: Complex64) -> Complex64 {
    let r = c.norm();
    if r > 0.0 {
        c / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn target_magnitudes(y: &MagnitudeMeasurements) -> Grid<f64> {
    y.grid().map(|&v| v.max(0.0).sqrt())
}

/// `sum_{m,k} (|STFT(x)[m,k]| - sqrt(max(Y[m,k], 0)))^2`.
pub fn gla_objective(x: &Signal, y: &MagnitudeMeasurements, g: &Window) -> Result<f64> {
    let target = target_magnitudes(y);
    objective_against(x, &target, g)
}

fn objective_against(x: &Signal, target: &Grid<f64>, g: &Window) -> Result<f64> {
    Ok(misfit(&stft_forward(x, g)?.values, target))
}

fn misfit(stft: &Grid<Complex64>, target: &Grid<f64>) -> f64 {
    stft.as_slice().iter().zip(target.as_slice()).map(|(v, t)| (v.norm() - t).powi(2)).sum()
}

pub fn recover_gla(y: &MagnitudeMeasurements, g: &Window, cfg: &GlaConfig) -> Result<GlaOutcome> {
    let n = y.n();
    if g.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: g.len() });
    }
    if cfg.max_iters == 0 || !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter("GLA needs max_iters >= 1 and tol > 0".into()));
    }
    let mut x = match &cfg.init {
        GlaInit::Random { seed } => Signal::new(rng::complex_gaussian(n, &mut rng::seeded(*seed, STREAM_INIT)))?,
        GlaInit::Provided(s) => {
            if s.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: s.len() });
            }
            s.clone()
        }
    };
    let target = target_magnitudes(y);
    let mut current = stft_forward(&x, g)?.values;
    let mut objective = Vec::new();
    if cfg.record_objective {
        objective.push(misfit(&current, &target));
    }

    let mut iterations = 0;
    let mut final_diff = f64::INFINITY;
    while iterations < cfg.max_iters {
        for (c, t) in current.as_mut_slice().iter_mut().zip(target.as_slice()) {
            *c = unit_phase(*c) * *t;
        }
        let next = istft_ls(&current, g)?;
        final_diff = next.values().iter().zip(x.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        x = next;
        iterations += 1;
        current = stft_forward(&x, g)?.values;
        let obj = misfit(&current, &target);
        if cfg.record_objective {
            objective.push(obj);
        }
        // an exactly consistent iterate is a fixed point
        if final_diff < cfg.tol || obj == 0.0 {
            break;
        }
    }
    Ok(GlaOutcome { estimate: x, iterations, final_diff, objective })
}

/// Runs `restarts` random starts (seeds derived from `seed`) and keeps the
/// run with the smallest final objective. Selection uses only the
/// measurements.
pub fn recover_gla_restarts(
    y: &MagnitudeMeasurements,
    g: &Window,
    cfg: &GlaConfig,
    restarts: usize,
    seed: u64,
) -> Result<GlaOutcome> {
    let mut best: Option<(f64, GlaOutcome)> = None;
    for r in 0..restarts.max(1) {
        let run_cfg = GlaConfig { init: GlaInit::Random { seed: rng::derive_seed(seed, &[r as u64]) }, ..cfg.clone() };
        let out = recover_gla(y, g, &run_cfg)?;
        let obj = gla_objective(&out.estimate, y, g)?;
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, out));
        }
    }
    Ok(best.expect("at least one restart").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::measure;

    #[test]
    fn truth_is_a_fixed_point() {
        let x = Signal::random_gaussian(9, 1).unwrap();
        let g = Window::gaussian(9, 5.0).unwrap();
        let y = measure(&x, &g).unwrap();
        let cfg = GlaConfig { init: GlaInit::Provided(x.clone()), ..Default::default() };
        let out = recover_gla(&y, &g, &cfg).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.final_diff < 1e-12);
    }

    #[test]
    fn zero_measurements_give_zero() {
        let g = Window::gaussian(6, 3.0).unwrap();
        let y = MagnitudeMeasurements::new(Grid::zeros(6, 6)).unwrap();
        let out = recover_gla(&y, &g, &GlaConfig::default()).unwrap();
        assert!(out.estimate.norm() == 0.0);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn objective_never_increases() {
        let x = Signal::random_gaussian(11, 4).unwrap();
        let g = Window::gaussian(11, 6.0).unwrap();
        let y = measure(&x, &g).unwrap();
        let cfg = GlaConfig { max_iters: 60, record_objective: true, ..Default::default() };
        let out = recover_gla(&y, &g, &cfg).unwrap();
        assert!(out.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn rejects_bad_config() {
        let g = Window::gaussian(6, 3.0).unwrap();
        let y = MagnitudeMeasurements::new(Grid::zeros(6, 6)).unwrap();
        let cfg = GlaConfig { max_iters: 0, ..Default::default() };
        assert!(recover_gla(&y, &g, &cfg).is_err());
    }
}
