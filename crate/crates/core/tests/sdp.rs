use std::collections::BTreeMap;
use stftpr::sdp::sigma_from_snr;
use stftpr::*;

fn solve_clean(n: usize, w: usize, lambda: usize, seed: u64) -> (Signal, SdpSolution) {
    let g = Window::rectangular(n, w).unwrap();
    let x = Signal::random_gaussian(n, seed).unwrap();
    let y = measure(&x, &g).unwrap();
    let lags: Vec<usize> = (0..lambda).collect();
    let opts = SdpOptions { record_history: true, ..SdpOptions::default() };
    (x, recover_sdp(&y, &g, &lags, &vec![0.0; n], &opts).unwrap())
}

#[test]
fn clean_data_gives_the_rank_one_lift() {
    let (x, sol) = solve_clean(11, 7, 7, 3);
    assert!(sol.converged);
    assert!(sol.feasible);
    let truth = LiftedMatrix::outer(&x);
    let rel = (sol.matrix.matrix() - truth.matrix()).norm() / truth.matrix().norm();
    assert!(rel < 1e-6, "relative error {rel}");
    assert!((sol.trace - x.norm().powi(2)).abs() < 1e-6 * x.norm().powi(2));
    assert!(phase_aligned_error(&x, &sol.estimate).unwrap() < 1e-6);
}

#[test]
fn merit_never_increases() {
    let g = Window::rectangular(15, 9).unwrap();
    let x = Signal::random_gaussian(15, 4).unwrap();
    let y = add_noise(&measure(&x, &g).unwrap(), 20.0, 9).unwrap();
    let eta = default_eta(sigma_from_snr(&y, 20.0), 15, &BTreeMap::new()).unwrap();
    let opts = SdpOptions { record_history: true, max_iters: 400, ..SdpOptions::default() };
    let sol = recover_sdp(&y, &g, &[0, 1, 2, 3], &eta, &opts).unwrap();
    let merits: Vec<f64> = sol.history.iter().map(|h| h.merit).filter(|m| m.is_finite()).collect();
    assert!(merits.len() > 2);
    for pair in merits.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-15, "{} -> {}", pair[0], pair[1]);
    }
}

#[test]
fn solution_is_psd_and_hermitian() {
    let g = Window::rectangular(13, 5).unwrap();
    let x = Signal::random_gaussian(13, 6).unwrap();
    let y = add_noise(&measure(&x, &g).unwrap(), 25.0, 1).unwrap();
    let eta = default_eta(sigma_from_snr(&y, 25.0), 13, &BTreeMap::new()).unwrap();
    let sol = recover_sdp(&y, &g, &[0, 1, 2], &eta, &SdpOptions::default()).unwrap();
    assert!(sol.matrix.is_hermitian());
    let (values, _) = stftpr::eigen::jacobi_eigen(sol.matrix.matrix());
    assert!(values[0] > -1e-9 * values.last().unwrap().abs());
}

#[test]
fn scaling_the_data_scales_the_solution() {
    let n = 11;
    let g = Window::rectangular(n, 7).unwrap();
    let x = Signal::random_gaussian(n, 2).unwrap();
    let y = add_noise(&measure(&x, &g).unwrap(), 30.0, 2).unwrap();
    let sigma = sigma_from_snr(&y, 30.0);
    let eta = default_eta(sigma, n, &BTreeMap::new()).unwrap();
    let base = recover_sdp(&y, &g, &[0, 1, 2, 3], &eta, &SdpOptions::default()).unwrap();
    for s in [0.01, 100.0] {
        let eta_s: Vec<f64> = eta.iter().map(|e| e * s).collect();
        let scaled = recover_sdp(&y.scaled(s), &g, &[0, 1, 2, 3], &eta_s, &SdpOptions::default()).unwrap();
        let rel = (scaled.matrix.matrix() / Complex64::new(s, 0.0) - base.matrix.matrix()).norm()
            / base.matrix.matrix().norm();
        assert!(rel < 0.01, "scale {s}: {rel}");
    }
}

#[test]
fn empty_lag_set_is_rejected() {
    let g = Window::rectangular(7, 4).unwrap();
    let y = measure(&Signal::random_gaussian(7, 1).unwrap(), &g).unwrap();
    let err = recover_sdp(&y, &g, &[], &[0.0; 7], &SdpOptions::default()).unwrap_err();
    assert!(matches!(err, Error::EmptyLagSet));
}
