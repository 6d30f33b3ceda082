use stftpr::gla::{gla_objective, recover_gla_restarts};
use stftpr::*;

#[test]
fn objective_never_increases() {
    for seed in 0..20u64 {
        let n = 8 + (seed as usize % 9);
        let g = Window::gaussian(n, n as f64 / 2.0).unwrap();
        let x = Signal::random_gaussian(n, seed).unwrap();
        let y = add_noise(&measure(&x, &g).unwrap(), 20.0, seed).unwrap();
        let cfg = GlaConfig {
            max_iters: 60,
            init: GlaInit::Random { seed: 100 + seed },
            record_objective: true,
            ..GlaConfig::default()
        };
        let out = recover_gla(&y, &g, &cfg).unwrap();
        assert_eq!(out.objective.len(), out.iterations + 1);
        for pair in out.objective.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-10) + 1e-12, "seed {seed}: {} -> {}", pair[0], pair[1]);
        }
    }
}

#[test]
fn restarts_keep_the_best_objective() {
    let n = 12;
    let g = Window::gaussian(n, 6.0).unwrap();
    let x = Signal::random_gaussian(n, 1).unwrap();
    let y = measure(&x, &g).unwrap();
    let cfg = GlaConfig { max_iters: 40, ..GlaConfig::default() };
    let best = recover_gla_restarts(&y, &g, &cfg, 6, 77).unwrap();
    let best_obj = gla_objective(&best.estimate, &y, &g).unwrap();
    for r in 0..6u64 {
        let run = GlaConfig { init: GlaInit::Random { seed: stftpr::rng::derive_seed(77, &[r]) }, ..cfg.clone() };
        let single = recover_gla(&y, &g, &run).unwrap();
        assert!(best_obj <= gla_objective(&single.estimate, &y, &g).unwrap());
    }
}

#[test]
fn noise_free_restarts_recover_the_signal() {
    let n = 23;
    let g = Window::gaussian(n, 12.0).unwrap();
    let x = Signal::random_gaussian(n, 10).unwrap();
    let y = measure(&x, &g).unwrap();
    let out = recover_gla_restarts(&y, &g, &GlaConfig::default(), 20, 99).unwrap();
    assert!(out.iterations <= 500);
    assert!(phase_aligned_error(&x, &out.estimate).unwrap() <= 1e-3);
}

#[test]
fn starting_at_the_truth_stops_at_once() {
    let n = 10;
    let g = Window::gaussian(n, 5.0).unwrap();
    let x = Signal::random_gaussian(n, 3).unwrap();
    let y = measure(&x, &g).unwrap();
    let cfg = GlaConfig { init: GlaInit::Provided(x.clone()), ..GlaConfig::default() };
    let out = recover_gla(&y, &g, &cfg).unwrap();
    assert_eq!(out.iterations, 1);
    assert!(phase_aligned_error(&x, &out.estimate).unwrap() < 1e-12);
}
