//! The simulator against FFT densities and characteristic functions, plus its
//! determinism and exit-time contracts.

use num_complex::Complex64;
use std::f64::consts::PI;

use stablekernel::density::{invert_density, invert_with_symbol};
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::named_preset;
use stablekernel::montecarlo::*;
use stablekernel::symbol::{eval_symbol, frozen_symbol};
use stablekernel::Error;

fn fine() -> Lattice {
    Lattice::new(1, 4096, 14.0 * PI).unwrap()
}

fn fft_law(name: &str, horizon: f64) -> LatticeLaw {
    let spec = named_preset(name).unwrap();
    let f = invert_density(&spec, &[0.0], &SpaceTimeGrid::new(fine(), vec![horizon]).unwrap()).unwrap();
    LatticeLaw::new(fine(), &f.values[0], 0.0, 0.0, horizon).unwrap()
}

#[test]
fn same_seed_gives_identical_samples_on_any_thread_count() {
    let cfg = SimConfig::new(named_preset("sinusoidal-1.5").unwrap(), 2000, 42);
    let a = simulate_paths(&cfg, 0.3, 0.2).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| simulate_paths(&cfg, 0.3, 0.2).unwrap());
    assert_eq!(a, b);
    let c = simulate_paths(&SimConfig { seed: 43, ..cfg }, 0.3, 0.2).unwrap();
    assert_ne!(a.terminal, c.terminal);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 2001);
}

#[test]
fn constant_kernel_at_kappa1_accepts_every_candidate() {
    let cfg = SimConfig::new(named_preset("constant-1.5").unwrap(), 500, 1);
    let s = simulate_paths(&cfg, 0.0, 0.5).unwrap();
    assert!(s.stats.candidates > 0);
    assert_eq!(s.stats.accepted, s.stats.candidates);
}

#[test]
fn kernel_above_kappa1_is_a_model_violation() {
    let mut spec = named_preset("sinusoidal-1.5").unwrap();
    spec.kappa1 = 1.0;
    let cfg = SimConfig::new(spec, 100, 1);
    assert!(matches!(simulate_paths(&cfg, 1.0, 1.0), Err(Error::ModelViolation(_))));
}

#[test]
fn invalid_configurations_are_rejected() {
    let cfg = SimConfig::new(named_preset("constant-1.5").unwrap(), 100, 1);
    assert!(matches!(simulate_paths(&SimConfig { epsilon_cut: 1.5, ..cfg.clone() }, 0.0, 1.0), Err(Error::Config(_))));
    assert!(matches!(simulate_paths(&SimConfig { dt: 1.0, ..cfg.clone() }, 0.0, 1.0), Err(Error::Config(_))));
    assert!(matches!(simulate_paths(&SimConfig { n_paths: 0, ..cfg.clone() }, 0.0, 1.0), Err(Error::Config(_))));
    assert!(matches!(simulate_paths(&cfg, 0.0, 0.0), Err(Error::Config(_))));
    let two_d = SimConfig::new(named_preset("constant-2d-1.5").unwrap(), 10, 1);
    assert!(matches!(simulate_paths(&two_d, 0.0, 1.0), Err(Error::Config(_))));
    // the skeleton must resolve the exit horizon
    assert!(matches!(estimate_exit_probability(&cfg, 0.0, 1.0, cfg.dt), Err(Error::Config(_))));
    let s = simulate_paths(&cfg, 0.0, 1.0).unwrap();
    let law = fft_law("constant-1.5", 0.5);
    assert!(matches!(density_agreement(&s, &law, 1e-2), Err(Error::Config(_))));
}

#[test]
fn pure_levy_terminal_law_matches_the_fft_density() {
    let n = 200_000;
    let cfg = SimConfig::new(named_preset("constant-0.75").unwrap(), n, 7);
    let s = simulate_paths(&cfg, 0.0, 1.0).unwrap();
    let rep = density_agreement(&s, &fft_law("constant-0.75", 1.0), 5e-3).unwrap();
    assert!(rep.passed(), "{:?}", rep.constants);
    // the statistical band alone already holds
    assert!(rep.constants["ks"] <= 1.63 / (n as f64).sqrt());
}

#[test]
fn empirical_characteristic_function_matches_the_symbol() {
    for (name, seed) in [("constant-0.75", 3u64), ("constant-1.5", 4)] {
        let spec = named_preset(name).unwrap();
        let s = simulate_paths(&SimConfig::new(spec.clone(), 50_000, seed), 0.0, 1.0).unwrap();
        for u in [0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let (emp, se) = s.characteristic(u);
            let exact = (-eval_symbol(&spec, &[0.0], &[u]).unwrap()).exp();
            assert!((emp.re - exact.re).abs() <= 3.0 * se && (emp.im - exact.im).abs() <= 3.0 * se, "{name} u = {u}: {emp} vs {exact} (se {se})");
        }
    }
}

#[test]
fn stable_law_with_drift_is_shifted_and_insensitive_to_epsilon() {
    // n ≡ 1, b ≡ 0.3: X_T − x0 has transform e^{−T(ψ(u) − iub)}
    let spec = named_preset("stable-drift-1.5").unwrap();
    let mut sym = frozen_symbol(&spec, &[0.0], fine()).unwrap();
    for (k, v) in sym.values.iter_mut().enumerate() {
        *v -= Complex64::new(0.0, fine().freq(k) * 0.3);
    }
    let f = invert_with_symbol(&sym, &SpaceTimeGrid::new(fine(), vec![1.0]).unwrap(), &spec).unwrap();
    let law = LatticeLaw::new(fine(), &f.values[0], 0.0, 0.0, 1.0).unwrap();
    let n = 40_000;
    let cfg = SimConfig::new(spec, n, 5);
    let a = density_agreement(&simulate_paths(&cfg, 0.0, 1.0).unwrap(), &law, 1e-2).unwrap();
    let half = cfg.clone().with_epsilon(cfg.epsilon_cut / 2.0);
    let b = density_agreement(&simulate_paths(&half, 0.0, 1.0).unwrap(), &law, 1e-2).unwrap();
    assert!(a.passed() && b.passed(), "{:?} {:?}", a.constants, b.constants);
    assert!((a.constants["ks"] - b.constants["ks"]).abs() < 1.63 / (n as f64).sqrt());
}

#[test]
fn exit_probabilities_follow_the_envelope() {
    let spec = named_preset("constant-1.5").unwrap();
    let cfg = SimConfig::new(spec, 100_000, 9);
    let t = 0.1f64;
    let s = t.powf(1.0 / 1.5);
    let sweep = estimate_exit_sweep(&cfg, 0.0, t, &[2.0 * s, 4.0 * s, 8.0 * s, 100.0 * s]).unwrap();
    assert!(sweep.monotone);
    let scaled: Vec<f64> = sweep.estimates[..3].iter().map(|e| e.scaled).collect();
    let mean = scaled.iter().sum::<f64>() / 3.0;
    assert!(scaled.iter().all(|c| (c / mean - 1.0).abs() <= 0.3), "{scaled:?}");
    assert!(sweep.estimates[3].p_hat <= 0.01);
    for e in &sweep.estimates {
        assert!((0.0..=1.0).contains(&e.p_hat) && e.ci_halfwidth > 0.0);
        assert!(e.bound_value >= e.p_hat * (1.0 - 1e-12));
    }
}

#[test]
fn exit_probability_is_invariant_under_rescaling() {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let a = 2.0f64;
    let (t, r) = (0.05, 0.4);
    let e1 = estimate_exit_probability(&SimConfig::new(spec.clone(), 40_000, 21), 0.0, r, t).unwrap();
    let scaled = spec.rescaled(a).unwrap();
    let e2 = estimate_exit_probability(&SimConfig::new(scaled, 40_000, 22), 0.0, a * r, a.powf(1.5) * t).unwrap();
    assert!((e1.p_hat - e2.p_hat).abs() <= e1.ci_halfwidth + e2.ci_halfwidth, "{e1:?} {e2:?}");
}

#[test]
fn asymmetric_kernel_compensator_matches_the_fft_density() {
    // the odd part of n makes the large-jump compensator drift nonzero
    let n = 40_000;
    let cfg = SimConfig::new(named_preset("sign-asymmetric-1.5").unwrap(), n, 13);
    let s = simulate_paths(&cfg, 0.0, 1.0).unwrap();
    let rep = density_agreement(&s, &fft_law("sign-asymmetric-1.5", 1.0), 1e-2).unwrap();
    assert!(rep.passed(), "{:?}", rep.constants);
    // dropping the compensator shifts the law far outside the band
    let mut wrong = s.clone();
    let shift = 2.0 * 0.5 * cfg.epsilon_cut.powf(-0.5) / 0.5;
    wrong.terminal.iter_mut().for_each(|x| *x -= shift);
    assert!(!density_agreement(&wrong, &fft_law("sign-asymmetric-1.5", 1.0), 1e-2).unwrap().passed());
}
