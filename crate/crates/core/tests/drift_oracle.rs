//! Drift series against a closed-form shifted stable density, the Duhamel identity,
//! linearity in the drift, and the Gamma decay of the term norms.

use num_complex::Complex64;
use std::sync::OnceLock;

use stablekernel::density::invert_with_symbol;
use stablekernel::drift::*;
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::{named_preset, Drift};
use stablekernel::parametrix::checks::resolved_nodes;
use stablekernel::parametrix::*;
use stablekernel::symbol::frozen_symbol;
use stablekernel::Error;

fn small(coarse_n: usize) -> ParametrixConfig {
    ParametrixConfig { coarse_n, fine_n: 2048, ..Default::default() }
}

fn drift_run() -> &'static ParametrixRun {
    static RUN: OnceLock<ParametrixRun> = OnceLock::new();
    RUN.get_or_init(|| build(&named_preset("drift-1.5").unwrap(), &small(128)).unwrap())
}

#[test]
fn constant_kernel_drift_is_a_shifted_stable_law() {
    // n ≡ 1, b ≡ 0.3: l(t, x, y) = f_t(y − x − bt), whose transform is e^{−t(ψ(u) − iub)}
    let spec = named_preset("stable-drift-1.5").unwrap();
    let run = build(&spec, &small(128)).unwrap();
    let mut st = DriftSeriesState::new(&run, DriftConfig::default()).unwrap();
    st.build().unwrap();
    let b = 0.3;
    let fine = Lattice::new(1, run.config.fine_n, run.config.extent).unwrap();
    let mut sym = frozen_symbol(&spec, &[0.0], fine).unwrap();
    for (k, v) in sym.values.iter_mut().enumerate() {
        *v -= Complex64::new(0.0, fine.freq(k) * b);
    }
    let nodes = resolved_nodes(&run);
    let times: Vec<f64> = nodes.iter().map(|&i| run.mesh.times[i]).collect();
    let exact = invert_with_symbol(&sym, &SpaceTimeGrid::new(fine, times).unwrap(), &spec).unwrap();
    let lat = run.lattice;
    let ratio = fine.n / lat.n;
    let mut worst = 0.0f64;
    for (row, &node) in exact.values.iter().zip(&nodes) {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(*v));
        let l = st.l_pointwise(node);
        for i in (0..lat.n).filter(|&i| lat.is_interior_index(i)) {
            for k in (0..lat.n).filter(|&k| lat.is_interior_index(k)) {
                let j = ((k + lat.n - i) * ratio + fine.n / 2) % fine.n;
                worst = worst.max((l[[i, k]] - row[j]).abs() / scale);
            }
        }
    }
    assert!(worst < 2e-4, "sup-relative difference {worst}");
}

#[test]
fn variable_kernel_series_meets_duhamel_and_gamma_shape() {
    let run = drift_run();
    let mut st = DriftSeriesState::new(run, DriftConfig::default()).unwrap();
    st.build().unwrap();
    let norms: Vec<f64> = st.gamma_log.entries.iter().map(|e| e.sup_norm).collect();
    assert!(norms.len() >= 3 && norms.len() <= 12);
    // faster than geometric: successive ratios shrink after the first
    assert!(norms[1] / norms[0] < 1.0);
    assert!(st.check_gamma(0.5).passed(), "{:?}", st.gamma_log);
    let d = st.duhamel().unwrap();
    assert!(d.residual <= 1e-3, "{d:?}");
    assert!(d.literal <= 1e-6, "{d:?}");
    let mass = st.check_mass(5e-3);
    assert!(mass.passed(), "{:?}", mass.constants);
    let set = PairSet::new(run).unwrap();
    let (two, grad) = st.check_l_bounds(&set);
    assert!(two.passed() && grad.passed());
    assert!(two.constants["near_diagonal_inf"] > 0.0);
    // l_0 is the run's p itself
    assert_eq!(st.term(0, 3), run.p(3));
    let f = st.field(Some(1), 64).unwrap();
    assert_eq!(f.values.len(), run.mesh.len());
    assert!(st.field(Some(st.terms_used()), 0).is_err());
}

#[test]
fn first_term_is_odd_in_the_drift() {
    let run = drift_run();
    let mut flipped = run.clone();
    flipped.spec.drift = Drift::Constant(vec![-0.3]);
    let cfg = DriftConfig { n_max: 12, tail_tol: 1e-6 };
    let mut a = DriftSeriesState::new(run, cfg.clone()).unwrap();
    let mut b = DriftSeriesState::new(&flipped, cfg).unwrap();
    a.build().unwrap();
    b.build().unwrap();
    for i in 0..run.mesh.len() {
        assert_eq!(a.term(1, i), -b.term(1, i));
        assert_eq!(a.term(2, i), b.term(2, i));
    }
}

#[test]
fn zero_drift_leaves_p_unchanged() {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let run = build(&spec, &small(64)).unwrap();
    let mut st = DriftSeriesState::new(&run, DriftConfig::default()).unwrap();
    st.build().unwrap();
    assert_eq!(st.terms_used(), 1);
    assert!(st.duhamel_residual().unwrap() <= 1e-10);
    for i in 0..run.mesh.len() {
        assert_eq!(st.l(i), run.p(i));
    }
    let set = PairSet::new(&run).unwrap();
    let (two, grad) = st.check_l_bounds(&set);
    let p_two = check_heat_kernel_bounds(&run, &set);
    let p_grad = check_gradient_bound(&run, &set).unwrap();
    assert_eq!(two.constants, p_two.constants);
    assert_eq!(grad.constants, p_grad.constants);
}

#[test]
fn refuses_alpha_at_most_one_and_bad_controls() {
    let spec = named_preset("constant-cauchy").unwrap();
    let run = build(&spec, &small(64)).unwrap();
    assert!(matches!(DriftSeriesState::new(&run, DriftConfig::default()), Err(Error::Domain(_))));
    let run = drift_run();
    let bad = DriftConfig { n_max: 0, tail_tol: 1e-6 };
    assert!(matches!(DriftSeriesState::new(run, bad), Err(Error::Config(_))));
    // a tolerance no series can meet in two terms is a convergence failure
    let tight = DriftConfig { n_max: 2, tail_tol: 1e-12 };
    let mut st = DriftSeriesState::new(run, tight).unwrap();
    assert!(matches!(st.build(), Err(Error::Convergence(_))));
}
