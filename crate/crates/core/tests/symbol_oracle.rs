//! Symbol quadrature against brute-force integration of the defining integral.

use num_complex::Complex64;
use stablekernel::model::{named_preset, CustomKernel, Drift, KernelPreset, ModelSpec};
use stablekernel::quad::gauss_kronrod;
use stablekernel::symbol::eval_symbol;
use stablekernel::Error;
use std::sync::Arc;

/// Direct integration over `h ∈ [−R, R] \ {0}` by panels, adequate for α ≥ 1.5.
fn brute(spec: &ModelSpec, y: f64, u: f64, big_r: f64) -> Complex64 {
    let a = spec.alpha;
    let f = |h: f64| {
        let z = u * h;
        let c = if spec.chi(h.abs()) { z } else { 0.0 };
        let e = if z.abs() < 1e-3 {
            Complex64::new(-0.5 * z * z + z.powi(4) / 24.0, z - z.powi(3) / 6.0 - c)
        } else {
            Complex64::new(z.cos() - 1.0, z.sin() - c)
        };
        e * spec.kernel_at(&[y], &[h]) * h.abs().powf(-1.0 - a)
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo: f64 = 1e-300;
    let mut edges: Vec<f64> = (0..)
        .map(|k| 1e-8 * 2f64.powi(k))
        .take_while(|e| *e < big_r)
        .chain([1.0, big_r])
        .collect();
    edges.sort_by(f64::total_cmp);
    for hi in edges {
        for s in [1.0, -1.0] {
            let g = |h: f64| f(s * h);
            total += gauss_kronrod(g, lo, hi, 1e-11, 1e-12, 200000).unwrap().value;
        }
        lo = hi;
    }
    -total
}

#[test]
fn cosine_radial_profile_matches_direct_integration() {
    let spec = ModelSpec::from_preset(
        1.5,
        1,
        KernelPreset::Sinusoidal { base: 1.0, amplitude: 0.4, h_frequency: Some(1.0) },
        Drift::Zero,
        0.5,
    )
    .unwrap();
    for (y, u) in [(0.3, 1.0), (1.2, 4.0), (-0.8, -2.5)] {
        let q = eval_symbol(&spec, &[y], &[u]).unwrap();
        let b = brute(&spec, y, u, 1e6);
        // truncation beyond 1e6 contributes at most ~ κ1·R^{-1.5}·(1+|u|R)
        assert!((q - b).norm() < 2e-5 * (1.0 + u.abs()), "{y} {u} {q} {b}");
    }
}

#[test]
fn step_profile_matches_direct_integration() {
    let spec = named_preset("step-holder-1.5").unwrap();
    for (y, u) in [(0.5, 0.7), (2.0, 3.0)] {
        let q = eval_symbol(&spec, &[y], &[u]).unwrap();
        let b = brute(&spec, y, u, 1e6);
        assert!((q - b).norm() < 2e-5 * (1.0 + u.abs()), "{y} {u} {q} {b}");
    }
}

#[test]
fn custom_kernel_agrees_with_preset() {
    let preset = ModelSpec::from_preset(
        1.5,
        1,
        KernelPreset::SignAsymmetric { base: 1.0, amplitude: 0.5 },
        Drift::Zero,
        0.5,
    )
    .unwrap();
    let mk = |cutoff| CustomKernel {
        name: "sign".into(),
        eval: Arc::new(|_x: &[f64], h: &[f64]| 1.0 + 0.5 * h[0].signum()),
        kappa0: 0.5,
        kappa1: 1.5,
        kappa2: 0.0,
        radial_cutoff: cutoff,
    };
    let spec = ModelSpec::from_custom(1.5, 1, mk(Some(1.0)), Drift::Zero, 0.5).unwrap();
    for u in [0.5, 3.0] {
        let a = eval_symbol(&spec, &[0.0], &[u]).unwrap();
        let b = eval_symbol(&preset, &[0.0], &[u]).unwrap();
        assert!((a - b).norm() < 1e-8 * (1.0 + u.abs().powf(1.5)), "{u} {a} {b}");
    }
    // without a cutoff the far-field remainder cannot be bounded within budget
    let spec = ModelSpec::from_custom(1.5, 1, mk(None), Drift::Zero, 0.5).unwrap();
    assert!(matches!(eval_symbol(&spec, &[0.0], &[3.0]), Err(Error::Quadrature { .. })));
}

#[test]
fn rescaling_identity() {
    // kernel n(x/a, h/a) has symbol a^{−α} ψ^{y}(a u) at the point a·y
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let a = 0.5;
    let resc = spec.rescaled(a).unwrap();
    for (y, u) in [(0.4, 1.0), (-1.1, 6.0)] {
        let lhs = eval_symbol(&resc, &[a * y], &[u]).unwrap();
        let rhs = eval_symbol(&spec, &[y], &[a * u]).unwrap() * a.powf(-1.5);
        assert!((lhs - rhs).norm() < 1e-8 * (1.0 + lhs.norm()), "{lhs} {rhs}");
    }
}
