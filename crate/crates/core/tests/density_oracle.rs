//! Frozen densities against the Cauchy closed form and structural identities.

use std::f64::consts::PI;

use stablekernel::density::{
    check_density_bounds, check_holder_in_y, continuity_constant, density_gradient, deperiodized,
    invert_density, read_binary, scaling_residual, semigroup_residual,
};
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::named_preset;

fn grid(n: usize, extent: f64, times: Vec<f64>) -> SpaceTimeGrid {
    SpaceTimeGrid::new(Lattice::new(1, n, extent).unwrap(), times).unwrap()
}

#[test]
fn cauchy_profile_and_gradient() {
    let spec = named_preset("constant-cauchy").unwrap();
    let g = grid(8192, 32.0 * PI, vec![1.0]);
    let f = invert_density(&spec, &[0.0], &g).unwrap();
    assert!(f.mass_deficit[0].abs() < 1e-6);
    let fd = deperiodized(&f, &spec).unwrap();
    let lat = g.lattice;
    let i0 = lat.n / 2;
    assert_eq!(lat.coord(i0), 0.0);
    assert!((fd.values[0][i0] - 1.0 / (PI * PI)).abs() < 1e-5, "{}", fd.values[0][i0]);
    let mut worst: f64 = 0.0;
    for i in 0..lat.n {
        if lat.is_interior_index(i) {
            let x = lat.coord(i);
            worst = worst.max((fd.values[0][i] - 1.0 / (PI * PI + x * x)).abs());
        }
    }
    assert!(worst < 1e-5, "{worst}");
    let grad = density_gradient(&f).unwrap().remove(0);
    assert!(grad.values[0][i0].abs() < 1e-8);
    for x in [0.5, 1.0, 3.0, -2.0] {
        let i = ((x + 0.5 * lat.extent) / lat.spacing()).round() as usize;
        let x = lat.coord(i);
        let exact = -2.0 * x / (PI * PI + x * x).powi(2);
        // image derivatives are ≈ Σ 4/(kL)³, well below the tolerance
        assert!((grad.values[0][i] - exact).abs() < 1e-5, "{x}");
    }
}

#[test]
fn gradient_agrees_with_finite_differences() {
    let spec = named_preset("sign-asymmetric-1.5").unwrap();
    let g = grid(4096, 14.0 * PI, vec![0.25, 1.0]);
    let f = invert_density(&spec, &[0.0], &g).unwrap();
    let grad = density_gradient(&f).unwrap().remove(0);
    let lat = g.lattice;
    let h = lat.spacing();
    for k in 0..2 {
        let v = &f.values[k];
        let sup = grad.values[k].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 2..lat.n - 2 {
            if !lat.is_interior_index(i) {
                continue;
            }
            let fd = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
            assert!((fd - grad.values[k][i]).abs() <= 1e-6f64.max(1e-4 * sup));
        }
    }
}

#[test]
fn mass_and_positivity_on_presets() {
    for name in ["constant-0.75", "sinusoidal-1.5", "even-alpha1", "sign-asymmetric-1.5", "step-holder-1.5"] {
        let spec = named_preset(name).unwrap();
        let g = grid(4096, 14.0 * PI, vec![0.25, 0.5, 1.0]);
        let f = invert_density(&spec, &[0.3], &g).unwrap();
        for m in &f.mass_deficit {
            assert!(m.abs() < 1e-6, "{name} {m}");
        }
        assert!(f.min_value >= -1e-8, "{name} {}", f.min_value);
    }
}

#[test]
fn scaling_law() {
    for name in ["constant-1.5", "sign-asymmetric-1.5"] {
        let spec = named_preset(name).unwrap();
        let lat = Lattice::new(1, 4096, 14.0 * PI).unwrap();
        for t in [0.25, 0.5] {
            let r = scaling_residual(&spec, &[0.0], lat, t).unwrap();
            assert!(r < 1e-6, "{name} {t} {r}");
        }
    }
}

#[test]
fn asymmetric_kernel_has_heavier_right_tail() {
    let spec = named_preset("sign-asymmetric-1.5").unwrap();
    let g = grid(4096, 14.0 * PI, vec![1.0]);
    let f = deperiodized(&invert_density(&spec, &[0.0], &g).unwrap(), &spec).unwrap();
    let lat = g.lattice;
    let at = |x: f64| f.values[0][((x + 0.5 * lat.extent) / lat.spacing()).round() as usize];
    // tails follow t·n(h)|h|^{-1-α}: ratio 1.5/0.5 = 3 asymptotically
    let r = at(15.0) / at(-15.0);
    assert!(r > 2.0 && r < 4.0, "{r}");
}

#[test]
fn cauchy_bound_ratios() {
    let spec = named_preset("constant-cauchy").unwrap();
    let g = grid(4096, 14.0 * PI, vec![0.25, 0.5, 1.0]);
    let f = invert_density(&spec, &[0.0], &g).unwrap();
    let fine = invert_density(&spec, &[0.0], &grid(8192, 14.0 * PI, vec![0.25, 0.5, 1.0])).unwrap();
    let rep = check_density_bounds(&f, &spec, Some(&fine)).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let (lo, hi) = (1.0 / (2.0 * PI * PI), 2.0);
    for k in ["sup_ratio", "inf_ratio"] {
        let v = rep.constants[k];
        assert!(v >= lo && v <= hi, "{k} {v}");
    }
}

#[test]
fn bound_ratios_invariant_under_rescaling() {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let a: f64 = 0.5;
    let resc = spec.rescaled(a).unwrap();
    let ts = [0.25, 0.5, 1.0];
    let g = grid(4096, 14.0 * PI, ts.to_vec());
    let gs = grid(4096, 14.0 * PI, ts.iter().map(|t| t * a.powf(1.5)).collect());
    let r1 = check_density_bounds(&invert_density(&spec, &[0.4], &g).unwrap(), &spec, None).unwrap();
    let r2 = check_density_bounds(&invert_density(&resc, &[0.2], &gs).unwrap(), &resc, None).unwrap();
    for k in ["sup_ratio", "inf_ratio"] {
        let (p, q) = (r1.constants[k], r2.constants[k]);
        assert!((p / q - 1.0).abs() < 0.02, "{k} {p} {q}");
    }
}

#[test]
fn holder_in_y() {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let g = grid(2048, 14.0 * PI, vec![0.25, 0.5, 1.0]);
    let rep = check_holder_in_y(&spec, &[0.0], &[0.5], &g, None, true).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let flat = named_preset("constant-1.5").unwrap();
    let rep = check_holder_in_y(&flat, &[0.0], &[0.5], &g, None, false).unwrap();
    assert!(rep.passed() && rep.constants["sup_ratio"] == 0.0);
    assert!(check_holder_in_y(&spec, &[0.1], &[0.1], &g, None, false).is_err());
    assert!(check_holder_in_y(&spec, &[0.0], &[0.5], &g, Some(0.5), false).is_err());
}

#[test]
fn semigroup_and_continuity() {
    let spec = named_preset("even-alpha1").unwrap();
    let lat = Lattice::new(1, 4096, 14.0 * PI).unwrap();
    let r = semigroup_residual(&spec, &[0.7], lat, 0.25, 0.5).unwrap();
    assert!(r < 1e-5, "{r}");
    let f = invert_density(&spec, &[0.7], &grid(4096, 14.0 * PI, vec![0.25, 1.0])).unwrap();
    let rep = continuity_constant(&f, &spec, &[1, 4, 16, 64]).unwrap();
    assert!(rep.passed());
}

#[test]
fn unresolved_grid_is_rejected() {
    let spec = named_preset("constant-0.75").unwrap();
    // Δx = 14π/256 is too coarse for t = 0.01
    let g = grid(256, 14.0 * PI, vec![0.01]);
    assert!(matches!(invert_density(&spec, &[0.0], &g), Err(stablekernel::Error::Config(_))));
}

#[test]
fn binary_round_trip() {
    let spec = named_preset("constant-1.5").unwrap();
    let g = grid(1024, 14.0 * PI, vec![0.5, 1.0]);
    let f = invert_density(&spec, &[0.0], &g).unwrap();
    let mut buf = Vec::new();
    f.write_binary(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"STKD");
    let (lat, times, rows) = read_binary(&buf[..]).unwrap();
    assert_eq!(lat, g.lattice);
    assert_eq!(times, g.time_nodes);
    assert_eq!(rows, f.values);
    let mut csv = Vec::new();
    f.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * 1024);
}
