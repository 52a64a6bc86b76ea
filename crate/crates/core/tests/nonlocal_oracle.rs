//! Physical-space operator quadrature against spectral multipliers and identities.

use std::f64::consts::PI;

use stablekernel::density::invert_density;
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::named_preset;
use stablekernel::nonlocal::{
    apply_frozen_operator, apply_frozen_spectral, apply_full_generator, check_increment_integral,
    compute_f, increment_ratio, Operand, OperatorQuadrature, OperatorTable,
};
use stablekernel::symbol::frozen_symbol;

fn lattice(n: usize) -> Lattice {
    Lattice::new(1, n, 14.0 * PI).unwrap()
}

fn table(name: &str, lat: Lattice) -> OperatorTable {
    let spec = named_preset(name).unwrap();
    OperatorTable::new(&spec, lat, OperatorQuadrature::for_lattice(&lat)).unwrap()
}

#[test]
fn constants_and_cosine() {
    let lat = lattice(1024);
    let t = table("constant-cauchy", lat);
    let one = Operand::from_values(&lat, &vec![2.5; lat.n], 8).unwrap();
    assert!(apply_frozen_operator(&t, &[0.0], &one, 0.3).unwrap().abs() < 1e-10);
    let cosv: Vec<f64> = (0..lat.n).map(|j| lat.coord(j).cos()).collect();
    let op = Operand::from_values(&lat, &cosv, 8).unwrap();
    let v = apply_frozen_operator(&t, &[0.0], &op, 0.0).unwrap();
    assert!((v + PI).abs() < 1e-4, "{v}");
}

#[test]
fn linearity_and_reflection() {
    let lat = lattice(1024);
    let t = table("even-alpha1", lat);
    let f: Vec<f64> = (0..lat.n).map(|j| (-lat.coord(j).powi(2)).exp()).collect();
    let g: Vec<f64> = (0..lat.n).map(|j| 1.0 / (1.0 + lat.coord(j).powi(2))).collect();
    let h: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let of = Operand::from_values(&lat, &f, 8).unwrap();
    let og = Operand::from_values(&lat, &g, 8).unwrap();
    let oh = Operand::from_values(&lat, &h, 8).unwrap();
    for x in [0.0, 0.7, -3.1] {
        let a = apply_frozen_operator(&t, &[0.4], &of, x).unwrap();
        let b = apply_frozen_operator(&t, &[0.4], &og, x).unwrap();
        let c = apply_frozen_operator(&t, &[0.4], &oh, x).unwrap();
        assert!((c - 2.0 * a + 0.5 * b).abs() < 1e-9);
    }
    // even kernel: reflecting the operand reflects the result (±h pairing)
    let shifted: Vec<f64> = (0..lat.n).map(|j| (-(lat.coord(j) - 0.5).powi(2)).exp()).collect();
    let refl: Vec<f64> = (0..lat.n).map(|j| (-(lat.coord(j) + 0.5).powi(2)).exp()).collect();
    let os = Operand::from_values(&lat, &shifted, 8).unwrap();
    let or = Operand::from_values(&lat, &refl, 8).unwrap();
    for x in [0.2, 1.3] {
        let p = apply_frozen_operator(&t, &[1.1], &os, x).unwrap();
        let q = apply_frozen_operator(&t, &[1.1], &or, -x).unwrap();
        assert!((p - q).abs() < 1e-10, "{p} {q}");
    }
}

#[test]
fn spectral_consistency_on_frozen_densities() {
    let lat = lattice(4096);
    for (name, y) in [("sinusoidal-1.5", 0.5), ("even-alpha1", 0.9), ("sign-asymmetric-1.5", 0.0), ("constant-0.75", 0.0)] {
        let spec = named_preset(name).unwrap();
        let grid = SpaceTimeGrid::new(lat, vec![0.5]).unwrap();
        let f = invert_density(&spec, &[y], &grid).unwrap();
        let sym = frozen_symbol(&spec, &[y], lat).unwrap();
        let spectral = apply_frozen_spectral(&sym, &f.values[0]);
        let t = OperatorTable::new(&spec, lat, OperatorQuadrature::for_lattice(&lat)).unwrap();
        let op = Operand::from_values(&lat, &f.values[0], 8).unwrap();
        let mut worst: f64 = 0.0;
        for i in (0..lat.n).step_by(37).filter(|&i| lat.is_interior_index(i)) {
            let v = apply_frozen_operator(&t, &[y], &op, lat.coord(i)).unwrap();
            worst = worst.max((v - spectral[i]).abs());
        }
        assert!(worst < 1e-5, "{name} {worst}");
    }
}

#[test]
fn difference_kernel() {
    let lat = lattice(2048);
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let t = OperatorTable::new(&spec, lat, OperatorQuadrature::for_lattice(&lat)).unwrap();
    let grid = SpaceTimeGrid::new(lat, vec![0.3]).unwrap();
    let f = invert_density(&spec, &[0.2], &grid).unwrap();
    let op = Operand::from_values(&lat, &f.values[0], 8).unwrap();
    assert_eq!(compute_f(&t, 0.2, 0.2, &op).unwrap(), 0.0);
    for x in [-1.0, 0.0, 0.9, 4.0] {
        let one = compute_f(&t, x, 0.2, &op).unwrap();
        let two = apply_full_generator(&spec, &t, &op, x).unwrap() - apply_frozen_operator(&t, &[0.2], &op, x).unwrap();
        assert!((one - two).abs() < 1e-7, "{x} {one} {two}");
    }
    let flat = table("constant-1.5", lat);
    assert!(compute_f(&flat, 1.0, 0.2, &op).unwrap().abs() < 1e-14);
    assert_eq!(
        apply_full_generator(&named_preset("constant-1.5").unwrap(), &flat, &op, 0.7).unwrap(),
        apply_frozen_operator(&flat, &[-3.0], &op, 0.7).unwrap()
    );
}

#[test]
fn drift_term_is_b_times_slope() {
    let lat = lattice(1024);
    let spec = named_preset("drift-1.5").unwrap();
    let t = OperatorTable::new(&spec, lat, OperatorQuadrature::for_lattice(&lat)).unwrap();
    // periodic "ramp": sin(x/7) is locally linear near 0 with slope 1/7
    let v: Vec<f64> = (0..lat.n).map(|j| (lat.coord(j) / 7.0).sin()).collect();
    let op = Operand::from_values(&lat, &v, 8).unwrap();
    let full = apply_full_generator(&spec, &t, &op, 0.0).unwrap();
    let jump = t.apply(&op, 0.0, &t.coefficients(&[0.0]), 0.0);
    let b = spec.drift_at(&[0.0])[0];
    assert!((full - jump - b / 7.0).abs() < 1e-12);
}

#[test]
fn increment_integral_ratios() {
    for name in ["constant-0.75", "constant-1.5"] {
        let spec = named_preset(name).unwrap();
        let g = SpaceTimeGrid::new(lattice(4096), vec![0.1, 0.5, 1.0]);
        let g = match g {
            Ok(g) => g,
            Err(e) => panic!("{e}"),
        };
        if g.check_resolution(spec.alpha).is_err() {
            continue;
        }
        let f = invert_density(&spec, &[0.0], &g).unwrap();
        let fine = invert_density(&spec, &[0.0], &SpaceTimeGrid::new(lattice(8192), g.time_nodes.clone()).unwrap()).unwrap();
        let rep = check_increment_integral(&spec, &f, Some(&fine)).unwrap();
        assert!(rep.passed(), "{name} {rep:?}");
    }
}

#[test]
fn alpha_one_ratio_grows_at_most_logarithmically() {
    let spec = named_preset("constant-cauchy").unwrap();
    let g1 = SpaceTimeGrid::new(Lattice::new(1, 8192, 2.0 * PI).unwrap(), vec![0.01]).unwrap();
    let g2 = SpaceTimeGrid::new(Lattice::new(1, 4096, 14.0 * PI).unwrap(), vec![0.1]).unwrap();
    let r1 = increment_ratio(&spec, &invert_density(&spec, &[0.0], &g1).unwrap(), 8).unwrap();
    let r2 = increment_ratio(&spec, &invert_density(&spec, &[0.0], &g2).unwrap(), 8).unwrap();
    // the ratios already carry the 1 + ln(1/t) factor
    let q = r1.constants["sup_ratio"] / r2.constants["sup_ratio"];
    assert!(q <= 1.2, "{q}");
}
