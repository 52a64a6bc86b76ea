use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{norm, ModelSpec};
use crate::error::{Error, Result};
use crate::report::Status;

/// Sample points used to audit the standing assumptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationLattice {
    /// Number of x samples in `[−x_extent, x_extent]` (per axis in 2D).
    pub x_points: usize,
    pub x_extent: f64,
    /// Number of h directions on the unit circle (2D only; 1D uses ±1).
    pub directions: usize,
    /// Log-spaced radii in `[r_min, r_max]`.
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Trapezoid nodes on the circle for the odd-moment integral (2D).
    pub sphere_nodes: usize,
}

impl Default for ValidationLattice {
    fn default() -> Self {
        ValidationLattice {
            x_points: 33,
            x_extent: 2.0 * PI,
            directions: 65,
            radii: 8,
            r_min: 1e-3,
            r_max: 1e3,
            sphere_nodes: 256,
        }
    }
}

impl ValidationLattice {
    fn xs(&self, dim: usize) -> Vec<Vec<f64>> {
        let n = self.x_points.max(1);
        let coord = |i: usize| {
            if n == 1 {
                0.0
            } else {
                -self.x_extent + 2.0 * self.x_extent * i as f64 / (n - 1) as f64
            }
        };
        (0..n)
            .map(|i| {
                if dim == 1 {
                    vec![coord(i)]
                } else {
                    // scattered second coordinate, deterministic
                    vec![coord(i), coord((7 * i + 3) % n)]
                }
            })
            .collect()
    }

    fn radii_list(&self) -> Vec<f64> {
        let n = self.radii.max(1);
        if n == 1 {
            return vec![self.r_min];
        }
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    fn dirs(&self, dim: usize) -> Vec<Vec<f64>> {
        if dim == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..self.directions)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / self.directions as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
    }

    fn hs(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for d in self.dirs(dim) {
            for r in self.radii_list() {
                out.push(d.iter().map(|c| c * r).collect());
            }
        }
        out
    }
}

/// Outcome of one assumption audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub assumption: String,
    pub status: Status,
    /// Largest sampled violation (≤ 0 means satisfied with margin).
    pub worst_violation: f64,
    /// Point (x, then h or radius) where the worst case occurs.
    pub witness: Vec<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub kernel_min: f64,
    pub kernel_max: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, assumption: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }
}

const BOUND_TOL: f64 = 1e-9;
const MOMENT_TOL: f64 = 1e-6;

fn finite(v: f64, what: &str, x: &[f64], h: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what: what.into(), witness: format!("x={x:?}, h={h:?}") })
    }
}

fn worst(items: impl IntoIterator<Item = (f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (v, w) in items {
        if v > best.0 {
            best = (v, w);
        }
    }
    best
}

fn make(assumption: &str, tol: f64, (v, w): (f64, Vec<f64>), note: &str) -> AssumptionCheck {
    AssumptionCheck {
        assumption: assumption.into(),
        status: if v <= tol { Status::Pass } else { Status::Fail },
        worst_violation: v,
        witness: w,
        note: note.into(),
    }
}

/// Audits kernel bounds, Hölder continuity in x, the α=1 odd-moment condition
/// and the drift bound on a sample lattice.
pub fn validate_model(spec: &ModelSpec, lattice: &ValidationLattice) -> Result<ValidationReport> {
    if lattice.x_points == 0 || lattice.radii == 0 || (spec.dim == 2 && lattice.directions == 0) {
        return Err(Error::Config("empty validation lattice".into()));
    }
    let d = spec.dim;
    let xs = lattice.xs(d);
    let hs = lattice.hs(d);

    // n(x_i, h_k) table, evaluated in parallel, reduced in index order
    let table: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| hs.iter().map(|h| finite(spec.kernel_at(x, h), "kernel", x, h)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let cat = |x: &[f64], h: &[f64]| x.iter().chain(h).copied().collect::<Vec<_>>();
    let mut kmin = f64::INFINITY;
    let mut kmax = f64::NEG_INFINITY;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            kmin = kmin.min(v);
            kmax = kmax.max(v);
            lower.push((spec.kappa0 - v, cat(&xs[i], &hs[k])));
            upper.push((v - spec.kappa1, cat(&xs[i], &hs[k])));
        }
    }
    let mut checks = vec![
        make("kernel_lower_bound", BOUND_TOL, worst(lower), "kappa0 <= n(x,h)"),
        make("kernel_upper_bound", BOUND_TOL, worst(upper), "n(x,h) <= kappa1"),
    ];

    let holder: Vec<(f64, Vec<f64>)> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut w = (f64::NEG_INFINITY, Vec::new());
            for j in (i + 1)..xs.len() {
                let dx: Vec<f64> = xs[i].iter().zip(&xs[j]).map(|(a, b)| a - b).collect();
                let bound = spec.kappa2 * norm(&dx).powf(spec.theta);
                for k in 0..hs.len() {
                    let v = (table[i][k] - table[j][k]).abs() - bound;
                    if v > w.0 {
                        w = (v, cat(&cat(&xs[i], &xs[j]), &hs[k]));
                    }
                }
            }
            w
        })
        .collect();
    checks.push(make(
        "kernel_holder",
        BOUND_TOL,
        worst(holder),
        "|n(x,h)-n(y,h)| <= kappa2 |x-y|^theta; witness is (x, y, h)",
    ));

    if spec.alpha == 1.0 {
        let radii = lattice.radii_list();
        let mut items = Vec::new();
        for x in &xs {
            for &r in &radii {
                let m = odd_moment(spec, x, r, lattice.sphere_nodes)?;
                items.push((m, cat(x, &[r])));
            }
        }
        checks.push(make(
            "odd_moment",
            MOMENT_TOL,
            worst(items),
            "sampled radii only; normalized moment |∫ n(x,h) h dS| / (r·|sphere_r|)",
        ));
    }

    let mut drift = Vec::new();
    for x in &xs {
        let b = spec.drift.eval(x);
        for &c in &b {
            finite(c, "drift", x, &[])?;
        }
        drift.push((norm(&b) - spec.kappa3, x.clone()));
    }
    let mut dc = make("drift_bound", BOUND_TOL, worst(drift), "|b(x)| <= kappa3");
    if spec.alpha <= 1.0 {
        dc.status = Status::Info;
        dc.note.push_str("; drift unused for alpha <= 1");
    }
    checks.push(dc);

    Ok(ValidationReport { checks, kernel_min: kmin, kernel_max: kmax })
}

/// Normalized odd moment `|∫_{∂B_r} n(x,h) h dS(h)| / (r·|∂B_r|)`.
fn odd_moment(spec: &ModelSpec, x: &[f64], r: f64, nodes: usize) -> Result<f64> {
    if spec.dim == 1 {
        let a = finite(spec.kernel_at(x, &[r]), "kernel", x, &[r])?;
        let b = finite(spec.kernel_at(x, &[-r]), "kernel", x, &[-r])?;
        Ok((a * r - b * r).abs() / (2.0 * r))
    } else {
        let n = nodes.max(256);
        let mut m = [0.0f64; 2];
        for k in 0..n {
            let a = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            let h = [r * a.cos(), r * a.sin()];
            let v = finite(spec.kernel_at(x, &h), "kernel", x, &h)?;
            m[0] += v * h[0];
            m[1] += v * h[1];
        }
        // trapezoid: dS = r·2π/n; normalize by r·2πr
        let w = r * 2.0 * PI / n as f64;
        Ok(norm(&[m[0] * w, m[1] * w]) / (r * 2.0 * PI * r))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{named_preset, Drift, KernelPreset, ModelSpec, CustomKernel};
    use super::*;
    use std::sync::Arc;

    #[test]
    fn constant_kernel_passes_everything() {
        for a in [0.5, 1.0, 1.5] {
            let s = ModelSpec::from_preset(a, 1, KernelPreset::Constant { value: 1.0 }, Drift::Zero, 0.5)
                .unwrap();
            assert!(validate_model(&s, &ValidationLattice::default()).unwrap().passed());
        }
    }

    #[test]
    fn alpha_one_gatekeeping() {
        let lat = ValidationLattice::default();
        let r = validate_model(&named_preset("sign-asymmetric-alpha1").unwrap(), &lat).unwrap();
        assert!(!r.passed());
        assert_eq!(r.check("odd_moment").unwrap().status, Status::Fail);
        // n(r) - n(-r) = 1, normalized by 2: 0.5
        assert!((r.check("odd_moment").unwrap().worst_violation - 0.5).abs() < 1e-12);
        let r = validate_model(&named_preset("even-alpha1").unwrap(), &lat).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn two_dimensional_odd_moment() {
        let s = ModelSpec::from_preset(1.0, 2, KernelPreset::SignAsymmetric { base: 1.0, amplitude: 0.5 }, Drift::Zero, 0.5)
            .unwrap();
        let r = validate_model(&s, &ValidationLattice::default()).unwrap();
        assert_eq!(r.check("odd_moment").unwrap().status, Status::Fail);
        let s = ModelSpec::from_preset(1.0, 2, KernelPreset::Constant { value: 2.0 }, Drift::Zero, 0.5).unwrap();
        assert!(validate_model(&s, &ValidationLattice::default()).unwrap().passed());
    }

    #[test]
    fn declared_constants_are_audited() {
        let k = CustomKernel {
            name: "wavy".into(),
            eval: Arc::new(|x: &[f64], _h: &[f64]| 1.0 + 0.5 * x[0].sin()),
            kappa0: 0.5,
            kappa1: 1.5,
            kappa2: 0.1, // too small
            radial_cutoff: Some(0.0),
        };
        let s = ModelSpec::from_custom(1.5, 1, k, Drift::Zero, 0.5).unwrap();
        let r = validate_model(&s, &ValidationLattice::default()).unwrap();
        assert_eq!(r.check("kernel_holder").unwrap().status, Status::Fail);
        assert_eq!(r.check("kernel_lower_bound").unwrap().status, Status::Pass);
    }

    #[test]
    fn non_finite_is_hard_error() {
        let k = CustomKernel {
            name: "bad".into(),
            eval: Arc::new(|x: &[f64], _h: &[f64]| if x[0] > 1.0 { f64::NAN } else { 1.0 }),
            kappa0: 1.0,
            kappa1: 1.0,
            kappa2: 0.0,
            radial_cutoff: None,
        };
        let s = ModelSpec::from_custom(1.5, 1, k, Drift::Zero, 0.5).unwrap();
        assert!(matches!(validate_model(&s, &ValidationLattice::default()), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn deterministic() {
        let s = named_preset("step-holder-1.5").unwrap();
        let a = validate_model(&s, &ValidationLattice::default()).unwrap();
        let b = validate_model(&s, &ValidationLattice::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{a:?}");
    }
}
