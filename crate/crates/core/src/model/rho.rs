//! The weight `ϱ_γ^β(t,x) = t^{γ/α} (|x|^β ∧ 1) (t^{1/α} + |x|)^{−d−α}` and numerical
//! verification of its convolution inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use super::{norm, ModelSpec};
use crate::error::{Error, Result};
use crate::quad::tanh_sinh_real;
use crate::report::{BoundReport, Status};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoWeight {
    pub gamma: f64,
    pub beta: f64,
}

impl RhoWeight {
    pub fn new(gamma: f64, beta: f64) -> Self {
        RhoWeight { gamma, beta }
    }

    /// Value at `(t, |x|)` for given α and dimension; no domain checks.
    pub fn at(&self, t: f64, r: f64, alpha: f64, dim: usize) -> f64 {
        let cut = if self.beta == 0.0 { 1.0 } else { r.powf(self.beta).min(1.0) };
        t.powf(self.gamma / alpha) * cut * (t.powf(1.0 / alpha) + r).powf(-(dim as f64) - alpha)
    }
}

/// `ϱ_γ^β(t, x)`
pub fn eval_rho(w: RhoWeight, t: f64, x: &[f64], spec: &ModelSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("rho weight needs t > 0, got {t}")));
    }
    if w.beta < 0.0 {
        return Err(Error::Domain(format!("rho weight needs beta >= 0, got {}", w.beta)));
    }
    Ok(w.at(t, norm(x), spec.alpha, spec.dim))
}

/// Which convolution inequality a tuple exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `∫ϱ_γ^β(t,x)dx ≤ C t^{(γ+β−α)/α}`
    Integral,
    /// Spatial convolution at fixed `0 < s < t ≤ 1`.
    Spatial,
    /// Space-time convolution with the Beta-function factor.
    SpaceTime,
}

/// Exponents for one check; `Integral` uses only `(gamma1, beta1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoTuple {
    pub inequality: Inequality,
    pub gamma1: f64,
    pub beta1: f64,
    pub gamma2: f64,
    pub beta2: f64,
}

impl RhoTuple {
    pub fn integral(gamma: f64, beta: f64) -> Self {
        RhoTuple { inequality: Inequality::Integral, gamma1: gamma, beta1: beta, gamma2: 0.0, beta2: 0.0 }
    }
    pub fn spatial(g1: f64, b1: f64, g2: f64, b2: f64) -> Self {
        RhoTuple { inequality: Inequality::Spatial, gamma1: g1, beta1: b1, gamma2: g2, beta2: b2 }
    }
    pub fn space_time(g1: f64, b1: f64, g2: f64, b2: f64) -> Self {
        RhoTuple { inequality: Inequality::SpaceTime, gamma1: g1, beta1: b1, gamma2: g2, beta2: b2 }
    }

    /// Exponent tuples used by the parametrix and drift stages, for a given α.
    pub fn shipped(alpha: f64) -> Vec<RhoTuple> {
        let a = alpha;
        vec![
            RhoTuple::integral(a, 0.0),
            RhoTuple::integral(a / 2.0, a / 4.0),
            RhoTuple::integral(0.0, a / 2.0),
            RhoTuple::spatial(a, 0.0, a, 0.0),
            RhoTuple::spatial(a, a / 4.0, 0.0, a / 4.0),
            RhoTuple::spatial(a / 2.0, a / 8.0, a / 2.0, 0.0),
            RhoTuple::space_time(a, 0.0, a, 0.0),
            RhoTuple::space_time(a / 4.0, 0.0, a, 0.0),
            RhoTuple::space_time(0.0, a / 4.0, a, 0.0),
            RhoTuple::space_time(a / 8.0, a / 8.0, a / 8.0, a / 8.0),
        ]
    }

    fn check(&self, spec: &ModelSpec) -> Result<()> {
        let a = spec.alpha;
        let inr = |b: f64, hi: f64| (0.0..=hi + 1e-15).contains(&b);
        match self.inequality {
            Inequality::Integral => {
                if !inr(self.beta1, a / 2.0) {
                    return Err(Error::Domain(format!(
                        "integral inequality needs beta in [0, alpha/2], got {}",
                        self.beta1
                    )));
                }
            }
            Inequality::Spatial | Inequality::SpaceTime => {
                if !inr(self.beta1, a / 4.0) || !inr(self.beta2, a / 4.0) {
                    return Err(Error::Domain(format!(
                        "convolution inequality needs beta1, beta2 in [0, alpha/4], got {}, {}",
                        self.beta1, self.beta2
                    )));
                }
                if spec.dim != 1 {
                    return Err(Error::Config(
                        "convolution inequalities are verified in dimension 1 only".into(),
                    ));
                }
                if self.inequality == Inequality::SpaceTime
                    && (self.gamma1 + self.beta1 <= 0.0 || self.gamma2 + self.beta2 <= 0.0)
                {
                    return Err(Error::Domain(format!(
                        "space-time inequality needs gamma_i + beta_i > 0, got {} and {}",
                        self.gamma1 + self.beta1,
                        self.gamma2 + self.beta2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sample grid for the empirical constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoGrid {
    pub t_values: Vec<f64>,
    pub x_values: Vec<f64>,
    /// Values of `s/t` for the spatial inequality.
    pub s_fractions: Vec<f64>,
}

impl Default for RhoGrid {
    fn default() -> Self {
        RhoGrid {
            t_values: vec![0.01, 0.05, 0.25, 0.5, 1.0],
            x_values: vec![0.0, 0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 5.0],
            s_fractions: vec![0.05, 0.25, 0.5, 0.75, 0.95],
        }
    }
}

fn insert_midpoints(v: &[f64], geometric: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.len());
    for (i, &a) in v.iter().enumerate() {
        out.push(a);
        if let Some(&b) = v.get(i + 1) {
            out.push(if geometric && a > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) });
        }
    }
    out
}

impl RhoGrid {
    /// Doubles the sampling density along every axis.
    pub fn refined(&self) -> RhoGrid {
        RhoGrid {
            t_values: insert_midpoints(&self.t_values, true),
            x_values: insert_midpoints(&self.x_values, true),
            s_fractions: insert_midpoints(&self.s_fractions, false),
        }
    }
}

const TOL: f64 = 1e-9;

/// `∫_a^∞ f(r) dr` for f decaying at least like `r^{−1−α}`, via `r = a·u^{−1/α}`.
fn tail(f: impl Fn(f64) -> f64, a: f64, alpha: f64) -> Result<f64> {
    let e = tanh_sinh_real(
        |u, _, _| {
            let r = a * u.powf(-1.0 / alpha);
            f(r) * (a / alpha) * u.powf(-1.0 / alpha - 1.0)
        },
        0.0,
        1.0,
        TOL,
    )?;
    Ok(e.value)
}

/// `∫_{breaks[0]}^{breaks[last]} f` piecewise, plus tails on both sides when requested.
fn piecewise<F: Fn(f64) -> f64>(f: &F, breaks: &mut Vec<f64>) -> Result<f64> {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut s = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            s += tanh_sinh_real(|x, _, _| f(x), w[0], w[1], TOL)?.value;
        }
    }
    Ok(s)
}

/// Breakpoints `c ± σ·10^{4k}` up to unit distance, resolving a peak of width σ at c.
fn scale_breaks(br: &mut Vec<f64>, c: f64, sigma: f64) {
    br.push(c);
    let mut d = sigma;
    while d < 1.0 {
        br.push(c - d);
        br.push(c + d);
        d *= 1e4;
    }
}

fn rho_integral(w: RhoWeight, t: f64, alpha: f64, dim: usize) -> Result<f64> {
    let surface = if dim == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let d1 = (dim - 1) as i32;
    let f = |r: f64| r.powi(d1) * w.at(t, r, alpha, dim);
    let scale = t.powf(1.0 / alpha);
    let mut b = vec![0.0, scale.min(1.0), 1.0, scale.max(1.0)];
    let top = *b.iter().fold(&0.0, |m, v| if v > m { v } else { m });
    Ok(surface * (piecewise(&f, &mut b)? + tail(f, top, alpha)?))
}

fn spatial_lhs(tu: &RhoTuple, s: f64, t: f64, x: f64, alpha: f64) -> Result<f64> {
    spatial_lhs_split(tu, s, t - s, x, alpha)
}

fn spatial_rhs(tu: &RhoTuple, s: f64, t: f64, x: f64, alpha: f64) -> f64 {
    let (g1, b1, g2, b2) = (tu.gamma1, tu.beta1, tu.gamma2, tu.beta2);
    let r00 = RhoWeight::new(0.0, 0.0).at(t, x.abs(), alpha, 1);
    let r0b2 = RhoWeight::new(0.0, b2).at(t, x.abs(), alpha, 1);
    let r0b1 = RhoWeight::new(0.0, b1).at(t, x.abs(), alpha, 1);
    let u = t - s;
    (u.powf((g1 + b1 + b2 - alpha) / alpha) * s.powf(g2 / alpha)
        + u.powf(g1 / alpha) * s.powf((g2 + b1 + b2 - alpha) / alpha))
        * r00
        + u.powf((g1 + b1 - alpha) / alpha) * s.powf(g2 / alpha) * r0b2
        + u.powf(g1 / alpha) * s.powf((g2 + b2 - alpha) / alpha) * r0b1
}

fn space_time_lhs(tu: &RhoTuple, t: f64, x: f64, alpha: f64) -> Result<f64> {
    let mut err = None;
    let v = tanh_sinh_real(
        |s, dl, dr| {
            // s = dl from the left; t - s = dr
            let s_val = if dl < dr { dl } else { t - dr };
            match spatial_lhs_split(tu, s_val, dr, x, alpha) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    let _ = s;
                    0.0
                }
            }
        },
        0.0,
        t,
        1e-7,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v.value)
}

/// Spatial convolution with the time gap `u = t − s` supplied separately for accuracy.
///
/// The line is split at the midpoint between the two peaks (at 0 and at x); each half
/// is integrated in the offset from its own peak so that widths far below the machine
/// resolution of x are still resolved.
fn spatial_lhs_split(tu: &RhoTuple, s: f64, u: f64, x: f64, alpha: f64) -> Result<f64> {
    let w1 = RhoWeight::new(tu.gamma1, tu.beta1);
    let w2 = RhoWeight::new(tu.gamma2, tu.beta2);
    let x = x.abs();
    let m = 0.5 * x;
    let f = |z_abs: f64, d_abs: f64| w1.at(u, d_abs, alpha, 1) * w2.at(s, z_abs, alpha, 1);
    let half = |sigma: f64, other: f64, fl: &dyn Fn(f64) -> f64| -> Result<f64> {
        // integrates fl(v) over v ∈ [−m, ∞) where v is the offset from the peak of width
        // sigma; the other peak sits at v = −x with width `other`
        let mut br = vec![-1.0, 1.0, 1.0 - x, -1.0 - x];
        scale_breaks(&mut br, 0.0, sigma);
        scale_breaks(&mut br, -x, other);
        br.retain(|&v| v > -m);
        br.push(-m);
        let hi = br.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(piecewise(&fl, &mut br)? + tail(fl, hi, alpha)?)
    };
    // left part around 0: z = −v, v ∈ [−m, ∞)
    let (sb, ub) = (s.powf(1.0 / alpha), u.powf(1.0 / alpha));
    let left = half(sb, ub, &|v: f64| f(v.abs(), x + v))?;
    // right part around x: z = x + v
    let right = half(ub, sb, &|v: f64| f((x + v).abs(), v.abs()))?;
    Ok(left + right)
}

fn space_time_rhs(tu: &RhoTuple, t: f64, x: f64, alpha: f64) -> f64 {
    let (g1, b1, g2, b2) = (tu.gamma1, tu.beta1, tu.gamma2, tu.beta2);
    let bf = beta((g1 + b1) / alpha, (g2 + b2) / alpha);
    let r = x.abs();
    bf * (RhoWeight::new(g1 + g2 + b1 + b2, 0.0).at(t, r, alpha, 1)
        + RhoWeight::new(g1 + g2 + b2, b1).at(t, r, alpha, 1)
        + RhoWeight::new(g1 + g2 + b1, b2).at(t, r, alpha, 1))
}

/// Max over the grid of LHS / RHS-without-constant, with its witness point.
fn empirical_constant(tu: &RhoTuple, spec: &ModelSpec, grid: &RhoGrid) -> Result<(f64, Vec<f64>)> {
    let alpha = spec.alpha;
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    match tu.inequality {
        Inequality::Integral => {
            for &t in &grid.t_values {
                points.push((t, 0.0, 0.0));
            }
        }
        Inequality::Spatial => {
            for &t in &grid.t_values {
                for &f in &grid.s_fractions {
                    for &x in &grid.x_values {
                        points.push((t, f * t, x));
                    }
                }
            }
        }
        Inequality::SpaceTime => {
            for &t in &grid.t_values {
                for &x in &grid.x_values {
                    points.push((t, 0.0, x));
                }
            }
        }
    }
    let ratios: Vec<Result<f64>> = points
        .par_iter()
        .map(|&(t, s, x)| match tu.inequality {
            Inequality::Integral => {
                let w = RhoWeight::new(tu.gamma1, tu.beta1);
                let lhs = rho_integral(w, t, alpha, spec.dim)?;
                Ok(lhs / t.powf((tu.gamma1 + tu.beta1 - alpha) / alpha))
            }
            Inequality::Spatial => {
                Ok(spatial_lhs(tu, s, t, x, alpha)? / spatial_rhs(tu, s, t, x, alpha))
            }
            Inequality::SpaceTime => {
                Ok(space_time_lhs(tu, t, x, alpha)? / space_time_rhs(tu, t, x, alpha))
            }
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (r, &(t, s, x)) in ratios.into_iter().zip(&points) {
        let r = r?;
        if !(r <= best.0) {
            best = (r, vec![t, s, x]);
        }
    }
    Ok(best)
}

/// Measures the empirical constants of the ϱ convolution inequalities on `grid` and on
/// its refinement; each report passes iff the constant is finite and changes by at most 5%.
pub fn verify_rho_inequalities(
    spec: &ModelSpec,
    tuples: &[RhoTuple],
    grid: &RhoGrid,
) -> Result<Vec<BoundReport>> {
    if grid.t_values.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Domain("rho grid times must lie in (0, 1]".into()));
    }
    if grid.s_fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
        return Err(Error::Domain("rho grid s/t fractions must lie in (0, 1)".into()));
    }
    for tu in tuples {
        tu.check(spec)?;
    }
    let fine = grid.refined();
    let mut out = Vec::new();
    for tu in tuples {
        let (c, w) = empirical_constant(tu, spec, grid)?;
        let (cf, wf) = empirical_constant(tu, spec, &fine)?;
        let id = match tu.inequality {
            Inequality::Integral => "rho.integral",
            Inequality::Spatial => "rho.spatial_convolution",
            Inequality::SpaceTime => "rho.space_time_convolution",
        };
        let desc = format!(
            "gamma1={}, beta1={}, gamma2={}, beta2={} (alpha={})",
            tu.gamma1, tu.beta1, tu.gamma2, tu.beta2, spec.alpha
        );
        let base = BoundReport::new(id, &desc).constant("C", c).witness("max (t, s, x)", w, c);
        let refined = BoundReport::new(id, &desc).constant("C", cf);
        let mut rep = base.with_refinement(&refined, 0.05).witness("refined max (t, s, x)", wf, cf);
        if rep.status == Status::Pass && !c.is_finite() {
            rep.status = Status::Fail;
        }
        out.push(rep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::named_preset;
    use super::*;

    #[test]
    fn closed_form_values() {
        let s = named_preset("constant-1.5").unwrap();
        let w = RhoWeight::new(0.0, 0.0);
        assert_eq!(eval_rho(w, 1.0, &[0.0], &s).unwrap(), 1.0);
        let w = RhoWeight::new(1.5, 0.0);
        let t: f64 = 0.3;
        assert!((eval_rho(w, t, &[0.0], &s).unwrap() - t.powf(-1.0 / 1.5)).abs() < 1e-12);
        assert!(eval_rho(w, 0.0, &[0.0], &s).is_err());
    }

    #[test]
    fn integral_against_antiderivative() {
        // ∫(1+|x|)^{-2.5} dx = 2/1.5 = 4/3
        let v = rho_integral(RhoWeight::new(1.5, 0.0), 1.0, 1.5, 1).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn homogeneity_regime() {
        let s = named_preset("constant-0.75").unwrap();
        let w = RhoWeight::new(0.4, 0.0);
        for &(t, x, lam) in &[(0.3f64, 0.5f64, 1.5f64), (1.0, 0.9, 1.1), (0.01, 0.2, 4.0)] {
            let lhs = eval_rho(w, lam.powf(0.75) * t, &[lam * x], &s).unwrap();
            let rhs = lam.powf(0.4 - 1.0 - 0.75) * eval_rho(w, t, &[x], &s).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let s = named_preset("constant-1.5").unwrap();
        let g = RhoGrid::default();
        assert!(verify_rho_inequalities(&s, &[RhoTuple::space_time(-0.5, 0.2, 1.0, 0.0)], &g).is_err());
        assert!(verify_rho_inequalities(&s, &[RhoTuple::integral(1.0, 1.0)], &g).is_err());
        assert!(verify_rho_inequalities(&s, &[RhoTuple::spatial(1.0, 0.5, 1.0, 0.0)], &g).is_err());
    }

    #[test]
    fn integral_constant_uniform_in_t() {
        let s = named_preset("constant-1.5").unwrap();
        let g = RhoGrid { t_values: vec![0.25, 0.5, 1.0], ..RhoGrid::default() };
        let r = verify_rho_inequalities(&s, &[RhoTuple::integral(1.5, 0.0)], &g).unwrap();
        // exact value 2/alpha for every t
        assert!((r[0].constants["C"] - 4.0 / 3.0).abs() < 1e-8);
        assert!(r[0].passed());
    }
}
