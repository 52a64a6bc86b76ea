//! Generators of the jump process applied to lattice functions by singular-integral
//! quadrature in physical space.
//!
//! Operands are periodic trigonometric interpolants of lattice data, so the operator is
//! the one on the torus: the kernel on `|h| ≤ L/2` is augmented by the sum of its periodic
//! images, which makes the quadrature comparable with the spectral multiplier `−ψ`.
//! Only separable (preset) kernels in one dimension are supported; their node tables
//! are built once per shape.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{BasePoint, DensityField, FieldKind};
use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::model::{chi, Component, ModelSpec, RhoWeight};
use crate::quad::gauss_legendre;
use crate::report::BoundReport;
use crate::spectral::Spectral;
use crate::symbol::profile_power_tail;

/// Node layout for the radial integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorQuadrature {
    /// Radius of the near field.
    pub inner_radius: f64,
    /// Gauss–Legendre nodes on the near field (after a singularity-removing substitution).
    pub near_nodes: usize,
    /// Gauss–Legendre nodes per far-field panel.
    pub far_nodes: usize,
    /// Points of the Lagrange stencil on the upsampled operand table.
    pub interpolation_order: usize,
    /// Ratio of consecutive far-field panel edges.
    pub grading: f64,
}

impl OperatorQuadrature {
    pub fn for_lattice(lat: &Lattice) -> Self {
        OperatorQuadrature {
            inner_radius: 4.0 * lat.spacing(),
            near_nodes: 24,
            far_nodes: 8,
            interpolation_order: 8,
            grading: 1.15,
        }
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        if self.inner_radius < 2.0 * lat.spacing() - 1e-15 {
            return Err(Error::Config("inner radius must be at least two lattice spacings".into()));
        }
        if self.inner_radius >= 0.5 * lat.extent {
            return Err(Error::Config("inner radius exceeds half the cell".into()));
        }
        if self.near_nodes < 2 || self.far_nodes < 2 || self.interpolation_order < 2 || self.grading <= 1.0 {
            return Err(Error::Config("degenerate operator quadrature".into()));
        }
        Ok(())
    }
}

const UPSAMPLE: usize = 8;

/// Upsampled band-limited operand with its first two derivatives.
#[derive(Clone, Debug)]
pub struct Operand {
    pub lattice: Lattice,
    fine: Lattice,
    tables: [Vec<f64>; 3],
    order: usize,
}

impl Operand {
    /// Trigonometric interpolant of one-dimensional lattice values.
    pub fn from_values(lat: &Lattice, values: &[f64], order: usize) -> Result<Self> {
        if lat.dim != 1 {
            return Err(Error::Config("operator quadrature is implemented for d = 1".into()));
        }
        let g = Spectral::new(*lat).analyze(values);
        Self::from_spectrum(lat, &g, order)
    }

    /// Operand from its spectrum on `lat` (characteristic-function convention).
    pub fn from_spectrum(lat: &Lattice, g: &[Complex64], order: usize) -> Result<Self> {
        let n = lat.n;
        let m = n * UPSAMPLE;
        let fine = Lattice::new(1, m, lat.extent)?;
        let sp = Spectral::new(fine);
        let mut big = vec![Complex64::new(0.0, 0.0); m];
        for (k, v) in g.iter().enumerate() {
            let s = lat.signed(k);
            if s == -(n as i64) / 2 {
                big[m - n / 2] += 0.5 * v;
                big[n / 2] += 0.5 * v;
            } else {
                big[s.rem_euclid(m as i64) as usize] += *v;
            }
        }
        let f0 = sp.synthesize(&big);
        let mut d1 = big.clone();
        sp.differentiate(&mut d1, 0);
        let mut d2 = d1.clone();
        sp.differentiate(&mut d2, 0);
        Ok(Operand { lattice: *lat, fine, tables: [f0, sp.synthesize(&d1), sp.synthesize(&d2)], order })
    }

    /// `k`-th derivative (k ≤ 2) at an arbitrary point, by periodic Lagrange interpolation.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let h = self.fine.spacing();
        let m = self.fine.n as i64;
        let s = (x + 0.5 * self.fine.extent) / h;
        let base = s.floor() as i64;
        let frac = s - base as f64;
        let p = self.order as i64;
        let lo = base - (p / 2 - 1);
        let t = &self.tables[k];
        if frac == 0.0 {
            return t[base.rem_euclid(m) as usize];
        }
        // nodes at offsets j = lo..lo+p relative to s
        let mut acc = 0.0;
        for j in 0..p {
            let xj = (lo + j - base) as f64;
            let mut w = 1.0;
            for i in 0..p {
                if i != j {
                    let xi = (lo + i - base) as f64;
                    w *= (frac - xi) / (xj - xi);
                }
            }
            acc += w * t[(lo + j).rem_euclid(m) as usize];
        }
        acc
    }
}

const IMAGES: i64 = 256;

/// `Σ_{k≠0} s(z+kL)|z+kL|^{−1−α}` for one kernel shape.
fn shape_images(c: &Component, alpha: f64, l: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..=IMAGES {
        for h in [z + k as f64 * l, z - k as f64 * l] {
            s += c.shape.eval(&[h]) * h.abs().powf(-1.0 - alpha);
        }
    }
    let r = (IMAGES as f64 + 1.0) * l;
    let nbar = 0.5 * (c.shape.eval(&[r]) + c.shape.eval(&[-r]));
    s + 2.0 * nbar * ((IMAGES as f64 + 0.5) * l).powf(-alpha) / (alpha * l)
}

/// Radial nodes with per-shape kernel and image values, shared by all evaluation points.
#[derive(Clone, Debug)]
pub struct OperatorTable {
    pub alpha: f64,
    pub lattice: Lattice,
    pub quad: OperatorQuadrature,
    components: Vec<Component>,
    radii: Vec<f64>,
    /// Quadrature weight in `r`.
    weights: Vec<f64>,
    /// `s_j(±r_i)` for component `j`, index `[j][2i + (0 for +, 1 for −)]`.
    shape: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    /// `∫_{L/2}^∞ (s_j(r) − s_j(−r)) r^{−α} dr` (α > 1, else 0).
    odd_tail: Vec<f64>,
    /// `∫_{L/2}^∞ (s_j(r) + s_j(−r)) r^{−1−α} dr`.
    even_tail: Vec<f64>,
}

impl OperatorTable {
    pub fn new(spec: &ModelSpec, lattice: Lattice, quad: OperatorQuadrature) -> Result<Self> {
        if spec.dim != 1 || lattice.dim != 1 {
            return Err(Error::Config("operator quadrature is implemented for d = 1".into()));
        }
        quad.validate(&lattice)?;
        let components = spec
            .kernel
            .components()
            .ok_or_else(|| Error::Config("operator quadrature needs a separable (preset) kernel".into()))?;
        let a = spec.alpha;
        let delta = quad.inner_radius;
        let half = 0.5 * lattice.extent;
        let mut radii = Vec::new();
        let mut weights = Vec::new();
        // near field r = δ v^p: p removes the r^{1−α} (α ≥ 1) or r^{−α} (α < 1) singularity
        let p = if a >= 1.0 { 1.0 / (2.0 - a) } else { 1.0 / (1.0 - a) };
        let (gx, gw) = gauss_legendre(quad.near_nodes);
        for (x, w) in gx.iter().zip(&gw) {
            let v = 0.5 * (x + 1.0);
            radii.push(delta * v.powf(p));
            weights.push(0.5 * w * delta * p * v.powf(p - 1.0));
        }
        let (fx, fw) = gauss_legendre(quad.far_nodes);
        let mut lo = delta;
        while lo < half {
            let mut hi = lo * quad.grading;
            if hi * quad.grading.sqrt() > half {
                hi = half;
            }
            for (x, w) in fx.iter().zip(&fw) {
                radii.push(lo + 0.5 * (x + 1.0) * (hi - lo));
                weights.push(0.5 * w * (hi - lo));
            }
            lo = hi;
        }
        let nodes = radii.len();
        let mut shape = Vec::new();
        let mut images = Vec::new();
        let mut odd_tail = Vec::new();
        let mut even_tail = Vec::new();
        for c in &components {
            let mut sv = vec![0.0; 2 * nodes];
            for (i, r) in radii.iter().enumerate() {
                sv[2 * i] = c.shape.eval(&[*r]);
                sv[2 * i + 1] = c.shape.eval(&[-*r]);
            }
            let iv: Vec<f64> = (0..2 * nodes)
                .into_par_iter()
                .map(|k| {
                    let r = radii[k / 2];
                    let z = if k % 2 == 0 { r } else { -r };
                    shape_images(c, a, lattice.extent, z)
                })
                .collect();
            let plus = c.shape.profile(&[1.0]);
            let minus = c.shape.profile(&[-1.0]);
            let odd = plus.combine(1.0, &minus, -1.0);
            let even = plus.combine(1.0, &minus, 1.0);
            odd_tail.push(if a > 1.0 { profile_power_tail(&odd, half, a)? } else { 0.0 });
            even_tail.push(profile_power_tail(&even, half, 1.0 + a)?);
            shape.push(sv);
            images.push(iv);
        }
        Ok(OperatorTable { alpha: a, lattice, quad, components, radii, weights, shape, images, odd_tail, even_tail })
    }

    /// Kernel coefficients `a_j(z)`.
    pub fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.coefficient.eval(z)).collect()
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let lim = 0.5 * self.lattice.extent - self.lattice.extent / 8.0 + 1e-12;
        if x.abs() > lim {
            return Err(Error::Domain(format!("x = {x} lies in the boundary band")));
        }
        Ok(())
    }

    /// `∫[f(x+h)−f(x)−χ_α(h)h f'(x)] Σ_j c_j s_j(h)|h|^{−1−α} dh` on the torus, plus `drift·f'(x)`.
    pub fn apply(&self, op: &Operand, x: f64, coefs: &[f64], drift: f64) -> f64 {
        let a = self.alpha;
        let f = op.eval(0, x);
        let f1 = op.eval(1, x);
        let f2 = op.eval(2, x);
        let small = 0.25 * self.lattice.spacing();
        let mut acc = 0.0;
        for (i, (&r, &w)) in self.radii.iter().zip(&self.weights).enumerate() {
            let kr = r.powf(-1.0 - a);
            let compensated = chi(a, r);
            for (side, sg) in [(0usize, 1.0f64), (1, -1.0)] {
                let mut n = 0.0;
                let mut img = 0.0;
                for (j, c) in coefs.iter().enumerate() {
                    if *c != 0.0 {
                        n += c * self.shape[j][2 * i + side];
                        img += c * self.images[j][2 * i + side];
                    }
                }
                if n == 0.0 && img == 0.0 {
                    continue;
                }
                let fx = op.eval(0, x + sg * r);
                let bracket = if r < small {
                    if compensated {
                        0.5 * r * r * f2
                    } else {
                        sg * r * f1 + 0.5 * r * r * f2
                    }
                } else if compensated {
                    fx - f - sg * r * f1
                } else {
                    fx - f
                };
                acc += w * (n * kr * bracket + img * (fx - f));
            }
        }
        let odd: f64 = coefs.iter().zip(&self.odd_tail).map(|(c, m)| c * m).sum();
        acc - f1 * odd + drift * f1
    }

    /// `∫|f(x+h)−f(x)−χ_α(h)h f'(x)| n |h|^{−1−α} dh` over `|h| ≤ L/2`, plus a bound for the rest.
    pub fn increment_integral(&self, op: &Operand, x: f64, coefs: &[f64]) -> f64 {
        let a = self.alpha;
        let f = op.eval(0, x);
        let f1 = op.eval(1, x);
        let mut acc = 0.0;
        for (i, (&r, &w)) in self.radii.iter().zip(&self.weights).enumerate() {
            let kr = r.powf(-1.0 - a);
            for (side, sg) in [(0usize, 1.0f64), (1, -1.0)] {
                let n: f64 = coefs.iter().enumerate().map(|(j, c)| c * self.shape[j][2 * i + side]).sum();
                let comp = if chi(a, r) { sg * r * f1 } else { 0.0 };
                acc += w * n * kr * (op.eval(0, x + sg * r) - f - comp).abs();
            }
        }
        let even: f64 = coefs.iter().zip(&self.even_tail).map(|(c, m)| c * m).sum();
        let mut tail = f.abs() * even;
        if a > 1.0 {
            let s: f64 = coefs.iter().map(|c| c.abs()).sum::<f64>();
            tail += f1.abs() * 2.0 * s * (0.5 * self.lattice.extent).powf(1.0 - a) / (a - 1.0);
        }
        acc + tail
    }
}

/// `𝓐^y f(x)` with the kernel frozen at `y`.
pub fn apply_frozen_operator(table: &OperatorTable, y: &[f64], operand: &Operand, x: f64) -> Result<f64> {
    table.check_point(x)?;
    Ok(table.apply(operand, x, &table.coefficients(y), 0.0))
}

/// `𝓛 f(x)`: the kernel at the live point plus `b(x) f'(x)` when α > 1.
pub fn apply_full_generator(spec: &ModelSpec, table: &OperatorTable, operand: &Operand, x: f64) -> Result<f64> {
    table.check_point(x)?;
    let b = spec.drift_at(&[x]);
    Ok(table.apply(operand, x, &table.coefficients(&[x]), b[0]))
}

/// `F = (𝓐 − 𝓐^y) q(t,·,y)(x)` with the difference kernel `n(x,h) − n(y,h)` in one pass.
pub fn compute_f(table: &OperatorTable, x: f64, y: f64, q: &Operand) -> Result<f64> {
    table.check_point(x)?;
    let cx = table.coefficients(&[x]);
    let cy = table.coefficients(&[y]);
    let d: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| p - q).collect();
    Ok(table.apply(q, x, &d, 0.0))
}

/// The same operator by its multiplier. With `f(x) = (2π)^{−1}∫ĝ(u)e^{−iux}du` the
/// operator acts on `ĝ` as multiplication by `−ψ(−u) = −conj ψ(u)`.
pub fn apply_frozen_spectral(sym: &crate::symbol::FrozenSymbol, values: &[f64]) -> Vec<f64> {
    let sp = Spectral::new(sym.lattice);
    let mut g = sp.analyze(values);
    for (v, p) in g.iter_mut().zip(&sym.values) {
        *v *= -p.conj();
    }
    sp.synthesize(&g)
}

/// Increment-integral ratio `∫|f_t(x+h)−f_t(x)−χ h∇f_t(x)| n(y,h)|h|^{−1−α}dh / ϱ_0^0(t,x)`,
/// with an extra factor `1 + ln(1/t)` in the denominator when α = 1. Sampled at every
/// `stride`-th interior point and every time node.
pub fn increment_ratio(spec: &ModelSpec, field: &DensityField, stride: usize) -> Result<BoundReport> {
    let y = match (&field.kind, &field.base_point) {
        (FieldKind::FrozenDensity, BasePoint::Point(y)) => y.clone(),
        _ => return Err(Error::Domain("increment integral needs a frozen density".into())),
    };
    if field.grid.time_nodes.iter().any(|t| *t > 1.0) {
        return Err(Error::Domain("increment-integral bound holds for t ≤ 1".into()));
    }
    let lat = *field.lattice();
    let quad = OperatorQuadrature::for_lattice(&lat);
    let table = OperatorTable::new(spec, lat, quad)?;
    let coefs = table.coefficients(&y);
    let a = spec.alpha;
    let w = RhoWeight::new(0.0, 0.0);
    let mut sup = 0.0f64;
    let mut wit = vec![];
    let mut per_time = Vec::new();
    for (k, row) in field.values.iter().enumerate() {
        let t = field.time(k);
        let op = Operand::from_values(&lat, row, quad.interpolation_order)?;
        let log = if a == 1.0 { 1.0 + (1.0 / t).ln() } else { 1.0 };
        let pts: Vec<usize> = (0..lat.n).step_by(stride.max(1)).filter(|&i| lat.is_interior_index(i)).collect();
        let (m, x) = pts
            .par_iter()
            .map(|&i| {
                let x = lat.coord(i);
                (table.increment_integral(&op, x, &coefs) / (log * w.at(t, x.abs(), a, 1)), x)
            })
            .reduce(|| (0.0, 0.0), |p, q| if q.0 > p.0 { q } else { p });
        per_time.push(m);
        if m > sup {
            sup = m;
            wit = vec![t, x];
        }
    }
    let mut rep = BoundReport::new(
        "nonlocal.increment_integral",
        "sup of the absolute increment integral over rho_0^0 (times 1 + ln 1/t when alpha = 1)",
    )
    .constant("sup_ratio", sup)
    .witness("sup", wit, sup);
    for (t, m) in field.grid.time_nodes.iter().zip(&per_time) {
        rep = rep.note(format!("t = {t}: ratio {m:.6e}"));
    }
    Ok(rep)
}

/// Increment-integral ratio with a refinement verdict (doubled lattice, ≤ 5 % change).
pub fn check_increment_integral(
    spec: &ModelSpec,
    field: &DensityField,
    refined: Option<&DensityField>,
) -> Result<BoundReport> {
    let rep = increment_ratio(spec, field, 8)?;
    Ok(match refined {
        Some(r) => rep.with_refinement(&increment_ratio(spec, r, 16)?, 0.05),
        None => rep.judge_finite_positive(),
    })
}
