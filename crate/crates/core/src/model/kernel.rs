//! Jump kernels `n(x, h)` and drifts `b(x)`.
//!
//! Built-in kernels are finite sums `Σ_j a_j(x)·B_j(h)` of an x-coefficient and an
//! h-shape. The symbol and parametrix stages exploit this separable form.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// x-dependence of one kernel component.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Const(f64),
    /// `amp · sin(x₁ / scale)`
    Sine { amp: f64, scale: f64 },
    /// `amp · min(|x| / scale, 1)^exponent`
    Holder { amp: f64, exponent: f64, scale: f64 },
}

impl Coefficient {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Coefficient::Const(c) => c,
            Coefficient::Sine { amp, scale } => amp * (x[0] / scale).sin(),
            Coefficient::Holder { amp, exponent, scale } => {
                amp * (norm(x) / scale).min(1.0).powf(exponent)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Coefficient::Const(_) => true,
            Coefficient::Sine { amp, .. } | Coefficient::Holder { amp, .. } => amp == 0.0,
        }
    }

    fn rescaled(&self, a: f64) -> Coefficient {
        match *self {
            Coefficient::Const(c) => Coefficient::Const(c),
            Coefficient::Sine { amp, scale } => Coefficient::Sine { amp, scale: scale * a },
            Coefficient::Holder { amp, exponent, scale } => {
                Coefficient::Holder { amp, exponent, scale: scale * a }
            }
        }
    }
}

/// h-dependence of one kernel component.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Unit,
    /// `cos(ω|h|)`
    CosRadial { omega: f64 },
    /// `sign(h₁)`
    SignFirst,
    /// `+1` for `|h| ≤ radius`, `−1` beyond.
    RadialStep { radius: f64 },
}

/// One piece `c0 + c1·cos(ω r)` of a radial profile, valid from `start` up to the next piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub c0: f64,
    pub c1: f64,
    pub omega: f64,
}

impl Piece {
    pub fn eval(&self, r: f64) -> f64 {
        if self.c1 == 0.0 {
            self.c0
        } else {
            self.c0 + self.c1 * (self.omega * r).cos()
        }
    }
}

/// Piecewise profile `r ↦ B(r·θ)` along a fixed direction θ; the last piece extends to infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub pieces: Vec<Piece>,
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let mut v = 0.0;
        for p in &self.pieces {
            if r >= p.start {
                v = p.eval(r);
            }
        }
        v
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.start)
    }

    /// Linear combination `a·self + b·other` on the union of breakpoints.
    pub fn combine(&self, a: f64, other: &RadialProfile, b: f64) -> RadialProfile {
        let mut starts: Vec<f64> = self
            .pieces
            .iter()
            .chain(other.pieces.iter())
            .map(|p| p.start)
            .collect();
        starts.sort_by(f64::total_cmp);
        starts.dedup();
        let mut pieces = Vec::new();
        for &s in &starts {
            let p = active(&self.pieces, s);
            let q = active(&other.pieces, s);
            // Cos parts with different frequencies cannot share one piece; shapes in
            // this crate never mix frequencies within a single profile pair.
            let (c1, omega) = match (p.c1 != 0.0, q.c1 != 0.0) {
                (true, true) => {
                    assert!(p.omega == q.omega, "mixed radial frequencies");
                    (a * p.c1 + b * q.c1, p.omega)
                }
                (true, false) => (a * p.c1, p.omega),
                (false, true) => (b * q.c1, q.omega),
                (false, false) => (0.0, 0.0),
            };
            pieces.push(Piece { start: s, c0: a * p.c0 + b * q.c0, c1, omega });
        }
        RadialProfile { pieces }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.c0 == 0.0 && p.c1 == 0.0)
    }
}

fn active(pieces: &[Piece], r: f64) -> Piece {
    let mut cur = Piece { start: 0.0, c0: 0.0, c1: 0.0, omega: 0.0 };
    for p in pieces {
        if r >= p.start {
            cur = *p;
        }
    }
    cur
}

impl Shape {
    pub fn eval(&self, h: &[f64]) -> f64 {
        match *self {
            Shape::Unit => 1.0,
            Shape::CosRadial { omega } => (omega * norm(h)).cos(),
            Shape::SignFirst => {
                if h[0] > 0.0 {
                    1.0
                } else if h[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Shape::RadialStep { radius } => {
                if norm(h) <= radius {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Radial profile along the unit direction `dir`.
    pub fn profile(&self, dir: &[f64]) -> RadialProfile {
        let p = |start, c0, c1, omega| Piece { start, c0, c1, omega };
        let pieces = match *self {
            Shape::Unit => vec![p(0.0, 1.0, 0.0, 0.0)],
            Shape::CosRadial { omega } => vec![p(0.0, 0.0, 1.0, omega)],
            Shape::SignFirst => vec![p(0.0, self.eval(dir), 0.0, 0.0)],
            Shape::RadialStep { radius } => {
                vec![p(0.0, 1.0, 0.0, 0.0), p(radius, -1.0, 0.0, 0.0)]
            }
        };
        RadialProfile { pieces }
    }

    fn rescaled(&self, a: f64) -> Shape {
        match *self {
            Shape::CosRadial { omega } => Shape::CosRadial { omega: omega / a },
            Shape::RadialStep { radius } => Shape::RadialStep { radius: radius * a },
            ref s => s.clone(),
        }
    }

    /// `B(−h) = B(h)` for all h.
    pub fn is_even(&self) -> bool {
        !matches!(self, Shape::SignFirst)
    }
}

/// One separable term `a(x)·B(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub coefficient: Coefficient,
    pub shape: Shape,
}

/// Named kernel presets with analytically known constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelPreset {
    /// `n ≡ value`
    Constant { value: f64 },
    /// `base + amplitude·sin(x₁)`, optionally times `cos(h_frequency·|h|)`.
    Sinusoidal {
        base: f64,
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_frequency: Option<f64>,
    },
    /// `base + amplitude·sign(h₁)`
    SignAsymmetric { base: f64, amplitude: f64 },
    /// `base + amplitude·min(|x|,1)^exponent·(±1 inside/outside the unit ball in h)`
    StepHolder { base: f64, amplitude: f64, exponent: f64 },
    /// `n(x/scale, h/scale)` for an inner preset.
    Rescaled { inner: Box<KernelPreset>, scale: f64 },
}

impl KernelPreset {
    pub fn components(&self) -> Vec<Component> {
        let c = |coefficient, shape| Component { coefficient, shape };
        match self {
            KernelPreset::Constant { value } => vec![c(Coefficient::Const(*value), Shape::Unit)],
            KernelPreset::Sinusoidal { base, amplitude, h_frequency } => {
                let shape = match h_frequency {
                    Some(omega) => Shape::CosRadial { omega: *omega },
                    None => Shape::Unit,
                };
                vec![
                    c(Coefficient::Const(*base), Shape::Unit),
                    c(Coefficient::Sine { amp: *amplitude, scale: 1.0 }, shape),
                ]
            }
            KernelPreset::SignAsymmetric { base, amplitude } => vec![
                c(Coefficient::Const(*base), Shape::Unit),
                c(Coefficient::Const(*amplitude), Shape::SignFirst),
            ],
            KernelPreset::StepHolder { base, amplitude, exponent } => vec![
                c(Coefficient::Const(*base), Shape::Unit),
                c(
                    Coefficient::Holder { amp: *amplitude, exponent: *exponent, scale: 1.0 },
                    Shape::RadialStep { radius: 1.0 },
                ),
            ],
            KernelPreset::Rescaled { inner, scale } => inner
                .components()
                .into_iter()
                .map(|k| c(k.coefficient.rescaled(*scale), k.shape.rescaled(*scale)))
                .collect(),
        }
    }

    /// `(κ₀, κ₁)`
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            KernelPreset::Constant { value } => (*value, *value),
            KernelPreset::Sinusoidal { base, amplitude, .. }
            | KernelPreset::SignAsymmetric { base, amplitude }
            | KernelPreset::StepHolder { base, amplitude, .. } => {
                (base - amplitude.abs(), base + amplitude.abs())
            }
            KernelPreset::Rescaled { inner, .. } => inner.bounds(),
        }
    }

    /// Hölder constant κ₂ for exponent θ.
    pub fn holder_constant(&self, theta: f64) -> Result<f64> {
        match self {
            KernelPreset::Constant { .. } | KernelPreset::SignAsymmetric { .. } => Ok(0.0),
            KernelPreset::Sinusoidal { amplitude, .. } => {
                Ok(amplitude.abs() * 2f64.powf(1.0 - theta))
            }
            KernelPreset::StepHolder { amplitude, exponent, .. } => {
                if theta <= *exponent + 1e-15 || *amplitude == 0.0 {
                    Ok(amplitude.abs())
                } else {
                    Err(Error::Domain(format!(
                        "step-holder kernel with exponent {exponent} is not Hölder of order {theta}"
                    )))
                }
            }
            KernelPreset::Rescaled { inner, scale } => {
                Ok(inner.holder_constant(theta)? * scale.powf(-theta))
            }
        }
    }
}

type KernelFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type DriftFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied kernel with declared constants.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub eval: Arc<KernelFn>,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Radius beyond which `n(x, h)` depends on the direction of `h` only.
    pub radial_cutoff: Option<f64>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("kappa0", &self.kappa0)
            .field("kappa1", &self.kappa1)
            .field("kappa2", &self.kappa2)
            .field("radial_cutoff", &self.radial_cutoff)
            .finish()
    }
}

/// Jump kernel `n(x, h)`.
#[derive(Clone, Debug)]
pub enum Kernel {
    Preset(KernelPreset),
    Custom(CustomKernel),
}

impl Kernel {
    pub fn eval(&self, x: &[f64], h: &[f64]) -> f64 {
        match self {
            Kernel::Preset(p) => p
                .components()
                .iter()
                .map(|c| c.coefficient.eval(x) * c.shape.eval(h))
                .sum(),
            Kernel::Custom(c) => (c.eval)(x, h),
        }
    }

    /// Separable decomposition, if available.
    pub fn components(&self) -> Option<Vec<Component>> {
        match self {
            Kernel::Preset(p) => Some(p.components()),
            Kernel::Custom(_) => None,
        }
    }

    /// True when `n(x, h)` does not depend on x.
    pub fn is_x_independent(&self) -> bool {
        match self {
            Kernel::Preset(p) => p.components().iter().all(|c| c.coefficient.is_constant()),
            Kernel::Custom(c) => c.kappa2 == 0.0,
        }
    }
}

/// Drift `b(x)`, used only when α > 1.
#[derive(Clone)]
pub enum Drift {
    Zero,
    Constant(Vec<f64>),
    /// `amplitude·sin(x₁)` in the first coordinate.
    Sinusoidal { amplitude: f64 },
    Custom { name: String, eval: Arc<DriftFn>, kappa3: f64 },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Constant(v) => write!(f, "Constant({v:?})"),
            Drift::Sinusoidal { amplitude } => write!(f, "Sinusoidal({amplitude})"),
            Drift::Custom { name, kappa3, .. } => write!(f, "Custom({name}, {kappa3})"),
        }
    }
}

impl Drift {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Drift::Zero => vec![0.0; x.len()],
            Drift::Constant(v) => v.clone(),
            Drift::Sinusoidal { amplitude } => {
                let mut v = vec![0.0; x.len()];
                v[0] = amplitude * x[0].sin();
                v
            }
            Drift::Custom { eval, .. } => eval(x),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Constant(v) => norm(v),
            Drift::Sinusoidal { amplitude } => amplitude.abs(),
            Drift::Custom { kappa3, .. } => *kappa3,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Drift::Zero => true,
            Drift::Constant(v) => v.iter().all(|c| *c == 0.0),
            Drift::Sinusoidal { amplitude } => *amplitude == 0.0,
            Drift::Custom { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_formulas() {
        let k = Kernel::Preset(KernelPreset::Sinusoidal { base: 1.0, amplitude: 0.4, h_frequency: Some(1.0) });
        let (x, h) = (0.7, -2.3f64);
        assert!((k.eval(&[x], &[h]) - (1.0 + 0.4 * x.sin() * h.abs().cos())).abs() < 1e-15);
        let k = Kernel::Preset(KernelPreset::StepHolder { base: 1.0, amplitude: 0.3, exponent: 0.5 });
        assert!((k.eval(&[0.25], &[2.0]) - (1.0 - 0.3 * 0.5)).abs() < 1e-15);
        assert!((k.eval(&[-3.0], &[0.5]) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn rescaled_matches_definition() {
        let inner = KernelPreset::Sinusoidal { base: 1.0, amplitude: 0.4, h_frequency: Some(1.5) };
        let a = 2.5;
        let k = Kernel::Preset(KernelPreset::Rescaled { inner: Box::new(inner.clone()), scale: a });
        let k0 = Kernel::Preset(inner);
        for &(x, h) in &[(0.3, 1.1), (-4.0, 7.5), (2.0, -0.2)] {
            assert!((k.eval(&[x], &[h]) - k0.eval(&[x / a], &[h / a])).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_combination() {
        let a = Shape::RadialStep { radius: 1.0 }.profile(&[1.0]);
        let b = Shape::Unit.profile(&[1.0]);
        let c = a.combine(2.0, &b, 1.0);
        assert_eq!(c.eval(0.5), 3.0);
        assert_eq!(c.eval(1.5), -1.0);
        assert_eq!(c.breakpoints().collect::<Vec<_>>(), vec![1.0]);
    }
}
