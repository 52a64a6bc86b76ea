//! Operator data: the jump kernel and drift with their structural constants.

mod kernel;
mod rho;
mod validate;

pub use kernel::{
    norm, Coefficient, Component, CustomKernel, Drift, Kernel, KernelPreset, Piece,
    RadialProfile, Shape,
};
pub use rho::{
    eval_rho, verify_rho_inequalities, Inequality, RhoGrid, RhoTuple, RhoWeight,
};
pub use validate::{validate_model, AssumptionCheck, ValidationLattice, ValidationReport};

use crate::error::{Error, Result};

/// Parameters of the operator
/// `L f(x) = ∫ [f(x+h) − f(x) − χ_α(h) h·∇f(x)] n(x,h)|h|^{−d−α} dh + 1_{α>1} b(x)·∇f(x)`.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub alpha: f64,
    pub dim: usize,
    pub kernel: Kernel,
    pub drift: Drift,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub theta: f64,
    pub kappa3: f64,
}

impl ModelSpec {
    /// Builds a spec from a preset kernel; the constants are filled in analytically.
    pub fn from_preset(
        alpha: f64,
        dim: usize,
        kernel: KernelPreset,
        drift: Drift,
        theta: f64,
    ) -> Result<Self> {
        check_scalars(alpha, dim, theta)?;
        let (kappa0, kappa1) = kernel.bounds();
        let kappa2 = kernel.holder_constant(theta)?;
        let kappa3 = drift.bound();
        let spec = ModelSpec {
            alpha,
            dim,
            kernel: Kernel::Preset(kernel),
            drift,
            kappa0,
            kappa1,
            kappa2,
            theta,
            kappa3,
        };
        spec.check_constants()?;
        Ok(spec)
    }

    /// Builds a spec from a user kernel with declared constants.
    pub fn from_custom(
        alpha: f64,
        dim: usize,
        kernel: CustomKernel,
        drift: Drift,
        theta: f64,
    ) -> Result<Self> {
        check_scalars(alpha, dim, theta)?;
        let spec = ModelSpec {
            alpha,
            dim,
            kappa0: kernel.kappa0,
            kappa1: kernel.kappa1,
            kappa2: kernel.kappa2,
            kernel: Kernel::Custom(kernel),
            kappa3: drift.bound(),
            drift,
            theta,
        };
        spec.check_constants()?;
        Ok(spec)
    }

    fn check_constants(&self) -> Result<()> {
        let all = [self.kappa0, self.kappa1, self.kappa2, self.kappa3];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite model constant".into()));
        }
        if self.kappa0 <= 0.0 || self.kappa1 < self.kappa0 || self.kappa2 < 0.0 || self.kappa3 < 0.0 {
            return Err(Error::Domain(format!(
                "constants must satisfy 0 < κ0 ≤ κ1, κ2 ≥ 0, κ3 ≥ 0 (got {}, {}, {}, {})",
                self.kappa0, self.kappa1, self.kappa2, self.kappa3
            )));
        }
        Ok(())
    }

    /// θ̂ = min(θ, α/4)
    pub fn theta_hat(&self) -> f64 {
        self.theta.min(self.alpha / 4.0)
    }

    /// Compensator cutoff χ_α(h) as a function of |h|.
    pub fn chi(&self, h_norm: f64) -> bool {
        chi(self.alpha, h_norm)
    }

    pub fn kernel_at(&self, x: &[f64], h: &[f64]) -> f64 {
        self.kernel.eval(x, h)
    }

    /// Drift at x; identically zero unless α > 1.
    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        if self.alpha > 1.0 {
            self.drift.eval(x)
        } else {
            vec![0.0; self.dim]
        }
    }

    /// True when the drift term is present in the operator.
    pub fn has_drift(&self) -> bool {
        self.alpha > 1.0 && !self.drift.is_zero()
    }

    /// Same operator with the kernel replaced by `n(x/a, h/a)`; only for presets.
    pub fn rescaled(&self, a: f64) -> Result<ModelSpec> {
        match &self.kernel {
            Kernel::Preset(p) => ModelSpec::from_preset(
                self.alpha,
                self.dim,
                KernelPreset::Rescaled { inner: Box::new(p.clone()), scale: a },
                self.drift.clone(),
                self.theta,
            ),
            Kernel::Custom(_) => Err(Error::Config("rescaling needs a preset kernel".into())),
        }
    }
}

/// χ_α(h) = 1_{α>1} + 1_{α=1}·1_{|h|≤1}
pub fn chi(alpha: f64, h_norm: f64) -> bool {
    alpha > 1.0 || (alpha == 1.0 && h_norm <= 1.0)
}

fn check_scalars(alpha: f64, dim: usize, theta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,2), got {alpha}")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {dim}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0,1), got {theta}")));
    }
    Ok(())
}

/// Shipped model presets, addressable by name.
pub fn named_preset(name: &str) -> Result<ModelSpec> {
    let sin = |amp| KernelPreset::Sinusoidal { base: 1.0, amplitude: amp, h_frequency: None };
    match name {
        "constant-cauchy" => {
            ModelSpec::from_preset(1.0, 1, KernelPreset::Constant { value: 1.0 }, Drift::Zero, 0.5)
        }
        "constant-0.75" => {
            ModelSpec::from_preset(0.75, 1, KernelPreset::Constant { value: 1.0 }, Drift::Zero, 0.5)
        }
        "constant-1.5" => {
            ModelSpec::from_preset(1.5, 1, KernelPreset::Constant { value: 1.0 }, Drift::Zero, 0.5)
        }
        "sinusoidal-1.5" => ModelSpec::from_preset(1.5, 1, sin(0.4), Drift::Zero, 0.5),
        "even-alpha1" => ModelSpec::from_preset(
            1.0,
            1,
            KernelPreset::Sinusoidal { base: 1.0, amplitude: 0.4, h_frequency: Some(1.0) },
            Drift::Zero,
            0.5,
        ),
        "sign-asymmetric-alpha1" => ModelSpec::from_preset(
            1.0,
            1,
            KernelPreset::SignAsymmetric { base: 1.0, amplitude: 0.5 },
            Drift::Zero,
            0.5,
        ),
        "sign-asymmetric-1.5" => ModelSpec::from_preset(
            1.5,
            1,
            KernelPreset::SignAsymmetric { base: 1.0, amplitude: 0.5 },
            Drift::Zero,
            0.5,
        ),
        "step-holder-1.5" => ModelSpec::from_preset(
            1.5,
            1,
            KernelPreset::StepHolder { base: 1.0, amplitude: 0.3, exponent: 0.5 },
            Drift::Zero,
            0.5,
        ),
        "drift-1.5" => ModelSpec::from_preset(1.5, 1, sin(0.4), Drift::Constant(vec![0.3]), 0.5),
        "stable-drift-1.5" => ModelSpec::from_preset(
            1.5,
            1,
            KernelPreset::Constant { value: 1.0 },
            Drift::Constant(vec![0.3]),
            0.5,
        ),
        "constant-2d-1.5" => {
            ModelSpec::from_preset(1.5, 2, KernelPreset::Constant { value: 1.0 }, Drift::Zero, 0.5)
        }
        _ => Err(Error::Config(format!("unknown preset '{name}'"))),
    }
}

/// Names accepted by [`named_preset`].
pub const PRESET_NAMES: &[&str] = &[
    "constant-cauchy",
    "constant-0.75",
    "constant-1.5",
    "sinusoidal-1.5",
    "even-alpha1",
    "sign-asymmetric-alpha1",
    "sign-asymmetric-1.5",
    "step-holder-1.5",
    "drift-1.5",
    "stable-drift-1.5",
    "constant-2d-1.5",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_hat_and_chi() {
        let s = named_preset("sinusoidal-1.5").unwrap();
        assert_eq!(s.theta_hat(), 0.375);
        assert!(s.chi(10.0));
        let c = named_preset("constant-cauchy").unwrap();
        assert!(c.chi(1.0) && !c.chi(1.0001));
        assert!(!named_preset("constant-0.75").unwrap().chi(0.1));
    }

    #[test]
    fn all_presets_build() {
        for name in PRESET_NAMES {
            named_preset(name).unwrap();
        }
        assert!(named_preset("nope").is_err());
    }

    #[test]
    fn rejects_bad_scalars() {
        let k = KernelPreset::Constant { value: 1.0 };
        assert!(ModelSpec::from_preset(2.0, 1, k.clone(), Drift::Zero, 0.5).is_err());
        assert!(ModelSpec::from_preset(1.0, 3, k.clone(), Drift::Zero, 0.5).is_err());
        assert!(ModelSpec::from_preset(1.0, 1, k, Drift::Zero, 1.0).is_err());
        let bad = KernelPreset::Sinusoidal { base: 0.3, amplitude: 0.4, h_frequency: None };
        assert!(ModelSpec::from_preset(1.0, 1, bad, Drift::Zero, 0.5).is_err());
    }

    #[test]
    fn drift_ignored_below_one() {
        let s = ModelSpec::from_preset(
            0.8,
            1,
            KernelPreset::Constant { value: 1.0 },
            Drift::Constant(vec![2.0]),
            0.5,
        )
        .unwrap();
        assert_eq!(s.drift_at(&[0.0]), vec![0.0]);
        assert!(!s.has_drift());
    }
}
