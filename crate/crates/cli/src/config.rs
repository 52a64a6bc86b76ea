//! Run configuration: TOML with every key mirroring a field, unknown keys rejected.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stablekernel::drift::DriftConfig;
use stablekernel::model::{named_preset, Drift, KernelPreset, ModelSpec};
use stablekernel::montecarlo::SmallJumpMode;
use stablekernel::parametrix::ParametrixConfig;
use stablekernel::verify::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Density,
    Parametrix,
    Drift,
    Mc,
    Verify,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Density => "density",
            Pipeline::Parametrix => "parametrix",
            Pipeline::Drift => "drift",
            Pipeline::Mc => "mc",
            Pipeline::Verify => "verify",
        }
    }
}

/// Drift as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    Constant { value: Vec<f64> },
    Sinusoidal { amplitude: f64 },
}

/// Either a shipped preset name or an explicit model, not both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelPreset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec, String> {
        let explicit = self.alpha.is_some() || self.dim.is_some() || self.kernel.is_some() || self.theta.is_some();
        match (&self.preset, explicit) {
            (Some(_), true) => Err("model: give either `preset` or an explicit model, not both".into()),
            (Some(name), false) => {
                let mut spec = named_preset(name).map_err(|e| format!("model.preset: {e}"))?;
                if let Some(d) = &self.drift {
                    spec = ModelSpec::from_preset(
                        spec.alpha,
                        spec.dim,
                        preset_kernel(&spec)?,
                        d.to_drift(),
                        spec.theta,
                    )
                    .map_err(|e| format!("model.drift: {e}"))?;
                }
                Ok(spec)
            }
            (None, true) => {
                let get = |v: Option<f64>, key: &str| v.ok_or_else(|| format!("model.{key} is required"));
                let kernel = self.kernel.clone().ok_or("model.kernel is required")?;
                let drift = self.drift.as_ref().map(DriftSpec::to_drift).unwrap_or(Drift::Zero);
                ModelSpec::from_preset(get(self.alpha, "alpha")?, self.dim.unwrap_or(1), kernel, drift, get(self.theta, "theta")?)
                    .map_err(|e| format!("model: {e}"))
            }
            (None, false) => Err("model: set `preset` (or pass --preset) or an explicit model".into()),
        }
    }

    /// Name recorded in reports.
    pub fn label(&self) -> String {
        self.preset.clone().unwrap_or_else(|| "custom".into())
    }
}

fn preset_kernel(spec: &ModelSpec) -> Result<KernelPreset, String> {
    match &spec.kernel {
        stablekernel::model::Kernel::Preset(p) => Ok(p.clone()),
        stablekernel::model::Kernel::Custom(_) => Err("model: preset has a custom kernel".into()),
    }
}

impl DriftSpec {
    fn to_drift(&self) -> Drift {
        match self {
            DriftSpec::Zero => Drift::Zero,
            DriftSpec::Constant { value } => Drift::Constant(value.clone()),
            DriftSpec::Sinusoidal { amplitude } => Drift::Sinusoidal { amplitude: *amplitude },
        }
    }
}

/// Lattice and time nodes of the `density` pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub extent: f64,
    pub times: Vec<f64>,
    /// Freezing point `y`; defaults to the origin.
    pub base_point: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 4096, extent: 14.0 * PI, times: vec![0.25, 0.5, 1.0], base_point: vec![] }
    }
}

/// Monte Carlo controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub paths: usize,
    /// Small-jump cutoff; the default keeps the truncated third moment near 1e-3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_cut: Option<f64>,
    pub small_jump_mode: SmallJumpMode,
    pub x0: f64,
    pub horizon: f64,
    /// Time for the exit-probability sweep; no sweep when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_time: Option<f64>,
    /// Radii in units of `exit_time^{1/α}`.
    pub exit_radii: Vec<f64>,
    /// Write the terminal sample CSV.
    pub write_samples: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 200_000,
            epsilon_cut: None,
            small_jump_mode: SmallJumpMode::GaussianSubstitute,
            x0: 0.0,
            horizon: 1.0,
            exit_time: None,
            exit_radii: vec![2.0, 4.0, 8.0],
            write_samples: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Pipeline>,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub parametrix: ParametrixConfig,
    pub drift: DriftConfig,
    pub mc: McConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: None,
            out: PathBuf::from("stablekernel-out"),
            seed: 20240607,
            threads: 0,
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            parametrix: ParametrixConfig::default(),
            drift: DriftConfig::default(),
            mc: McConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config; errors start with the dotted path of the offending key when known.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| match e.span().and_then(|sp| key_path(text, sp.start)) {
            Some(path) => format!("at `{path}`: {}", e.message()),
            None => e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the settings that affect numbers, so `out` and `threads` are excluded.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { out: PathBuf::new(), threads: 0, ..self.clone() };
        Sha256::digest(canonical.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Dotted path of the key starting at byte `at`: the enclosing `[table]` header plus the key.
fn key_path(text: &str, at: usize) -> Option<String> {
    let line_start = text[..at].rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..];
    let key = line.split(['=', '\n']).next()?.trim().trim_matches('"');
    if key.is_empty() || key.starts_with('[') {
        return None;
    }
    let table = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    Some(match table {
        Some(t) => format!("{t}.{key}"),
        None => key.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.model.preset = Some("drift-1.5".into());
        c.mc.exit_time = Some(0.1);
        c.pipeline = Some(Pipeline::Mc);
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let mut e = RunConfig::default();
        e.model = ModelConfig {
            alpha: Some(1.5),
            theta: Some(0.5),
            kernel: Some(KernelPreset::Sinusoidal { base: 1.0, amplitude: 0.2, h_frequency: None }),
            drift: Some(DriftSpec::Sinusoidal { amplitude: 0.1 }),
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&e.to_toml()).unwrap(), e);
        e.model.build().unwrap();
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = RunConfig::parse("seed = 1\n[parametrix]\ncoarse = 3\n").unwrap_err();
        assert!(err.starts_with("at `parametrix.coarse`"), "{err}");
        let err = RunConfig::parse("colour = 1\n").unwrap_err();
        assert!(err.starts_with("at `colour`"), "{err}");
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig { out: "elsewhere".into(), threads: 3, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn model_must_be_unambiguous() {
        let m = ModelConfig { preset: Some("constant-1.5".into()), alpha: Some(1.5), ..Default::default() };
        assert!(m.build().is_err());
        assert!(ModelConfig::default().build().is_err());
        let d = ModelConfig {
            preset: Some("sinusoidal-1.5".into()),
            drift: Some(DriftSpec::Constant { value: vec![0.3] }),
            ..Default::default()
        };
        assert!(d.build().unwrap().has_drift());
    }
}
