//! Monte Carlo simulation of the stable-like process in one dimension: large jumps by
//! thinning against `κ₁|h|^{−1−α}`, small jumps replaced by a Gaussian with the truncated
//! second moment, and the compensator and drift integrated by Euler steps.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::model::{Coefficient, Component, ModelSpec, Shape};
use crate::quad::tanh_sinh_real;
use crate::report::{BoundReport, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallJumpMode {
    /// Jumps below `ε` are dropped; only their compensator enters the drift.
    DriftCompensate,
    /// Jumps below `ε` are replaced by a Brownian increment with the same second moment.
    GaussianSubstitute,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub spec: ModelSpec,
    pub epsilon_cut: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub small_jump_mode: SmallJumpMode,
}

/// Radius where the truncated third moment `2κ₁ε^{3−α}/(3−α)` equals `1e−3`.
pub fn default_epsilon(alpha: f64, kappa1: f64) -> f64 {
    (1e-3 * (3.0 - alpha) / (2.0 * kappa1)).powf(1.0 / (3.0 - alpha)).min(0.5)
}

/// Intensity of candidate jumps `κ₁∫_{|h|>ε}|h|^{−1−α}dh`.
pub fn large_jump_rate(alpha: f64, kappa1: f64, epsilon: f64) -> f64 {
    2.0 * kappa1 * epsilon.powf(-alpha) / alpha
}

impl SimConfig {
    /// Gaussian small jumps, default `ε`, and `dt = 0.5/λ_max`.
    pub fn new(spec: ModelSpec, n_paths: usize, seed: u64) -> Self {
        let epsilon_cut = default_epsilon(spec.alpha, spec.kappa1);
        let dt = 0.5 / large_jump_rate(spec.alpha, spec.kappa1, epsilon_cut);
        SimConfig { spec, epsilon_cut, dt, n_paths, seed, small_jump_mode: SmallJumpMode::GaussianSubstitute }
    }

    /// Same model with `ε` replaced and `dt` kept within `0.5/λ_max`.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon_cut = epsilon;
        self.dt = self.dt.min(0.5 / self.lambda_max());
        self
    }

    pub fn lambda_max(&self) -> f64 {
        large_jump_rate(self.spec.alpha, self.spec.kappa1, self.epsilon_cut)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spec.dim != 1 {
            return Err(Error::Config("the simulator is one-dimensional".into()));
        }
        if !(self.epsilon_cut > 0.0 && self.epsilon_cut < 1.0) {
            return Err(Error::Config(format!("epsilon_cut must lie in (0, 1), got {}", self.epsilon_cut)));
        }
        if !(self.dt > 0.0) || self.dt * self.lambda_max() > 0.5 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} violates dt * lambda_max <= 0.5 (lambda_max = {})",
                self.dt,
                self.lambda_max()
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if self.spec.kernel.components().is_none() {
            return Err(Error::Config("the simulator needs a preset kernel".into()));
        }
        Ok(())
    }
}

/// One separable kernel term with its precomputed small-jump moments.
struct Term {
    coefficient: Coefficient,
    shape: Shape,
    /// `∫_{|h|≤ε}|h|²B(h)|h|^{−1−α}dh`
    variance: f64,
    /// Compensator drift per unit coefficient.
    drift: f64,
}

/// `∫_a^b r^{−α}(B(r) − B(−r)) dr`, with `b = ∞` allowed.
fn odd_moment(shape: &Shape, alpha: f64, a: f64, b: f64) -> Result<f64> {
    let odd = |r: f64| shape.eval(&[r]) - shape.eval(&[-r]);
    if b.is_infinite() {
        // r = a/u
        let v = tanh_sinh_real(|u, _, _| if u <= 0.0 { 0.0 } else { u.powf(alpha - 2.0) * odd(a / u) }, 0.0, 1.0, 1e-11)?;
        return Ok(a.powf(1.0 - alpha) * v.value);
    }
    Ok(tanh_sinh_real(|r, _, _| if r <= 0.0 { 0.0 } else { r.powf(-alpha) * odd(r) }, a, b, 1e-11)?.value)
}

impl Term {
    fn new(c: Component, alpha: f64, eps: f64) -> Result<Self> {
        let shape = c.shape;
        // r = ε u^{1/(2−α)} removes the r^{1−α} weight
        let e = 1.0 / (2.0 - alpha);
        let even = tanh_sinh_real(
            |u, _, _| {
                let r = eps * u.max(0.0).powf(e);
                shape.eval(&[r]) + shape.eval(&[-r])
            },
            0.0,
            1.0,
            1e-11,
        )?;
        let variance = eps.powf(2.0 - alpha) / (2.0 - alpha) * even.value;
        let drift = if alpha > 1.0 {
            -odd_moment(&shape, alpha, eps, f64::INFINITY)?
        } else if alpha == 1.0 {
            -odd_moment(&shape, alpha, eps, 1.0)?
        } else {
            odd_moment(&shape, alpha, 0.0, eps)?
        };
        Ok(Term { coefficient: c.coefficient, shape, variance, drift })
    }
}

/// Counters over all simulated paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    pub candidates: u64,
    pub accepted: u64,
}

/// Outcome of one path.
struct PathEnd {
    x: f64,
    /// `sup_{s ≤ T} |X_s − x_0|` over the skeleton.
    max_dev: f64,
    stats: JumpStats,
}

struct Simulator {
    alpha: f64,
    kappa1: f64,
    eps: f64,
    dt: f64,
    lambda: f64,
    gaussian: bool,
    terms: Vec<Term>,
    drift: DriftEval,
}

/// `b(x)` without per-call allocation.
enum DriftEval {
    Zero,
    Constant(f64),
    Sine(f64),
    General(ModelSpec),
}

impl DriftEval {
    fn new(spec: &ModelSpec) -> Self {
        use crate::model::Drift;
        if spec.alpha <= 1.0 {
            return DriftEval::Zero;
        }
        match &spec.drift {
            Drift::Zero => DriftEval::Zero,
            Drift::Constant(v) => DriftEval::Constant(v[0]),
            Drift::Sinusoidal { amplitude } => DriftEval::Sine(*amplitude),
            Drift::Custom { .. } => DriftEval::General(spec.clone()),
        }
    }

    fn at(&self, x: f64) -> f64 {
        match self {
            DriftEval::Zero => 0.0,
            DriftEval::Constant(b) => *b,
            DriftEval::Sine(a) => a * x.sin(),
            DriftEval::General(spec) => spec.drift_at(&[x])[0],
        }
    }
}

impl Simulator {
    fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = &cfg.spec;
        let terms = spec
            .kernel
            .components()
            .unwrap()
            .into_iter()
            .map(|c| Term::new(c, spec.alpha, cfg.epsilon_cut))
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulator {
            alpha: spec.alpha,
            kappa1: spec.kappa1,
            eps: cfg.epsilon_cut,
            dt: cfg.dt,
            lambda: cfg.lambda_max(),
            gaussian: cfg.small_jump_mode == SmallJumpMode::GaussianSubstitute,
            terms,
            drift: DriftEval::new(spec),
        })
    }

    fn coefficients(&self, x: f64, out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.coefficient.eval(&[x]);
        }
    }

    fn kernel(&self, coefs: &[f64], h: f64) -> f64 {
        self.terms.iter().zip(coefs).map(|(t, a)| a * t.shape.eval(&[h])).sum()
    }

    /// Drift and small-jump variance at `x`, frozen over one Euler step.
    fn local(&self, x: f64, coefs: &[f64]) -> (f64, f64) {
        let mut drift = self.drift.at(x);
        let mut var = 0.0;
        for (t, a) in self.terms.iter().zip(coefs) {
            drift += a * t.drift;
            var += a * t.variance;
        }
        (drift, if self.gaussian { var.max(0.0) } else { 0.0 })
    }

    /// Runs one path to `horizon`, tracking the largest distance from `x0` seen on the
    /// skeleton (every Euler point and every accepted jump).
    fn path(&self, rng: &mut ChaCha8Rng, x0: f64, horizon: f64) -> Result<PathEnd> {
        let clock = Exp::new(self.lambda).map_err(|e| Error::Config(e.to_string()))?;
        let mut stats = JumpStats::default();
        let mut x = x0;
        let mut max_dev = 0.0f64;
        let mut t = 0.0;
        let mut next = clock.sample(rng);
        let mut coefs = vec![0.0; self.terms.len()];
        self.coefficients(x, &mut coefs);
        loop {
            let stop = next.min(horizon);
            while stop - t > 1e-15 * horizon {
                let h = (stop - t).min(self.dt);
                let (b, var) = self.local(x, &coefs);
                let z: f64 = rng.sample(StandardNormal);
                x += b * h + (var * h).sqrt() * z;
                self.coefficients(x, &mut coefs);
                t = if stop - t <= self.dt { stop } else { t + h };
                max_dev = max_dev.max((x - x0).abs());
            }
            if next >= horizon {
                return Ok(PathEnd { x, max_dev, stats });
            }
            stats.candidates += 1;
            let r = self.eps * rng.gen::<f64>().max(f64::MIN_POSITIVE).powf(-1.0 / self.alpha);
            let h = if rng.gen::<bool>() { r } else { -r };
            let accept = self.kernel(&coefs, h) / self.kappa1;
            if accept > 1.0 + 1e-12 {
                return Err(Error::ModelViolation(format!(
                    "kernel value {} exceeds kappa1 = {} at x = {x}, h = {h}",
                    accept * self.kappa1,
                    self.kappa1
                )));
            }
            if rng.gen::<f64>() < accept {
                stats.accepted += 1;
                x += h;
                self.coefficients(x, &mut coefs);
                max_dev = max_dev.max((x - x0).abs());
            }
            next += clock.sample(rng);
        }
    }

    fn run(&self, cfg: &SimConfig, x0: f64, horizon: f64) -> Result<Vec<PathEnd>> {
        if !(horizon > 0.0) || !x0.is_finite() {
            return Err(Error::Config("simulation needs a finite start and a positive horizon".into()));
        }
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|k| self.path(&mut Self::rng(cfg.seed, k), x0, horizon))
            .collect()
    }

    fn rng(seed: u64, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path as u64);
        rng
    }
}

/// Terminal points of `n_paths` independent paths started at `x0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub x0: f64,
    pub horizon: f64,
    pub seed: u64,
    pub terminal: Vec<f64>,
    pub stats: JumpStats,
}

impl SampleSet {
    /// CSV with columns `path_id,x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "path_id,x")?;
        for (k, x) in self.terminal.iter().enumerate() {
            writeln!(w, "{k},{x:e}")?;
        }
        Ok(())
    }

    /// `E e^{iu(X_T − x_0)}` and the standard error of its real and imaginary parts.
    pub fn characteristic(&self, u: f64) -> (num_complex::Complex64, f64) {
        let n = self.terminal.len() as f64;
        let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for x in &self.terminal {
            let (si, co) = (u * (x - self.x0)).sin_cos();
            c += co;
            s += si;
            c2 += co * co;
            s2 += si * si;
        }
        let (mc, ms) = (c / n, s / n);
        let var = ((c2 / n - mc * mc).max(0.0)).max((s2 / n - ms * ms).max(0.0));
        (num_complex::Complex64::new(mc, ms), (var / n).sqrt())
    }
}

/// Simulates `cfg.n_paths` paths from `x0` to `horizon`. Path `k` draws from the ChaCha
/// stream `k` of `cfg.seed`, so results do not depend on the thread count.
pub fn simulate_paths(cfg: &SimConfig, x0: f64, horizon: f64) -> Result<SampleSet> {
    let sim = Simulator::new(cfg)?;
    let ends = sim.run(cfg, x0, horizon)?;
    let mut stats = JumpStats::default();
    for e in &ends {
        stats.candidates += e.stats.candidates;
        stats.accepted += e.stats.accepted;
    }
    Ok(SampleSet { x0, horizon, seed: cfg.seed, terminal: ends.iter().map(|e| e.x).collect(), stats })
}

/// `P^{x0}(τ_{B_r(x0)} ≤ t)` with a 95% Wilson score half-width. Exits are detected on
/// the skeleton only, so `p_hat` is biased low.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeEstimate {
    pub r: f64,
    pub t: f64,
    pub x0: f64,
    pub n_paths: usize,
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    /// `p_hat·r^α/t`
    pub scaled: f64,
    /// `C·t·r^{−α}` with the sweep's fitted `C`.
    pub bound_value: f64,
}

/// Exit estimates over several radii from one set of paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSweep {
    pub estimates: Vec<ExitTimeEstimate>,
    /// `max_r p_hat·r^α/t`
    pub fitted_constant: f64,
    /// `max |scaled/mean − 1|`
    pub spread: f64,
    /// `p_hat` nonincreasing in `r` up to the summed half-widths.
    pub monotone: bool,
}

fn wilson_halfwidth(k: usize, n: usize) -> f64 {
    let z = 1.959963984540054;
    let (n, p) = (n as f64, k as f64 / n as f64);
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

/// Estimates the exit probabilities of the balls `B_r(x0)` before `t` for each radius.
pub fn estimate_exit_sweep(cfg: &SimConfig, x0: f64, t: f64, radii: &[f64]) -> Result<ExitSweep> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config("exit radii must be positive".into()));
    }
    if cfg.dt > t / 10.0 {
        return Err(Error::Config(format!("skeleton step {} too coarse to bracket exits before t = {t}", cfg.dt)));
    }
    let sim = Simulator::new(cfg)?;
    let ends = sim.run(cfg, x0, t)?;
    let n = ends.len();
    let alpha = cfg.spec.alpha;
    let mut estimates: Vec<ExitTimeEstimate> = radii
        .iter()
        .map(|&r| {
            let k = ends.iter().filter(|e| e.max_dev > r).count();
            let p_hat = k as f64 / n as f64;
            ExitTimeEstimate {
                r,
                t,
                x0,
                n_paths: n,
                p_hat,
                ci_halfwidth: wilson_halfwidth(k, n),
                scaled: p_hat * r.powf(alpha) / t,
                bound_value: 0.0,
            }
        })
        .collect();
    let fitted = estimates.iter().map(|e| e.scaled).fold(0.0, f64::max);
    let mean = estimates.iter().map(|e| e.scaled).sum::<f64>() / estimates.len() as f64;
    let spread = estimates.iter().map(|e| (e.scaled / mean - 1.0).abs()).fold(0.0, f64::max);
    for e in &mut estimates {
        e.bound_value = fitted * t * e.r.powf(-alpha);
    }
    let mut order: Vec<&ExitTimeEstimate> = estimates.iter().collect();
    order.sort_by(|a, b| a.r.total_cmp(&b.r));
    let monotone = order.windows(2).all(|w| w[1].p_hat <= w[0].p_hat + w[0].ci_halfwidth + w[1].ci_halfwidth);
    Ok(ExitSweep { estimates, fitted_constant: fitted, spread, monotone })
}

/// Single-radius exit estimate.
pub fn estimate_exit_probability(cfg: &SimConfig, x0: f64, r: f64, t: f64) -> Result<ExitTimeEstimate> {
    Ok(estimate_exit_sweep(cfg, x0, t, &[r])?.estimates.remove(0))
}

/// A law on the periodic cell given by density values at lattice points, each spread
/// uniformly over its cell. Positions are taken relative to `origin` and wrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeLaw {
    pub x0: f64,
    pub horizon: f64,
    pub origin: f64,
    lattice: Lattice,
    /// CDF at the right edge of each cell, normalized to end at 1.
    edges: Vec<f64>,
}

impl LatticeLaw {
    /// `density[k]` is the density at `origin + lattice.coord(k)` for the process started
    /// at `x0` and observed at `horizon`.
    pub fn new(lattice: Lattice, density: &[f64], origin: f64, x0: f64, horizon: f64) -> Result<Self> {
        if lattice.dim != 1 || density.len() != lattice.n {
            return Err(Error::Config("a lattice law needs one density value per 1D lattice point".into()));
        }
        let mut acc = 0.0;
        let mut edges: Vec<f64> = density
            .iter()
            .map(|v| {
                acc += v.max(0.0);
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::Data("lattice law has no mass".into()));
        }
        for e in &mut edges {
            *e /= acc;
        }
        Ok(LatticeLaw { x0, horizon, origin, lattice, edges })
    }

    /// CDF with the cut half a cell below the first lattice point.
    pub fn cdf(&self, y: f64) -> f64 {
        let lat = &self.lattice;
        let h = lat.spacing();
        let lo = lat.coord(0) - 0.5 * h;
        let z = (y - self.origin - lo).rem_euclid(lat.extent);
        let pos = z / h;
        let j = (pos.floor() as usize).min(lat.n - 1);
        let below = if j == 0 { 0.0 } else { self.edges[j - 1] };
        below + (pos - j as f64).clamp(0.0, 1.0) * (self.edges[j] - below)
    }
}

/// Kolmogorov–Smirnov distance, binned χ² (equiprobable bins) and the verdict
/// `KS ≤ 1.63/√n + allowance`.
pub fn density_agreement(samples: &SampleSet, law: &LatticeLaw, allowance: f64) -> Result<BoundReport> {
    let scale = samples.horizon.abs().max(1.0);
    if (samples.horizon - law.horizon).abs() > 1e-12 * scale || (samples.x0 - law.x0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "samples at (x0 = {}, T = {}) do not match the law at (x0 = {}, T = {})",
            samples.x0, samples.horizon, law.x0, law.horizon
        )));
    }
    let mut u: Vec<f64> = samples.terminal.iter().map(|&y| law.cdf(y)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let ks = u
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i as f64 + 1.0) / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max);
    let bins = 40usize;
    let mut counts = vec![0usize; bins];
    for &f in &u {
        counts[((f * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expect = n / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let threshold = 1.63 / n.sqrt() + allowance;
    let mut rep = BoundReport::new(
        "montecarlo.density_agreement",
        "Kolmogorov-Smirnov distance between simulated terminal points and the constructed density",
    )
    .constant("ks", ks)
    .constant("threshold", threshold)
    .constant("chi2", chi2)
    .constant("chi2_dof", (bins - 1) as f64)
    .note(format!("{} paths, scheme allowance {allowance}", samples.terminal.len()));
    rep.status = if ks <= threshold { Status::Pass } else { Status::Fail };
    Ok(rep)
}
