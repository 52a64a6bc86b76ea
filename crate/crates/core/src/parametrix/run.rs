//! The march over output times building `F^{⊗n}`, `Φ = Σ F^{⊗n}`, `q⊗Φ` and `∇q⊗Φ`.

use ndarray::linalg::general_mat_mul;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::kernels::{KernelFactory, KernelSlice, Wanted};
use super::mesh::{panels, Panel, TimeMesh};
use crate::error::{Error, Result};
use crate::density::{BasePoint, DensityField, FieldKind};
use crate::grid::{Lattice, SpaceTimeGrid};
use crate::model::ModelSpec;

/// Discretization of a parametrix run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParametrixConfig {
    /// Points of the coarse lattice on which the space-time convolutions run.
    pub coarse_n: usize,
    /// Points of the fine lattice holding the frozen densities.
    pub fine_n: usize,
    pub extent: f64,
    pub horizon: f64,
    /// Graded steps `N` of the mesh `T(j/N)^g`.
    pub steps: usize,
    /// Grading exponent; `None` uses `max(2, α/θ̂)`.
    pub grading: Option<f64>,
    /// Uniform nodes `kT/K` merged into the mesh.
    pub uniform: usize,
    pub n_max: usize,
    /// Relative tail tolerance for the series.
    pub tail_tol: f64,
    /// Weight panels by the continuum time singularities `s^{nθ̂/α−1}` and `σ^{θ̂/α−1}`.
    /// Off by default: the projected kernels stay bounded as the time argument tends to
    /// zero, and the singular model then overweights the first interval.
    pub singular_weights: bool,
    /// Left-factor evaluations per time panel (1: midpoint, 2: Gauss pair).
    pub left_points: usize,
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        ParametrixConfig {
            coarse_n: 256,
            fine_n: 4096,
            extent: 14.0 * PI,
            horizon: 1.0,
            steps: 12,
            grading: None,
            uniform: 16,
            n_max: 8,
            tail_tol: 1e-5,
            singular_weights: false,
            left_points: 2,
        }
    }
}

impl ParametrixConfig {
    /// Doubles the coarse and fine lattices.
    pub fn refined_space(&self) -> Self {
        ParametrixConfig { coarse_n: 2 * self.coarse_n, fine_n: 2 * self.fine_n, ..self.clone() }
    }

    /// Doubles the number of graded and uniform time steps.
    pub fn refined_time(&self) -> Self {
        ParametrixConfig { steps: 2 * self.steps, uniform: 2 * self.uniform, ..self.clone() }
    }

    pub fn mesh(&self, spec: &ModelSpec) -> Result<TimeMesh> {
        let g = self.grading.unwrap_or_else(|| (spec.alpha / spec.theta_hat()).max(2.0));
        TimeMesh::graded(self.horizon, self.steps, g, self.uniform)
    }
}

/// Series bookkeeping: `sup_y ∫_0^T Σ_x Δ|F^{⊗n}| dt` per term.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub entries: Vec<LogEntry>,
    /// Terms needed for the tail estimate to drop below the tolerance.
    pub terms_used: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub n: usize,
    pub sup_norm: f64,
    /// `‖F^{⊗n}‖/‖F^{⊗(n−1)}‖` (absent for n = 1).
    pub ratio: Option<f64>,
    /// Geometric extrapolation of the remaining terms, relative to `‖F‖`.
    pub tail_estimate: Option<f64>,
}

/// Output of a parametrix run. All matrices are indexed `[x, y]` on the coarse lattice,
/// one per mesh node.
#[derive(Clone, Debug)]
pub struct ParametrixRun {
    pub spec: ModelSpec,
    pub config: ParametrixConfig,
    pub mesh: TimeMesh,
    pub lattice: Lattice,
    /// Frozen density projected below the coarse Nyquist frequency.
    pub q: Vec<Array2<f64>>,
    /// Frozen density sampled pointwise.
    pub q_pt: Vec<Array2<f64>>,
    pub grad_q: Vec<Array2<f64>>,
    pub grad_q_pt: Vec<Array2<f64>>,
    pub f: Vec<Array2<f64>>,
    pub phi: Vec<Array2<f64>>,
    pub q_phi: Vec<Array2<f64>>,
    pub grad_q_phi: Vec<Array2<f64>>,
    pub log: ConvergenceLog,
}

fn combine(weights: &[(usize, f64)], nodes: &[Array2<f64>]) -> Array2<f64> {
    let mut b = nodes[weights[0].0].clone() * weights[0].1;
    for (e, w) in &weights[1..] {
        b.scaled_add(*w, &nodes[*e]);
    }
    b
}

/// `Σ_panels Δ · A(σ*)·(Σ_e w_e B_e)`.
fn convolve(
    slices: &[KernelSlice],
    pick: impl Fn(&KernelSlice) -> &Array2<f64>,
    pans: &[Panel],
    nodes: &[Array2<f64>],
    cell: f64,
) -> Array2<f64> {
    let n = nodes[0].nrows();
    let mut acc = Array2::<f64>::zeros((n, n));
    for (s, p) in slices.iter().zip(pans) {
        let b = combine(&p.weights, nodes);
        general_mat_mul(cell, pick(s), &b, 1.0, &mut acc);
    }
    acc
}

/// `sup_y ∫_0^T Σ_x Δ|T(t,x,y)| dt`, with `T ~ t^{p−1}` on the first interval.
pub fn time_norm(mesh: &TimeMesh, nodes: &[Array2<f64>], cell: f64, p: f64) -> f64 {
    let cols: Vec<Vec<f64>> = nodes
        .iter()
        .map(|m| m.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>() * cell).collect())
        .collect();
    let ny = cols[0].len();
    (0..ny)
        .map(|y| {
            let t = &mesh.times;
            let mut s = cols[0][y] * t[0] / p.clamp(1e-6, 1.0);
            for i in 1..t.len() {
                s += 0.5 * (t[i] - t[i - 1]) * (cols[i - 1][y] + cols[i][y]);
            }
            s
        })
        .fold(0.0, f64::max)
}

fn series_log(norms: &[f64], tol: f64) -> ConvergenceLog {
    let mut log = ConvergenceLog::default();
    let first = norms.first().copied().unwrap_or(0.0);
    for (k, &nv) in norms.iter().enumerate() {
        let ratio = (k > 0).then(|| nv / norms[k - 1]);
        let tail = match ratio {
            _ if nv == 0.0 => Some(0.0),
            Some(r) if r < 1.0 => Some(nv * r / (1.0 - r) / first),
            _ => None,
        };
        if !log.converged && tail.is_some_and(|e| e <= tol) {
            log.converged = true;
            log.terms_used = k + 1;
        }
        log.entries.push(LogEntry { n: k + 1, sup_norm: nv, ratio, tail_estimate: tail });
    }
    log
}

/// Runs the construction. Fails with a convergence error (carrying the log) when the
/// series tail does not drop below `tail_tol` within `n_max` terms.
pub fn build(spec: &ModelSpec, config: &ParametrixConfig) -> Result<ParametrixRun> {
    if spec.dim != 1 {
        return Err(Error::Config("the parametrix pipeline is one-dimensional".into()));
    }
    if config.n_max == 0 || !(config.tail_tol > 0.0) {
        return Err(Error::Config("n_max must be positive and tail_tol > 0".into()));
    }
    let coarse = Lattice::new(1, config.coarse_n, config.extent)?;
    let fine = Lattice::new(1, config.fine_n, config.extent)?;
    let factory = KernelFactory::new(spec, coarse, fine)?;
    let mesh = config.mesh(spec)?;
    let cell = coarse.spacing();
    let alpha = spec.alpha;
    let qf = spec.theta_hat() / alpha;
    // exponents of the left factors F, q and ∇q and of the n-th term
    let (ef, eq, eg) = if config.singular_weights { (qf, 1.0, 1.0 - 1.0 / alpha) } else { (1.0, 1.0, 1.0) };
    let term_exp = |n: usize| if config.singular_weights { (n as f64 * qf).min(1.0) } else { 1.0 };
    let with_grad = alpha > 1.0;
    let frozen = factory.is_frozen();
    let nc = coarse.n;
    let zeros = || Array2::<f64>::zeros((nc, nc));

    let mut run = ParametrixRun {
        spec: spec.clone(),
        config: config.clone(),
        mesh: mesh.clone(),
        lattice: coarse,
        q: vec![],
        q_pt: vec![],
        grad_q: vec![],
        grad_q_pt: vec![],
        f: vec![],
        phi: vec![],
        q_phi: vec![],
        grad_q_phi: vec![],
        log: ConvergenceLog { entries: vec![], terms_used: 0, converged: true },
    };
    let n_terms = if frozen { 0 } else { config.n_max };
    let mut terms: Vec<Vec<Array2<f64>>> = vec![Vec::new(); n_terms];
    for i in 0..mesh.len() {
        let t = mesh.times[i];
        let node = factory.eval(t, Wanted { q: true, f: true, grad: with_grad, pointwise: true });
        run.q.push(node.q.unwrap());
        run.q_pt.push(node.q_pt.unwrap());
        run.grad_q.push(node.grad.unwrap_or_else(zeros));
        run.grad_q_pt.push(node.grad_pt.unwrap_or_else(zeros));
        if frozen {
            run.f.push(zeros());
            run.phi.push(zeros());
            run.q_phi.push(zeros());
            run.grad_q_phi.push(zeros());
            continue;
        }
        let f_i = node.f.unwrap();
        run.f.push(f_i.clone());
        terms[0].push(f_i);
        let geometry = panels(&mesh, i, 1.0, 1.0, config.left_points)?;
        let slices: Vec<KernelSlice> = geometry
            .iter()
            .map(|p| factory.eval(p.sigma, Wanted { q: true, f: true, grad: with_grad, pointwise: false }))
            .collect();
        for n in 1..n_terms {
            let pans = panels(&mesh, i, term_exp(n), ef, config.left_points)?;
            let next = convolve(&slices, |s| s.f.as_ref().unwrap(), &pans, &terms[n - 1], cell);
            terms[n].push(next);
        }
        let mut phi_i = zeros();
        for tn in &terms {
            phi_i += &tn[i];
        }
        run.phi.push(phi_i);
        let pans_q = panels(&mesh, i, term_exp(1), eq, config.left_points)?;
        run.q_phi.push(convolve(&slices, |s| s.q.as_ref().unwrap(), &pans_q, &run.phi, cell));
        if with_grad {
            let pans_g = panels(&mesh, i, term_exp(1), eg, config.left_points)?;
            run.grad_q_phi.push(convolve(&slices, |s| s.grad.as_ref().unwrap(), &pans_g, &run.phi, cell));
        } else {
            run.grad_q_phi.push(zeros());
        }
    }
    if !frozen {
        let norms: Vec<f64> = terms
            .iter()
            .enumerate()
            .map(|(n, tn)| time_norm(&mesh, tn, cell, term_exp(n + 1)))
            .collect();
        run.log = series_log(&norms, config.tail_tol);
        if !run.log.converged {
            let json = serde_json::to_string(&run.log).unwrap_or_default();
            return Err(Error::Convergence(format!("series tail above tolerance after {} terms: {json}", n_terms)));
        }
    }
    Ok(run)
}

impl ParametrixRun {
    /// `p = q + q⊗Φ` on the projected lattice representation.
    pub fn p(&self, i: usize) -> Array2<f64> {
        &self.q[i] + &self.q_phi[i]
    }

    /// `p` with the frozen part sampled pointwise.
    pub fn p_pointwise(&self, i: usize) -> Array2<f64> {
        &self.q_pt[i] + &self.q_phi[i]
    }

    pub fn grad_p(&self, i: usize) -> Array2<f64> {
        &self.grad_q[i] + &self.grad_q_phi[i]
    }

    pub fn grad_p_pointwise(&self, i: usize) -> Array2<f64> {
        &self.grad_q_pt[i] + &self.grad_q_phi[i]
    }

    pub fn cell(&self) -> f64 {
        self.lattice.spacing()
    }

    /// One base point `y_k` of a stored kernel as a field in `(t, x)` on the coarse lattice.
    /// `P` and `Gradient` use the pointwise frozen part.
    pub fn slice_field(&self, kind: FieldKind, k: usize) -> Result<DensityField> {
        if k >= self.lattice.n {
            return Err(Error::Domain(format!("base point index {k} outside the lattice")));
        }
        let rows: Vec<Vec<f64>> = (0..self.mesh.len())
            .map(|i| {
                let m = match kind {
                    FieldKind::Q => self.q_pt[i].clone(),
                    FieldKind::F => self.f[i].clone(),
                    FieldKind::Phi => self.phi[i].clone(),
                    FieldKind::P => self.p_pointwise(i),
                    FieldKind::Gradient { axis: 0 } => self.grad_p_pointwise(i),
                    _ => return Err(Error::Domain(format!("{kind:?} is not stored by a parametrix run"))),
                };
                Ok(m.column(k).to_vec())
            })
            .collect::<Result<_>>()?;
        let grid = SpaceTimeGrid::new(self.lattice, self.mesh.times.clone())?;
        Ok(DensityField::from_rows(grid, BasePoint::Point(self.lattice.point(k)), kind, rows))
    }
}
