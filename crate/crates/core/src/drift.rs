//! Drift correction for `1 < α < 2`: `l = Σ l_n` with `l_0 = p` and
//! `l_n = l_{n−1} ⊗ (b·∇p)`, on the time mesh and coarse lattice of a parametrix run.

use ndarray::linalg::general_mat_mul;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::density::{BasePoint, DensityField, FieldKind};
use crate::error::{Error, Result};
use crate::grid::{Lattice, SpaceTimeGrid};
use crate::parametrix::checks::{gradient_report, two_sided_report};
use crate::parametrix::{panels, KernelFactory, KernelSlice, PairSet, ParametrixRun, Wanted};
use crate::report::BoundReport;

/// Node values `M(τ_1..τ_m)` of a field vanishing at `τ = 0`, interpolated quadratically
/// in time using nodes up to `last`.
fn interpolate(times: &[f64], mats: &[Array2<f64>], last: usize, sigma: f64) -> Array2<f64> {
    let n = mats[0].nrows();
    // τ_0 = 0 carries the zero matrix
    let tau = |j: usize| if j == 0 { 0.0 } else { times[j - 1] };
    let top = last + 1;
    let mut j = 1;
    while j < top && tau(j) < sigma {
        j += 1;
    }
    let lo = j.saturating_sub(2).min(top.saturating_sub(2));
    let stencil: Vec<usize> = (lo..=(lo + 2).min(top)).collect();
    let mut out = Array2::<f64>::zeros((n, n));
    for &a in &stencil {
        if a == 0 {
            continue;
        }
        let mut w = 1.0;
        for &b in &stencil {
            if b != a {
                w *= (sigma - tau(b)) / (tau(a) - tau(b));
            }
        }
        out.scaled_add(w, &mats[a - 1]);
    }
    out
}

/// Term norm `sup_{t,y} Σ_x Δ|T(t,x,y)|`.
fn term_norm(nodes: &[Array2<f64>], cell: f64) -> f64 {
    nodes
        .iter()
        .flat_map(|m| m.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>() * cell).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// Fit of `log‖l_n‖ ≈ log C + n log c' − log Γ(1 + n(1 − 1/α))`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaLog {
    pub entries: Vec<GammaEntry>,
    pub log_c: f64,
    pub log_c_prime: f64,
    pub max_log_residual: f64,
    /// Norms of the gradient terms `∇_x l_n`, logged but not fitted.
    pub gradient_norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub n: usize,
    pub sup_norm: f64,
    pub predicted: f64,
    pub log_residual: f64,
}

fn fit_gamma(norms: &[f64], alpha: f64) -> GammaLog {
    let e = 1.0 - 1.0 / alpha;
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| {
            let n = (k + 1) as f64;
            (n, v.ln() + ln_gamma(1.0 + n * e))
        })
        .collect();
    let m = pts.len() as f64;
    let (mut log_c, mut slope) = (0.0, 0.0);
    if m >= 2.0 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        slope = sxy / sxx;
        log_c = my - slope * mx;
    } else if m == 1.0 {
        log_c = pts[0].1 - pts[0].0 * slope;
    }
    let mut log = GammaLog { log_c, log_c_prime: slope, ..Default::default() };
    for (k, v) in norms.iter().enumerate() {
        let n = (k + 1) as f64;
        let pred = (log_c + n * slope - ln_gamma(1.0 + n * e)).exp();
        let res = if *v > 0.0 { (v.ln() - pred.ln()).abs() } else { 0.0 };
        log.max_log_residual = log.max_log_residual.max(res);
        log.entries.push(GammaEntry { n: k + 1, sup_norm: *v, predicted: pred, log_residual: res });
    }
    log
}

/// Series controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftConfig {
    pub n_max: usize,
    /// Stop once a term's norm is at most `tail_tol·‖p‖`.
    pub tail_tol: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig { n_max: 12, tail_tol: 1e-6 }
    }
}

/// Drift-corrected kernel on the mesh of a parametrix run. `l_0` is the run's `p`
/// itself; `terms[n−1][i]` holds `l_n(t_i)` as an `[x, y]` matrix.
#[derive(Debug)]
pub struct DriftSeriesState<'a> {
    pub run: &'a ParametrixRun,
    pub config: DriftConfig,
    /// `b(z)` on the coarse lattice.
    pub drift: Vec<f64>,
    pub terms: Vec<Vec<Array2<f64>>>,
    pub grad_terms: Vec<Vec<Array2<f64>>>,
    pub gamma_log: GammaLog,
    factory: Option<KernelFactory>,
}

/// Left factors `A(σ_g)` and right combinations `Σ_e w_e B_e` for one output node.
struct NodePanels {
    sigmas: Vec<f64>,
    weights: Vec<Vec<(usize, f64)>>,
}

impl NodePanels {
    fn new(run: &ParametrixRun, i: usize) -> Result<Self> {
        let pans = panels(&run.mesh, i, 1.0, 1.0, run.config.left_points)?;
        Ok(NodePanels {
            sigmas: pans.iter().map(|p| p.sigma).collect(),
            weights: pans.into_iter().map(|p| p.weights).collect(),
        })
    }

    fn combine(&self, g: usize, nodes: &[Array2<f64>]) -> Array2<f64> {
        let w = &self.weights[g];
        let mut b = nodes[w[0].0].clone() * w[0].1;
        for (e, c) in &w[1..] {
            b.scaled_add(*c, &nodes[*e]);
        }
        b
    }
}

/// `Σ_g Δ·left_g·right_g`.
fn contract(left: &[Array2<f64>], right: &[Array2<f64>], cell: f64) -> Array2<f64> {
    let n = left[0].nrows();
    let mut acc = Array2::<f64>::zeros((n, n));
    for (a, b) in left.iter().zip(right) {
        general_mat_mul(cell, a, b, 1.0, &mut acc);
    }
    acc
}

fn scale_rows(m: &mut Array2<f64>, by: &[f64]) {
    for (mut row, &b) in m.rows_mut().into_iter().zip(by) {
        row *= b;
    }
}

impl<'a> DriftSeriesState<'a> {
    /// Prepares the series on top of a parametrix run. Refuses `α ≤ 1`, where the
    /// operator carries no drift term.
    pub fn new(run: &'a ParametrixRun, config: DriftConfig) -> Result<Self> {
        let spec = &run.spec;
        if spec.alpha <= 1.0 {
            return Err(Error::Domain("the drift series is defined for alpha > 1 only".into()));
        }
        if config.n_max == 0 || !(config.tail_tol > 0.0) {
            return Err(Error::Config("n_max must be positive and tail_tol > 0".into()));
        }
        let lat = run.lattice;
        let drift: Vec<f64> = (0..lat.n).map(|k| spec.drift_at(&lat.point(k))[0]).collect();
        if let Some(k) = drift.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite { what: "drift".into(), witness: format!("{:?}", lat.point(k)) });
        }
        Ok(DriftSeriesState {
            run,
            config,
            drift,
            terms: vec![],
            grad_terms: vec![],
            gamma_log: GammaLog::default(),
            factory: None,
        })
    }

    fn factory(&mut self) -> Result<&KernelFactory> {
        if self.factory.is_none() {
            let c = &self.run.config;
            let coarse = Lattice::new(1, c.coarse_n, c.extent)?;
            let fine = Lattice::new(1, c.fine_n, c.extent)?;
            self.factory = Some(KernelFactory::new(&self.run.spec, coarse, fine)?);
        }
        Ok(self.factory.as_ref().unwrap())
    }

    fn is_zero_drift(&self) -> bool {
        self.drift.iter().all(|b| *b == 0.0)
    }

    /// `D(t_i) = b(z)·∇_z p(t_i, z, y)` at every node.
    fn drift_nodes(&self) -> Vec<Array2<f64>> {
        (0..self.run.mesh.len())
            .map(|i| {
                let mut d = self.run.grad_p(i);
                scale_rows(&mut d, &self.drift);
                d
            })
            .collect()
    }

    /// `p(σ)` and `∇_x p(σ)` away from the nodes: the frozen parts evaluated directly,
    /// the `q⊗Φ` parts interpolated.
    fn p_between(&mut self, sigma: f64, last: usize) -> Result<(Array2<f64>, Array2<f64>)> {
        let run = self.run;
        let slice: KernelSlice = self.factory()?.eval(sigma, Wanted { q: true, f: false, grad: true, pointwise: false });
        let t = &run.mesh.times;
        let p = slice.q.unwrap() + interpolate(t, &run.q_phi, last, sigma);
        let g = slice.grad.unwrap() + interpolate(t, &run.grad_q_phi, last, sigma);
        Ok((p, g))
    }
}

/// Both groupings of the Duhamel identity, as sup residuals over interior `x, y` and all
/// nodes, scaled by `t^{d/α}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Duhamel {
    /// `|l − p − p⊗R|` with `R = Σ_m (b·∇p)^{⊗m}` built right to left.
    pub residual: f64,
    /// `|l − p − l⊗(b·∇p)|` with the left factor interpolated from the summed series.
    pub literal: f64,
}

impl<'a> DriftSeriesState<'a> {
    /// Sums `l = Σ l_n` by `l_n = l_{n−1} ⊗ (b·∇p)` with `l_0 = p`, stopping once a term
    /// is below `tail_tol·‖p‖`, and fits the Gamma decay shape to the term norms.
    pub fn build(&mut self) -> Result<()> {
        self.terms.clear();
        self.grad_terms.clear();
        self.gamma_log = GammaLog::default();
        if self.is_zero_drift() {
            return Ok(());
        }
        let run = self.run;
        let nodes = run.mesh.len();
        let cell = run.cell();
        let times = run.mesh.times.clone();
        let d = self.drift_nodes();
        let p_nodes: Vec<Array2<f64>> = (0..nodes).map(|i| run.p(i)).collect();
        let p_norm = term_norm(&p_nodes, cell);
        let geometry: Vec<NodePanels> = (0..nodes).map(|i| NodePanels::new(run, i)).collect::<Result<_>>()?;
        let mut norms = Vec::new();
        let mut converged = false;
        for n in 1..=self.config.n_max {
            let mut vals = Vec::with_capacity(nodes);
            let mut grads = Vec::with_capacity(nodes);
            for (i, np) in geometry.iter().enumerate() {
                let mut lefts = Vec::with_capacity(np.sigmas.len());
                let mut glefts = Vec::with_capacity(np.sigmas.len());
                for &s in &np.sigmas {
                    if n == 1 {
                        let (p, g) = self.p_between(s, i)?;
                        lefts.push(p);
                        glefts.push(g);
                    } else {
                        let prev = &self.terms[n - 2];
                        let gprev = &self.grad_terms[n - 2];
                        lefts.push(interpolate(&times, prev, i, s));
                        glefts.push(interpolate(&times, gprev, i, s));
                    }
                }
                let rights: Vec<Array2<f64>> = (0..np.sigmas.len()).map(|g| np.combine(g, &d)).collect();
                vals.push(contract(&lefts, &rights, cell));
                grads.push(contract(&glefts, &rights, cell));
            }
            let norm = term_norm(&vals, cell);
            norms.push(norm);
            self.gamma_log.gradient_norms.push(term_norm(&grads, cell));
            self.terms.push(vals);
            self.grad_terms.push(grads);
            if norm <= self.config.tail_tol * p_norm {
                converged = true;
                break;
            }
        }
        let grad_norms = std::mem::take(&mut self.gamma_log.gradient_norms);
        self.gamma_log = fit_gamma(&norms, run.spec.alpha);
        self.gamma_log.gradient_norms = grad_norms;
        if !converged {
            let json = serde_json::to_string(&self.gamma_log).unwrap_or_default();
            return Err(Error::Convergence(format!(
                "drift series above tolerance after {} terms: {json}",
                self.config.n_max
            )));
        }
        Ok(())
    }
}

impl<'a> DriftSeriesState<'a> {
    /// Number of summed terms including `l_0`.
    pub fn terms_used(&self) -> usize {
        1 + self.terms.len()
    }

    /// `l_n(t_i)`; `n = 0` is the run's `p`.
    pub fn term(&self, n: usize, i: usize) -> Array2<f64> {
        if n == 0 {
            self.run.p(i)
        } else {
            self.terms[n - 1][i].clone()
        }
    }

    /// `Σ_{n≥1} l_n(t_i)`.
    fn correction(&self, i: usize) -> Option<Array2<f64>> {
        let mut it = self.terms.iter().map(|t| &t[i]);
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, m| acc + m))
    }

    fn grad_correction(&self, i: usize) -> Option<Array2<f64>> {
        let mut it = self.grad_terms.iter().map(|t| &t[i]);
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, m| acc + m))
    }

    pub fn l(&self, i: usize) -> Array2<f64> {
        let p = self.run.p(i);
        self.correction(i).map_or(p.clone(), |c| p + c)
    }

    /// `l` with the frozen part of `p` sampled pointwise.
    pub fn l_pointwise(&self, i: usize) -> Array2<f64> {
        let p = self.run.p_pointwise(i);
        self.correction(i).map_or(p.clone(), |c| p + c)
    }

    pub fn grad_l_pointwise(&self, i: usize) -> Array2<f64> {
        let g = self.run.grad_p_pointwise(i);
        self.grad_correction(i).map_or(g.clone(), |c| g + c)
    }

    /// Evaluates both groupings of `l = p + l⊗(b·∇p)`.
    pub fn duhamel(&mut self) -> Result<Duhamel> {
        if self.is_zero_drift() {
            return Ok(Duhamel { residual: 0.0, literal: 0.0 });
        }
        let run = self.run;
        let nodes = run.mesh.len();
        let cell = run.cell();
        let times = run.mesh.times.clone();
        let alpha = run.spec.alpha;
        let d = self.drift_nodes();
        let corr: Vec<Array2<f64>> = (0..nodes).map(|i| self.correction(i).unwrap()).collect();
        let orders = self.terms.len();
        // r[m][k] = (b·∇p)^{⊗(m+1)}(t_k), grown node by node
        let mut r: Vec<Vec<Array2<f64>>> = vec![Vec::with_capacity(nodes); orders];
        let mut r_sum: Vec<Array2<f64>> = Vec::with_capacity(nodes);
        let mut out = Duhamel { residual: 0.0, literal: 0.0 };
        let lat = run.lattice;
        let interior: Vec<usize> = (0..lat.n).filter(|&i| lat.is_interior_index(i)).collect();
        for i in 0..nodes {
            let np = NodePanels::new(run, i)?;
            let mut p_left = Vec::with_capacity(np.sigmas.len());
            let mut d_left = Vec::with_capacity(np.sigmas.len());
            let mut l_left = Vec::with_capacity(np.sigmas.len());
            for &s in &np.sigmas {
                let (p, mut g) = self.p_between(s, i)?;
                scale_rows(&mut g, &self.drift);
                // the summed correction at t_i is already known
                l_left.push(&p + &interpolate(&times, &corr, i, s));
                p_left.push(p);
                d_left.push(g);
            }
            r[0].push(d[i].clone());
            for m in 1..orders {
                let rights: Vec<Array2<f64>> = (0..np.sigmas.len()).map(|g| np.combine(g, &r[m - 1])).collect();
                r[m].push(contract(&d_left, &rights, cell));
            }
            let mut sum = r[0][i].clone();
            for rm in &r[1..] {
                sum += &rm[i];
            }
            r_sum.push(sum);
            let right_r: Vec<Array2<f64>> = (0..np.sigmas.len()).map(|g| np.combine(g, &r_sum)).collect();
            let right_d: Vec<Array2<f64>> = (0..np.sigmas.len()).map(|g| np.combine(g, &d)).collect();
            let p_r = contract(&p_left, &right_r, cell);
            let l_d = contract(&l_left, &right_d, cell);
            let l_corr = &corr[i];
            let scale = times[i].powf(1.0 / alpha);
            for &x in &interior {
                for &y in &interior {
                    let c = l_corr[[x, y]];
                    out.residual = out.residual.max((c - p_r[[x, y]]).abs() * scale);
                    out.literal = out.literal.max((c - l_d[[x, y]]).abs() * scale);
                }
            }
        }
        Ok(out)
    }

    /// Right-grouped Duhamel residual.
    pub fn duhamel_residual(&mut self) -> Result<f64> {
        Ok(self.duhamel()?.residual)
    }

    /// `sup_x |Σ_y l(t,x,y)Δ − 1|` over all nodes.
    pub fn check_mass(&self, tol: f64) -> BoundReport {
        let c = self.run.cell();
        let mut worst = (0.0f64, 0.0, 0.0);
        for i in 0..self.run.mesh.len() {
            for (ix, row) in self.l(i).rows().into_iter().enumerate() {
                let dev = (row.sum() * c - 1.0).abs();
                if dev > worst.0 {
                    worst = (dev, self.run.mesh.times[i], self.run.lattice.coord(ix));
                }
            }
        }
        BoundReport::new("drift.mass", "sup over t, x of |sum_y l(t,x,y) dy - 1|")
            .constant("max_deviation", worst.0)
            .witness("max", vec![worst.1, worst.2], worst.0)
            .judge_at_most("max_deviation", tol)
    }

    /// Two-sided ratios of `l` and the gradient ratio of `∇_x l`, on the same pairs and
    /// resolved nodes as the parametrix checks.
    pub fn check_l_bounds(&self, set: &PairSet) -> (BoundReport, BoundReport) {
        let vals: Vec<Array2<f64>> = set.nodes.iter().map(|&n| self.l_pointwise(n)).collect();
        let grads: Vec<Array2<f64>> = set.nodes.iter().map(|&n| self.grad_l_pointwise(n)).collect();
        (
            two_sided_report(self.run, set, &vals, "drift.two_sided", "l"),
            gradient_report(self.run, set, &grads, "drift.gradient", "l"),
        )
    }

    /// Gamma-shape fit as a report; passes when every term is within `tol` log units.
    pub fn check_gamma(&self, tol: f64) -> BoundReport {
        let g = &self.gamma_log;
        let mut rep = BoundReport::new(
            "drift.term_decay",
            "log-residual of |l_n| against C c'^n / Gamma(1 + n(1 - 1/alpha))",
        )
        .constant("log_c", g.log_c)
        .constant("log_c_prime", g.log_c_prime)
        .constant("max_log_residual", g.max_log_residual);
        for e in &g.entries {
            rep = rep.witness("term", vec![e.n as f64], e.sup_norm);
        }
        rep.judge_at_most("max_log_residual", tol)
    }

    /// One base point `y_k` of `l` (or of `l_n` for `Some(n)`) as a field in `(t, x)`.
    pub fn field(&self, term: Option<usize>, k: usize) -> Result<DensityField> {
        let lat = self.run.lattice;
        if k >= lat.n {
            return Err(Error::Config(format!("base point index {k} out of range")));
        }
        if let Some(n) = term {
            if n > self.terms.len() {
                return Err(Error::Config(format!("term {n} was not built")));
            }
        }
        let rows: Vec<Vec<f64>> = (0..self.run.mesh.len())
            .map(|i| {
                let m = match term {
                    Some(n) => self.term(n, i),
                    None => self.l(i),
                };
                m.column(k).to_vec()
            })
            .collect();
        let grid = SpaceTimeGrid::new(lat, self.run.mesh.times.clone())?;
        Ok(DensityField::from_rows(grid, BasePoint::Point(lat.point(k)), FieldKind::L, rows))
    }
}
