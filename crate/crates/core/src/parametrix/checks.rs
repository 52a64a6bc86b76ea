//! Validation of a parametrix run: collapse to the frozen density, Chapman–Kolmogorov,
//! mass, two-sided and gradient bounds, and the envelopes of `Φ` and `q⊗Φ`.

use ndarray::Array2;

use super::run::ParametrixRun;
use crate::density::{invert_density, ImageTails};
use crate::error::{Error, Result};
use crate::grid::{Lattice, SpaceTimeGrid};
use crate::model::RhoWeight;
use crate::report::{BoundReport, Status};

/// Interior pairs `(x_i, y_k)` with `|y − x| ≤ L/8`, the mesh nodes whose frozen
/// densities the fine lattice resolves, and the periodic-image part of `q` there.
#[derive(Clone, Debug)]
pub struct PairSet {
    /// `(i, k, y_k − x_i)` with the offset wrapped to the cell.
    pub pairs: Vec<(usize, usize, f64)>,
    pub nodes: Vec<usize>,
    /// Image contribution of `q` per pair and resolved node.
    pub images: Vec<Vec<f64>>,
}

/// Nodes with `t^{1/α}` at least 8 fine spacings and one coarse spacing.
pub fn resolved_nodes(run: &ParametrixRun) -> Vec<usize> {
    resolved_above(run, 0.0)
}

/// Resolved nodes with `t^{1/α}` also at least `floor`.
fn resolved_above(run: &ParametrixRun, floor: f64) -> Vec<usize> {
    let dx = (8.0 * run.config.extent / run.config.fine_n as f64).max(run.lattice.spacing()).max(floor);
    let a = run.spec.alpha;
    (0..run.mesh.len()).filter(|&i| run.mesh.times[i].powf(1.0 / a) >= dx).collect()
}

impl PairSet {
    pub fn new(run: &ParametrixRun) -> Result<Self> {
        Self::with_floor(run, 0.0)
    }

    /// Like [`PairSet::new`], keeping only nodes with `t^{1/α} ≥ floor`. Refinement
    /// comparisons pass the coarser lattice's spacing so both sides see the same times.
    pub fn with_floor(run: &ParametrixRun, floor: f64) -> Result<Self> {
        let lat = run.lattice;
        let nodes = resolved_above(run, floor);
        if nodes.is_empty() {
            return Err(Error::Config("no mesh node is resolved by the fine lattice".into()));
        }
        let times: Vec<f64> = nodes.iter().map(|&i| run.mesh.times[i]).collect();
        let fine = Lattice::new(1, run.config.fine_n, run.config.extent)?;
        let mut pairs = Vec::new();
        let mut images = Vec::new();
        for k in 0..lat.n {
            let y = lat.point(k);
            let tails = ImageTails::new(&run.spec, &y)?;
            for i in 0..lat.n {
                if !lat.is_interior_index(i) {
                    continue;
                }
                let v = lat.wrap(y[0] - lat.coord(i));
                if v.abs() > lat.extent / 8.0 {
                    continue;
                }
                pairs.push((i, k, v));
                images.push(tails.eval(&run.spec, &fine, &[v], &times));
            }
        }
        Ok(PairSet { pairs, nodes, images })
    }
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// `sup_x |Σ_y p(t,x,y)Δ − 1|` over all nodes; passes at `tol`.
pub fn check_mass(run: &ParametrixRun, tol: f64) -> BoundReport {
    let c = run.cell();
    let mut worst = (0.0f64, 0.0, 0.0);
    for i in 0..run.mesh.len() {
        let p = run.p(i);
        for (ix, row) in p.rows().into_iter().enumerate() {
            let d = (row.sum() * c - 1.0).abs();
            if d > worst.0 {
                worst = (d, run.mesh.times[i], run.lattice.coord(ix));
            }
        }
    }
    BoundReport::new("heat_kernel.mass", "sup over t, x of |sum_y p(t,x,y) dy - 1|")
        .constant("max_deviation", worst.0)
        .witness("max", vec![worst.1, worst.2], worst.0)
        .judge_at_most("max_deviation", tol)
}

/// `sup |∫p(s,x,z)p(t,z,y)dz − p(s+t,x,y)|·(s+t)^{1/α}` over interior `x, y`.
pub fn chapman_kolmogorov_residual(run: &ParametrixRun, s: f64, t: f64) -> Result<f64> {
    let m = &run.mesh;
    let find = |v: f64| {
        m.index_of(v).ok_or_else(|| Error::Config(format!("time {v} is not a mesh node")))
    };
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::Config("Chapman-Kolmogorov needs s, t > 0".into()));
    }
    let (is, it, ist) = (find(s)?, find(t)?, find(s + t)?);
    let lhs = run.p(is).dot(&run.p(it)) * run.cell();
    let rhs = run.p(ist);
    let lat = run.lattice;
    let mut r = 0.0f64;
    for i in (0..lat.n).filter(|&i| lat.is_interior_index(i)) {
        for k in (0..lat.n).filter(|&k| lat.is_interior_index(k)) {
            r = r.max((lhs[[i, k]] - rhs[[i, k]]).abs());
        }
    }
    Ok(r * (s + t).powf(1.0 / run.spec.alpha))
}

/// Largest CK residual over the given `(s, t)` pairs; passes at `tol`.
pub fn check_chapman_kolmogorov(run: &ParametrixRun, pairs: &[(f64, f64)], tol: f64) -> Result<BoundReport> {
    let mut rep = BoundReport::new(
        "heat_kernel.chapman_kolmogorov",
        "sup of |int p(s,x,z)p(t,z,y)dz - p(s+t,x,y)| normalized by (s+t)^{-d/alpha}",
    );
    let mut worst = 0.0f64;
    for &(s, t) in pairs {
        let r = chapman_kolmogorov_residual(run, s, t)?;
        rep = rep.witness("pair", vec![s, t], r);
        worst = worst.max(r);
    }
    Ok(rep.constant("max_residual", worst).judge_at_most("max_residual", tol))
}

/// For x-independent kernels: `F` vanishes and the pointwise `p` matches an independent
/// inversion of the frozen density, relative to its maximum, at the resolved nodes.
pub fn check_collapse(run: &ParametrixRun) -> Result<BoundReport> {
    let sup_f = run.f.iter().map(max_abs).fold(0.0, f64::max);
    let nodes = resolved_nodes(run);
    let fine = Lattice::new(1, run.config.fine_n, run.config.extent)?;
    let times: Vec<f64> = nodes.iter().map(|&i| run.mesh.times[i]).collect();
    let lat = run.lattice;
    let ratio = fine.n / lat.n;
    let mut worst = 0.0f64;
    // one base point suffices per column; use the centre and a shifted one
    for k in [lat.n / 2, lat.n / 4] {
        let y = lat.point(k);
        let dens = invert_density(&run.spec, &y, &SpaceTimeGrid::new(fine, times.clone())?)?;
        for (row, &node) in dens.values.iter().zip(&nodes) {
            let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let p = run.p_pointwise(node);
            for i in (0..lat.n).filter(|&i| lat.is_interior_index(i)) {
                // p(t, x_i, y) = f^y(y − x_i); the offset y − x_i is the fine point j
                let j = ((k + lat.n - i) * ratio + fine.n / 2) % fine.n;
                worst = worst.max((p[[i, k]] - row[j]).abs() / scale);
            }
        }
    }
    let mut rep = BoundReport::new(
        "parametrix.collapse",
        "x-independent kernel: sup |F| and sup-relative |p - f_t| against a direct inversion",
    )
    .constant("sup_f", sup_f)
    .constant("sup_relative_difference", worst)
    .note(format!("{} resolved nodes", nodes.len()));
    rep.status = if sup_f <= 1e-8 && worst <= 1e-6 { Status::Pass } else { Status::Fail };
    Ok(rep)
}

struct Extremes {
    sup: (f64, Vec<f64>),
    inf: (f64, Vec<f64>),
}

/// Extremes of `value/envelope` over the pair set and resolved nodes.
fn extremes(run: &ParametrixRun, set: &PairSet, mut ratio: impl FnMut(usize, usize, f64, f64) -> f64) -> Extremes {
    let mut ex = Extremes { sup: (f64::NEG_INFINITY, vec![]), inf: (f64::INFINITY, vec![]) };
    for (pos, &node) in set.nodes.iter().enumerate() {
        let t = run.mesh.times[node];
        for (pi, &(i, k, v)) in set.pairs.iter().enumerate() {
            let r = ratio(pos, pi, t, v);
            if !r.is_finite() {
                continue;
            }
            let at = vec![t, run.lattice.coord(i), run.lattice.coord(k)];
            if r > ex.sup.0 {
                ex.sup = (r, at.clone());
            }
            if r < ex.inf.0 {
                ex.inf = (r, at);
            }
        }
    }
    ex
}

/// `p(t,x,y)/[(t/|x−y|^{d+α}) ∧ t^{−d/α}]` (sup and inf) and the near-diagonal lower
/// constant `inf_{|x−y| ≤ t^{1/α}} p·t^{d/α}`, using the deperiodized pointwise `p`.
pub fn check_heat_kernel_bounds(run: &ParametrixRun, set: &PairSet) -> BoundReport {
    let p: Vec<Array2<f64>> = set.nodes.iter().map(|&n| run.p_pointwise(n)).collect();
    two_sided_report(run, set, &p, "heat_kernel.two_sided", "p")
}

/// Two-sided ratios of a kernel given pointwise at the resolved nodes of `set`.
pub(crate) fn two_sided_report(
    run: &ParametrixRun,
    set: &PairSet,
    vals: &[Array2<f64>],
    id: &str,
    name: &str,
) -> BoundReport {
    let a = run.spec.alpha;
    let value = |pos: usize, pi: usize| {
        let (i, k, _) = set.pairs[pi];
        vals[pos][[i, k]] - set.images[pi][pos]
    };
    let ex = extremes(run, set, |pos, pi, t, v| {
        let env = if v == 0.0 { t.powf(-1.0 / a) } else { (t / v.abs().powf(1.0 + a)).min(t.powf(-1.0 / a)) };
        value(pos, pi) / env
    });
    let near = extremes(run, set, |pos, pi, t, v| {
        if v.abs() <= t.powf(1.0 / a) {
            value(pos, pi) * t.powf(1.0 / a)
        } else {
            f64::NAN
        }
    });
    BoundReport::new(
        id,
        &format!(
            "sup and inf of {name}(t,x,y) / [(t/|x-y|^{{d+alpha}}) min t^{{-d/alpha}}]; near-diagonal inf of {name} t^{{d/alpha}}"
        ),
    )
    .constant("sup_ratio", ex.sup.0)
    .constant("inf_ratio", ex.inf.0)
    .constant("near_diagonal_inf", near.inf.0)
    .witness("sup", ex.sup.1, ex.sup.0)
    .witness("inf", ex.inf.1, ex.inf.0)
    .witness("near_diagonal_inf", near.inf.1, near.inf.0)
    .judge_finite_positive()
}

/// `sup |∇_x p| / [t^{−1/α} ϱ_α^0(t, x−y)]` for `α > 1`.
pub fn check_gradient_bound(run: &ParametrixRun, set: &PairSet) -> Result<BoundReport> {
    if run.spec.alpha <= 1.0 {
        return Err(Error::Domain("the gradient bound is stated for alpha > 1".into()));
    }
    let g: Vec<Array2<f64>> = set.nodes.iter().map(|&n| run.grad_p_pointwise(n)).collect();
    Ok(gradient_report(run, set, &g, "heat_kernel.gradient", "p"))
}

pub(crate) fn gradient_report(run: &ParametrixRun, set: &PairSet, g: &[Array2<f64>], id: &str, name: &str) -> BoundReport {
    let a = run.spec.alpha;
    let w = RhoWeight::new(a, 0.0);
    let ex = extremes(run, set, |pos, pi, t, v| {
        let (i, k, _) = set.pairs[pi];
        g[pos][[i, k]].abs() / (t.powf(-1.0 / a) * w.at(t, v.abs(), a, 1))
    });
    BoundReport::new(id, &format!("sup |grad_x {name}| / [t^{{-1/alpha}} rho_alpha^0(t, x-y)]"))
        .constant("sup_ratio", ex.sup.0)
        .witness("sup", ex.sup.1, ex.sup.0)
        .judge_finite_positive()
}

/// Envelope constants `sup |Φ|/(ϱ_{θ̂}^0+ϱ_0^{θ̂})` and `sup |q⊗Φ|/(ϱ_{α+θ̂}^0+ϱ_α^{θ̂})`.
pub fn check_phi_envelope(run: &ParametrixRun, set: &PairSet) -> BoundReport {
    let a = run.spec.alpha;
    let th = run.spec.theta_hat();
    let env = |g1: f64, b2: f64, g2: f64, t: f64, r: f64| {
        RhoWeight::new(g1, 0.0).at(t, r, a, 1) + RhoWeight::new(g2, b2).at(t, r, a, 1)
    };
    let phi = extremes(run, set, |pos, pi, t, v| {
        let (i, k, _) = set.pairs[pi];
        run.phi[set.nodes[pos]][[i, k]].abs() / env(th, th, 0.0, t, v.abs())
    });
    let qphi = extremes(run, set, |pos, pi, t, v| {
        let (i, k, _) = set.pairs[pi];
        run.q_phi[set.nodes[pos]][[i, k]].abs() / env(a + th, th, a, t, v.abs())
    });
    BoundReport::new(
        "parametrix.envelopes",
        "sup |Phi| / (rho_th^0 + rho_0^th) and sup |q (x) Phi| / (rho_{alpha+th}^0 + rho_alpha^th)",
    )
    .constant("phi_constant", phi.sup.0)
    .constant("q_phi_constant", qphi.sup.0)
    .witness("phi", phi.sup.1, phi.sup.0)
    .witness("q_phi", qphi.sup.1, qphi.sup.0)
    .judge_finite_positive()
}
