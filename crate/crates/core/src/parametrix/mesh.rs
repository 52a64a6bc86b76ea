//! Graded time meshes and product-integration panels for `∫_0^t A(t−s) B(s) ds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::tanh_sinh_real;

/// Increasing positive time nodes; `t_0 = 0` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    pub times: Vec<f64>,
}

impl TimeMesh {
    /// `T(j/N)^g` for `j = 1..N`, merged with `kT/K` for `k = 1..K` and the quarter points.
    /// Graded nodes above `T/K` are dropped so that no two nodes crowd each other.
    pub fn graded(horizon: f64, steps: usize, grading: f64, uniform: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 || grading < 1.0 {
            return Err(Error::Config("time mesh needs T > 0, N ≥ 1, g ≥ 1".into()));
        }
        let cut = if uniform > 0 { horizon / uniform as f64 * (1.0 - 1e-9) } else { f64::INFINITY };
        let mut t: Vec<f64> = (1..=steps)
            .map(|j| horizon * (j as f64 / steps as f64).powf(grading))
            .filter(|&v| v < cut)
            .collect();
        t.extend((1..=uniform).map(|k| horizon * k as f64 / uniform as f64));
        t.extend([0.25, 0.5, 0.75, 1.0].iter().map(|f| f * horizon));
        t.sort_by(f64::total_cmp);
        // merge nodes closer than a relative 1e−9 so exact fractions survive
        let mut out: Vec<f64> = Vec::new();
        for v in t {
            match out.last() {
                Some(&l) if (v - l).abs() <= 1e-9 * v => {}
                _ => out.push(v),
            }
        }
        Ok(TimeMesh { times: out })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of a node equal to `t` within a relative 1e−9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1e-300))
    }

    fn left(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.times[k - 1]
        }
    }
}

/// One panel: the left factor is evaluated once at `sigma`, the right factor enters as
/// `Σ w·B(node)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub sigma: f64,
    pub weights: Vec<(usize, f64)>,
}

/// Geometric refinement of the last interval towards `s = t`.
const SUB_RATIO: f64 = 0.25;
const SUB_LEVELS: usize = 4;

/// Panels for the output node `i` (time `times[i]`).
///
/// The right factor is modelled as `s^{p−1}·(linear in s)` on each mesh interval, and as
/// `(s/t_1)^{p−1}B(t_1)` on the first. The left factor is taken as `A(σ*)(σ/σ*)^{q−1}`
/// on each panel, or with `left_points = 2` as `(σ/σ_g)^{q−1}` times the linear
/// interpolant through the two Gauss points `σ_g`. Both exponents are clamped to `(0, 1]`.
pub fn panels(mesh: &TimeMesh, i: usize, p_right: f64, q_left: f64, left_points: usize) -> Result<Vec<Panel>> {
    let p = p_right.clamp(1e-6, 1.0);
    let q = q_left.clamp(1e-6, 1.0);
    let t = mesh.times[i];
    let mut out = Vec::new();
    for k in 0..=i {
        let (a, b) = (mesh.left(k), mesh.times[k]);
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        if k < i {
            pieces.push((a, b));
        } else {
            let h = b - a;
            let mut hi = h;
            for _ in 0..SUB_LEVELS {
                let lo = hi * SUB_RATIO;
                pieces.push((t - hi, t - lo));
                hi = lo;
            }
            pieces.push((t - hi, t));
        }
        for (sa, sb) in pieces {
            let (mid, half) = (t - 0.5 * (sa + sb), 0.5 * (sb - sa));
            let sigmas: Vec<f64> = match left_points {
                1 => vec![mid],
                2 => vec![mid - half / 3f64.sqrt(), mid + half / 3f64.sqrt()],
                _ => return Err(Error::Config("left_points must be 1 or 2".into())),
            };
            for (g, &sigma) in sigmas.iter().enumerate() {
                let other = sigmas.get(1 - g.min(1)).copied().filter(|_| sigmas.len() == 2);
                // Lagrange factor of the left interpolant at Gauss point g
                let lag = move |sig: f64| match other {
                    Some(o) => (sig - o) / (sigma - o),
                    None => 1.0,
                };
                let mut weights = Vec::new();
                for (node, phi) in interpolation_basis(mesh, i, k, p) {
                    let w = tanh_sinh_real(
                        |s, dl, dr| {
                            // σ = t − s measured from the panel's right end when it touches t
                            let sig = if sb == t { dr } else { t - s };
                            let s = if sa == 0.0 { dl } else { s };
                            (sig / sigma).powf(q - 1.0) * lag(sig) * phi(s)
                        },
                        sa,
                        sb,
                        1e-12,
                    )?
                    .value;
                    weights.push((node, w));
                }
                out.push(Panel { sigma, weights });
            }
        }
    }
    Ok(out)
}

type Basis = Vec<(usize, Box<dyn Fn(f64) -> f64>)>;

/// Basis functions `(s/t_e)^{p−1}ℓ_e(s)` on interval `k` with `ℓ_e` the Lagrange
/// polynomials through up to three nodes among `t_1..t_i` (only `t_1` on the first interval).
fn interpolation_basis(mesh: &TimeMesh, i: usize, k: usize, p: f64) -> Basis {
    if k == 0 {
        let b = mesh.times[0];
        return vec![(0, Box::new(move |s: f64| (s / b).powf(p - 1.0)))];
    }
    let nodes: Vec<usize> = if k < i {
        vec![k - 1, k, k + 1]
    } else if k >= 2 {
        vec![k - 2, k - 1, k]
    } else {
        vec![k - 1, k]
    };
    let ts: Vec<f64> = nodes.iter().map(|&e| mesh.times[e]).collect();
    nodes
        .iter()
        .enumerate()
        .map(|(a, &e)| {
            let ts = ts.clone();
            let f: Box<dyn Fn(f64) -> f64> = Box::new(move |s: f64| {
                let mut l = (s / ts[a]).powf(p - 1.0);
                for (b, tb) in ts.iter().enumerate() {
                    if b != a {
                        l *= (s - tb) / (ts[a] - tb);
                    }
                }
                l
            });
            (e, f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_contains_uniform_and_graded_nodes() {
        let m = TimeMesh::graded(1.0, 12, 4.0, 16).unwrap();
        for k in 1..=16 {
            assert!(m.index_of(k as f64 / 16.0).is_some());
        }
        assert!((m.times[0] - (1.0f64 / 12.0).powi(4)).abs() < 1e-15);
        assert!(m.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn weights_integrate_model_functions_exactly() {
        let m = TimeMesh::graded(1.0, 6, 3.0, 4).unwrap();
        let (p, q) = (0.3, 0.6);
        for (i, lp) in [(0, 1), (3, 1), (m.len() - 1, 1), (3, 2), (m.len() - 1, 2)] {
            let t = m.times[i];
            let ps = panels(&m, i, p, q, lp).unwrap();
            // A(σ) = σ^{q−1}, B(s) = s^{p−1}: ∫_0^t (t−s)^{q−1}s^{p−1}ds = t^{p+q−1}B(p,q)
            let mut sum = 0.0;
            for pn in &ps {
                let a = pn.sigma.powf(q - 1.0);
                for (node, w) in &pn.weights {
                    sum += a * w * m.times[*node].powf(p - 1.0);
                }
            }
            let exact = t.powf(p + q - 1.0) * statrs::function::beta::beta(p, q);
            assert!((sum / exact - 1.0).abs() < 1e-8, "{i} {sum} {exact}");
        }
    }
}
