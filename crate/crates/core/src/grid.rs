//! Periodic spatial lattices, their dual frequency lattices, and time meshes.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic lattice covering `[−L/2, L/2)^dim` with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

impl Lattice {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("lattice dimension must be 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("lattice size must be a power of two >= 4, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Config(format!("lattice extent must be positive, got {extent}")));
        }
        Ok(Lattice { dim, n, extent })
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index j along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.extent + j as f64 * self.spacing()
    }

    /// Point of flat index `i` (row-major in 2D).
    pub fn point(&self, i: usize) -> Vec<f64> {
        if self.dim == 1 {
            vec![self.coord(i)]
        } else {
            vec![self.coord(i / self.n), self.coord(i % self.n)]
        }
    }

    /// Signed integer frequency of FFT index k (the Nyquist index maps to `−n/2`).
    pub fn signed(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular frequency `2π k̃ / L` of FFT index k along one axis.
    pub fn freq(&self, k: usize) -> f64 {
        2.0 * PI * self.signed(k) as f64 / self.extent
    }

    /// Frequency vector of flat FFT index `i`.
    pub fn freq_point(&self, i: usize) -> Vec<f64> {
        if self.dim == 1 {
            vec![self.freq(i)]
        } else {
            vec![self.freq(i / self.n), self.freq(i % self.n)]
        }
    }

    /// True iff flat FFT index i touches a Nyquist frequency on some axis.
    pub fn is_nyquist(&self, i: usize) -> bool {
        let h = self.n / 2;
        if self.dim == 1 {
            i == h
        } else {
            i / self.n == h || i % self.n == h
        }
    }

    /// Largest frequency magnitude on one axis.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// True iff the point is at least `L/8` from the boundary of the periodic cell on every axis.
    pub fn is_interior_index(&self, i: usize) -> bool {
        let band = self.extent / 8.0;
        self.point(i).iter().all(|&c| c.abs() <= 0.5 * self.extent - band + 1e-12)
    }

    /// Distance on the torus between two points.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = (x - y).rem_euclid(self.extent);
                let d = d.min(self.extent - d);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Wraps a coordinate into `[−L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        (x + 0.5 * self.extent).rem_euclid(self.extent) - 0.5 * self.extent
    }
}

/// Spatial lattice plus time nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub lattice: Lattice,
    pub time_nodes: Vec<f64>,
    /// Grading exponent used to build the time mesh (1 for uniform or ad-hoc nodes).
    pub grading: f64,
}

impl SpaceTimeGrid {
    pub fn new(lattice: Lattice, time_nodes: Vec<f64>) -> Result<Self> {
        let g = SpaceTimeGrid { lattice, time_nodes, grading: 1.0 };
        g.check_times()?;
        Ok(g)
    }

    /// Graded mesh `t_j = T (j/N)^g`, j = 1..N.
    pub fn graded(lattice: Lattice, horizon: f64, steps: usize, grading: f64) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) || !(grading >= 1.0) {
            return Err(Error::Config("graded mesh needs steps > 0, T > 0, grading >= 1".into()));
        }
        let time_nodes =
            (1..=steps).map(|j| horizon * (j as f64 / steps as f64).powf(grading)).collect();
        let g = SpaceTimeGrid { lattice, time_nodes, grading };
        g.check_times()?;
        Ok(g)
    }

    fn check_times(&self) -> Result<()> {
        if self.time_nodes.is_empty() {
            return Err(Error::Config("no time nodes".into()));
        }
        if !(self.time_nodes[0] > 0.0) {
            return Err(Error::Config("time nodes must be strictly positive".into()));
        }
        if self.time_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("time nodes must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn t_min(&self) -> f64 {
        self.time_nodes[0]
    }

    pub fn horizon(&self) -> f64 {
        *self.time_nodes.last().expect("nonempty")
    }

    /// Index of a node equal to `t` up to a relative tolerance.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        self.time_nodes.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Checks `Δx ≤ t_min^{1/α}/8` and `L ≥ 40·T^{1/α}`.
    pub fn check_resolution(&self, alpha: f64) -> Result<()> {
        let dx = self.lattice.spacing();
        let need_dx = self.t_min().powf(1.0 / alpha) / 8.0;
        if dx > need_dx * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "lattice spacing {dx:.4e} does not resolve t_min = {:.3e} (needs <= {need_dx:.4e})",
                self.t_min()
            )));
        }
        let need_l = 40.0 * self.horizon().powf(1.0 / alpha);
        if self.lattice.extent < need_l * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "lattice extent {} is below 40·T^(1/alpha) = {need_l:.3}",
                self.lattice.extent
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_and_frequencies() {
        let l = Lattice::new(1, 8, 8.0).unwrap();
        assert_eq!(l.coord(0), -4.0);
        assert_eq!(l.coord(4), 0.0);
        assert_eq!(l.signed(4), -4);
        assert_eq!(l.signed(7), -1);
        assert!((l.freq(1) - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!((l.torus_distance(&[-3.5], &[3.0]) - 1.5).abs() < 1e-12);
        assert!((l.wrap(4.5) + 3.5).abs() < 1e-12);
        assert!(Lattice::new(1, 12, 1.0).is_err());
    }

    #[test]
    fn graded_mesh_and_resolution() {
        let l = Lattice::new(1, 4096, 14.0 * PI).unwrap();
        let g = SpaceTimeGrid::graded(l, 1.0, 4, 2.0).unwrap();
        assert_eq!(g.time_nodes, vec![1.0 / 16.0, 0.25, 0.5625, 1.0]);
        assert!(g.check_resolution(1.5).is_ok());
        let bad = SpaceTimeGrid::new(Lattice::new(1, 64, 14.0 * PI).unwrap(), vec![0.01, 1.0]).unwrap();
        assert!(bad.check_resolution(1.0).is_err());
        assert!(SpaceTimeGrid::new(l, vec![0.5, 0.25]).is_err());
    }
}
