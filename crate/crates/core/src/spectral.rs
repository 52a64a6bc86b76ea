//! FFT transforms between lattice values and samples of the characteristic function.
//!
//! With `x_j = −L/2 + jΔ` and `u_k = 2πk̃/L`, a field and its spectrum are related by
//! `ĝ_k = Δ^d Σ_j f_j e^{iu_k·x_j}` and `f_j = L^{−d} Σ_k ĝ_k e^{−iu_k·x_j}`. The
//! half-cell shift turns into the sign `(−1)^{k₁+k₂}`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::grid::Lattice;

#[derive(Clone)]
pub struct Spectral {
    pub lattice: Lattice,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("lattice", &self.lattice).finish()
    }
}

impl Spectral {
    pub fn new(lattice: Lattice) -> Self {
        let mut p = FftPlanner::new();
        Spectral { lattice, fwd: p.plan_fft_forward(lattice.n), inv: p.plan_fft_inverse(lattice.n) }
    }

    /// `(−1)^{k₁+k₂}` for flat index `i`.
    pub fn sign(&self, i: usize) -> f64 {
        let n = self.lattice.n;
        let s = if self.lattice.dim == 1 { i } else { i / n + i % n };
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn apply(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.lattice.n;
        if self.lattice.dim == 1 {
            plan.process(data);
            return;
        }
        plan.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            plan.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }

    /// Unnormalized `Σ_j a_j e^{−2πi k·j/N}`.
    pub fn forward_raw(&self, data: &mut [Complex64]) {
        self.apply(&self.fwd, data);
    }

    /// Unnormalized `Σ_k a_k e^{+2πi k·j/N}`.
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.apply(&self.inv, data);
    }

    /// Spectrum `ĝ_k` of real lattice values.
    pub fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inverse_raw(&mut d);
        let cell = self.lattice.spacing().powi(self.lattice.dim as i32);
        for (i, v) in d.iter_mut().enumerate() {
            *v *= cell * self.sign(i);
        }
        d
    }

    /// Real lattice values from a spectrum (the imaginary part, pure rounding for
    /// conjugate-symmetric input, is dropped).
    pub fn synthesize(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut d: Vec<Complex64> = spectrum.iter().enumerate().map(|(i, v)| v * self.sign(i)).collect();
        self.forward_raw(&mut d);
        let vol = self.lattice.extent.powi(self.lattice.dim as i32);
        d.iter().map(|v| v.re / vol).collect()
    }

    /// Multiplies a spectrum by the symbol of `∂/∂x_axis` (which is `−iu` under this
    /// convention), zeroing the unpaired Nyquist modes.
    pub fn differentiate(&self, spectrum: &mut [Complex64], axis: usize) {
        for (i, v) in spectrum.iter_mut().enumerate() {
            let u = self.lattice.freq_point(i);
            if self.lattice.is_nyquist(i) {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, -u[axis]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_and_plane_wave() {
        let lat = Lattice::new(1, 64, 2.0 * PI).unwrap();
        let s = Spectral::new(lat);
        let f: Vec<f64> = (0..64).map(|j| (3.0 * lat.coord(j)).cos() + 0.5).collect();
        let g = s.analyze(&f);
        // cos(3x) ↦ π at u = ±3, constant ↦ 0.5·2π at u = 0
        assert!((g[0].re - PI).abs() < 1e-12);
        assert!((g[3].re - PI).abs() < 1e-12 && (g[61].re - PI).abs() < 1e-12);
        let back = s.synthesize(&g);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        let mut d = g.clone();
        s.differentiate(&mut d, 0);
        let df = s.synthesize(&d);
        for j in 0..64 {
            assert!((df[j] + 3.0 * (3.0 * lat.coord(j)).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_derivative() {
        let lat = Lattice::new(2, 32, 2.0 * PI).unwrap();
        let s = Spectral::new(lat);
        let f: Vec<f64> = (0..lat.len()).map(|i| {
            let p = lat.point(i);
            (p[0] + 2.0 * p[1]).sin()
        }).collect();
        let mut g = s.analyze(&f);
        s.differentiate(&mut g, 1);
        let df = s.synthesize(&g);
        for i in 0..lat.len() {
            let p = lat.point(i);
            assert!((df[i] - 2.0 * (p[0] + 2.0 * p[1]).cos()).abs() < 1e-12);
        }
    }
}
