//! Frozen-density kernels `q`, `∇_x q` and the driver `F = (𝓐 − 𝓐^y)q` sampled on a coarse
//! lattice, evaluated at arbitrary times from fine-lattice symbol tables.
//!
//! For each base point `y` the frozen density is represented by its spectrum on the fine
//! lattice. Coarse-lattice kernels are the projections onto frequencies strictly below the
//! coarse Nyquist frequency, sampled at offsets `v = y − x`. Pointwise (unprojected)
//! samples of `q` and `∇_x q` are also available for checking bounds.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::model::ModelSpec;
use crate::symbol::SymbolTable;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Which kernels to produce at a time `σ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Wanted {
    pub q: bool,
    pub f: bool,
    pub grad: bool,
    pub pointwise: bool,
}

/// Kernels at one time as `[x, y]` matrices on the coarse lattice.
#[derive(Clone, Debug, Default)]
pub struct KernelSlice {
    pub q: Option<Array2<f64>>,
    pub f: Option<Array2<f64>>,
    pub grad: Option<Array2<f64>>,
    pub q_pt: Option<Array2<f64>>,
    pub grad_pt: Option<Array2<f64>>,
}

pub struct KernelFactory {
    pub coarse: Lattice,
    pub fine: Lattice,
    table: SymbolTable,
    /// `a_j` on the fine lattice for components whose coefficient varies.
    varying: Vec<(usize, Vec<f64>)>,
    /// `a_j(y_k)` for every coarse base point.
    coefs: Vec<Vec<f64>>,
    fine_fwd: Arc<dyn Fft<f64>>,
    fine_inv: Arc<dyn Fft<f64>>,
    coarse_fwd: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelFactory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelFactory").field("coarse", &self.coarse).field("fine", &self.fine).finish()
    }
}

impl KernelFactory {
    pub fn new(spec: &ModelSpec, coarse: Lattice, fine: Lattice) -> Result<Self> {
        if spec.dim != 1 || coarse.dim != 1 || fine.dim != 1 {
            return Err(Error::Config("the parametrix pipeline is one-dimensional".into()));
        }
        if fine.extent != coarse.extent || fine.n < coarse.n || fine.n % coarse.n != 0 {
            return Err(Error::Config("fine lattice must refine the coarse lattice on the same cell".into()));
        }
        let table = SymbolTable::new(spec, fine)?;
        let varying = table
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.coefficient.is_constant())
            .map(|(j, c)| (j, (0..fine.n).map(|i| c.coefficient.eval(&fine.point(i))).collect()))
            .collect();
        let coefs = (0..coarse.n).map(|k| table.coefficients(&coarse.point(k))).collect();
        let mut p = FftPlanner::new();
        Ok(KernelFactory {
            coarse,
            fine,
            fine_fwd: p.plan_fft_forward(fine.n),
            fine_inv: p.plan_fft_inverse(fine.n),
            coarse_fwd: p.plan_fft_forward(coarse.n),
            table,
            varying,
            coefs,
        })
    }

    /// True when no coefficient depends on the base point, so `F ≡ 0`.
    pub fn is_frozen(&self) -> bool {
        self.varying.is_empty()
    }

    /// Frozen symbol `ψ^{y_k}` on the fine lattice (FFT order).
    pub fn frozen_symbol(&self, k: usize) -> Vec<Complex64> {
        (0..self.fine.n).map(|i| self.table.combine(&self.coefs[k], i)).collect()
    }

    /// Projects a fine spectrum below the coarse Nyquist frequency and samples
    /// `(1/L) Σ ĝ e^{−iuv}` at the coarse offsets `v_m = mΔ_c`.
    fn coarse_offsets(&self, spec_fine: &[Complex64], out: &mut [f64], scratch: &mut [Complex64]) {
        let (nc, nf) = (self.coarse.n, self.fine.n);
        scratch.iter_mut().for_each(|v| *v = C0);
        for kt in -(nc as i64 / 2) + 1..(nc as i64 / 2) {
            scratch[kt.rem_euclid(nc as i64) as usize] = spec_fine[kt.rem_euclid(nf as i64) as usize];
        }
        self.coarse_fwd.process(scratch);
        let inv_l = 1.0 / self.coarse.extent;
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = s.re * inv_l;
        }
    }

    /// Kernels at time `sigma` for every coarse base point.
    pub fn eval(&self, sigma: f64, want: Wanted) -> KernelSlice {
        let (nc, nf) = (self.coarse.n, self.fine.n);
        let ratio = nf / nc;
        let inv_l = 1.0 / self.fine.extent;
        let cell = self.fine.spacing();
        let freqs: Vec<f64> = (0..nf).map(|i| self.fine.freq(i)).collect();
        let mk = |on: bool| if on { Some(Array2::<f64>::zeros((nc, nc))) } else { None };
        let mut out = KernelSlice {
            q: mk(want.q),
            f: mk(want.f && !self.is_frozen()),
            grad: mk(want.grad),
            q_pt: mk(want.pointwise && want.q),
            grad_pt: mk(want.pointwise && want.grad),
        };
        let want_f = out.f.is_some();
        let mut g = vec![C0; nf];
        let mut buf = vec![C0; nf];
        let mut fv = vec![0.0; nf];
        let mut cs = vec![C0; nc];
        let mut col = vec![0.0; nc];
        // writes an offset column for base point k into M[x_i, y_k], v = (k − i)Δ_c
        let put = |m: &mut Array2<f64>, k: usize, col: &[f64]| {
            for i in 0..nc {
                m[[i, k]] = col[(k + nc - i) % nc];
            }
        };
        for k in 0..nc {
            let psi = self.frozen_symbol(k);
            for (gi, p) in g.iter_mut().zip(&psi) {
                *gi = (-sigma * p).exp();
            }
            if let Some(m) = out.q.as_mut() {
                self.coarse_offsets(&g, &mut col, &mut cs);
                put(m, k, &col);
            }
            if let Some(m) = out.grad.as_mut() {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = g[i] * Complex64::new(0.0, freqs[i]);
                }
                self.coarse_offsets(&buf, &mut col, &mut cs);
                put(m, k, &col);
            }
            if let Some(m) = out.q_pt.as_mut() {
                buf.copy_from_slice(&g);
                self.fine_fwd.process(&mut buf);
                for (mc, c) in col.iter_mut().enumerate() {
                    *c = buf[mc * ratio].re * inv_l;
                }
                put(m, k, &col);
            }
            if let Some(m) = out.grad_pt.as_mut() {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = if self.fine.is_nyquist(i) { C0 } else { g[i] * Complex64::new(0.0, freqs[i]) };
                }
                self.fine_fwd.process(&mut buf);
                for (mc, c) in col.iter_mut().enumerate() {
                    *c = buf[mc * ratio].re * inv_l;
                }
                put(m, k, &col);
            }
            if want_f {
                fv.iter_mut().for_each(|v| *v = 0.0);
                let base = k * ratio;
                for (j, a_fine) in &self.varying {
                    let tab = &self.table.tables[self.table.component_table[*j]];
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = -tab[i] * g[i];
                    }
                    self.fine_fwd.process(&mut buf);
                    let ay = self.coefs[k][*j];
                    for (m, v) in fv.iter_mut().enumerate() {
                        // a_j(y − v_m) sits at fine index base − m
                        let ax = a_fine[(base + nf - m) % nf];
                        *v += (ax - ay) * buf[m].re * inv_l;
                    }
                }
                for (b, v) in buf.iter_mut().zip(&fv) {
                    *b = Complex64::new(*v * cell, 0.0);
                }
                self.fine_inv.process(&mut buf);
                self.coarse_offsets(&buf, &mut col, &mut cs);
                put(out.f.as_mut().unwrap(), k, &col);
            }
        }
        out
    }
}
