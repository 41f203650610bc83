//! Row-wise Fourier transforms between sine/cosine amplitudes and grid values in x.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct RowTransform {
    nx: usize,
    k_max: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RowTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RowTransform")
            .field("nx", &self.nx)
            .field("k_max", &self.k_max)
            .finish()
    }
}

impl RowTransform {
    pub(crate) fn new(nx: usize, k_max: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            k_max,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        }
    }

    fn synthesize(&self, amps: &Array2<f64>, coef: impl Fn(usize, f64) -> Complex64) -> Array2<f64> {
        let rows = amps.nrows();
        let mut out = Array2::<f64>::zeros((rows, self.nx));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nx];
        let top = self.k_max.min(self.nx / 2);
        for i in 0..rows {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for n in 0..=top {
                let a = amps[[i, n]];
                if a == 0.0 {
                    continue;
                }
                let c = coef(n, a);
                if n == 0 || 2 * n == self.nx {
                    buf[n] += c + c.conj();
                } else {
                    buf[n] += c;
                    buf[self.nx - n] += c.conj();
                }
            }
            self.inverse.process(&mut buf);
            for (o, c) in out.row_mut(i).iter_mut().zip(&buf) {
                *o = c.re;
            }
        }
        out
    }

    /// Σ_n S_n sin(κ_n x_j).
    pub(crate) fn sin_to_physical(&self, amps: &Array2<f64>) -> Array2<f64> {
        self.synthesize(amps, |_, s| Complex64::new(0.0, -0.5 * s))
    }

    /// Σ_n A_n cos(κ_n x_j).
    pub(crate) fn cos_to_physical(&self, amps: &Array2<f64>) -> Array2<f64> {
        self.synthesize(amps, |_, a| Complex64::new(0.5 * a, 0.0))
    }

    /// Sine amplitudes for n = 0..=k_max, and the largest cosine amplitude found.
    pub(crate) fn physical_to_sin(&self, values: &Array2<f64>) -> (Array2<f64>, f64) {
        let rows = values.nrows();
        let mut out = Array2::<f64>::zeros((rows, self.k_max + 1));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nx];
        let norm = 1.0 / self.nx as f64;
        let top = self.k_max.min(self.nx / 2);
        let mut even: f64 = 0.0;
        for i in 0..rows {
            for (b, v) in buf.iter_mut().zip(values.row(i)) {
                *b = Complex64::new(*v, 0.0);
            }
            self.forward.process(&mut buf);
            for n in 0..=top {
                let c = buf[n] * norm;
                let cos_amp = if n == 0 || 2 * n == self.nx { c.re } else { 2.0 * c.re };
                even = even.max(cos_amp.abs());
                if n != 0 && 2 * n != self.nx {
                    out[[i, n]] = -2.0 * c.im;
                }
            }
        }
        (out, even)
    }
}
