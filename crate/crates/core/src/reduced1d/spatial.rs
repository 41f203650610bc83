//! Spatial operators for the reduced equation.

use std::sync::Arc;

use ndarray::ArrayView1;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{self, ChebyshevGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    /// Chebyshev-Gauss-Lobatto collocation with spectral antidifferentiation.
    #[default]
    Chebyshev,
    /// Sine series on the uniform grid, cosine series for the inner integral.
    Sine,
    /// Fourth-order central differences with odd ghost points, trapezoid integrals.
    Fd4,
}

impl Discretization {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Chebyshev => "chebyshev",
            Self::Sine => "sine",
            Self::Fd4 => "fd4",
        }
    }

    pub fn is_uniform(&self) -> bool {
        !matches!(self, Self::Chebyshev)
    }
}

impl std::str::FromStr for Discretization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chebyshev" => Ok(Self::Chebyshev),
            "sine" => Ok(Self::Sine),
            "fd4" => Ok(Self::Fd4),
            other => Err(format!("unknown discretization '{other}'")),
        }
    }
}

/// Grid nodes used by a discretization.
pub fn grid(disc: Discretization, n: usize, h: f64) -> Vec<f64> {
    match disc {
        Discretization::Chebyshev => chebyshev::nodes(n, h),
        _ => (0..=n)
            .map(|i| if i == n { h } else { h * i as f64 / n as f64 })
            .collect(),
    }
}

/// Real even/odd transforms of length N+1 computed with one complex FFT of length 2N.
#[derive(Clone)]
struct Trig {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Trig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trig").field("n", &self.n).finish()
    }
}

impl Trig {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Self { n, fft }
    }

    /// X_k = x_0 + (−1)^k x_N + 2 Σ_{j=1}^{N−1} x_j cos(πkj/N), k = 0..N.
    fn dct1(&self, x: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        for j in 0..=n {
            buf[j] = Complex64::new(x[j], 0.0);
        }
        for j in 1..n {
            buf[2 * n - j] = Complex64::new(x[j], 0.0);
        }
        self.fft.process(buf);
        for k in 0..=n {
            out[k] = buf[k].re;
        }
    }

    /// X_k = Σ_{j=1}^{N−1} x_j sin(πkj/N), k = 0..N (endpoints of x ignored).
    fn dst1(&self, x: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        buf[0] = Complex64::new(0.0, 0.0);
        buf[n] = Complex64::new(0.0, 0.0);
        for j in 1..n {
            buf[j] = Complex64::new(x[j], 0.0);
            buf[2 * n - j] = Complex64::new(-x[j], 0.0);
        }
        self.fft.process(buf);
        out[0] = 0.0;
        out[n] = 0.0;
        for k in 1..n {
            out[k] = -0.5 * buf[k].im;
        }
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Chebyshev(ChebyshevGrid),
    Sine(Trig),
    Fd4,
}

/// Right-hand side of the reduced equation in antiderivative form,
/// W_t(z) = ∫₀ᶻ (W_z² − W W_zz) − (2z/H) ∫₀ᴴ W_z².
#[derive(Debug, Clone)]
pub struct Operator1D {
    disc: Discretization,
    n: usize,
    height: f64,
    z: Vec<f64>,
    backend: Backend,
}

/// Intermediate quantities of one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Derivatives {
    pub wz: Vec<f64>,
    pub wzz: Vec<f64>,
}

impl Operator1D {
    pub fn new(disc: Discretization, n: usize, height: f64) -> Self {
        assert!(n >= 4, "grid too coarse");
        let backend = match disc {
            Discretization::Chebyshev => Backend::Chebyshev(ChebyshevGrid::new(n, height)),
            Discretization::Sine => Backend::Sine(Trig::new(n)),
            Discretization::Fd4 => Backend::Fd4,
        };
        Self {
            disc,
            n,
            height,
            z: grid(disc, n, height),
            backend,
        }
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// First and second z-derivatives at every node.
    pub fn derivatives(&self, w: &[f64]) -> Derivatives {
        let n = self.n;
        let mut wz = vec![0.0; n + 1];
        let mut wzz = vec![0.0; n + 1];
        match &self.backend {
            Backend::Chebyshev(g) => {
                let d = g.diff();
                let wz_a = d.dot(&ArrayView1::from(w));
                let wzz_a = d.dot(&wz_a);
                wz.copy_from_slice(wz_a.as_slice().unwrap());
                wzz.copy_from_slice(wzz_a.as_slice().unwrap());
            }
            Backend::Sine(tr) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
                let mut b = vec![0.0; n + 1];
                tr.dst1(w, &mut b, &mut buf);
                let kappa = std::f64::consts::PI / self.height;
                let mut c = vec![0.0; n + 1];
                let mut d = vec![0.0; n + 1];
                for k in 1..n {
                    let bk = 2.0 / n as f64 * b[k];
                    let kk = k as f64 * kappa;
                    c[k] = bk * kk;
                    d[k] = bk * kk * kk;
                }
                tr.dct1(&c, &mut wz, &mut buf);
                for v in wz.iter_mut() {
                    *v *= 0.5;
                }
                tr.dst1(&d, &mut wzz, &mut buf);
                for v in wzz.iter_mut() {
                    *v = -*v;
                }
                // the sine series vanishes identically at both walls
                wzz[0] = 0.0;
                wzz[n] = 0.0;
            }
            Backend::Fd4 => {
                let h = self.height / n as f64;
                // odd reflection about both walls
                let at = |i: isize| -> f64 {
                    let ni = n as isize;
                    if i < 0 {
                        -w[(-i) as usize]
                    } else if i > ni {
                        -w[(2 * ni - i) as usize]
                    } else {
                        w[i as usize]
                    }
                };
                for i in 0..=n {
                    let ii = i as isize;
                    let (m2, m1, p1, p2) = (at(ii - 2), at(ii - 1), at(ii + 1), at(ii + 2));
                    wz[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
                    wzz[i] = (-p2 + 16.0 * p1 - 30.0 * w[i] + 16.0 * m1 - m2) / (12.0 * h * h);
                }
            }
        }
        Derivatives { wz, wzz }
    }

    /// ∫₀ᴴ f dz with the quadrature of this discretization.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match &self.backend {
            Backend::Chebyshev(g) => g.integrate(f),
            _ => {
                let h = self.height / self.n as f64;
                let inner: f64 = f[1..self.n].iter().sum();
                h * (inner + 0.5 * (f[0] + f[self.n]))
            }
        }
    }

    /// Antiderivative from z = 0 at every node.
    pub fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        match &self.backend {
            Backend::Chebyshev(g) => g.antider().dot(&ArrayView1::from(f)).to_vec(),
            Backend::Sine(tr) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
                let mut a = vec![0.0; n + 1];
                tr.dct1(f, &mut a, &mut buf);
                let nf = n as f64;
                let kappa = std::f64::consts::PI / self.height;
                let mut s = vec![0.0; n + 1];
                for k in 1..n {
                    s[k] = a[k] / nf / (k as f64 * kappa);
                }
                let mut out = vec![0.0; n + 1];
                tr.dst1(&s, &mut out, &mut buf);
                let mean = 0.5 * a[0] / nf;
                for (o, z) in out.iter_mut().zip(&self.z) {
                    *o += mean * z;
                }
                out
            }
            Backend::Fd4 => {
                let h = self.height / n as f64;
                let mut out = vec![0.0; n + 1];
                for i in 1..=n {
                    out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
                }
                out
            }
        }
    }

    /// W_t at every node before the boundary values are enforced.
    pub fn rhs_unforced(&self, w: &[f64], out: &mut [f64]) {
        let Derivatives { wz, wzz } = self.derivatives(w);
        let f: Vec<f64> = (0..=self.n).map(|i| wz[i] * wz[i] - w[i] * wzz[i]).collect();
        let sq: Vec<f64> = wz.iter().map(|v| v * v).collect();
        let global = 2.0 / self.height * self.integrate(&sq);
        let inner = self.antiderivative(&f);
        for i in 0..=self.n {
            out[i] = inner[i] - self.z[i] * global;
        }
    }

    /// W_t with W_t(0) = W_t(H) = 0 imposed.
    pub fn rhs_into(&self, w: &[f64], out: &mut [f64]) {
        self.rhs_unforced(w, out);
        out[0] = 0.0;
        out[self.n] = 0.0;
    }

    pub fn rhs(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        self.rhs_into(w, &mut out);
        out
    }
}

/// max |v|.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
