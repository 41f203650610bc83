//! Chebyshev-Gauss-Lobatto collocation on an interval [0, H].

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

/// Collocation operators on the N+1 Chebyshev-Gauss-Lobatto points of [0, H].
///
/// Nodes are stored in increasing order, `z[0] = 0` and `z[N] = H`.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    n: usize,
    height: f64,
    z: Vec<f64>,
    diff: Array2<f64>,
    antider: Array2<f64>,
}

impl ChebyshevGrid {
    pub fn new(n: usize, height: f64) -> Self {
        assert!(n >= 2, "Chebyshev grid needs at least three points");
        let z = nodes(n, height);
        let diff = differentiation_matrix(n, height);
        let antider = antiderivative_matrix(n, height);
        Self {
            n,
            height,
            z,
            diff,
            antider,
        }
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

    /// d/dz acting on nodal values.
    pub fn diff(&self) -> &Array2<f64> {
        &self.diff
    }

    /// Maps nodal values of f to nodal values of the integral of f from 0 to z.
    pub fn antider(&self) -> &Array2<f64> {
        &self.antider
    }

    /// Clenshaw-Curtis weights: the last row of the antiderivative operator.
    pub fn weights(&self) -> Array1<f64> {
        self.antider.row(self.n).to_owned()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.antider
            .row(self.n)
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Chebyshev-Gauss-Lobatto nodes mapped to [0, H] in increasing order.
pub fn nodes(n: usize, height: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            if j == n {
                height
            } else {
                let s = (j as f64 * PI / (2 * n) as f64).sin();
                height * s * s
            }
        })
        .collect()
}

/// Clenshaw-Curtis weights on [0, H] from the classical cosine-sum formula.
pub fn clenshaw_curtis_weights(n: usize, height: f64) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = j as f64 * PI / nf;
        let mut v = 1.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            v -= b * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * v / nf * 0.5 * height;
    }
    w
}

fn differentiation_matrix(n: usize, height: f64) -> Array2<f64> {
    // x_j = cos(j pi / n) runs from 1 to -1 while z = H (1 - x) / 2 runs from 0 to H,
    // so d/dz = -(2/H) d/dx.
    let nf = n as f64;
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let mut d = Array2::<f64>::zeros((n + 1, n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if i == j {
                continue;
            }
            // x_i - x_j = -2 sin((i+j) pi / 2n) sin((i-j) pi / 2n)
            let dx = -2.0
                * ((i + j) as f64 * PI / (2.0 * nf)).sin()
                * ((i as f64 - j as f64) * PI / (2.0 * nf)).sin();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            d[[i, j]] = c(i) / c(j) * sign / dx;
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[[i, j]]).sum();
        d[[i, i]] = -s;
    }
    d.mapv_inplace(|v| -2.0 / height * v);
    d
}

fn antiderivative_matrix(n: usize, height: f64) -> Array2<f64> {
    let nf = n as f64;
    // cos(r pi / n) for r in 0..2n
    let cos_table: Vec<f64> = (0..2 * n).map(|r| (r as f64 * PI / nf).cos()).collect();
    let cos_kj = |k: usize, j: usize| cos_table[(k * j) % (2 * n)];
    // T_{n+1}(x_j) = (-1)^j cos(j pi / n)
    let t_top = |j: usize| {
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        s * cos_table[j % (2 * n)]
    };

    let mut a = Array2::<f64>::zeros((n + 1, n + 1));
    let mut coef = vec![0.0; n + 1];
    let mut integ = vec![0.0; n + 2];
    for m in 0..=n {
        let wm = if m == 0 || m == n { 0.5 } else { 1.0 };
        for (k, ck) in coef.iter_mut().enumerate() {
            let half = if k == 0 || k == n { 0.5 } else { 1.0 };
            *ck = 2.0 / nf * wm * half * cos_kj(k, m);
        }
        // integrate the Chebyshev series term by term
        for v in integ.iter_mut() {
            *v = 0.0;
        }
        let get = |k: usize| if k <= n { coef[k] } else { 0.0 };
        integ[1] = get(0) - 0.5 * get(2);
        for k in 2..=n + 1 {
            integ[k] = (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
        }
        // integral from z = 0 (x = 1) to z_j is (H/2) (F(1) - F(x_j))
        for j in 0..=n {
            let mut s = 0.0;
            for (k, &b) in integ.iter().enumerate().skip(1) {
                let tk = if k == n + 1 { t_top(j) } else { cos_kj(k, j) };
                s += b * (1.0 - tk);
            }
            a[[j, m]] = 0.5 * height * s;
        }
    }
    a
}
