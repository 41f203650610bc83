//! Special functions and singular quadrature used by the profile construction.
//!
//! Everything here is a pure function of its arguments. Accuracy targets are
//! collected in [`SpecfunTolerances`]; the free functions use the defaults and
//! the `*_with` variants take explicit tolerances.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },
    #[error("{function} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        function: &'static str,
        iterations: usize,
        residual: f64,
    },
}

fn domain(function: &'static str, detail: impl Into<String>) -> SpecfunError {
    SpecfunError::Domain {
        function,
        detail: detail.into(),
    }
}

/// Iteration limits and residual targets for the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecfunTolerances {
    /// Required `|I_x(a,b) - y|` for the inverse incomplete Beta function.
    pub inverse_beta_residual: f64,
    pub inverse_beta_max_iter: usize,
    pub continued_fraction_eps: f64,
    pub continued_fraction_max_iter: usize,
    /// Newton stopping threshold for Jacobi roots.
    pub jacobi_root_tol: f64,
    pub jacobi_max_iter: usize,
}

impl Default for SpecfunTolerances {
    fn default() -> Self {
        Self {
            inverse_beta_residual: 1e-12,
            inverse_beta_max_iter: 200,
            continued_fraction_eps: 3.0 * f64::EPSILON,
            continued_fraction_max_iter: 1000,
            jacobi_root_tol: 1e-15,
            jacobi_max_iter: 100,
        }
    }
}

// Lanczos coefficients (r = 10.900511, 11 terms).
const LANCZOS_R: f64 = 10.900511;
const LANCZOS_D: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];
/// ln(2 * sqrt(e / pi))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// zeta(k) for k = 2..=40.
const ZETA: [f64; 39] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_2,
    1.082_323_233_711_138_1,
    1.036_927_755_143_37,
    1.017_343_061_984_449_2,
    1.008_349_277_381_923,
    1.004_077_356_197_944_4,
    1.002_008_392_826_082_1,
    1.000_994_575_127_818,
    1.000_494_188_604_119_4,
    1.000_246_086_553_308,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_8,
    1.000_030_588_236_307,
    1.000_015_282_259_408_6,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265,
    1.000_001_908_212_716_5,
    1.000_000_953_962_033_8,
    1.000_000_476_932_986_9,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926,
    1.000_000_059_608_189,
    1.000_000_029_803_503_4,
    1.000_000_014_901_554_9,
    1.000_000_007_450_711_8,
    1.000_000_003_725_334,
    1.000_000_001_862_659_8,
    1.000_000_000_931_327_5,
    1.000_000_000_465_662_8,
    1.000_000_000_232_831,
    1.000_000_000_116_415_5,
    1.000_000_000_058_207_7,
    1.000_000_000_029_103_8,
    1.000_000_000_014_552,
    1.000_000_000_007_276,
    1.000_000_000_003_638,
    1.000_000_000_001_819,
    1.000_000_000_000_909_5,
];

/// ln Γ(1 + e) for |e| < 0.35 from the zeta-value Taylor series.
fn ln_gamma_1p_series(e: f64) -> f64 {
    let mut acc = 0.0;
    for (i, z) in ZETA.iter().enumerate().rev() {
        let k = (i + 2) as f64;
        let sign = if (i + 2) % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc * e + sign * z / k;
    }
    // acc currently holds sum_k c_k e^(k-2); shift by e^2
    -EULER_GAMMA * e + acc * e * e
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let s = LANCZOS_D
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_D[0], |s, (i, &d)| s + d / (x + i as f64 - 1.0));
    s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
}

/// Natural logarithm of the Gamma function for `x > 0`.
///
/// Lanczos approximation away from the zeros of ln Γ; near x = 1 and x = 2
/// a zeta-series keeps the relative error small where the value vanishes.
pub fn ln_gamma(x: f64) -> Result<f64, SpecfunError> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain("ln_gamma", format!("x = {x} must be positive")));
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_pos(x + 1.0) - x.ln();
    }
    if (x - 1.0).abs() < 0.3 {
        return ln_gamma_1p_series(x - 1.0);
    }
    if (x - 2.0).abs() < 0.35 {
        let e = x - 2.0;
        return e.ln_1p() + ln_gamma_1p_series(e);
    }
    ln_gamma_lanczos(x)
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64, SpecfunError> {
    check_shape("ln_beta", a, b)?;
    Ok(ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b))
}

/// The Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta(a: f64, b: f64) -> Result<f64, SpecfunError> {
    ln_beta(a, b).map(f64::exp)
}

fn check_shape(function: &'static str, a: f64, b: f64) -> Result<(), SpecfunError> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(domain(
            function,
            format!("shape parameters must be positive and finite (a = {a}, b = {b})"),
        ));
    }
    Ok(())
}

fn check_unit(function: &'static str, x: f64) -> Result<(), SpecfunError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(function, format!("argument {x} outside [0, 1]")));
    }
    Ok(())
}

/// Modified Lentz evaluation of the incomplete Beta continued fraction.
fn beta_continued_fraction(
    a: f64,
    b: f64,
    x: f64,
    tol: &SpecfunTolerances,
) -> Result<f64, SpecfunError> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=tol.continued_fraction_max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= tol.continued_fraction_eps {
            return Ok(h);
        }
    }
    Err(SpecfunError::NonConvergence {
        function: "reg_inc_beta",
        iterations: tol.continued_fraction_max_iter,
        residual: f64::NAN,
    })
}

/// Returns `(I_x(a,b), 1 - I_x(a,b))`, each computed without cancellation.
pub(crate) fn reg_inc_beta_pair(
    x: f64,
    a: f64,
    b: f64,
    tol: &SpecfunTolerances,
) -> Result<(f64, f64), SpecfunError> {
    check_shape("reg_inc_beta", a, b)?;
    check_unit("reg_inc_beta", x)?;
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x == 1.0 {
        return Ok((1.0, 0.0));
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b)?;
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = front * beta_continued_fraction(a, b, x, tol)? / a;
        Ok((lower, 1.0 - lower))
    } else {
        let upper = front * beta_continued_fraction(b, a, 1.0 - x, tol)? / b;
        Ok((1.0 - upper, upper))
    }
}

/// Regularized incomplete Beta function I_x(a, b).
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64, SpecfunError> {
    reg_inc_beta_pair(x, a, b, &SpecfunTolerances::default()).map(|(v, _)| v)
}

/// Beta density x^(a-1) (1-x)^(b-1) / B(a,b), evaluated in log space.
fn beta_density(x: f64, one_minus_x: f64, a: f64, b: f64, ln_b: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * one_minus_x.ln() - ln_b).exp()
}

/// Solves I_x(a,b) = y for a root known to lie in (0, 1/2], returning `(x, 1 - x)`.
/// Newton runs on ln I as a function of ln x, which is close to linear for small x.
fn inverse_small(
    y: f64,
    a: f64,
    b: f64,
    tol: &SpecfunTolerances,
) -> Result<(f64, f64), SpecfunError> {
    let ln_b = ln_beta(a, b)?;
    let ln_y = y.ln();
    let mut lo = f64::MIN_POSITIVE.ln();
    let mut hi = 0.5_f64.ln();
    // I_x ~ x^a / (a B) near 0
    let guess = (ln_y + a.ln() + ln_b) / a;
    if guess < lo {
        let (i_lo, _) = reg_inc_beta_pair(f64::MIN_POSITIVE, a, b, tol)?;
        if i_lo >= y {
            // root below the normal range, where the leading power law is exact
            return Ok((guess.exp(), 1.0));
        }
    }
    let mut u = if guess < hi { guess.max(lo) } else { hi - 0.1 };
    let mut best = (f64::INFINITY, u);
    for _ in 0..tol.inverse_beta_max_iter {
        let x = u.exp();
        let (ix, _) = reg_inc_beta_pair(x, a, b, tol)?;
        let f = ix - y;
        if f.abs() < best.0 {
            best = (f.abs(), u);
        }
        if f == 0.0 || ix <= 0.0 {
            if ix <= 0.0 {
                lo = u;
                u = 0.5 * (lo + hi);
                continue;
            }
            break;
        }
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let g = ix.ln() - ln_y;
        let slope = x * beta_density(x, 1.0 - x, a, b, ln_b) / ix;
        let mut next = u - g / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - u).abs();
        u = next;
        if step <= 2.0 * f64::EPSILON * u.abs().max(1.0) || hi - lo <= 2.0 * f64::EPSILON * u.abs().max(1.0) {
            let (ix, _) = reg_inc_beta_pair(u.exp(), a, b, tol)?;
            if (ix - y).abs() < best.0 {
                best = ((ix - y).abs(), u);
            }
            break;
        }
    }
    if best.0 > tol.inverse_beta_residual {
        return Err(SpecfunError::NonConvergence {
            function: "inv_reg_inc_beta",
            iterations: tol.inverse_beta_max_iter,
            residual: best.0,
        });
    }
    let x = best.1.exp();
    Ok((x, 1.0 - x))
}

/// Returns `(x, 1 - x)` with I_x(a,b) = y. Whichever of x and 1 - x is smaller is
/// solved for directly, so both are accurate.
pub(crate) fn inv_reg_inc_beta_pair(
    y: f64,
    a: f64,
    b: f64,
    tol: &SpecfunTolerances,
) -> Result<(f64, f64), SpecfunError> {
    check_shape("inv_reg_inc_beta", a, b)?;
    check_unit("inv_reg_inc_beta", y)?;
    if y == 0.0 {
        return Ok((0.0, 1.0));
    }
    if y == 1.0 {
        return Ok((1.0, 0.0));
    }
    let (at_half, _) = reg_inc_beta_pair(0.5, a, b, tol)?;
    if y == at_half {
        return Ok((0.5, 0.5));
    }
    if y < at_half {
        inverse_small(y, a, b, tol)
    } else {
        // 1 - I_x(a,b) = I_{1-x}(b,a)
        let (s, one_minus_s) = inverse_small(1.0 - y, b, a, tol)?;
        Ok((one_minus_s, s))
    }
}

/// Inverse of the regularized incomplete Beta function in its first argument.
pub fn inv_reg_inc_beta(y: f64, a: f64, b: f64) -> Result<f64, SpecfunError> {
    inv_reg_inc_beta_with(y, a, b, &SpecfunTolerances::default())
}

pub fn inv_reg_inc_beta_with(
    y: f64,
    a: f64,
    b: f64,
    tol: &SpecfunTolerances,
) -> Result<f64, SpecfunError> {
    inv_reg_inc_beta_pair(y, a, b, tol).map(|(x, _)| x)
}

/// Gauss-Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    n: usize,
    alpha: f64,
    beta: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl JacobiRule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Nodes in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates the weighted integral of `f` over [-1, 1].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Jacobi polynomial P_n and its derivative at x via the three-term recurrence.
fn jacobi_eval(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64, f64) {
    let ab = alpha + beta;
    let mut p_prev = 1.0;
    let mut p = 0.5 * (alpha - beta + (ab + 2.0) * x);
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let next = (a2 * p - a3 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let c = 2.0 * nf + ab;
    let dp = (nf * (alpha - beta - c * x) * p + 2.0 * (nf + alpha) * (nf + beta) * p_prev)
        / (c * (1.0 - x * x));
    (p, dp, p_prev)
}

/// Gauss-Jacobi nodes and weights.
///
/// Roots come from Newton iteration on the recurrence, started from
/// Chebyshev points and deflated against the roots already found.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<JacobiRule, SpecfunError> {
    gauss_jacobi_with(n, alpha, beta, &SpecfunTolerances::default())
}

pub fn gauss_jacobi_with(
    n: usize,
    alpha: f64,
    beta: f64,
    tol: &SpecfunTolerances,
) -> Result<JacobiRule, SpecfunError> {
    if n == 0 {
        return Err(domain("gauss_jacobi", "need at least one node"));
    }
    if !(alpha > -1.0 && alpha.is_finite()) || !(beta > -1.0 && beta.is_finite()) {
        return Err(domain(
            "gauss_jacobi",
            format!("exponents must exceed -1 (alpha = {alpha}, beta = {beta})"),
        ));
    }

    let mut roots: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = ((2 * i + 1) as f64 * PI / (2 * n) as f64).cos();
        let mut converged = false;
        let mut last_step = f64::INFINITY;
        for _ in 0..tol.jacobi_max_iter {
            let (p, dp, _) = jacobi_eval(n, alpha, beta, x);
            let deflate: f64 = roots.iter().map(|r| 1.0 / (x - r)).sum();
            let step = p / (dp - deflate * p);
            let mut next = x - step;
            // stay inside (-1, 1)
            if next >= 1.0 {
                next = 0.5 * (x + 1.0);
            } else if next <= -1.0 {
                next = 0.5 * (x - 1.0);
            }
            last_step = (next - x).abs();
            x = next;
            if last_step <= tol.jacobi_root_tol * (1.0 + x.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SpecfunError::NonConvergence {
                function: "gauss_jacobi",
                iterations: tol.jacobi_max_iter,
                residual: last_step,
            });
        }
        roots.push(x);
    }
    roots.sort_by(f64::total_cmp);

    let nf = n as f64;
    let ln_const = ln_gamma_pos(nf + alpha + 1.0) + ln_gamma_pos(nf + beta + 1.0)
        - ln_gamma_pos(nf + alpha + beta + 1.0)
        - ln_gamma_pos(nf + 1.0)
        + (alpha + beta + 1.0) * std::f64::consts::LN_2;
    let weights = roots
        .iter()
        .map(|&x| {
            let (_, dp, _) = jacobi_eval(n, alpha, beta, x);
            (ln_const - ((1.0 - x) * (1.0 + x)).ln() - 2.0 * dp.abs().ln()).exp()
        })
        .collect();

    Ok(JacobiRule {
        n,
        alpha,
        beta,
        nodes: roots,
        weights,
    })
}
