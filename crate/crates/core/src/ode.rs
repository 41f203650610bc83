//! Dormand-Prince 5(4) embedded Runge-Kutta stepper with adaptive step control.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("right-hand side is not finite at t = {t:e}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub safety: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            h_init: None,
            h_max: f64::INFINITY,
            safety: 0.9,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Information about one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accepted {
    pub t: f64,
    pub h: f64,
    pub error_norm: f64,
    pub rejected: usize,
}

/// Adaptive integrator state. The right-hand side is supplied on every call so that
/// the stepper owns no reference to the system.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    t: f64,
    y: Vec<f64>,
    h: f64,
    controls: StepControls,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    fsal_valid: bool,
    accepted: usize,
    rejected: usize,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: Vec<f64>, controls: StepControls) -> Self {
        let n = y0.len();
        let k = std::array::from_fn(|_| vec![0.0; n]);
        Self {
            t: t0,
            y: y0,
            h: controls.h_init.unwrap_or(0.0),
            controls,
            k,
            tmp: vec![0.0; n],
            fsal_valid: false,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Derivative at the current state, if already available from the last stage.
    pub fn current_derivative(&self) -> Option<&[f64]> {
        self.fsal_valid.then(|| self.k[0].as_slice())
    }

    /// Applies an in-place modification to the state (projection, boundary
    /// enforcement, filtering). Invalidates the cached derivative.
    pub fn modify_state<G: FnOnce(&mut [f64])>(&mut self, g: G) {
        g(&mut self.y);
        self.fsal_valid = false;
    }

    fn ensure_derivative<F>(&mut self, f: &mut F) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if !self.fsal_valid {
            f(self.t, &self.y, &mut self.k[0]);
            if self.k[0].iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite { t: self.t });
            }
            self.fsal_valid = true;
        }
        Ok(())
    }

    fn initial_step<F>(&mut self, f: &mut F) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.controls.abs_tol + self.controls.rel_tol * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / n).sqrt();
        d1 = (d1 / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        f(self.t + h0, &self.tmp, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.controls.abs_tol + self.controls.rel_tol * self.y[i].abs();
            d2 += ((self.k[1][i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        if h1.is_finite() {
            (100.0 * h0).min(h1)
        } else {
            h0
        }
    }

    /// Takes one accepted step, never stepping past `t_limit`.
    pub fn step<F>(&mut self, f: &mut F, t_limit: f64) -> Result<Accepted, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        self.ensure_derivative(f)?;
        if self.h <= 0.0 {
            self.h = self.initial_step(f);
        }
        let n = self.y.len();
        let mut rejected_here = 0;
        loop {
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.controls.h_max);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t: self.t, h });
            }

            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let y = &self.y;
            let tmp = &mut self.tmp;
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(self.t + C2 * h, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(self.t + C3 * h, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(self.t + C4 * h, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(self.t + C5 * h, tmp, k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(self.t + h, tmp, k6);
            for i in 0..n {
                tmp[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(self.t + h, tmp, k7);

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                if !e.is_finite() || !tmp[i].is_finite() {
                    finite = false;
                    break;
                }
                let sc = self.controls.abs_tol
                    + self.controls.rel_tol * y[i].abs().max(tmp[i].abs());
                err += (e / sc).powi(2);
            }
            let err = if finite {
                (err / n.max(1) as f64).sqrt()
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                let t_new = if clipped { t_limit } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.tmp);
                self.k.swap(0, 6);
                self.t = t_new;
                self.accepted += 1;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (self.controls.safety * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a step clipped to the output time says nothing about the natural step
                if !clipped {
                    self.h = h * fac;
                }
                return Ok(Accepted {
                    t: self.t,
                    h,
                    error_norm: err,
                    rejected: rejected_here,
                });
            }
            rejected_here += 1;
            self.rejected += 1;
            let fac = if err.is_finite() {
                (self.controls.safety * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            self.h = h * fac;
        }
    }

    /// Integrates to `t_end`, calling `after_step` after each accepted step.
    pub fn integrate_to<F, G>(&mut self, f: &mut F, t_end: f64, mut after_step: G) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        G: FnMut(&mut Self, &Accepted) -> bool,
    {
        while self.t < t_end {
            let acc = self.step(f, t_end)?;
            if !after_step(self, &acc) {
                break;
            }
        }
        Ok(())
    }
}
