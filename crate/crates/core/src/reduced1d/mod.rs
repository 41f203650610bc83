//! Time integration of the reduced nonlocal equation
//!
//! ```text
//! W_tz − W_z² + W W_zz + (2/H) ∫₀ᴴ W_z² dz = 0,   W(0, t) = W(H, t) = 0,
//! ```
//!
//! evolved in the antiderivative form W_t = ∫₀ᶻ (W_z² − W W_zz) − (2z/H) ∫₀ᴴ W_z².

pub mod blowup;
pub mod spatial;

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blowup::{estimate_blowup_time, select_fit_window, BlowupFit, FitError, FitSettings};
pub use spatial::{sup_norm, Discretization, Operator1D};

use crate::ode::{Dopri5, OdeError, StepControls};
use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Reduced1dError {
    #[error("state has {got} nodes, operator expects {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("state contains non-finite values")]
    NonFinite,
    #[error("boundary values must vanish (W(0) = {0:e}, W(H) = {1:e})")]
    Boundary(f64, f64),
    #[error("invalid controls: {0}")]
    Controls(String),
}

/// W(z, t) at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State1D {
    pub t: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub height: f64,
}

impl State1D {
    pub fn zeros(op: &Operator1D) -> Self {
        Self {
            t: 0.0,
            z: op.z().to_vec(),
            w: vec![0.0; op.n() + 1],
            height: op.height(),
        }
    }

    /// λ·φ sampled on the profile grid.
    pub fn from_profile(profile: &Profile, scale: f64) -> Self {
        Self {
            t: 0.0,
            z: profile.z.clone(),
            w: profile.phi.iter().map(|v| scale * v).collect(),
            height: profile.height(),
        }
    }

    pub fn check(&self) -> Result<(), Reduced1dError> {
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Reduced1dError::NonFinite);
        }
        let n = self.w.len() - 1;
        if self.w[0] != 0.0 || self.w[n] != 0.0 {
            return Err(Reduced1dError::Boundary(self.w[0], self.w[n]));
        }
        Ok(())
    }
}

/// ∂W/∂t at the nodes of `state`, with the boundary values imposed.
pub fn rhs(op: &Operator1D, state: &State1D) -> Result<Vec<f64>, Reduced1dError> {
    check_grid(op, state)?;
    if state.w.iter().any(|v| !v.is_finite()) {
        return Err(Reduced1dError::NonFinite);
    }
    Ok(op.rhs(&state.w))
}

fn check_grid(op: &Operator1D, state: &State1D) -> Result<(), Reduced1dError> {
    if state.w.len() != op.n() + 1 || state.z.len() != op.n() + 1 {
        return Err(Reduced1dError::GridMismatch {
            expected: op.n() + 1,
            got: state.w.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controls1D {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub blowup_threshold: f64,
    pub max_steps: usize,
    /// Times at which full snapshots are stored, in addition to the start and end.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for Controls1D {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            blowup_threshold: 1e6,
            max_steps: 200_000,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EndTime,
    Blowup,
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EndTime => "end_time",
            Self::Blowup => "blowup",
            Self::StepUnderflow => "step_underflow",
            Self::NonFinite => "non_finite",
            Self::MaxSteps => "max_steps",
        }
    }
}

/// Diagnostics recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub max_abs_w: f64,
    pub max_abs_wz: f64,
    /// Relative sup error against the self-similar reference, NaN without one.
    pub sup_error: f64,
    /// |∂W/∂t(H)| before the boundary value was imposed.
    pub top_compatibility: f64,
}

/// Self-similar reference λφ(z)/(1 − λt).
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilar {
    pub phi: Vec<f64>,
    pub scale: f64,
}

impl SelfSimilar {
    pub fn new(profile: &Profile, scale: f64) -> Self {
        Self {
            phi: profile.phi.clone(),
            scale,
        }
    }

    pub fn blowup_time(&self) -> f64 {
        1.0 / self.scale
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let f = self.scale / (1.0 - self.scale * t);
        self.phi.iter().map(|v| f * v).collect()
    }

    pub fn relative_error(&self, t: f64, w: &[f64]) -> f64 {
        let f = self.scale / (1.0 - self.scale * t);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for (wi, pi) in w.iter().zip(&self.phi) {
            num = num.max((wi - f * pi).abs());
            den = den.max((f * pi).abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<State1D>,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest unforced |∂W/∂t(H)| seen over the run, scaled by max |∂W/∂t|.
    pub max_top_compatibility: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State1D {
        self.snapshots.last().expect("trajectory always has a snapshot")
    }

    /// (t, max |W_z|) pairs for blowup extrapolation.
    pub fn growth_samples(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.max_abs_wz)).collect()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&State1D> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

pub fn integrate(
    op: &Operator1D,
    initial: &State1D,
    t_end: f64,
    controls: &Controls1D,
    reference: Option<&SelfSimilar>,
) -> Result<Trajectory, Reduced1dError> {
    check_grid(op, initial)?;
    initial.check()?;
    if !(controls.rel_tol > 0.0 && controls.abs_tol > 0.0 && controls.blowup_threshold > 0.0) {
        return Err(Reduced1dError::Controls(
            "tolerances and threshold must be positive".into(),
        ));
    }
    if !(t_end >= initial.t) {
        return Err(Reduced1dError::Controls(format!(
            "end time {t_end} precedes start time {}",
            initial.t
        )));
    }
    if let Some(r) = reference {
        if r.phi.len() != initial.w.len() {
            return Err(Reduced1dError::GridMismatch {
                expected: initial.w.len(),
                got: r.phi.len(),
            });
        }
    }
    let n = op.n();
    let top = Cell::new(0.0_f64);
    let top_scale = Cell::new(0.0_f64);
    let mut f = |_t: f64, w: &[f64], out: &mut [f64]| {
        op.rhs_unforced(w, out);
        top.set(out[n].abs());
        top_scale.set(sup_norm(out));
        out[0] = 0.0;
        out[n] = 0.0;
    };

    let step_controls = StepControls {
        rel_tol: controls.rel_tol,
        abs_tol: controls.abs_tol,
        ..Default::default()
    };
    let mut stepper = Dopri5::new(initial.t, initial.w.clone(), step_controls);
    let mut stops: Vec<f64> = controls
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > initial.t && *t < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(t_end);

    let make_sample = |t: f64, w: &[f64], top: f64| {
        let d = op.derivatives(w);
        Sample {
            t,
            max_abs_w: sup_norm(w),
            max_abs_wz: sup_norm(&d.wz),
            sup_error: reference.map_or(f64::NAN, |r| r.relative_error(t, w)),
            top_compatibility: top,
        }
    };

    let snapshot = |t: f64, w: &[f64]| State1D {
        t,
        z: initial.z.clone(),
        w: w.to_vec(),
        height: initial.height,
    };

    let mut rhs0 = vec![0.0; n + 1];
    f(initial.t, &initial.w, &mut rhs0);
    let mut max_top = relative(top.get(), top_scale.get());
    let mut samples = vec![make_sample(initial.t, &initial.w, top.get())];
    let mut snapshots = vec![snapshot(initial.t, &initial.w)];
    let mut termination = Termination::EndTime;

    'outer: for &stop in &stops {
        while stepper.t() < stop {
            if stepper.accepted_steps() >= controls.max_steps {
                termination = Termination::MaxSteps;
                break 'outer;
            }
            match stepper.step(&mut f, stop) {
                Ok(_) => {}
                Err(OdeError::StepUnderflow { .. }) => {
                    termination = Termination::StepUnderflow;
                    break 'outer;
                }
                Err(OdeError::NonFinite { .. }) => {
                    termination = Termination::NonFinite;
                    break 'outer;
                }
            }
            // the last stage was evaluated at the accepted state
            let top_now = top.get();
            max_top = max_top.max(relative(top_now, top_scale.get()));
            stepper.modify_state(|w| {
                w[0] = 0.0;
                w[n] = 0.0;
            });
            let t = stepper.t();
            let w = stepper.y();
            let sample = make_sample(t, w, top_now);
            let over = sample.max_abs_w > controls.blowup_threshold;
            samples.push(sample);
            if over {
                termination = Termination::Blowup;
                snapshots.push(snapshot(t, w));
                break 'outer;
            }
        }
        snapshots.push(snapshot(stepper.t(), stepper.y()));
    }
    if termination != Termination::EndTime
        && termination != Termination::Blowup
        && snapshots.last().map(|s| s.t) != Some(stepper.t())
    {
        snapshots.push(snapshot(stepper.t(), stepper.y()));
    }

    Ok(Trajectory {
        snapshots,
        samples,
        termination,
        accepted_steps: stepper.accepted_steps(),
        rejected_steps: stepper.rejected_steps(),
        max_top_compatibility: max_top,
    })
}

fn relative(v: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        v / scale
    } else {
        v
    }
}

/// Relative sup error of every snapshot against λφ/(1 − λt).
pub fn compare_self_similar(
    trajectory: &Trajectory,
    profile: &Profile,
    scale: f64,
) -> Result<Vec<(f64, f64)>, Reduced1dError> {
    let reference = SelfSimilar::new(profile, scale);
    let mut out = Vec::with_capacity(trajectory.snapshots.len());
    for s in &trajectory.snapshots {
        if s.z.len() != profile.z.len()
            || s.z.iter().zip(&profile.z).any(|(a, b)| (a - b).abs() > 1e-12 * s.height)
        {
            return Err(Reduced1dError::GridMismatch {
                expected: s.z.len(),
                got: profile.z.len(),
            });
        }
        out.push((s.t, reference.relative_error(s.t, &s.w)));
    }
    Ok(out)
}

/// W_tz recovered from W and W_t: W_tz = W_z² − W W_zz − (2/H)∫W_z².
pub fn w_tz(op: &Operator1D, w: &[f64]) -> Vec<f64> {
    let d = op.derivatives(w);
    let sq: Vec<f64> = d.wz.iter().map(|v| v * v).collect();
    let global = 2.0 / op.height() * op.integrate(&sq);
    (0..w.len())
        .map(|i| d.wz[i] * d.wz[i] - w[i] * d.wzz[i] - global)
        .collect()
}

/// Values of a fine-grid vector at the nodes of the grid with half the resolution.
/// Both uniform and Chebyshev-Gauss-Lobatto grids nest this way.
pub fn restrict_to_coarse(fine: &[f64]) -> Vec<f64> {
    fine.iter().step_by(2).copied().collect()
}
