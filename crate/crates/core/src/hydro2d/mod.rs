//! Pseudo-spectral solver for the two-dimensional inviscid hydrostatic channel
//!
//! ```text
//! u_t + u u_x + w u_z + p_x = ν (u_xx + u_zz),   u_x + w_z = 0,   p_z = 0,
//! ```
//!
//! periodic in x with period L, w = 0 at z = 0 and z = H. Fields stay in the class
//! with u odd in x, so u = Σ S_n(z) sin(κ_n x) with κ_n = 2πn/L. The pressure closes
//! as p_x = −(2/H) ∫₀ᴴ u u_x dz.

mod transform;

use std::cell::Cell;
use std::f64::consts::PI;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chebyshev::ChebyshevGrid;
use crate::ode::{Dopri5, OdeError, StepControls};
use crate::profile::{GridKind, Profile};
use transform::RowTransform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Hydro2dError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("wavenumber {k} exceeds the dealiasing cutoff {cutoff}")]
    BeyondCutoff { k: usize, cutoff: usize },
    #[error("profile grid does not match the z-collocation grid: {0}")]
    GridMismatch(String),
    #[error("field contains non-finite values")]
    NonFinite,
}

/// u(x, z) at one instant, as complex Fourier coefficients in x at each z node.
/// With u = Σ_n (û_n e^{iκ_n x} + c.c.), a sine amplitude S_n corresponds to
/// û_n = −i S_n / 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub t: f64,
    pub l: f64,
    pub h: f64,
    pub k_max: usize,
    pub nz: usize,
    pub u_hat: Array2<Complex64>,
    pub nu: f64,
}

impl Field2D {
    pub fn zeros(l: f64, h: f64, k_max: usize, nz: usize) -> Self {
        Self {
            t: 0.0,
            l,
            h,
            k_max,
            nz,
            u_hat: Array2::zeros((nz + 1, k_max + 1)),
            nu: 0.0,
        }
    }

    /// Grid points in x.
    pub fn nx(&self) -> usize {
        2 * self.k_max
    }

    /// Highest mode kept by the 2/3 rule.
    pub fn cutoff(&self) -> usize {
        dealias_cutoff(self.k_max)
    }

    pub fn sine_amplitudes(&self) -> Array2<f64> {
        self.u_hat.mapv(|c| -2.0 * c.im)
    }

    pub fn from_sine_amplitudes(template: &Field2D, t: f64, amps: ArrayView2<f64>) -> Self {
        Self {
            t,
            u_hat: amps.mapv(|s| Complex64::new(0.0, -0.5 * s)),
            ..template.clone()
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            u_hat: self.u_hat.mapv(|c| c * lambda),
            ..self.clone()
        }
    }
}

pub fn dealias_cutoff(k_max: usize) -> usize {
    (2 * k_max) / 3
}

/// Discrete operators shared by every evaluation on one grid.
#[derive(Debug, Clone)]
pub struct Operator2D {
    pub l: f64,
    pub h: f64,
    pub k_max: usize,
    pub nz: usize,
    pub nu: f64,
    cheb: ChebyshevGrid,
    kappa: Vec<f64>,
    transform: RowTransform,
}

/// Diagnostics of a right-hand-side evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RhsDiagnostics {
    /// Largest cosine (even) coefficient of the tendency relative to the largest
    /// coefficient, before projection onto the odd class.
    pub odd_residual: f64,
}

impl Operator2D {
    pub fn new(l: f64, h: f64, k_max: usize, nz: usize, nu: f64) -> Result<Self, Hydro2dError> {
        if !(l > 0.0 && h > 0.0 && l.is_finite() && h.is_finite()) {
            return Err(Hydro2dError::Config("L and H must be positive".into()));
        }
        if k_max < 3 || nz < 4 {
            return Err(Hydro2dError::Config(format!(
                "grid too small (k_max = {k_max}, Nz = {nz})"
            )));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Hydro2dError::Config(format!("viscosity must be >= 0, got {nu}")));
        }
        Ok(Self {
            l,
            h,
            k_max,
            nz,
            nu,
            cheb: ChebyshevGrid::new(nz, h),
            kappa: (0..=k_max).map(|n| 2.0 * PI * n as f64 / l).collect(),
            transform: RowTransform::new(2 * k_max, k_max),
        })
    }

    pub fn for_field(field: &Field2D) -> Result<Self, Hydro2dError> {
        Self::new(field.l, field.h, field.k_max, field.nz, field.nu)
    }

    pub fn z(&self) -> &[f64] {
        self.cheb.z()
    }

    pub fn x(&self) -> Vec<f64> {
        let nx = 2 * self.k_max;
        (0..nx).map(|j| self.l * j as f64 / nx as f64).collect()
    }

    pub fn cutoff(&self) -> usize {
        dealias_cutoff(self.k_max)
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn chebyshev(&self) -> &ChebyshevGrid {
        &self.cheb
    }

    /// Zeroes the mean mode and modes above the cutoff, then removes the z-average of
    /// every mode so that the z-average of u_x vanishes.
    pub fn project(&self, amps: &mut Array2<f64>) {
        let cut = self.cutoff();
        amps.column_mut(0).fill(0.0);
        amps.slice_mut(s![.., cut + 1..]).fill(0.0);
        let wts = self.cheb.weights();
        for n in 1..=cut {
            let mut col = amps.column_mut(n);
            let mean = wts.dot(&col) / self.h;
            col.mapv_inplace(|v| v - mean);
        }
    }

    /// Largest |(1/H) ∫ κ_n S_n dz| over modes.
    pub fn compatibility_residual(&self, amps: &Array2<f64>) -> f64 {
        let wts = self.cheb.weights();
        (1..=self.k_max)
            .map(|n| (self.kappa[n] * wts.dot(&amps.column(n)) / self.h).abs())
            .fold(0.0, f64::max)
    }

    /// Cosine amplitudes of w = −∫₀ᶻ u_x dz.
    pub fn w_amplitudes(&self, amps: &Array2<f64>) -> Array2<f64> {
        let mut ux = amps.clone();
        for (n, mut col) in ux.axis_iter_mut(Axis(1)).enumerate() {
            col *= -self.kappa[n];
        }
        self.cheb.antider().dot(&ux)
    }

    /// w at x = 0 for every z node.
    pub fn trace(&self, amps: &Array2<f64>) -> Vec<f64> {
        self.w_amplitudes(amps).sum_axis(Axis(1)).to_vec()
    }

    /// Physical w on the (z, x) grid.
    pub fn diagnose_w(&self, amps: &Array2<f64>) -> Array2<f64> {
        self.transform.cos_to_physical(&self.w_amplitudes(amps))
    }

    /// Physical u on the (z, x) grid.
    pub fn physical_u(&self, amps: &Array2<f64>) -> Array2<f64> {
        self.transform.sin_to_physical(amps)
    }

    /// p_x at every x node.
    pub fn pressure_gradient(&self, amps: &Array2<f64>) -> Vec<f64> {
        let mut kx = amps.clone();
        for (n, mut col) in kx.axis_iter_mut(Axis(1)).enumerate() {
            col *= self.kappa[n];
        }
        let u = self.transform.sin_to_physical(amps);
        let ux = self.transform.cos_to_physical(&kx);
        let prod = &u * &ux;
        self.cheb
            .weights()
            .dot(&prod)
            .mapv(|v| -2.0 / self.h * v)
            .to_vec()
    }

    /// ∬ u²/2 dx dz.
    pub fn energy(&self, amps: &Array2<f64>) -> f64 {
        let sq = amps.mapv(|v| v * v);
        0.25 * self.l * self.cheb.weights().dot(&sq).sum()
    }

    /// ∫ S_n² dz for every mode.
    pub fn spectrum(&self, amps: &Array2<f64>) -> Array1<f64> {
        self.cheb.weights().dot(&amps.mapv(|v| v * v))
    }

    /// Energy fraction in the top tenth of the retained modes.
    pub fn top_band_fraction(&self, amps: &Array2<f64>) -> f64 {
        let spec = self.spectrum(amps);
        let total = spec.sum();
        if total <= 0.0 {
            return 0.0;
        }
        let cut = self.cutoff();
        let width = (cut / 10).max(1);
        spec.slice(s![cut + 1 - width..=cut]).sum() / total
    }

    /// Tendency of the sine amplitudes.
    pub fn rhs(&self, amps: &Array2<f64>) -> (Array2<f64>, RhsDiagnostics) {
        let nz1 = self.nz + 1;
        let d = self.cheb.diff();
        let mut kx = amps.clone();
        for (n, mut col) in kx.axis_iter_mut(Axis(1)).enumerate() {
            col *= self.kappa[n];
        }
        let uz_amp = d.dot(amps);
        let w_amp = self.cheb.antider().dot(&kx).mapv(|v| -v);

        let u = self.transform.sin_to_physical(amps);
        let ux = self.transform.cos_to_physical(&kx);
        let uz = self.transform.sin_to_physical(&uz_amp);
        let w = self.transform.cos_to_physical(&w_amp);

        let uux = &u * &ux;
        let px = self.cheb.weights().dot(&uux).mapv(|v| -2.0 / self.h * v);
        let mut r = uux + &(&w * &uz);
        r.mapv_inplace(|v| -v);
        for mut row in r.axis_iter_mut(Axis(0)) {
            row -= &px;
        }

        let (mut tend, even) = self.transform.physical_to_sin(&r);
        let scale = tend.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let odd_residual = if scale > 0.0 { even / scale } else { even };

        if self.nu > 0.0 {
            // ν(u_xx + u_zz), with u_z set to zero at the walls before the second derivative
            let mut g = uz_amp;
            g.row_mut(0).fill(0.0);
            g.row_mut(nz1 - 1).fill(0.0);
            let uzz = d.dot(&g);
            for n in 0..=self.k_max {
                let k2 = self.kappa[n] * self.kappa[n];
                for i in 0..nz1 {
                    tend[[i, n]] += self.nu * (uzz[[i, n]] - k2 * amps[[i, n]]);
                }
            }
        }
        self.project(&mut tend);
        (tend, RhsDiagnostics { odd_residual })
    }
}

/// Field of the blowup theorem: u₀ = −(L/2πk) sin(2πkx/L) φ′(z), whose w is
/// cos(2πkx/L) φ(z).
pub fn init_from_theorem(
    profile: &Profile,
    k: usize,
    l: f64,
    k_max: usize,
    nz: usize,
) -> Result<Field2D, Hydro2dError> {
    if k == 0 {
        return Err(Hydro2dError::Config("k must be a positive integer".into()));
    }
    let cutoff = dealias_cutoff(k_max);
    if k > cutoff {
        return Err(Hydro2dError::BeyondCutoff { k, cutoff });
    }
    if profile.grid != GridKind::Chebyshev || profile.n() != nz {
        return Err(Hydro2dError::GridMismatch(format!(
            "need a Chebyshev profile with N = {nz}, got {:?} with N = {}",
            profile.grid,
            profile.n()
        )));
    }
    let h = profile.height();
    let op = Operator2D::new(l, h, k_max, nz, 0.0)?;
    let mut amps = Array2::<f64>::zeros((nz + 1, k_max + 1));
    let c = -l / (2.0 * PI * k as f64);
    for (i, d) in profile.dphi.iter().enumerate() {
        amps[[i, k]] = c * d;
    }
    op.project(&mut amps);
    let template = Field2D::zeros(l, h, k_max, nz);
    Ok(Field2D::from_sine_amplitudes(&template, 0.0, amps.view()))
}

pub fn diagnose_w(field: &Field2D) -> Result<Array2<f64>, Hydro2dError> {
    let op = Operator2D::for_field(field)?;
    Ok(op.diagnose_w(&field.sine_amplitudes()))
}

pub fn pressure_gradient(field: &Field2D) -> Result<Vec<f64>, Hydro2dError> {
    let op = Operator2D::for_field(field)?;
    Ok(op.pressure_gradient(&field.sine_amplitudes()))
}

/// Time derivative of `u_hat`.
pub fn rhs2d(field: &Field2D) -> Result<Array2<Complex64>, Hydro2dError> {
    let op = Operator2D::for_field(field)?;
    let amps = field.sine_amplitudes();
    if amps.iter().any(|v| !v.is_finite()) {
        return Err(Hydro2dError::NonFinite);
    }
    let (tend, _) = op.rhs(&amps);
    if tend.iter().any(|v| !v.is_finite()) {
        return Err(Hydro2dError::NonFinite);
    }
    Ok(tend.mapv(|s| Complex64::new(0.0, -0.5 * s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controls2D {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Strength α of the filter exp(−α (n/cutoff)^36); 0 disables it.
    pub filter_strength: f64,
    pub snapshot_times: Vec<f64>,
    /// Top-band energy fraction above which the solution is no longer trusted.
    pub exhaustion_limit: f64,
    pub stop_at_exhaustion: bool,
    pub max_steps: usize,
}

impl Default for Controls2D {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            filter_strength: 0.0,
            snapshot_times: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            exhaustion_limit: 1e-6,
            stop_at_exhaustion: true,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination2D {
    EndTime,
    ResolutionExhausted,
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

impl Termination2D {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EndTime => "end_time",
            Self::ResolutionExhausted => "resolution_exhausted",
            Self::StepUnderflow => "step_underflow",
            Self::NonFinite => "non_finite",
            Self::MaxSteps => "max_steps",
        }
    }
}

/// The x = 0 trace of w at one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSnapshot {
    pub t: f64,
    pub w_trace: Vec<f64>,
    /// φ/(1 − t) when a reference profile was supplied.
    pub reference: Option<Vec<f64>>,
    pub rel_err: f64,
    pub energy: f64,
    pub top_fraction: f64,
    /// Set when the snapshot lies after the resolution-exhaustion time.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory2D {
    pub z: Vec<f64>,
    pub snapshots: Vec<TraceSnapshot>,
    /// (t, E) after every accepted step.
    pub energy: Vec<(f64, f64)>,
    pub termination: Termination2D,
    pub exhaustion_time: Option<f64>,
    pub accepted_steps: usize,
    pub max_odd_residual: f64,
    pub max_compatibility_residual: f64,
    pub final_field: Field2D,
}

impl Trajectory2D {
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy.first().map_or(0.0, |e| e.1);
        let limit = self.exhaustion_time.unwrap_or(f64::INFINITY);
        let drift = self
            .energy
            .iter()
            .filter(|(t, _)| *t <= limit)
            .map(|(_, e)| (e - e0).abs())
            .fold(0.0, f64::max);
        if e0 > 0.0 {
            drift / e0
        } else {
            drift
        }
    }

    pub fn max_trace_error_before_exhaustion(&self, t_max: f64) -> f64 {
        self.snapshots
            .iter()
            .filter(|s| s.t <= t_max && !s.exhausted)
            .map(|s| s.rel_err)
            .fold(0.0, f64::max)
    }
}

/// Integrates the field; `reference_phi` is the profile at the z nodes used for the
/// self-similar comparison φ/(1 − t).
pub fn integrate2d(
    initial: &Field2D,
    t_end: f64,
    controls: &Controls2D,
    reference_phi: Option<&[f64]>,
) -> Result<Trajectory2D, Hydro2dError> {
    let op = Operator2D::for_field(initial)?;
    let shape = (initial.nz + 1, initial.k_max + 1);
    let mut amps0 = initial.sine_amplitudes();
    if amps0.iter().any(|v| !v.is_finite()) {
        return Err(Hydro2dError::NonFinite);
    }
    if let Some(r) = reference_phi {
        if r.len() != shape.0 {
            return Err(Hydro2dError::GridMismatch(format!(
                "reference has {} values, grid has {}",
                r.len(),
                shape.0
            )));
        }
    }
    if !(t_end >= initial.t) {
        return Err(Hydro2dError::Config(format!(
            "end time {t_end} precedes start time {}",
            initial.t
        )));
    }
    op.project(&mut amps0);

    let odd = Cell::new(0.0_f64);
    let mut f = |_t: f64, y: &[f64], out: &mut [f64]| {
        let a = ArrayView2::from_shape(shape, y).expect("state shape");
        let (tend, diag) = op.rhs(&a.to_owned());
        odd.set(odd.get().max(diag.odd_residual));
        out.copy_from_slice(tend.as_slice().expect("standard layout"));
    };

    let filter: Option<Vec<f64>> = (controls.filter_strength > 0.0).then(|| {
        let cut = op.cutoff() as f64;
        (0..=initial.k_max)
            .map(|n| (-controls.filter_strength * (n as f64 / cut).powi(36)).exp())
            .collect()
    });

    let snapshot = |t: f64, a: &Array2<f64>, exhausted: bool| {
        let tr = op.trace(a);
        let reference = reference_phi.map(|phi| {
            let g = 1.0 / (1.0 - t);
            phi.iter().map(|v| g * v).collect::<Vec<f64>>()
        });
        let rel_err = match &reference {
            Some(r) => {
                let num = tr.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let den = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if den > 0.0 {
                    num / den
                } else {
                    num
                }
            }
            None => f64::NAN,
        };
        TraceSnapshot {
            t,
            w_trace: tr,
            reference,
            rel_err,
            energy: op.energy(a),
            top_fraction: op.top_band_fraction(a),
            exhausted,
        }
    };

    let step_controls = StepControls {
        rel_tol: controls.rel_tol,
        abs_tol: controls.abs_tol,
        ..Default::default()
    };
    let flat = amps0.as_slice().expect("standard layout").to_vec();
    let mut stepper = Dopri5::new(initial.t, flat, step_controls);

    let mut stops: Vec<f64> = controls
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > initial.t && *t < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(t_end);

    let mut snapshots = vec![snapshot(initial.t, &amps0, false)];
    let mut energy = vec![(initial.t, op.energy(&amps0))];
    let mut compat = op.compatibility_residual(&amps0);
    let mut exhaustion_time = None;
    let mut termination = Termination2D::EndTime;

    'outer: for &stop in &stops {
        while stepper.t() < stop {
            if stepper.accepted_steps() >= controls.max_steps {
                termination = Termination2D::MaxSteps;
                break 'outer;
            }
            match stepper.step(&mut f, stop) {
                Ok(_) => {}
                Err(OdeError::StepUnderflow { .. }) => {
                    termination = Termination2D::StepUnderflow;
                    break 'outer;
                }
                Err(OdeError::NonFinite { .. }) => {
                    termination = Termination2D::NonFinite;
                    break 'outer;
                }
            }
            if let Some(fac) = &filter {
                stepper.modify_state(|y| {
                    for row in y.chunks_mut(shape.1) {
                        for (v, g) in row.iter_mut().zip(fac) {
                            *v *= g;
                        }
                    }
                });
            }
            let a = ArrayView2::from_shape(shape, stepper.y()).expect("state shape").to_owned();
            compat = compat.max(op.compatibility_residual(&a));
            energy.push((stepper.t(), op.energy(&a)));
            if exhaustion_time.is_none() && op.top_band_fraction(&a) > controls.exhaustion_limit {
                exhaustion_time = Some(stepper.t());
                if controls.stop_at_exhaustion {
                    termination = Termination2D::ResolutionExhausted;
                    snapshots.push(snapshot(stepper.t(), &a, true));
                    break 'outer;
                }
            }
        }
        let a = ArrayView2::from_shape(shape, stepper.y()).expect("state shape").to_owned();
        snapshots.push(snapshot(stepper.t(), &a, exhaustion_time.is_some()));
    }

    let a = ArrayView2::from_shape(shape, stepper.y()).expect("state shape");
    let final_field = Field2D::from_sine_amplitudes(initial, stepper.t(), a);
    Ok(Trajectory2D {
        z: op.z().to_vec(),
        snapshots,
        energy,
        termination,
        exhaustion_time,
        accepted_steps: stepper.accepted_steps(),
        max_odd_residual: odd.get(),
        max_compatibility_residual: compat,
        final_field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_profile, params_from_m};

    fn theorem_field(k: usize, k_max: usize, nz: usize) -> (Profile, Field2D) {
        let p = params_from_m(3f64.sqrt() / 2.0, 1.0).unwrap();
        let prof = build_profile(&p, nz, GridKind::Chebyshev).unwrap();
        let f = init_from_theorem(&prof, k, 2.0 * PI, k_max, nz).unwrap();
        (prof, f)
    }

    #[test]
    fn zero_field_has_zero_tendency() {
        let f = Field2D::zeros(2.0 * PI, 1.0, 16, 16);
        let r = rhs2d(&f).unwrap();
        assert!(r.iter().all(|c| c.norm() == 0.0));
        assert!(pressure_gradient(&f).unwrap().iter().all(|v| *v == 0.0));
        assert!(diagnose_w(&f).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn theorem_data_is_single_sine_mode() {
        let (_, f) = theorem_field(2, 24, 64);
        for ((_, n), c) in f.u_hat.indexed_iter() {
            assert_eq!(c.re, 0.0);
            if n != 2 {
                assert_eq!(c.im, 0.0);
            }
        }
    }

    #[test]
    fn rejects_modes_beyond_cutoff() {
        let p = params_from_m(1.0, 1.0).unwrap();
        let prof = build_profile(&p, 64, GridKind::Chebyshev).unwrap();
        assert!(matches!(
            init_from_theorem(&prof, 11, 2.0 * PI, 16, 64),
            Err(Hydro2dError::BeyondCutoff { .. })
        ));
        assert!(matches!(
            init_from_theorem(&prof, 1, 2.0 * PI, 16, 24),
            Err(Hydro2dError::GridMismatch(_))
        ));
    }

    #[test]
    fn zero_field_stays_zero() {
        let f = Field2D::zeros(2.0 * PI, 1.0, 16, 16);
        let c = Controls2D {
            snapshot_times: vec![0.1],
            ..Default::default()
        };
        let tr = integrate2d(&f, 0.2, &c, None).unwrap();
        assert_eq!(tr.termination, Termination2D::EndTime);
        assert!(tr.final_field.u_hat.iter().all(|c| c.norm() == 0.0));
        assert!(tr.snapshots.iter().all(|s| s.w_trace.iter().all(|v| *v == 0.0)));
    }
}
