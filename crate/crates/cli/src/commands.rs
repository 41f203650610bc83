use std::fs;
use std::path::{Path, PathBuf};

use hydroblow::hydro2d::{self, Controls2D, Field2D, Termination2D};
use hydroblow::io::{self, Doc, IoError};
use hydroblow::profile::{
    self, build_profile_with, glue_sign_changing_with, params_from_m, residual_fy, GridKind,
    Profile, ProfileError, ProfileTolerances,
};
use hydroblow::reduced1d::{
    self, estimate_blowup_time, select_fit_window, Controls1D, Discretization, FitError,
    Operator1D, SelfSimilar, State1D, Termination,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, InitialData, RunConfig, SweepConfig};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    ConfigOrIo = 1,
    Domain = 2,
    Certification = 3,
    NoBlowup = 4,
    Exhausted = 5,
    StepUnderflow = 6,
    TraceMismatch = 7,
    Usage = 64,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Reduced1d(#[from] reduced1d::Reduced1dError),
    #[error(transparent)]
    Hydro2d(#[from] hydro2d::Hydro2dError),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            Self::Config(ConfigError::Domain(_)) => Status::Domain,
            Self::Config(ConfigError::Usage(_)) => Status::Usage,
            Self::Config(_) | Self::Io(_) | Self::Write { .. } => Status::ConfigOrIo,
            Self::Profile(ProfileError::Certification { .. }) => Status::Certification,
            Self::Profile(_) => Status::Domain,
            Self::Reduced1d(_) => Status::Domain,
            Self::Hydro2d(hydro2d::Hydro2dError::BeyondCutoff { .. }) => Status::Domain,
            Self::Hydro2d(_) => Status::ConfigOrIo,
        }
    }
}

/// What a finished command reports.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_effective(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    let path = dir.join("effective_config.toml");
    fs::write(&path, config.to_toml()).map_err(|source| CliError::Write { path, source })
}

fn certification_doc(profile: &Profile, failure: Option<&ProfileError>) -> toml::Table {
    let fy = residual_fy(profile);
    let m2 = profile.params.m * profile.params.m;
    let n = profile.phi.len() - 1;
    let mut doc = Doc::new()
        .num("sup_residual", fy.sup)
        .num("nonlocal_constant", fy.nonlocal)
        .num("nonlocal_target", m2)
        .num("nonlocal_relative_error", ((fy.nonlocal - m2) / m2).abs())
        .num("phi_left", profile.phi[0])
        .num("phi_right", profile.phi[n])
        .num("ddphi_left", profile.ddphi[0])
        .num("ddphi_right", profile.ddphi[n])
        .int("segments", profile.segments as i64)
        .int("interior_zeros", profile.interior_zeros() as i64)
        .flag("trivial", fy.trivial);
    doc = match failure {
        None => doc.text("status", "certified"),
        Some(ProfileError::Certification {
            invariant,
            value,
            tolerance,
        }) => doc
            .text("status", "failed")
            .text("failed_invariant", invariant)
            .num("failed_value", *value)
            .num("failed_tolerance", *tolerance),
        Some(e) => doc.text("status", "failed").text("failed_invariant", &e.to_string()),
    };
    doc.build()
}

fn tolerances(construction: f64) -> ProfileTolerances {
    ProfileTolerances {
        construction,
        ..Default::default()
    }
}

pub fn cmd_profile(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = &config.profile;
    c.validate()?;
    let dir = config.output_dir()?;
    prepare_dir(dir)?;
    write_effective(dir, config)?;

    let tol = tolerances(c.tolerance);
    let built = if c.segments == 1 {
        let params = profile::params_from_m_with(c.m, c.h, &tol)?;
        build_profile_with(&params, c.n, c.grid, &tol)
    } else {
        glue_sign_changing_with(c.m, c.h, c.segments, c.n, &tol)
    };
    let profile = match built {
        Ok(p) => p,
        Err(e @ ProfileError::Certification { .. }) => {
            // the failing profile is rebuilt without certification for the report
            let loose = tolerances(f64::INFINITY);
            let loose = ProfileTolerances {
                construction_uniform: f64::INFINITY,
                ..loose
            };
            if let Ok(p) = if c.segments == 1 {
                params_from_m(c.m, c.h).and_then(|pp| build_profile_with(&pp, c.n, c.grid, &loose))
            } else {
                glue_sign_changing_with(c.m, c.h, c.segments, c.n, &loose)
            } {
                io::write_doc(dir.join("certification.toml"), &certification_doc(&p, Some(&e)))?;
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };

    io::write_profile_csv(dir.join("profile.csv"), &profile)?;
    let params = Doc::new()
        .merge(io::params_doc(&profile.params))
        .int("segments", profile.segments as i64)
        .num("full_interval_nonlocal_constant", profile.nonlocal_constant())
        .num("full_height", profile.height())
        .build();
    io::write_doc(dir.join("params.toml"), &params)?;
    io::write_doc(dir.join("certification.toml"), &certification_doc(&profile, None))?;
    Ok(Outcome {
        status: Status::Ok,
        summary: format!(
            "profile certified: m = {}, segments = {}, sup residual {:.3e}",
            profile.params.m,
            profile.segments,
            residual_fy(&profile).sup
        ),
    })
}

fn grid_kind(d: Discretization) -> GridKind {
    if d.is_uniform() {
        GridKind::Uniform
    } else {
        GridKind::Chebyshev
    }
}

pub fn cmd_simulate1d(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = &config.simulate1d;
    c.validate()?;
    let dir = config.output_dir()?;
    prepare_dir(dir)?;
    write_effective(dir, config)?;

    let op = Operator1D::new(c.scheme, c.n, c.h);
    let params = params_from_m(c.m, c.h)?;
    let profile = build_profile_with(&params, c.n, grid_kind(c.scheme), &ProfileTolerances::default())?;
    let (initial, reference) = match c.initial {
        InitialData::Profile => (
            State1D::from_profile(&profile, c.lambda),
            Some(SelfSimilar::new(&profile, c.lambda)),
        ),
        InitialData::Zero => (State1D::zeros(&op), None),
    };
    let controls = Controls1D {
        rel_tol: c.rel_tol,
        abs_tol: c.abs_tol,
        blowup_threshold: c.blowup_threshold,
        max_steps: c.max_steps,
        snapshot_times: c.snapshot_times.clone(),
    };
    let traj = reduced1d::integrate(&op, &initial, c.t_end, &controls, reference.as_ref())?;
    io::write_trajectory_csv(dir.join("trajectory.csv"), &traj)?;

    let window = select_fit_window(&traj.growth_samples(), f64::INFINITY, 10);
    let fit = estimate_blowup_time(&window);
    let expected_t = if c.initial == InitialData::Profile && c.lambda > 0.0 {
        1.0 / c.lambda
    } else {
        f64::NAN
    };
    let fit_doc = match &fit {
        Ok(f) => Doc::new().merge(io::fit_doc(f)).num("T_expected", expected_t).build(),
        Err(e) => {
            let mut d = Doc::new().text("verdict", "no blowup detected").text("reason", &e.to_string());
            if let FitError::NoBlowup { slope, r2 } = e {
                d = d.num("slope", *slope).num("r2", *r2);
            }
            d.int("n_samples", window.len() as i64).build()
        }
    };
    io::write_doc(dir.join("fit.toml"), &fit_doc)?;

    let last = traj.samples.last().expect("trajectory has samples");
    let run = Doc::new()
        .text("command", "simulate1d")
        .text("scheme", c.scheme.name())
        .int("n", c.n as i64)
        .num("lambda", c.lambda)
        .text("termination", traj.termination.name())
        .num("t_final", traj.final_state().t)
        .num("max_abs_W_final", last.max_abs_w)
        .int("accepted_steps", traj.accepted_steps as i64)
        .int("rejected_steps", traj.rejected_steps as i64)
        .num("max_top_compatibility", traj.max_top_compatibility)
        .build();
    io::write_doc(dir.join("run.toml"), &run)?;

    if matches!(
        traj.termination,
        Termination::StepUnderflow | Termination::NonFinite
    ) {
        return Ok(Outcome {
            status: Status::StepUnderflow,
            summary: format!(
                "integration stopped at t = {} ({}) without crossing the blowup threshold",
                traj.final_state().t,
                traj.termination.name()
            ),
        });
    }
    let (status, summary) = match (&fit, c.expects_blowup()) {
        (Ok(f), _) => (
            Status::Ok,
            format!("blowup: T_est = {:.6}, r2 = {:.6}", f.t_est, f.r2),
        ),
        (Err(e), true) => (Status::NoBlowup, format!("no blowup detected: {e}")),
        (Err(e), false) => (Status::Ok, format!("no blowup detected: {e}")),
    };
    Ok(Outcome { status, summary })
}

pub fn cmd_simulate2d(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = &config.simulate2d;
    c.validate()?;
    let dir = config.output_dir()?;
    prepare_dir(dir)?;
    write_effective(dir, config)?;

    let (mut field, reference) = if c.zero_field {
        (
            Field2D::zeros(c.l, c.h, c.k_max, c.nz),
            vec![0.0; c.nz + 1],
        )
    } else {
        let params = params_from_m(c.m, c.h)?;
        let profile =
            build_profile_with(&params, c.nz, GridKind::Chebyshev, &ProfileTolerances::default())?;
        (
            hydro2d::init_from_theorem(&profile, c.k, c.l, c.k_max, c.nz)?,
            profile.phi.clone(),
        )
    };
    field.nu = c.nu;
    let controls = Controls2D {
        rel_tol: c.rel_tol,
        abs_tol: c.abs_tol,
        filter_strength: c.filter_strength,
        snapshot_times: c.snapshot_times.clone(),
        exhaustion_limit: c.exhaustion_limit,
        ..Default::default()
    };
    let traj = hydro2d::integrate2d(&field, c.t_end, &controls, Some(&reference))?;
    io::write_trace_csv(dir.join("trace.csv"), &traj)?;
    io::write_energy_csv(dir.join("energy.csv"), &traj)?;

    let worst = traj.max_trace_error_before_exhaustion(c.t_end);
    let mut run = Doc::new()
        .text("command", "simulate2d")
        .num("L", c.l)
        .num("H", c.h)
        .int("k", c.k as i64)
        .int("k_max", c.k_max as i64)
        .int("nz", c.nz as i64)
        .int("nx", field.nx() as i64)
        .int("dealias_cutoff", field.cutoff() as i64)
        .num("nu", c.nu)
        .num("filter_strength", c.filter_strength)
        .text("termination", traj.termination.name())
        .int("accepted_steps", traj.accepted_steps as i64)
        .num("max_trace_rel_err", worst)
        .num("max_energy_drift", traj.max_energy_drift())
        .num("max_odd_residual", traj.max_odd_residual)
        .num("max_compatibility_residual", traj.max_compatibility_residual);
    if let Some(t) = traj.exhaustion_time {
        run = run.num("exhaustion_time", t);
    }
    io::write_doc(dir.join("run.toml"), &run.build())?;

    let first_checkpoint = c
        .snapshot_times
        .iter()
        .copied()
        .find(|t| *t > 0.0)
        .unwrap_or(c.t_end);
    let (status, summary) = match traj.termination {
        Termination2D::StepUnderflow | Termination2D::NonFinite | Termination2D::MaxSteps => (
            Status::StepUnderflow,
            format!("integration failed: {}", traj.termination.name()),
        ),
        _ if traj.exhaustion_time.is_some_and(|t| t < first_checkpoint) => (
            Status::Exhausted,
            format!(
                "resolution exhausted at t = {} before the first checkpoint",
                traj.exhaustion_time.unwrap_or(f64::NAN)
            ),
        ),
        _ if worst <= c.trace_tolerance => (
            Status::Ok,
            format!("trace matches φ/(1−t): max relative error {worst:.3e}"),
        ),
        _ => (
            Status::TraceMismatch,
            format!(
                "trace error {worst:.3e} exceeds {:.3e}",
                c.trace_tolerance
            ),
        ),
    };
    Ok(Outcome { status, summary })
}

/// One row of the sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub status: Status,
    pub message: String,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "m",
    "psi_plus",
    "psi_minus",
    "C",
    "C_closed_form",
    "phi_max",
    "residual",
    "nonlocal_constant",
    "T_est",
    "r2",
    "ok",
];

fn sweep_row(m: f64, c: &SweepConfig) -> SweepRow {
    let nan = f64::NAN;
    let mut values = vec![m, nan, nan, nan, nan, nan, nan, nan, nan, nan, 0.0];
    let fail = |values: Vec<f64>, status: Status, message: String| SweepRow {
        values,
        status,
        message,
    };
    let params = match params_from_m(m, c.h) {
        Ok(p) => p,
        Err(e) => {
            let msg = format!("m = {m}: {e}");
            return fail(values, CliError::from(e).status(), msg);
        }
    };
    values[1] = params.psi_plus;
    values[2] = params.psi_minus;
    values[3] = params.c;
    values[4] = profile::closed_form_c(m, c.h);
    values[5] = params.phi_max();
    let prof = match build_profile_with(&params, c.n, GridKind::Chebyshev, &ProfileTolerances::default()) {
        Ok(p) => p,
        Err(e) => {
            let msg = format!("m = {m}: {e}");
            return fail(values, CliError::from(e).status(), msg);
        }
    };
    let fy = residual_fy(&prof);
    values[6] = fy.sup;
    values[7] = fy.nonlocal;

    let op = Operator1D::new(Discretization::Chebyshev, c.n, c.h);
    let checkpoints: Vec<f64> = (1..c.samples)
        .map(|i| c.t_end * i as f64 / (c.samples - 1) as f64)
        .collect();
    let controls = Controls1D {
        rel_tol: c.rel_tol,
        abs_tol: c.abs_tol,
        snapshot_times: checkpoints,
        ..Default::default()
    };
    let traj = match reduced1d::integrate(&op, &State1D::from_profile(&prof, 1.0), c.t_end, &controls, None) {
        Ok(t) => t,
        Err(e) => return fail(values, Status::Domain, format!("m = {m}: {e}")),
    };
    let growth: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (s.t, reduced1d::sup_norm(&op.derivatives(&s.w).wz)))
        .collect();
    match estimate_blowup_time(&growth) {
        Ok(fit) => {
            values[8] = fit.t_est;
            values[9] = fit.r2;
            if (fit.t_est - 1.0).abs() <= c.t_tolerance {
                values[10] = 1.0;
                SweepRow {
                    values,
                    status: Status::Ok,
                    message: format!("m = {m}: T_est = {:.6}", fit.t_est),
                }
            } else {
                let msg = format!("m = {m}: T_est = {:.6} outside 1 ± {}", fit.t_est, c.t_tolerance);
                fail(values, Status::NoBlowup, msg)
            }
        }
        Err(e) => fail(values, Status::NoBlowup, format!("m = {m}: no blowup detected: {e}")),
    }
}

pub fn cmd_sweep(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = &config.sweep;
    c.validate()?;
    let dir = config.output_dir()?;
    prepare_dir(dir)?;
    write_effective(dir, config)?;

    let rows: Vec<SweepRow> = c.m_list.par_iter().map(|&m| sweep_row(m, c)).collect();
    io::write_csv(
        dir.join("sweep.csv"),
        &SWEEP_COLUMNS,
        rows.iter().map(|r| r.values.clone()),
    )?;
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| r.status != Status::Ok).collect();
    let status = failed.iter().map(|r| r.status).max().unwrap_or(Status::Ok);
    let mut summary: Vec<String> = rows.iter().map(|r| r.message.clone()).collect();
    summary.push(format!("{} of {} rows passed", rows.len() - failed.len(), rows.len()));
    Ok(Outcome {
        status,
        summary: summary.join("\n"),
    })
}
