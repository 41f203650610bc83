//! CSV tables and flat key-value documents.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use crate::hydro2d::Trajectory2D;
use crate::profile::{Profile, ProfileParams};
use crate::reduced1d::{BlowupFit, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("cannot parse document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write document: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

/// Seventeen significant digits, enough to round-trip any binary64 value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes a header and numeric rows with LF line endings.
pub fn write_csv<P, I>(path: P, header: &[&str], rows: I) -> Result<(), IoError>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = BufWriter::new(File::create(path)?);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV written by [`write_csv`].
pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| IoError::Malformed(format!("not a number: '{s}'")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_doc<P: AsRef<Path>>(path: P, doc: &Table) -> Result<(), IoError> {
    let text = toml::to_string(doc)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_doc<P: AsRef<Path>>(path: P) -> Result<Table, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.parse::<Table>()?)
}

/// Builder for flat documents.
#[derive(Debug, Clone, Default)]
pub struct Doc(Table);

impl Doc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, v: f64) -> Self {
        self.0.insert(key.to_string(), Value::Float(v));
        self
    }

    pub fn int(mut self, key: &str, v: i64) -> Self {
        self.0.insert(key.to_string(), Value::Integer(v));
        self
    }

    pub fn text(mut self, key: &str, v: &str) -> Self {
        self.0.insert(key.to_string(), Value::String(v.to_string()));
        self
    }

    pub fn flag(mut self, key: &str, v: bool) -> Self {
        self.0.insert(key.to_string(), Value::Boolean(v));
        self
    }

    pub fn merge(mut self, other: Table) -> Self {
        self.0.extend(other);
        self
    }

    pub fn build(self) -> Table {
        self.0
    }
}

pub fn params_doc(p: &ProfileParams) -> Table {
    Doc::new()
        .num("m", p.m)
        .num("H", p.h)
        .num("psi_plus", p.psi_plus)
        .num("psi_minus", p.psi_minus)
        .num("delta", p.delta)
        .num("eps", p.eps)
        .num("p", p.p)
        .num("q", p.q)
        .num("C", p.c)
        .num("phi_max", p.phi_max())
        .build()
}

pub fn params_from_doc(doc: &Table) -> Result<ProfileParams, IoError> {
    let get = |k: &str| -> Result<f64, IoError> {
        match doc.get(k) {
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            _ => Err(IoError::Malformed(format!("missing number '{k}'"))),
        }
    };
    Ok(ProfileParams {
        m: get("m")?,
        h: get("H")?,
        psi_plus: get("psi_plus")?,
        psi_minus: get("psi_minus")?,
        delta: get("delta")?,
        eps: get("eps")?,
        p: get("p")?,
        q: get("q")?,
        c: get("C")?,
    })
}

pub fn write_profile_csv<P: AsRef<Path>>(path: P, profile: &Profile) -> Result<(), IoError> {
    let rows = (0..profile.z.len()).map(|i| {
        vec![
            profile.z[i],
            profile.phi[i],
            profile.dphi[i],
            profile.ddphi[i],
        ]
    });
    write_csv(path, &["z", "phi", "dphi", "ddphi"], rows)
}

pub fn write_trajectory_csv<P: AsRef<Path>>(path: P, traj: &Trajectory) -> Result<(), IoError> {
    let rows = traj.samples.iter().map(|s| {
        vec![
            s.t,
            s.max_abs_w,
            s.max_abs_wz,
            1.0 / s.max_abs_wz,
            s.sup_error,
        ]
    });
    write_csv(
        path,
        &[
            "t",
            "max_abs_W",
            "max_abs_Wz",
            "inv_max_abs_Wz",
            "sup_error_self_similar",
        ],
        rows,
    )
}

pub fn fit_doc(fit: &BlowupFit) -> Table {
    Doc::new()
        .text("verdict", "blowup")
        .num("slope", fit.slope)
        .num("intercept", fit.intercept)
        .num("T_est", fit.t_est)
        .num("r2", fit.r2)
        .int("n_samples", fit.n_samples as i64)
        .num("t_first", fit.t_first)
        .num("t_last", fit.t_last)
        .build()
}

pub fn write_trace_csv<P: AsRef<Path>>(path: P, traj: &Trajectory2D) -> Result<(), IoError> {
    let mut rows = Vec::new();
    for s in &traj.snapshots {
        for (i, z) in traj.z.iter().enumerate() {
            let r = s.reference.as_ref().map_or(f64::NAN, |r| r[i]);
            let e = if r.is_nan() {
                f64::NAN
            } else {
                let den = s
                    .reference
                    .as_ref()
                    .map_or(1.0, |r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
                (s.w_trace[i] - r).abs() / if den > 0.0 { den } else { 1.0 }
            };
            rows.push(vec![s.t, *z, s.w_trace[i], r, e]);
        }
    }
    write_csv(
        path,
        &["t", "z", "w_trace", "self_similar_ref", "rel_err"],
        rows,
    )
}

pub fn write_energy_csv<P: AsRef<Path>>(path: P, traj: &Trajectory2D) -> Result<(), IoError> {
    let e0 = traj.energy.first().map_or(0.0, |e| e.1);
    let rows = traj.energy.iter().map(|(t, e)| {
        let drift = if e0 > 0.0 { (e - e0).abs() / e0 } else { (e - e0).abs() };
        vec![*t, *e, drift]
    });
    write_csv(path, &["t", "energy", "rel_drift"], rows)
}
