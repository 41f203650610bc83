use std::path::{Path, PathBuf};

use hydroblow::profile::GridKind;
use hydroblow::reduced1d::Discretization;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_N: usize = 16;
pub const MAX_N: usize = 8192;
pub const MAX_SEGMENTS: usize = 64;
pub const MAX_K_MAX: usize = 1024;
pub const MAX_NZ: usize = 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error("usage: {0}")]
    Usage(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub profile: ProfileConfig,
    pub simulate1d: Simulate1dConfig,
    pub simulate2d: Simulate2dConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub m: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    pub grid: GridKind,
    /// Number of arches; values above 1 glue sign-changing profiles with `m` as m_half.
    pub segments: usize,
    pub tolerance: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            m: 3f64.sqrt() / 2.0,
            h: 1.0,
            n: 128,
            grid: GridKind::Chebyshev,
            segments: 1,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    #[default]
    Profile,
    Zero,
}

impl std::str::FromStr for InitialData {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "profile" => Ok(Self::Profile),
            "zero" => Ok(Self::Zero),
            _ => Err(format!("unknown initial data '{s}' (profile, zero)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate1dConfig {
    pub m: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    pub scheme: Discretization,
    pub initial: InitialData,
    /// Amplitude λ of the initial data λφ.
    pub lambda: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub snapshot_times: Vec<f64>,
    /// Defaults to true for profile data with λ > 0.
    pub expect_blowup: Option<bool>,
}

impl Default for Simulate1dConfig {
    fn default() -> Self {
        Self {
            m: 3f64.sqrt() / 2.0,
            h: 1.0,
            n: 256,
            scheme: Discretization::Chebyshev,
            initial: InitialData::Profile,
            lambda: 1.0,
            t_end: 2.0,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            blowup_threshold: 1e6,
            max_steps: 200_000,
            snapshot_times: vec![0.25, 0.5, 0.75, 0.9],
            expect_blowup: None,
        }
    }
}

impl Simulate1dConfig {
    pub fn expects_blowup(&self) -> bool {
        self.expect_blowup
            .unwrap_or(self.initial == InitialData::Profile && self.lambda > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate2dConfig {
    pub m: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub k: usize,
    pub k_max: usize,
    pub nz: usize,
    pub nu: f64,
    pub filter_strength: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub snapshot_times: Vec<f64>,
    /// Largest accepted relative sup error of the x = 0 trace.
    pub trace_tolerance: f64,
    pub exhaustion_limit: f64,
    pub zero_field: bool,
}

impl Default for Simulate2dConfig {
    fn default() -> Self {
        Self {
            m: 3f64.sqrt() / 2.0,
            h: 1.0,
            l: 2.0 * std::f64::consts::PI,
            k: 1,
            k_max: 64,
            nz: 96,
            nu: 0.0,
            filter_strength: 0.0,
            t_end: 0.3,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            snapshot_times: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            trace_tolerance: 0.02,
            exhaustion_limit: 1e-6,
            zero_field: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub m_list: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    pub t_end: f64,
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest accepted |T_est − 1|.
    pub t_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_list: vec![0.5, 3f64.sqrt() / 2.0, 2.0, 10.0],
            h: 1.0,
            n: 128,
            t_end: 0.3,
            samples: 11,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            t_tolerance: 1e-2,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> Result<&Path, ConfigError> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| ConfigError::Usage("an output directory is required (--out)".into()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn tolerance(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be nonnegative, got {v}")))
    }
}

fn within(name: &str, v: usize, lo: usize, hi: usize) -> Result<(), ConfigError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must lie in [{lo}, {hi}], got {v}")))
    }
}

fn times(name: &str, ts: &[f64]) -> Result<(), ConfigError> {
    if ts.iter().any(|t| !t.is_finite() || *t < 0.0) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Invalid(format!(
            "{name} must be nonnegative and strictly increasing"
        )));
    }
    Ok(())
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("m", self.m)?;
        positive("H", self.h)?;
        within("n", self.n, MIN_N, MAX_N)?;
        within("segments", self.segments, 1, MAX_SEGMENTS)?;
        tolerance("tolerance", self.tolerance)
    }
}

impl Simulate1dConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("m", self.m)?;
        positive("H", self.h)?;
        within("n", self.n, MIN_N, MAX_N)?;
        if !self.lambda.is_finite() {
            return Err(ConfigError::Invalid("lambda must be finite".into()));
        }
        positive("t_end", self.t_end)?;
        tolerance("rel_tol", self.rel_tol)?;
        tolerance("abs_tol", self.abs_tol)?;
        tolerance("blowup_threshold", self.blowup_threshold)?;
        if self.max_steps == 0 {
            return Err(ConfigError::Invalid("max_steps must be positive".into()));
        }
        times("snapshot_times", &self.snapshot_times)
    }
}

impl Simulate2dConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("m", self.m)?;
        positive("H", self.h)?;
        positive("L", self.l)?;
        within("k_max", self.k_max, 4, MAX_K_MAX)?;
        within("nz", self.nz, MIN_N, MAX_NZ)?;
        let cutoff = hydroblow::hydro2d::dealias_cutoff(self.k_max);
        if self.k == 0 || self.k > cutoff {
            return Err(ConfigError::Domain(format!(
                "k must lie in [1, {cutoff}] for k_max = {}, got {}",
                self.k_max, self.k
            )));
        }
        nonnegative("nu", self.nu)?;
        nonnegative("filter_strength", self.filter_strength)?;
        positive("t_end", self.t_end)?;
        if self.t_end >= 1.0 {
            return Err(ConfigError::Invalid(format!(
                "t_end must stay below the blowup time 1, got {}",
                self.t_end
            )));
        }
        tolerance("rel_tol", self.rel_tol)?;
        tolerance("abs_tol", self.abs_tol)?;
        tolerance("trace_tolerance", self.trace_tolerance)?;
        tolerance("exhaustion_limit", self.exhaustion_limit)?;
        times("snapshot_times", &self.snapshot_times)
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m_list.is_empty() {
            return Err(ConfigError::Usage("the m list is empty".into()));
        }
        positive("H", self.h)?;
        within("n", self.n, MIN_N, MAX_N)?;
        positive("t_end", self.t_end)?;
        if self.t_end >= 1.0 {
            return Err(ConfigError::Invalid(format!(
                "t_end must stay below the blowup time 1, got {}",
                self.t_end
            )));
        }
        within("samples", self.samples, 4, 10_000)?;
        tolerance("rel_tol", self.rel_tol)?;
        tolerance("abs_tol", self.abs_tol)?;
        tolerance("t_tolerance", self.t_tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let mut c = RunConfig::default();
        c.output_dir = Some("out".into());
        c.simulate1d.expect_blowup = Some(false);
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[profile]\nmm = 1.0\n").is_err());
        assert!(RunConfig::parse("colour = 1\n").is_err());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c = RunConfig::parse("[simulate1d]\nlambda = 2.0\nscheme = \"fd4\"\n").unwrap();
        assert_eq!(c.simulate1d.lambda, 2.0);
        assert_eq!(c.simulate1d.scheme, Discretization::Fd4);
        assert_eq!(c.simulate1d.n, 256);
    }

    #[test]
    fn validation_classes() {
        let mut p = ProfileConfig::default();
        p.m = -1.0;
        assert!(matches!(p.validate(), Err(ConfigError::Domain(_))));
        p.m = 1.0;
        p.n = 8;
        assert!(matches!(p.validate(), Err(ConfigError::Invalid(_))));
        let mut s = SweepConfig::default();
        s.m_list.clear();
        assert!(matches!(s.validate(), Err(ConfigError::Usage(_))));
        let mut d = Simulate2dConfig::default();
        d.k = 43;
        assert!(matches!(d.validate(), Err(ConfigError::Domain(_))));
    }
}
