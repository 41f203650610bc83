//! Self-similar blowup profiles of the reduced nonlocal boundary value problem
//!
//! ```text
//! φ′ − (φ′)² + φ φ″ + (2/H) ∫₀ᴴ (φ′)² dz = 0,   φ(0) = φ(H) = 0.
//! ```
//!
//! The profile is evaluated through the slope ψ = φ′. With t = (ψ₊ − ψ)/Δ the height
//! is z = H·I_t(p, q), so ψ(z) = ψ₊ − Δ·I⁻¹_{z/H}(p, q) and φ = C (Δt)^p (Δ(1−t))^q.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chebyshev;
use crate::specfun::{
    self, gauss_jacobi, inv_reg_inc_beta_pair, SpecfunError, SpecfunTolerances,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("integration constant mismatch: Beta route {beta_route:.17e}, closed form {closed_form:.17e}")]
    Consistency { beta_route: f64, closed_form: f64 },
    #[error("certification failed: {invariant} = {value:e} exceeds {tolerance:e}")]
    Certification {
        invariant: &'static str,
        value: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Chebyshev,
    Uniform,
}

impl std::str::FromStr for GridKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chebyshev" => Ok(Self::Chebyshev),
            "uniform" => Ok(Self::Uniform),
            other => Err(format!("unknown grid kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTolerances {
    /// Sup residual allowed on Chebyshev grids.
    pub construction: f64,
    /// Sup residual allowed on uniform grids, where the nonlocal integral is a trapezoid sum.
    pub construction_uniform: f64,
    /// Relative agreement of the two routes to C.
    pub constant_agreement: f64,
    /// Gauss-Jacobi nodes used by the reconstruction check.
    pub reconstruction_nodes: usize,
    pub specfun: SpecfunTolerances,
}

impl Default for ProfileTolerances {
    fn default() -> Self {
        Self {
            construction: 1e-8,
            construction_uniform: 1e-4,
            constant_agreement: 1e-11,
            reconstruction_nodes: 24,
            specfun: SpecfunTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub m: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub delta: f64,
    pub eps: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ProfileParams {
    /// Largest value of φ, attained where ψ = 0.
    pub fn phi_max(&self) -> f64 {
        self.c * self.psi_plus.powf(self.p) * (-self.psi_minus).powf(self.q)
    }

    /// Height z₀ of the maximum: z₀/H = I_p(p, q).
    pub fn z_of_max(&self) -> Result<f64, ProfileError> {
        Ok(self.h * specfun::reg_inc_beta(self.p, self.p, self.q)?)
    }

    /// Inverse of ψ(z): z = H·I_t(p, q) with t = (ψ₊ − ψ)/Δ.
    pub fn z_of_psi(&self, psi: f64) -> Result<f64, ProfileError> {
        self.check_psi(psi)?;
        let t = ((self.psi_plus - psi) / self.delta).clamp(0.0, 1.0);
        if t <= 0.5 {
            return Ok(self.h * specfun::reg_inc_beta(t, self.p, self.q)?);
        }
        let s = ((psi - self.psi_minus) / self.delta).clamp(0.0, 1.0);
        let (_, upper) = specfun::reg_inc_beta_pair(s, self.q, self.p, &SpecfunTolerances::default())?;
        Ok(self.h * upper)
    }

    fn check_psi(&self, psi: f64) -> Result<(), ProfileError> {
        let slack = 1e-14 * self.delta;
        if !(psi >= self.psi_minus - slack && psi <= self.psi_plus + slack) {
            return Err(ProfileError::Domain(format!(
                "psi = {psi} outside [{}, {}]",
                self.psi_minus, self.psi_plus
            )));
        }
        Ok(())
    }
}

/// Closed form of C from the reflection formula, B(p, q) = π / sin(πq).
pub fn closed_form_c(m: f64, h: f64) -> f64 {
    let r = (m * m + 0.25).sqrt();
    // q = 1/2 − 1/(4r), written so that it stays accurate as m → 0
    let q = m * m / ((r + 0.5) * 2.0 * r);
    h * (PI * q).sin() / PI
}

pub fn params_from_m(m: f64, h: f64) -> Result<ProfileParams, ProfileError> {
    params_from_m_with(m, h, &ProfileTolerances::default())
}

pub fn params_from_m_with(
    m: f64,
    h: f64,
    tol: &ProfileTolerances,
) -> Result<ProfileParams, ProfileError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(ProfileError::Domain(format!("m must be positive, got {m}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(ProfileError::Domain(format!("H must be positive, got {h}")));
    }
    let r = (m * m + 0.25).sqrt();
    let psi_plus = r + 0.5;
    let psi_minus = -m * m / psi_plus;
    let delta = 2.0 * r;
    let eps = 1.0 / (4.0 * r);
    let p = psi_plus / delta;
    let q = -psi_minus / delta;
    let beta_route = h / specfun::beta(p, q)?;
    let closed_form = closed_form_c(m, h);
    if ((beta_route - closed_form) / closed_form).abs() > tol.constant_agreement {
        return Err(ProfileError::Consistency {
            beta_route,
            closed_form,
        });
    }
    Ok(ProfileParams {
        m,
        h,
        psi_plus,
        psi_minus,
        delta,
        eps,
        p,
        q,
        c: beta_route,
    })
}

/// Values of the profile at one height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub psi: f64,
    pub phi: f64,
    pub ddphi: f64,
}

/// Evaluates ψ, φ and φ″ at height z. φ″ is taken from the factored form of the
/// profile ODE, −Δ²ts/φ = −(Δ/C) t^q s^p, which is exactly zero at both walls.
pub fn profile_point(
    params: &ProfileParams,
    z: f64,
    tol: &SpecfunTolerances,
) -> Result<ProfilePoint, ProfileError> {
    if !(0.0..=params.h).contains(&z) {
        return Err(ProfileError::Domain(format!(
            "z = {z} outside [0, {}]",
            params.h
        )));
    }
    let (t, s) = inv_reg_inc_beta_pair(z / params.h, params.p, params.q, tol)?;
    let psi = if t <= 0.5 {
        params.psi_plus - params.delta * t
    } else {
        params.psi_minus + params.delta * s
    };
    let phi = params.c * params.delta * t.powf(params.p) * s.powf(params.q);
    let ddphi = -(params.delta / params.c) * t.powf(params.q) * s.powf(params.p);
    Ok(ProfilePoint { psi, phi, ddphi })
}

pub fn psi_of_z(params: &ProfileParams, z: f64) -> Result<f64, ProfileError> {
    Ok(profile_point(params, z, &SpecfunTolerances::default())?.psi)
}

pub fn phi_of_psi(params: &ProfileParams, psi: f64) -> Result<f64, ProfileError> {
    params.check_psi(psi)?;
    if psi >= params.psi_plus || psi <= params.psi_minus {
        return Ok(0.0);
    }
    Ok(params.c * (params.psi_plus - psi).powf(params.p) * (psi - params.psi_minus).powf(params.q))
}

/// Sampled profile on a grid of [0, H].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub params: ProfileParams,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub ddphi: Vec<f64>,
    pub segments: usize,
    pub residual: f64,
    pub grid: GridKind,
    weights: Vec<f64>,
}

/// Output of [`residual_fy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FyResidual {
    /// Sup over interior nodes of |φ′ − (φ′)² + φφ″ + (2/H)∫(φ′)²|.
    pub sup: f64,
    /// The quadrature value of (2/H)∫(φ′)².
    pub nonlocal: f64,
    /// Set when φ vanishes identically.
    pub trivial: bool,
}

impl Profile {
    /// Wraps sampled values on a grid. The quadrature weights are Clenshaw-Curtis when
    /// `grid` is Chebyshev (the grid must then be the mapped Chebyshev nodes) and
    /// trapezoid otherwise. `residual` is computed, not certified.
    pub fn from_samples(
        params: ProfileParams,
        z: Vec<f64>,
        phi: Vec<f64>,
        dphi: Vec<f64>,
        ddphi: Vec<f64>,
        grid: GridKind,
    ) -> Result<Self, ProfileError> {
        let n = z.len();
        if n < 3 || phi.len() != n || dphi.len() != n || ddphi.len() != n {
            return Err(ProfileError::Domain("profile arrays have mismatched lengths".into()));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ProfileError::Domain("grid must be strictly increasing".into()));
        }
        let weights = match grid {
            GridKind::Chebyshev => chebyshev::clenshaw_curtis_weights(n - 1, z[n - 1] - z[0]),
            GridKind::Uniform => trapezoid_weights(&z),
        };
        let mut profile = Self {
            params,
            z,
            phi,
            dphi,
            ddphi,
            segments: 1,
            residual: 0.0,
            grid,
            weights,
        };
        profile.residual = residual_fy(&profile).sup;
        Ok(profile)
    }

    /// Same grid and parameters with new values.
    pub fn with_values(&self, phi: Vec<f64>, dphi: Vec<f64>, ddphi: Vec<f64>) -> Self {
        let mut out = Self {
            phi,
            dphi,
            ddphi,
            ..self.clone()
        };
        out.residual = residual_fy(&out).sup;
        out
    }

    /// The negative solution −φ(H − z) on the mirrored grid.
    pub fn negated_mirror(&self) -> Self {
        let rev = |v: &[f64], sign: f64| v.iter().rev().map(|x| sign * x).collect::<Vec<_>>();
        let h = self.params.h;
        let mut z: Vec<f64> = self.z.iter().rev().map(|z| h - z).collect();
        z[0] = 0.0;
        let last = z.len() - 1;
        z[last] = h;
        let mut out = Self {
            z,
            phi: rev(&self.phi, -1.0),
            dphi: rev(&self.dphi, 1.0),
            ddphi: rev(&self.ddphi, -1.0),
            weights: self.weights.iter().rev().copied().collect(),
            ..self.clone()
        };
        out.residual = residual_fy(&out).sup;
        out
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    /// The nonlocal constant (2/H)∫(φ′)² by the profile's quadrature.
    pub fn nonlocal_constant(&self) -> f64 {
        nonlocal(&self.weights, &self.dphi, self.height())
    }

    /// Total height of the profile's interval.
    pub fn height(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn interior_zeros(&self) -> usize {
        self.phi[1..self.phi.len() - 1]
            .windows(2)
            .filter(|w| w[0] * w[1] < 0.0)
            .count()
            + self.phi[1..self.phi.len() - 1]
                .iter()
                .filter(|v| **v == 0.0)
                .count()
    }
}

fn trapezoid_weights(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = z[i + 1] - z[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

fn nonlocal(weights: &[f64], dphi: &[f64], height: f64) -> f64 {
    2.0 / height
        * weights
            .iter()
            .zip(dphi)
            .map(|(w, d)| w * d * d)
            .sum::<f64>()
}

/// Residual of the boundary value problem with the nonlocal term from quadrature.
pub fn residual_fy(profile: &Profile) -> FyResidual {
    let nonlocal = nonlocal(&profile.weights, &profile.dphi, profile.height());
    let n = profile.z.len();
    let mut sup: f64 = 0.0;
    for i in 1..n - 1 {
        let d = profile.dphi[i];
        let r = d - d * d + profile.phi[i] * profile.ddphi[i] + nonlocal;
        sup = sup.max(r.abs());
    }
    FyResidual {
        sup,
        nonlocal,
        trivial: profile.phi.iter().all(|v| *v == 0.0),
    }
}

/// Largest relative deviation between the sampled φ and the independent Gauss-Jacobi
/// evaluation of ∫ψ dz in the t variable.
pub fn reconstruction_error(
    params: &ProfileParams,
    z: &[f64],
    phi: &[f64],
    nodes: usize,
) -> Result<f64, ProfileError> {
    let bval = specfun::beta(params.p, params.q)?;
    let from_zero = gauss_jacobi(nodes, 0.0, params.p - 1.0)?;
    let from_one = gauss_jacobi(nodes, 0.0, params.q - 1.0)?;
    let tol = SpecfunTolerances::default();
    let scale = params.phi_max();
    let mut worst: f64 = 0.0;
    for (zi, phii) in z.iter().zip(phi) {
        let (t, s) = inv_reg_inc_beta_pair(zi / params.h, params.p, params.q, &tol)?;
        let recon = if t <= 0.5 {
            // ∫₀ᵗ (ψ₊ − Δτ) τ^(p−1) (1−τ)^(q−1) dτ with τ = t(1+x)/2
            let half = 0.5 * t;
            let g = |x: f64| {
                let tau = half * (1.0 + x);
                (params.psi_plus - params.delta * tau) * (1.0 - tau).powf(params.q - 1.0)
            };
            half.powf(params.p) * from_zero.integrate(g)
        } else {
            // ∫₀ˢ (ψ₊ − Δ(1−σ))(−1) σ^(q−1) (1−σ)^(p−1) dσ from the upper wall
            let half = 0.5 * s;
            let g = |x: f64| {
                let sigma = half * (1.0 + x);
                (params.delta * (1.0 - sigma) - params.psi_plus)
                    * (1.0 - sigma).powf(params.p - 1.0)
            };
            half.powf(params.q) * from_one.integrate(g)
        };
        let recon = params.h / bval * recon;
        worst = worst.max((recon - phii).abs() / scale);
    }
    Ok(worst)
}

fn grid_nodes(n: usize, h: f64, grid: GridKind) -> Vec<f64> {
    match grid {
        GridKind::Chebyshev => chebyshev::nodes(n, h),
        GridKind::Uniform => (0..=n)
            .map(|i| if i == n { h } else { h * i as f64 / n as f64 })
            .collect(),
    }
}

pub fn build_profile(
    params: &ProfileParams,
    n: usize,
    grid: GridKind,
) -> Result<Profile, ProfileError> {
    build_profile_with(params, n, grid, &ProfileTolerances::default())
}

pub fn build_profile_with(
    params: &ProfileParams,
    n: usize,
    grid: GridKind,
    tol: &ProfileTolerances,
) -> Result<Profile, ProfileError> {
    if n < 16 {
        return Err(ProfileError::Domain(format!("N must be at least 16, got {n}")));
    }
    let z = grid_nodes(n, params.h, grid);
    let mut phi = Vec::with_capacity(n + 1);
    let mut dphi = Vec::with_capacity(n + 1);
    let mut ddphi = Vec::with_capacity(n + 1);
    for &zi in &z {
        let pt = profile_point(params, zi, &tol.specfun)?;
        phi.push(pt.phi);
        dphi.push(pt.psi);
        ddphi.push(pt.ddphi);
    }
    phi[0] = 0.0;
    phi[n] = 0.0;
    ddphi[0] = 0.0;
    ddphi[n] = 0.0;
    let weights = match grid {
        GridKind::Chebyshev => chebyshev::clenshaw_curtis_weights(n, params.h),
        GridKind::Uniform => trapezoid_weights(&z),
    };
    let mut profile = Profile {
        params: *params,
        z,
        phi,
        dphi,
        ddphi,
        segments: 1,
        residual: 0.0,
        grid,
        weights,
    };
    let limit = match grid {
        GridKind::Chebyshev => tol.construction,
        GridKind::Uniform => tol.construction_uniform,
    };
    certify(&mut profile, limit, tol)?;
    Ok(profile)
}

fn certify(profile: &mut Profile, limit: f64, tol: &ProfileTolerances) -> Result<(), ProfileError> {
    let fy = residual_fy(profile);
    if fy.sup > limit {
        return Err(ProfileError::Certification {
            invariant: "sup residual",
            value: fy.sup,
            tolerance: limit,
        });
    }
    let target = profile.params.m * profile.params.m;
    let nonlocal_err = ((fy.nonlocal - target) / target).abs();
    if nonlocal_err > limit {
        return Err(ProfileError::Certification {
            invariant: "nonlocal identity",
            value: nonlocal_err,
            tolerance: limit,
        });
    }
    // the reconstruction check runs on one segment; glued arches are exact copies
    let seg_n = profile.n() / profile.segments;
    let seg_z = &profile.z[..=seg_n];
    let seg_phi = &profile.phi[..=seg_n];
    let recon = reconstruction_error(
        &profile.params,
        seg_z,
        seg_phi,
        tol.reconstruction_nodes,
    )?;
    if recon > tol.construction {
        return Err(ProfileError::Certification {
            invariant: "reconstruction error",
            value: recon,
            tolerance: tol.construction,
        });
    }
    let p = &profile.params;
    let n = profile.n();
    let edge = if profile.segments.is_multiple_of(2) { p.psi_plus } else { p.psi_minus };
    let slope_err = (profile.dphi[0] - p.psi_plus)
        .abs()
        .max((profile.dphi[n] - edge).abs());
    if slope_err > 1e-8 {
        return Err(ProfileError::Certification {
            invariant: "boundary slope",
            value: slope_err,
            tolerance: 1e-8,
        });
    }
    profile.residual = fy.sup.max(recon);
    Ok(())
}

/// Sign-changing profile made of `s` alternating arches, each the positive profile of
/// the half problem on an interval of length H/s.
pub fn glue_sign_changing(
    m_half: f64,
    h: f64,
    s: usize,
    n_per_segment: usize,
) -> Result<Profile, ProfileError> {
    glue_sign_changing_with(m_half, h, s, n_per_segment, &ProfileTolerances::default())
}

pub fn glue_sign_changing_with(
    m_half: f64,
    h: f64,
    s: usize,
    n_per_segment: usize,
    tol: &ProfileTolerances,
) -> Result<Profile, ProfileError> {
    if s < 2 {
        return Err(ProfileError::Domain(format!(
            "gluing needs at least two segments, got {s}"
        )));
    }
    let a = h / s as f64;
    let params = params_from_m_with(m_half, a, tol)?;
    let seg = build_profile_with(&params, n_per_segment, GridKind::Chebyshev, tol)?;
    let n = n_per_segment;
    let total = s * n + 1;
    let mut z = Vec::with_capacity(total);
    let mut phi = Vec::with_capacity(total);
    let mut dphi = Vec::with_capacity(total);
    let mut ddphi = Vec::with_capacity(total);
    let mut weights = vec![0.0; total];
    for j in 0..s {
        let start = if j == 0 { 0 } else { 1 };
        let offset = j as f64 * a;
        for i in start..=n {
            // even arches copy the segment, odd arches are its odd reflection
            let (src, sign) = if j % 2 == 0 { (i, 1.0) } else { (n - i, -1.0) };
            z.push(offset + seg.z[i]);
            phi.push(sign * seg.phi[src]);
            dphi.push(seg.dphi[src]);
            ddphi.push(sign * seg.ddphi[src]);
        }
        for i in 0..=n {
            weights[j * n + i] += seg.weights[i];
        }
    }
    z[total - 1] = h;
    let mut profile = Profile {
        params,
        z,
        phi,
        dphi,
        ddphi,
        segments: s,
        residual: 0.0,
        grid: GridKind::Chebyshev,
        weights,
    };
    certify(&mut profile, tol.construction, tol)?;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_parameters_for_unit_discriminant() {
        let p = params_from_m(3f64.sqrt() / 2.0, 1.0).unwrap();
        assert!((p.psi_plus - 1.5).abs() < 1e-15);
        assert!((p.psi_minus + 0.5).abs() < 1e-15);
        assert!((p.p - 0.75).abs() < 1e-15);
        assert!((p.q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn small_m_limit() {
        let p = params_from_m(1e-6, 1.0).unwrap();
        assert!((p.psi_plus - 1.0).abs() < 1e-6);
        assert!(p.psi_minus.abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(params_from_m(-1.0, 1.0), Err(ProfileError::Domain(_))));
        assert!(matches!(params_from_m(1.0, 0.0), Err(ProfileError::Domain(_))));
        assert!(matches!(params_from_m(f64::NAN, 1.0), Err(ProfileError::Domain(_))));
    }

    #[test]
    fn endpoint_values() {
        let p = params_from_m(2.0, 1.5).unwrap();
        assert_eq!(psi_of_z(&p, 0.0).unwrap(), p.psi_plus);
        assert_eq!(psi_of_z(&p, 1.5).unwrap(), p.psi_minus);
        assert_eq!(phi_of_psi(&p, p.psi_plus).unwrap(), 0.0);
        assert_eq!(phi_of_psi(&p, p.psi_minus).unwrap(), 0.0);
        assert!(phi_of_psi(&p, p.psi_plus + 0.1).is_err());
        assert!(psi_of_z(&p, 1.6).is_err());
    }

    #[test]
    fn phi_is_linear_in_c() {
        let p = params_from_m(0.7, 1.0).unwrap();
        let mut p2 = p;
        p2.c *= 2.0;
        for psi in [-0.2, 0.0, 0.4, 1.0] {
            let a = phi_of_psi(&p, psi).unwrap();
            let b = phi_of_psi(&p2, psi).unwrap();
            assert!((b - 2.0 * a).abs() < 1e-15);
        }
    }

    #[test]
    fn wrong_constant_fails_certification() {
        let mut p = params_from_m(3f64.sqrt() / 2.0, 1.0).unwrap();
        p.c *= p.delta;
        let err = build_profile(&p, 64, GridKind::Chebyshev).unwrap_err();
        assert!(matches!(err, ProfileError::Certification { .. }), "{err:?}");
    }

    #[test]
    fn small_n_rejected() {
        let p = params_from_m(1.0, 1.0).unwrap();
        assert!(build_profile(&p, 8, GridKind::Chebyshev).is_err());
        assert!(glue_sign_changing(1.0, 1.0, 1, 32).is_err());
    }

    #[test]
    fn glued_profile_alternates() {
        let g = glue_sign_changing(1.0, 1.0, 3, 64).unwrap();
        assert_eq!(g.interior_zeros(), 2);
        assert_eq!(g.z.len(), 3 * 64 + 1);
        assert_eq!(g.height(), 1.0);
        assert!(g.z.windows(2).all(|w| w[1] > w[0]));
    }
}
