//! Self-similar blowup profiles for the inviscid hydrostatic (primitive) equations,
//! with solvers for the reduced nonlocal equation and the two-dimensional channel.

pub mod chebyshev;
pub mod hydro2d;
pub mod io;
pub mod ode;
pub mod profile;
pub mod reduced1d;
pub mod specfun;

use thiserror::Error;

pub use hydro2d::{Field2D, Hydro2dError};
pub use profile::{Profile, ProfileError, ProfileParams};
pub use reduced1d::{BlowupFit, Reduced1dError, State1D};
pub use specfun::{JacobiRule, SpecfunError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Reduced1d(#[from] Reduced1dError),
    #[error(transparent)]
    Fit(#[from] reduced1d::FitError),
    #[error(transparent)]
    Hydro2d(#[from] Hydro2dError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}
