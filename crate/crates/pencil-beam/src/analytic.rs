//! Closed-form reference solutions and benchmark initial data.
//!
//! For a point source at the origin entering along the x-axis, the
//! pencil-beam equation has the Gaussian solution `exact_2d`; the full 3D
//! phase-space solution factorizes into two independent copies, and
//! integrating out the velocity variables gives the spatial flux
//! `scalar_flux`, itself the solution of a Fokker-Planck-type diffusion
//! equation with diffusivity growing like x^2.

use std::f64::consts::PI;

/// Fundamental solution at depth x > 0:
///
/// u(x, y, eta) = sqrt(3) / (pi sigma x^2)
///              * exp[-(2/sigma) (3y^2/x^3 - 3 y eta/x^2 + eta^2/x)]
///
/// The quadratic form is positive definite, with y-variance sigma x^3 / 3
/// and eta-variance sigma x (see `var_y` / `var_eta`).
pub fn exact_2d(sigma_tr: f64, x: f64, y: f64, eta: f64) -> f64 {
    let q = 3.0 * y * y / x.powi(3) - 3.0 * y * eta / (x * x) + eta * eta / x;
    3.0_f64.sqrt() / (PI * sigma_tr * x * x) * (-2.0 / sigma_tr * q).exp()
}

/// 3D phase-space solution: the (y, eta) and (z, xi) pairs decouple.
pub fn exact_3d(sigma_tr: f64, x: f64, y: f64, z: f64, eta: f64, xi: f64) -> f64 {
    exact_2d(sigma_tr, x, y, eta) * exact_2d(sigma_tr, x, z, xi)
}

/// Scalar flux: integral of `exact_3d` over (eta, xi) on all of R^2.
///
/// U(x, y, z) = 3 / (2 pi sigma x^3) * exp[-(3 / (2 sigma)) (y^2+z^2)/x^3]
///
/// Satisfies dU/dx = (sigma x^2 / 2) (d2U/dy2 + d2U/dz2).
pub fn scalar_flux(sigma_tr: f64, x: f64, y: f64, z: f64) -> f64 {
    3.0 / (2.0 * PI * sigma_tr * x.powi(3))
        * (-(1.5 / sigma_tr) * (y * y + z * z) / x.powi(3)).exp()
}

/// Marginal y-variance of `exact_2d` at depth x.
pub fn var_y(sigma_tr: f64, x: f64) -> f64 {
    sigma_tr * x.powi(3) / 3.0
}

/// Marginal eta-variance of `exact_2d` at depth x.
pub fn var_eta(sigma_tr: f64, x: f64) -> f64 {
    sigma_tr * x
}

/// Center of the conditional eta-distribution at fixed y: the Gaussian
/// ridge eta = 3y/(2x). Useful as an integration breakpoint.
pub fn ridge_eta(x: f64, y: f64) -> f64 {
    1.5 * y / x
}

/// Conditional eta-variance at fixed y.
pub fn var_eta_given_y(sigma_tr: f64, x: f64) -> f64 {
    sigma_tr * x / 4.0
}

/// Squared L2(dy deta) norm of `exact_2d` over the whole plane:
/// sqrt(3) / (2 pi sigma x^2).
pub fn exact_2d_l2_squared(sigma_tr: f64, x: f64) -> f64 {
    3.0_f64.sqrt() / (2.0 * PI * sigma_tr * x * x)
}

/// Benchmark source profiles imposed at the slab entry x = 0. All are
/// radial in (y, eta) with a sharpness parameter alpha in (0, 1); smaller
/// alpha concentrates the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// 1 / (y^2 + eta^2 + alpha): blows up toward a point source.
    DiracType { alpha: f64 },
    /// exp(-(y^2 + eta^2 + alpha)): smooth thermal-like profile.
    MaxwellianType { alpha: f64 },
    /// 1 / sqrt(y^2 + eta^2 + alpha): intermediate decay.
    HyperbolicType { alpha: f64 },
}

impl InitialData {
    pub fn alpha(&self) -> f64 {
        match *self {
            InitialData::DiracType { alpha }
            | InitialData::MaxwellianType { alpha }
            | InitialData::HyperbolicType { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let a = self.alpha();
        if a > 0.0 && a < 1.0 {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!(
                "alpha {a} outside (0, 1)"
            )))
        }
    }

    pub fn eval(&self, y: f64, eta: f64) -> f64 {
        let r2 = y * y + eta * eta;
        match *self {
            InitialData::DiracType { alpha } => 1.0 / (r2 + alpha),
            InitialData::MaxwellianType { alpha } => (-(r2 + alpha)).exp(),
            InitialData::HyperbolicType { alpha } => 1.0 / (r2 + alpha).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialData::DiracType { .. } => "dirac",
            InitialData::MaxwellianType { .. } => "maxwellian",
            InitialData::HyperbolicType { .. } => "hyperbolic",
        }
    }
}
