use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical configuration of a bilinear-biquadratic spin-1 chain.
///
/// Energies are measured in units of `alpha` (with hbar = 1, so times are in
/// units of 1/alpha). `field_h` is dimensionless; the field term in the chain
/// Hamiltonian is `alpha * field_h * sum_i Jz_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBParams {
    /// Number of sites N (site 1 is the leftmost).
    pub n_sites: usize,
    /// Mixing angle between the bilinear and biquadratic couplings, radians.
    pub theta: f64,
    /// Overall coupling strength, alpha >= 0.
    pub alpha: f64,
    /// Dimensionless global field strength h.
    pub field_h: f64,
}

/// The dimerized point theta = -pi/2 at which the transfer protocol operates.
pub const DIMERIZED_THETA: f64 = -PI / 2.0;

impl BBParams {
    pub fn new(n_sites: usize, theta: f64, alpha: f64, field_h: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::domain(format!(
                "chain needs at least 2 sites, got {n_sites}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
        }
        if !theta.is_finite() || !field_h.is_finite() {
            return Err(Error::domain("theta and field_h must be finite".to_string()));
        }
        Ok(BBParams {
            n_sites,
            theta,
            alpha,
            field_h,
        })
    }

    /// Parameters at the dimerized point with no field.
    pub fn dimerized(n_sites: usize, alpha: f64) -> Result<Self> {
        Self::new(n_sites, DIMERIZED_THETA, alpha, 0.0)
    }

    /// True when theta sits at the dimerized point (within `tol` radians).
    pub fn is_dimerized(&self, tol: f64) -> bool {
        (self.theta - DIMERIZED_THETA).abs() <= tol
    }

    /// The transfer protocol is defined at theta = -pi/2 with alpha > 0 and an
    /// odd number of sites; reject anything else.
    pub fn require_protocol(&self) -> Result<()> {
        if !self.is_dimerized(1e-9) {
            return Err(Error::domain(format!(
                "transfer protocol is defined at the dimerized point theta = -pi/2, got theta = {}",
                self.theta
            )));
        }
        if self.n_sites % 2 == 0 {
            return Err(Error::domain(format!(
                "transfer protocol needs an odd number of sites, got N = {}",
                self.n_sites
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::domain("transfer protocol needs alpha > 0".to_string()));
        }
        Ok(())
    }
}

/// Single-site Jz eigenstate of a spin-1. Ordering convention:
/// (+1, 0, -1) <-> basis indices (0, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteState {
    Plus,
    Zero,
    Minus,
}

impl SiteState {
    /// Jz eigenvalue m in {+1, 0, -1}.
    pub fn m(self) -> i32 {
        match self {
            SiteState::Plus => 1,
            SiteState::Zero => 0,
            SiteState::Minus => -1,
        }
    }

    /// Basis index (digit) in {0, 1, 2}.
    pub fn digit(self) -> usize {
        match self {
            SiteState::Plus => 0,
            SiteState::Zero => 1,
            SiteState::Minus => 2,
        }
    }

    pub fn from_digit(d: usize) -> Result<Self> {
        match d {
            0 => Ok(SiteState::Plus),
            1 => Ok(SiteState::Zero),
            2 => Ok(SiteState::Minus),
            _ => Err(Error::domain(format!("site digit must be 0, 1 or 2, got {d}"))),
        }
    }

    pub fn from_m(m: i32) -> Result<Self> {
        match m {
            1 => Ok(SiteState::Plus),
            0 => Ok(SiteState::Zero),
            -1 => Ok(SiteState::Minus),
            _ => Err(Error::domain(format!("m must be +1, 0 or -1, got {m}"))),
        }
    }

    pub const ALL: [SiteState; 3] = [SiteState::Plus, SiteState::Zero, SiteState::Minus];
}
