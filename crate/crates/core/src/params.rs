use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of coordinates. Cost per kernel evaluation is
/// linear in `k` and in the node count.
pub const MAX_K: usize = 1_000_000;

/// Stand-in for a mean sent to −∞. Φ((x + 40)/√(1−ρ)) rounds to 1 for every
/// argument the kernels see, so a coordinate placed here drops out.
pub const NEG_INF_SURROGATE: f64 = -40.0;

/// Mean vector and common correlation of an equicorrelated Gaussian vector
/// with unit variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquicorrParams {
    rho: f64,
    mu: Vec<f64>,
}

impl EquicorrParams {
    pub fn new(rho: f64, mu: Vec<f64>) -> Result<Self> {
        check_rho(rho)?;
        check_means("mu", &mu)?;
        Ok(Self { rho, mu })
    }

    /// All `k` means equal to `mean`.
    pub fn exchangeable(k: usize, rho: f64, mean: f64) -> Result<Self> {
        Self::new(rho, vec![mean; k])
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_mu(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same correlation, every mean shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.rho, self.mu.iter().map(|m| m + c).collect())
    }

    /// Location arguments `(ν₀, ν) = (x, μ)` at which G equals F_{X*}(x).
    pub fn location_at(&self, x: f64) -> LocationArgs {
        LocationArgs {
            nu0: x,
            nu: self.mu.clone(),
        }
    }
}

/// Controls for the one-dimensional kernel quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Base node count; split into 16-point Gauss–Legendre panels.
    pub nodes: usize,
    /// Truncation half-width in standard deviations of the mixing variable.
    pub radius: f64,
    /// Target absolute error.
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 256,
            radius: 9.0,
            abs_tol: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::InvalidParams(format!(
                "quadrature nodes must be >= 16, got {}",
                self.nodes
            )));
        }
        if !(self.radius >= 6.0) || !self.radius.is_finite() {
            return Err(Error::InvalidParams(format!(
                "quadrature radius must be >= 6, got {}",
                self.radius
            )));
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidParams(format!(
                "quadrature abs_tol must be > 0, got {}",
                self.abs_tol
            )));
        }
        Ok(())
    }
}

/// Arguments of G(ν₀, ν): Y₀ ~ N(ν₀, ρ) against independent Y_j ~ N(ν_j, 1−ρ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationArgs {
    pub nu0: f64,
    pub nu: Vec<f64>,
}

impl LocationArgs {
    pub fn new(nu0: f64, nu: Vec<f64>) -> Result<Self> {
        let args = Self { nu0, nu };
        args.validate()?;
        Ok(args)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nu0.is_finite() {
            return Err(Error::NonFinite {
                what: "nu0",
                value: self.nu0,
            });
        }
        check_means("nu", &self.nu)
    }

    pub fn k(&self) -> usize {
        self.nu.len()
    }

    /// Both ν₀ and every ν_j moved by `c`.
    pub fn translated(&self, c: f64) -> Self {
        Self {
            nu0: self.nu0 + c,
            nu: self.nu.iter().map(|v| v + c).collect(),
        }
    }

    pub fn is_sorted_nonincreasing(&self) -> bool {
        self.nu.windows(2).all(|w| w[0] >= w[1])
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "rho",
            value: rho,
            domain: "(0, 1)",
        })
    }
}

fn check_means(what: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParams(format!("{what} must be nonempty")));
    }
    if v.len() > MAX_K {
        return Err(Error::InvalidParams(format!(
            "{what} has {} entries, limit is {MAX_K}",
            v.len()
        )));
    }
    if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what, value: bad });
    }
    Ok(())
}
