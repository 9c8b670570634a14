//! Threshold design for k treatments against a control.
//!
//! If P(all X_i < 0) ≥ κ then P(all X_i < Φ⁻¹(ζ) − Φ⁻¹(κ)) > ζ for every
//! ζ ∈ (κ, 1). This module computes the shift, the probability it attains
//! and the margin over ζ.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::max_cdf;
use crate::error::{Error, Result};
use crate::params::{EquicorrParams, QuadratureSpec};
use crate::special::norm_quantile;

/// Tolerance on the margin in the k = 1 case, where the corollary holds with
/// equality. Also the noise floor below which a negative margin is reported
/// as a violation.
pub const DEGENERATE_MARGIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryResult {
    pub kappa: f64,
    pub zeta: f64,
    pub shift: f64,
    pub attained: f64,
    pub margin: f64,
}

pub fn threshold_shift(kappa: f64, zeta: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < zeta && zeta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need 0 < kappa < zeta < 1, got kappa = {kappa}, zeta = {zeta}"
        )));
    }
    Ok(norm_quantile(zeta) - norm_quantile(kappa))
}

/// κ* = P(X_i < 0 for all i), the largest κ the hypothesis allows.
pub fn calibrate_kappa(p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    max_cdf(0.0, p, q)
}

/// With one coordinate F(x) = Φ(x − μ₁), so κ* = Φ(−μ₁) and the attained
/// probability at κ = κ* is exactly ζ.
pub fn is_degenerate(p: &EquicorrParams) -> bool {
    p.k() == 1
}

pub fn corollary_check(
    p: &EquicorrParams,
    kappa: f64,
    zeta: f64,
    q: &QuadratureSpec,
) -> Result<CorollaryResult> {
    let shift = threshold_shift(kappa, zeta)?;
    let kappa_star = calibrate_kappa(p, q)?;
    if kappa_star < kappa {
        return Err(Error::HypothesisViolated { kappa_star, kappa });
    }
    let attained = max_cdf(shift, p, q)?;
    let result = CorollaryResult {
        kappa,
        zeta,
        shift,
        attained,
        margin: attained - zeta,
    };
    let holds = if is_degenerate(p) && kappa == kappa_star {
        result.margin.abs() <= DEGENERATE_MARGIN_TOL
    } else {
        result.margin > -DEGENERATE_MARGIN_TOL
    };
    if !holds {
        return Err(Error::TheoremViolated(format!(
            "P(max < {shift}) = {attained} does not exceed zeta = {zeta} (kappa = {kappa})"
        )));
    }
    Ok(result)
}

/// One result per ζ; failures stay with their entry.
pub fn zeta_sweep(
    p: &EquicorrParams,
    kappa: f64,
    zetas: &[f64],
    q: &QuadratureSpec,
) -> Vec<Result<CorollaryResult>> {
    zetas
        .par_iter()
        .map(|&zeta| corollary_check(p, kappa, zeta, q))
        .collect()
}

/// CSV with header `zeta,kappa,shift,attained,margin`.
pub fn write_csv<W: Write>(rows: &[CorollaryResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "zeta,kappa,shift,attained,margin")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.zeta, r.kappa, r.shift, r.attained, r.margin
        )?;
    }
    Ok(())
}
