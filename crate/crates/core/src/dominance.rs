//! Single-crossing classification of F_{X*} against Φ.
//!
//! The comparison is carried out through h(ζ) = Φ⁻¹(ζ) − g(ζ, μ), which is
//! strictly increasing in ζ. Since G is increasing in its first argument,
//! sign h(ζ) = sign(F_{X*}(x) − Φ(x)) at x = Φ⁻¹(ζ), so the crossing is
//! located by bisecting that sign along the x-axis; every iterate keeps the
//! same certificate a ζ-space bisection of h would.

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{max_cdf, max_pdf, max_quantile};
use crate::error::{finite, open_unit, Error, Result};
use crate::params::{EquicorrParams, QuadratureSpec};
use crate::roots::{bisect, Bracket};
use crate::special::{norm_cdf, norm_pdf, norm_quantile};

/// Lower and upper probe levels for the sign of h.
pub const PROBE_LO: f64 = 1e-6;
pub const PROBE_HI: f64 = 1.0 - 1e-6;
/// |h| below this at a probe is treated as zero.
pub const H_ZERO_TOL: f64 = 1e-9;
/// Required |F(x₀) − Φ(x₀)| at a reported crossing.
pub const CROSSING_TOL: f64 = 1e-9;
/// |F − Φ| at or below this counts as unsigned in [`count_sign_changes`].
pub const SIGN_TOL: f64 = 1e-10;
/// Slack allowed in [`conditional_dominance_check`].
pub const CONDITIONAL_SLACK: f64 = 1e-10;
pub const MIN_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DominanceKind {
    /// F_{X*} ≤ Φ: the maximum is stochastically larger.
    MaxDominates,
    /// F_{X*} ≥ Φ: the standard normal is stochastically larger.
    StdDominates,
    /// One crossing at x₀ with F_{X*} < Φ below it and F_{X*} > Φ above.
    SingleCrossing,
    /// F_{X*} ≡ Φ (k = 1, μ₁ = 0).
    Identical,
}

/// One evaluated probe of h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HValue {
    pub zeta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub kind: DominanceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf_gap: Option<f64>,
    /// Probes of h behind the verdict; empty when the mean bound alone
    /// decides it.
    pub certificate_grid: Vec<HValue>,
}

impl DominanceVerdict {
    fn one_sided(kind: DominanceKind, certificate_grid: Vec<HValue>) -> Self {
        Self {
            kind,
            x0: None,
            pdf_gap: None,
            certificate_grid,
        }
    }
}

/// h(ζ) = Φ⁻¹(ζ) − g(ζ, μ)
pub fn h_eval(zeta: f64, p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    open_unit("zeta", zeta)?;
    Ok(norm_quantile(zeta) - max_quantile(zeta, p, q)?)
}

/// h over several levels, evaluated in parallel.
pub fn h_curve(zetas: &[f64], p: &EquicorrParams, q: &QuadratureSpec) -> Result<Vec<HValue>> {
    zetas
        .par_iter()
        .map(|&zeta| h_eval(zeta, p, q).map(|value| HValue { zeta, value }))
        .collect()
}

/// Classifies the relation between F_{X*} and Φ, locating the crossing
/// point when there is one.
pub fn find_crossing(p: &EquicorrParams, q: &QuadratureSpec) -> Result<DominanceVerdict> {
    q.validate()?;
    // F_{X*}(x) ≤ Φ(x − μ_i) < Φ(x) for every x once some μ_i > 0
    if p.max_mu() > 0.0 {
        return Ok(DominanceVerdict::one_sided(DominanceKind::MaxDominates, Vec::new()));
    }

    let probes = h_curve(&[PROBE_LO, PROBE_HI], p, q)?;
    let (h_lo, h_hi) = (probes[0].value, probes[1].value);

    if p.k() == 1 && p.mu()[0] == 0.0 {
        if h_lo.abs() < H_ZERO_TOL && h_hi.abs() < H_ZERO_TOL {
            return Ok(DominanceVerdict::one_sided(DominanceKind::Identical, probes));
        }
        return Err(Error::Integrity(format!(
            "k = 1, mu = 0 should give h = 0, got ({h_lo:e}, {h_hi:e})"
        )));
    }
    if h_lo.abs() < H_ZERO_TOL || h_hi.abs() < H_ZERO_TOL {
        return Err(Error::Inconclusive(format!(
            "h within {H_ZERO_TOL:e} of zero at a probe: h({PROBE_LO}) = {h_lo:e}, h({PROBE_HI}) = {h_hi:e}"
        )));
    }

    match (h_lo > 0.0, h_hi > 0.0) {
        (true, true) => Ok(DominanceVerdict::one_sided(DominanceKind::StdDominates, probes)),
        (false, false) => Ok(DominanceVerdict::one_sided(DominanceKind::MaxDominates, probes)),
        (true, false) => Err(Error::TheoremViolated(format!(
            "h decreases between probes: h({PROBE_LO}) = {h_lo:e} > 0 > h({PROBE_HI}) = {h_hi:e}"
        ))),
        (false, true) => {
            let x0 = locate_crossing(p, q, h_lo, h_hi)?;
            let gap = max_cdf(x0, p, q)? - norm_cdf(x0);
            if gap.abs() > CROSSING_TOL {
                return Err(Error::Integrity(format!(
                    "crossing at {x0} has |F - Phi| = {:e}",
                    gap.abs()
                )));
            }
            let pdf_gap = max_pdf(x0, p, q)? - norm_pdf(x0);
            if !(pdf_gap > 0.0) {
                return Err(Error::TheoremViolated(format!(
                    "density gap at crossing x0 = {x0} is {pdf_gap:e}, expected > 0"
                )));
            }
            Ok(DominanceVerdict {
                kind: DominanceKind::SingleCrossing,
                x0: Some(x0),
                pdf_gap: Some(pdf_gap),
                certificate_grid: probes,
            })
        }
    }
}

fn locate_crossing(p: &EquicorrParams, q: &QuadratureSpec, h_lo: f64, h_hi: f64) -> Result<f64> {
    let gap = |x: f64| max_cdf(x, p, q).map(|f| f - norm_cdf(x));
    let bracket = Bracket {
        lo: norm_quantile(PROBE_LO),
        hi: norm_quantile(PROBE_HI),
        f_lo: h_lo,
        f_hi: h_hi,
    };
    let out = bisect(gap, bracket, 1e-13, 200)?;
    Ok(0.5 * (out.lo + out.hi))
}

/// Evaluation grid spanning [min μ − 8, 8 + √(2 ln k)].
pub fn default_grid(p: &EquicorrParams, points: usize) -> Vec<f64> {
    let lo = p.min_mu() - 8.0;
    let hi = 8.0 + (2.0 * (p.k() as f64).ln()).sqrt();
    linspace(lo, hi, points.max(2))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::InvalidParams(format!(
            "grid needs at least {MIN_GRID_POINTS} points, got {}",
            grid.len()
        )));
    }
    if let Some(&bad) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "grid", value: bad });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Number of sign alternations of F_{X*} − Φ along `grid`, ignoring points
/// where the difference is within [`SIGN_TOL`] of zero.
pub fn count_sign_changes(p: &EquicorrParams, grid: &[f64], q: &QuadratureSpec) -> Result<usize> {
    check_grid(grid)?;
    let diffs: Vec<f64> = grid
        .par_iter()
        .map(|&x| max_cdf(x, p, q).map(|f| f - norm_cdf(x)))
        .collect::<Result<_>>()?;
    Ok(sign_changes(&diffs, SIGN_TOL))
}

pub(crate) fn sign_changes(values: &[f64], tol: f64) -> usize {
    let mut last: Option<bool> = None;
    let mut changes = 0;
    for &v in values {
        if v.abs() <= tol {
            continue;
        }
        let pos = v > 0.0;
        if let Some(prev) = last {
            if prev != pos {
                changes += 1;
            }
        }
        last = Some(pos);
    }
    changes
}

/// Checks the conditional dominance implied by a crossing at `x0`: above x₀
/// the conditional CDF of X* sits above that of Z ~ N(0,1), below x₀ it sits
/// below. `n_grid` points are used on each side, out to 10 units from x₀.
pub fn conditional_dominance_check(
    p: &EquicorrParams,
    x0: f64,
    n_grid: usize,
    q: &QuadratureSpec,
) -> Result<bool> {
    finite("x0", x0)?;
    if n_grid == 0 {
        return Err(Error::InvalidParams("n_grid must be positive".into()));
    }
    let f0 = max_cdf(x0, p, q)?;
    let phi0 = norm_cdf(x0);
    if (f0 - phi0).abs() > CROSSING_TOL {
        return Err(Error::NotACrossing { x0, gap: f0 - phi0 });
    }
    let span = 10.0;
    let step = span / n_grid as f64;
    let above: Vec<f64> = (1..=n_grid).map(|j| x0 + step * j as f64).collect();
    let below: Vec<f64> = (1..=n_grid).map(|j| x0 - step * j as f64).collect();

    let upper_ok = above
        .par_iter()
        .map(|&x| {
            let fx = max_cdf(x, p, q)?;
            let lhs = (fx - f0) / (1.0 - f0);
            let rhs = (norm_cdf(x) - phi0) / (1.0 - phi0);
            Ok(lhs >= rhs - CONDITIONAL_SLACK)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|b| b);
    let lower_ok = below
        .par_iter()
        .map(|&x| {
            let fx = max_cdf(x, p, q)?;
            let lhs = fx / f0;
            let rhs = norm_cdf(x) / phi0;
            Ok(lhs <= rhs + CONDITIONAL_SLACK)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|b| b);
    Ok(upper_ok && lower_ok)
}
