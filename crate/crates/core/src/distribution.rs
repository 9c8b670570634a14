//! Distribution of X* = max{X₁,…,X_k} through the one-dimensional kernel
//!
//! ```text
//! G(ν₀, ν) = ∫ φ(u) ∏_j Φ((ν₀ + √ρ·u − ν_j)/√(1−ρ)) du
//! ```
//!
//! with F_{X*}(x) = G(x, μ). Every derivative used elsewhere in the crate is
//! an integral against the same mixing density φ(u) (or against
//! φ'(u) = −u·φ(u)), so all of them share one quadrature path. Products of
//! CDFs are accumulated as sums of log Φ, and Σ_j m(z_j) with the inverse
//! Mill's ratio stands in for the logarithmic derivative of the product.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{open_unit, Error, Result};
use crate::params::{check_rho, EquicorrParams, LocationArgs, QuadratureSpec};
use crate::quadrature::{integrate_checked, PANEL_ORDER};
use crate::roots::{brent, expand_increasing};
use crate::special::{norm_log_cdf, norm_log_pdf, norm_pdf, norm_quantile, norm_sf};

/// Residual demanded of [`max_quantile`].
pub const QUANTILE_RESIDUAL_TOL: f64 = 1e-10;
const QUANTILE_MAX_DOUBLINGS: u32 = 60;

/// Value of a kernel integral together with a bound on its absolute error
/// (quadrature estimate plus the truncation tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub error_bound: f64,
}

/// First and second partial derivatives of G at one point, for coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocationDerivatives {
    /// ∂G/∂ν₀
    pub d_nu0: f64,
    /// ∂G/∂ν_i
    pub d_nui: f64,
    /// ∂²G/∂ν₀∂ν_i
    pub d2_nu0_nui: f64,
    /// ∂²G/∂ν₀²
    pub d2_nu0: f64,
}

/// Pointwise pieces of the integrand at a mixing value `u`.
pub(crate) struct Kernel<'a> {
    nu0: f64,
    nu: &'a [f64],
    sqrt_rho: f64,
    sqrt_1m_rho: f64,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(nu0: f64, nu: &'a [f64], rho: f64) -> Self {
        Self {
            nu0,
            nu,
            sqrt_rho: rho.sqrt(),
            sqrt_1m_rho: (1.0 - rho).sqrt(),
        }
    }

    pub(crate) fn sqrt_rho(&self) -> f64 {
        self.sqrt_rho
    }

    pub(crate) fn sqrt_1m_rho(&self) -> f64 {
        self.sqrt_1m_rho
    }

    /// z_j at mixing value u, i.e. the standardized gap between the
    /// threshold t = ν₀ + √ρ·u and ν_j.
    #[inline]
    pub(crate) fn z(&self, u: f64, j: usize) -> f64 {
        (self.nu0 + self.sqrt_rho * u - self.nu[j]) / self.sqrt_1m_rho
    }

    /// ln ∏_j Φ(z_j)
    #[inline]
    pub(crate) fn log_product(&self, u: f64) -> f64 {
        let t = self.nu0 + self.sqrt_rho * u;
        self.nu
            .iter()
            .map(|v| norm_log_cdf((t - v) / self.sqrt_1m_rho))
            .sum()
    }

    /// (ln ∏_j Φ(z_j), Σ_j m(z_j), m(z_i))
    #[inline]
    pub(crate) fn log_product_and_mills(&self, u: f64, i: Option<usize>) -> (f64, f64, f64) {
        let t = self.nu0 + self.sqrt_rho * u;
        let mut log_p = 0.0;
        let mut sum_m = 0.0;
        let mut m_i = 0.0;
        for (j, v) in self.nu.iter().enumerate() {
            let z = (t - v) / self.sqrt_1m_rho;
            let lc = norm_log_cdf(z);
            let m = (norm_log_pdf(z) - lc).exp();
            log_p += lc;
            sum_m += m;
            if Some(j) == i {
                m_i = m;
            }
        }
        (log_p, sum_m, m_i)
    }
}

fn panels(q: &QuadratureSpec) -> usize {
    (q.nodes / PANEL_ORDER).max(1)
}

fn tail_bound(q: &QuadratureSpec) -> f64 {
    2.0 * norm_sf(q.radius)
}

fn check_inputs(args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<()> {
    check_rho(rho)?;
    args.validate()?;
    q.validate()
}

fn check_index(i: usize, k: usize) -> Result<()> {
    if i < k {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: i, k })
    }
}

fn g_unchecked(nu0: f64, nu: &[f64], rho: f64, q: &QuadratureSpec) -> Result<KernelValue> {
    let kernel = Kernel::new(nu0, nu, rho);
    let est = integrate_checked(
        |u| [norm_pdf(u) * kernel.log_product(u).exp()],
        -q.radius,
        q.radius,
        panels(q),
        q.abs_tol,
    )?;
    Ok(KernelValue {
        value: est.value[0].clamp(0.0, 1.0),
        error_bound: est.error + tail_bound(q),
    })
}

fn density_unchecked(nu0: f64, nu: &[f64], rho: f64, q: &QuadratureSpec) -> Result<KernelValue> {
    let kernel = Kernel::new(nu0, nu, rho);
    let inv_c = 1.0 / kernel.sqrt_1m_rho();
    let est = integrate_checked(
        |u| {
            let (log_p, sum_m, _) = kernel.log_product_and_mills(u, None);
            [norm_pdf(u) * log_p.exp() * sum_m * inv_c]
        },
        -q.radius,
        q.radius,
        panels(q),
        q.abs_tol,
    )?;
    Ok(KernelValue {
        value: est.value[0],
        error_bound: est.error + tail_bound(q),
    })
}

/// G(ν₀, ν) with its error bound.
pub fn g_integral_estimate(args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<KernelValue> {
    check_inputs(args, rho, q)?;
    g_unchecked(args.nu0, &args.nu, rho, q)
}

/// G(ν₀, ν) = P(max_j Y_j < Y₀).
pub fn g_integral(args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    g_integral_estimate(args, rho, q).map(|v| v.value)
}

/// F_{X*}(x)
pub fn max_cdf(x: f64, p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    crate::error::finite("x", x)?;
    q.validate()?;
    g_unchecked(x, p.mu(), p.rho(), q).map(|v| v.value)
}

/// f_{X*}(x) = ∂G/∂ν₀ at (x, μ), using the sum-over-coordinates form.
pub fn max_pdf(x: f64, p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    crate::error::finite("x", x)?;
    q.validate()?;
    density_unchecked(x, p.mu(), p.rho(), q).map(|v| v.value)
}

/// F_{X*} over a grid, evaluated in parallel.
pub fn max_cdf_grid(xs: &[f64], p: &EquicorrParams, q: &QuadratureSpec) -> Result<Vec<f64>> {
    xs.par_iter().map(|&x| max_cdf(x, p, q)).collect()
}

/// f_{X*} over a grid, evaluated in parallel.
pub fn max_pdf_grid(xs: &[f64], p: &EquicorrParams, q: &QuadratureSpec) -> Result<Vec<f64>> {
    xs.par_iter().map(|&x| max_pdf(x, p, q)).collect()
}

/// The ζ-quantile of X*, i.e. g(ζ, μ) with G(g, μ) = ζ.
pub fn max_quantile(zeta: f64, p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    open_unit("zeta", zeta)?;
    q.validate()?;
    let z = norm_quantile(zeta);
    let lo = p.min_mu() + z - 1.0;
    let hi = p.max_mu() + z + (p.k() as f64).sqrt() + 1.0;
    let f = |x: f64| g_unchecked(x, p.mu(), p.rho(), q).map(|v| v.value - zeta);
    let bracket = expand_increasing(f, lo, hi, QUANTILE_MAX_DOUBLINGS)?;
    let x = brent(f, bracket, 1e-14, 200)?;
    let residual = f(x)?;
    if residual.abs() > QUANTILE_RESIDUAL_TOL {
        return Err(Error::Integrity(format!(
            "quantile residual {residual:e} at zeta = {zeta}"
        )));
    }
    Ok(x)
}

/// All first and second partial derivatives of G needed for coordinate `i`
/// (0-based), from one pass over the quadrature nodes.
///
/// In u-coordinates, with P = ∏Φ(z_j), a_i = P·m(z_i) and D = P·Σm(z_j)/√(1−ρ):
///
/// ```text
/// ∂G/∂ν₀      =  ∫ φ D
/// ∂G/∂ν_i     = −(1/√(1−ρ))   ∫ φ a_i
/// ∂²G/∂ν₀∂ν_i =  (1/√(ρ(1−ρ))) ∫ φ' a_i
/// ∂²G/∂ν₀²    = −(1/√ρ)        ∫ φ' D
/// ```
pub fn location_derivatives(
    i: usize,
    args: &LocationArgs,
    rho: f64,
    q: &QuadratureSpec,
) -> Result<LocationDerivatives> {
    check_inputs(args, rho, q)?;
    check_index(i, args.k())?;
    let kernel = Kernel::new(args.nu0, &args.nu, rho);
    let s = kernel.sqrt_rho();
    let c = kernel.sqrt_1m_rho();
    let est = integrate_checked(
        |u| {
            let (log_p, sum_m, m_i) = kernel.log_product_and_mills(u, Some(i));
            let w = norm_pdf(u) * log_p.exp();
            let a = w * m_i;
            let d = w * sum_m / c;
            // φ'(u) = −u φ(u)
            [d, a, -u * a, -u * d]
        },
        -q.radius,
        q.radius,
        panels(q),
        q.abs_tol,
    )?;
    let [d, a, da, dd] = est.value;
    Ok(LocationDerivatives {
        d_nu0: d,
        d_nui: -a / c,
        d2_nu0_nui: da / (s * c),
        d2_nu0: -dd / s,
    })
}

/// ∂G/∂ν_i (0-based `i`); strictly negative.
pub fn dg_dnui(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    location_derivatives(i, args, rho, q).map(|d| d.d_nui)
}

/// ∂G/∂ν₀
pub fn dg_dnu0(args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_inputs(args, rho, q)?;
    density_unchecked(args.nu0, &args.nu, rho, q).map(|v| v.value)
}

/// ∂²G/∂ν₀∂ν_i (0-based `i`).
pub fn d2g_dnu0_dnui(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    location_derivatives(i, args, rho, q).map(|d| d.d2_nu0_nui)
}

/// ∂²G/∂ν₀²
pub fn d2g_dnu02(args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    location_derivatives(0, args, rho, q).map(|d| d.d2_nu0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{norm_cdf, norm_pdf_deriv};
    use std::f64::consts::PI;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn orthant(rho: f64) -> f64 {
        0.25 + rho.asin() / (2.0 * PI)
    }

    fn args(nu0: f64, nu: &[f64]) -> LocationArgs {
        LocationArgs::new(nu0, nu.to_vec()).unwrap()
    }

    #[test]
    fn k1_reduces_to_phi() {
        for rho in [0.1, 0.5, 0.9] {
            let g = g_integral(&args(0.7, &[0.2]), rho, &q()).unwrap();
            assert!((g - norm_cdf(0.5)).abs() < 1e-13, "rho={rho}");
        }
        let p = EquicorrParams::new(0.3, vec![-1.0]).unwrap();
        assert!((max_cdf(0.0, &p, &q()).unwrap() - 0.841_344_746_068_542_9).abs() < 1e-13);
        let p0 = EquicorrParams::new(0.3, vec![0.0]).unwrap();
        assert!((max_pdf(0.0, &p0, &q()).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-13);
    }

    #[test]
    fn orthant_identity() {
        for rho in [0.2, 0.5, 0.8] {
            let g = g_integral(&args(0.0, &[0.0, 0.0]), rho, &q()).unwrap();
            // (Y₁−Y₀, Y₂−Y₀) has correlation ρ and unit variances
            assert!((g - orthant(rho)).abs() < 1e-12, "rho={rho} g={g}");
        }
    }

    #[test]
    fn exchangeable_three_is_quarter() {
        let g = g_integral(&args(0.0, &[0.0, 0.0, 0.0]), 0.5, &q()).unwrap();
        assert!((g - 0.25).abs() < 1e-12);
    }

    #[test]
    fn saturation() {
        let p = EquicorrParams::exchangeable(2, 0.5, 0.0).unwrap();
        assert!((max_cdf(30.0, &p, &q()).unwrap() - 1.0).abs() < 1e-12);
        assert!(max_cdf(-30.0, &p, &q()).unwrap() < 1e-100);
    }

    #[test]
    fn error_paths() {
        assert!(g_integral(&args(0.0, &[0.0]), 1.0, &q()).is_err());
        assert!(g_integral(&args(0.0, &[0.0]), 0.0, &q()).is_err());
        assert!(LocationArgs::new(0.0, vec![]).is_err());
        assert!(matches!(
            dg_dnui(2, &args(0.0, &[0.0, 1.0]), 0.5, &q()),
            Err(Error::IndexOutOfRange { index: 2, k: 2 })
        ));
        let p = EquicorrParams::exchangeable(2, 0.5, 0.0).unwrap();
        assert!(max_quantile(0.0, &p, &q()).is_err());
        assert!(max_quantile(1.0, &p, &q()).is_err());
    }

    #[test]
    fn pdf_matches_cdf_difference() {
        let p = EquicorrParams::exchangeable(2, 0.5, 0.0).unwrap();
        let h = 1e-5;
        let x = 0.3;
        let fd = (max_cdf(x + h, &p, &q()).unwrap() - max_cdf(x - h, &p, &q()).unwrap()) / (2.0 * h);
        assert!((fd - max_pdf(x, &p, &q()).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let p = EquicorrParams::exchangeable(5, 0.2, 0.0).unwrap();
        let est = crate::quadrature::integrate_checked(
            |x| [max_pdf(x, &p, &q()).unwrap()],
            -10.0,
            10.0,
            20,
            1e-11,
        )
        .unwrap();
        assert!((est.value[0] - 1.0).abs() < 1e-9, "{}", est.value[0]);
    }

    #[test]
    fn quantile_cases() {
        let p = EquicorrParams::new(0.4, vec![0.8]).unwrap();
        for zeta in [0.01, 0.3, 0.975] {
            let g = max_quantile(zeta, &p, &q()).unwrap();
            assert!((g - (0.8 + norm_quantile(zeta))).abs() < 1e-10);
        }
        let p = EquicorrParams::exchangeable(2, 0.5, 0.0).unwrap();
        assert!(max_quantile(1.0 / 3.0, &p, &q()).unwrap().abs() < 1e-10);
        for k in [2, 3] {
            let p = EquicorrParams::new(0.35, (0..k).map(|j| -0.3 * j as f64).collect()).unwrap();
            for zeta in [0.01, 0.5, 0.99] {
                let g = max_quantile(zeta, &p, &q()).unwrap();
                assert!((max_cdf(g, &p, &q()).unwrap() - zeta).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn first_derivative_cases() {
        let d = dg_dnui(0, &args(0.4, &[-0.3]), 0.6, &q()).unwrap();
        assert!((d + norm_pdf(0.7)).abs() < 1e-10);

        let a = args(0.0, &[0.0, 0.0]);
        let h = 1e-5;
        let mut up = a.clone();
        up.nu[0] += h;
        let mut dn = a.clone();
        dn.nu[0] -= h;
        let fd = (g_integral(&up, 0.5, &q()).unwrap() - g_integral(&dn, 0.5, &q()).unwrap()) / (2.0 * h);
        let d = dg_dnui(0, &a, 0.5, &q()).unwrap();
        assert!(d < 0.0);
        assert!((fd - d).abs() < 1e-7, "fd={fd} d={d}");
    }

    #[test]
    fn second_derivative_cases() {
        let a = args(0.9, &[-0.4]);
        let d = location_derivatives(0, &a, 0.3, &q()).unwrap();
        assert!((d.d2_nu0 - norm_pdf_deriv(1.3)).abs() < 1e-9);
        assert!((d.d2_nu0_nui + d.d2_nu0).abs() < 1e-9);

        // k=2 against differences of the first derivatives
        let a = args(0.3, &[0.0, -1.0]);
        let rho = 0.4;
        let h = 1e-5;
        let bump0 = |c: f64| args(0.3 + c, &[0.0, -1.0]);
        for i in 0..2 {
            let d = location_derivatives(i, &a, rho, &q()).unwrap();
            let up = location_derivatives(i, &bump0(h), rho, &q()).unwrap();
            let dn = location_derivatives(i, &bump0(-h), rho, &q()).unwrap();
            let fd_mixed = (up.d_nui - dn.d_nui) / (2.0 * h);
            let fd_00 = (up.d_nu0 - dn.d_nu0) / (2.0 * h);
            assert!((fd_mixed - d.d2_nu0_nui).abs() < 1e-6, "i={i}");
            assert!((fd_00 - d.d2_nu0).abs() < 1e-6, "i={i}");
        }
    }

    #[test]
    fn bundled_density_matches_pdf() {
        let a = args(-0.2, &[0.1, -0.5, 0.3]);
        let d = location_derivatives(1, &a, 0.45, &q()).unwrap();
        let pdf = dg_dnu0(&a, 0.45, &q()).unwrap();
        assert!((d.d_nu0 - pdf).abs() < 1e-13);
    }

    #[test]
    fn translation_and_permutation_invariance() {
        let a = args(0.25, &[0.3, -0.8, -0.1]);
        let base = g_integral(&a, 0.35, &q()).unwrap();
        for c in [-5.0, 1.7, 12.0] {
            let g = g_integral(&a.translated(c), 0.35, &q()).unwrap();
            assert!((g - base).abs() <= 1e-11, "c={c}");
        }
        let p1 = EquicorrParams::new(0.35, vec![0.3, -0.8, -0.1]).unwrap();
        let p2 = EquicorrParams::new(0.35, vec![-0.1, 0.3, -0.8]).unwrap();
        for x in [-1.0, 0.0, 2.0] {
            let a = max_cdf(x, &p1, &q()).unwrap();
            let b = max_cdf(x, &p2, &q()).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn coordinate_limit_degeneration() {
        let p = EquicorrParams::new(0.45, vec![0.4, -40.0, -40.0, -40.0]).unwrap();
        let mut x = -6.0;
        while x <= 6.0 {
            let f = max_cdf(x, &p, &q()).unwrap();
            assert!((f - norm_cdf(x - 0.4)).abs() <= 1e-10, "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn large_k_log_space_product() {
        let p = EquicorrParams::exchangeable(200, 0.1, 0.0).unwrap();
        let f = max_cdf(-1.0, &p, &q()).unwrap();
        assert!(f >= 0.0 && f < 1e-6);
        let f = max_cdf(3.0, &p, &q()).unwrap();
        assert!(f > 0.0 && f < 1.0);
    }
}
