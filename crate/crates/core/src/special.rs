//! Standard normal primitives and the inverse Mill's ratio.
//!
//! The unchecked functions (`norm_pdf`, `norm_cdf`, ...) are the hot-path
//! versions used by the quadrature kernel; they propagate NaN instead of
//! failing. The `std_normal_*` wrappers validate their input and are what
//! callers outside the crate should normally reach for.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{finite, open_unit, Result};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point the lower tail switches from `erfc` to the continued
/// fraction for the Mills ratio.
const LOWER_TAIL_SWITCH: f64 = -10.0;
const CF_DEPTH: u32 = 60;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

#[inline]
pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// φ'(x) = −x φ(x)
#[inline]
pub fn norm_pdf_deriv(x: f64) -> f64 {
    -x * norm_pdf(x)
}

/// Φ(x), computed from `erfc` with reflection so that the lower tail keeps
/// full relative accuracy.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    if x < -37.0 {
        norm_pdf(x) * mills_ratio(-x)
    } else if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// 1 − Φ(x) without cancellation.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// ln Φ(x), finite for every finite x.
#[inline]
pub fn norm_log_cdf(x: f64) -> f64 {
    if x < LOWER_TAIL_SWITCH {
        norm_log_pdf(x) + libm::log(mills_ratio(-x))
    } else if x < 0.0 {
        libm::log(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
    } else {
        libm::log1p(-0.5 * libm::erfc(x * FRAC_1_SQRT_2))
    }
}

/// Mills ratio R(y) = (1 − Φ(y))/φ(y) for y ≥ 10 via the Laplace continued
/// fraction 1/(y + 1/(y + 2/(y + 3/(y + ...)))).
fn mills_ratio(y: f64) -> f64 {
    let mut t = y;
    for n in (1..=CF_DEPTH).rev() {
        t = y + f64::from(n) / t;
    }
    1.0 / t
}

/// 1/R(y) − y, i.e. the continued fraction tail 1/(y + 2/(y + 3/(...))).
/// Equals m(−y) + (−y) without the cancellation of forming the sum.
fn mills_tail(y: f64) -> f64 {
    let mut t = y;
    for n in (2..=CF_DEPTH).rev() {
        t = y + f64::from(n) / t;
    }
    1.0 / t
}

/// Φ⁻¹(p): Acklam's rational approximation followed by two Halley steps
/// against `norm_cdf`. The upper half is obtained by exact reflection.
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return f64::NAN;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        // 1 − p is exact for p ≥ 0.5
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * libm::log(p)).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    for _ in 0..2 {
        // Halley step on Φ(x) − p, scaled by 1/φ(x). In the deep tail the
        // residual is formed relative to p to avoid underflow in φ.
        let e = norm_cdf(x) - p;
        let u = if x < LOWER_TAIL_SWITCH {
            (e / p) * mills_ratio(-x)
        } else {
            e / norm_pdf(x)
        };
        if !u.is_finite() || u == 0.0 {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Inverse Mill's ratio m(x) = φ(x)/Φ(x).
#[inline]
pub fn inverse_mills(x: f64) -> f64 {
    if x < LOWER_TAIL_SWITCH {
        -x + mills_tail(-x)
    } else {
        libm::exp(norm_log_pdf(x) - norm_log_cdf(x))
    }
}

/// m'(x) = −m(x)(x + m(x)). In the lower tail x + m(x) is taken straight
/// from the continued fraction so the result stays accurate as m' → −1.
#[inline]
pub fn inverse_mills_deriv(x: f64) -> f64 {
    if x < LOWER_TAIL_SWITCH {
        let tail = mills_tail(-x);
        -(-x + tail) * tail
    } else {
        let m = inverse_mills(x);
        -m * (x + m)
    }
}

/// x + m(x), the quantity whose derivative 1 + m'(x) is positive. Accurate
/// in the lower tail where x and m(x) nearly cancel.
#[inline]
pub fn mills_shift(x: f64) -> f64 {
    if x < LOWER_TAIL_SWITCH {
        mills_tail(-x)
    } else {
        x + inverse_mills(x)
    }
}

/// ln m(x)
#[inline]
pub fn log_inverse_mills(x: f64) -> f64 {
    if x < LOWER_TAIL_SWITCH {
        libm::log(inverse_mills(x))
    } else {
        norm_log_pdf(x) - norm_log_cdf(x)
    }
}

/// Checked φ(x).
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    finite("x", x).map(norm_pdf)
}

/// Checked Φ(x).
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    finite("x", x).map(norm_cdf)
}

/// Checked Φ⁻¹(p) for p strictly inside (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    open_unit("p", p).map(norm_quantile)
}

/// Checked inverse Mill's ratio.
pub fn std_inverse_mills(x: f64) -> Result<f64> {
    finite("x", x).map(inverse_mills)
}

/// Checked derivative of the inverse Mill's ratio.
pub fn std_inverse_mills_deriv(x: f64) -> Result<f64> {
    finite("x", x).map(inverse_mills_deriv)
}

/// Closed form m'(0) = −2/π, handy as a reference constant.
pub const INVERSE_MILLS_DERIV_AT_ZERO: f64 = -2.0 / PI;
