//! Numerical harness for the quantities behind the single-crossing proof.
//!
//! Each check evaluates one quantity (z, Q_i, ∂Q_i/∂ν₀, H_i, ∂H_i/∂t, Δ_i)
//! at a probe and records whether its sign bound holds. The monotonicity
//! bounds on ∂Q_i/∂ν₀, ∂H_i/∂t and Δ_i are stated for the limit in which
//! every mean after coordinate i has gone to −∞; the sweep realises that
//! limit by moving those means to [`NEG_INF_SURROGATE`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{location_derivatives, max_pdf, max_quantile, Kernel};
use crate::error::{Error, Result};
use crate::params::{check_rho, EquicorrParams, LocationArgs, QuadratureSpec, NEG_INF_SURROGATE};
use crate::quadrature::{composite_nodes, PANEL_ORDER};
use crate::special::{
    inverse_mills_deriv, log_inverse_mills, mills_shift, norm_log_cdf, norm_log_pdf, norm_pdf,
    norm_quantile,
};

/// z_eval refuses levels closer than this to 0 or 1.
pub const Z_ZETA_MARGIN: f64 = 1e-4;
pub const DQ_FLOOR: f64 = -1e-7;
pub const DH_FLOOR: f64 = -1e-10;
pub const DELTA_FLOOR: f64 = -1e-7;
pub const Z_FLOOR: f64 = -1e-7;
pub const Q_SUM_TOL: f64 = 1e-8;
/// Relative agreement demanded between the two Δ_i evaluations.
pub const DELTA_REL_TOL: f64 = 1e-5;
/// Below this magnitude the two Δ_i forms are compared absolutely; both sit
/// at rounding level in the equal-means case.
pub const DELTA_ABS_FLOOR: f64 = 1e-12;
/// Mean spread above which the bounds are required to be strict.
pub const STRICT_SPREAD: f64 = 0.1;

fn check_index(i: usize, k: usize) -> Result<()> {
    if i < k {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: i, k })
    }
}

fn check_sorted(nu: &[f64]) -> Result<()> {
    if nu.windows(2).all(|w| w[0] >= w[1]) {
        Ok(())
    } else {
        Err(Error::Unsorted)
    }
}

/// z(ζ) = 1/φ(Φ⁻¹(ζ)) − ∂g/∂ζ, with ∂g/∂ζ = 1/f_{X*}(g(ζ)).
pub fn z_eval(zeta: f64, p: &EquicorrParams, q: &QuadratureSpec) -> Result<f64> {
    if !(zeta > Z_ZETA_MARGIN && zeta < 1.0 - Z_ZETA_MARGIN) {
        return Err(Error::OutOfDomain {
            what: "zeta",
            value: zeta,
            domain: "(1e-4, 1 - 1e-4)",
        });
    }
    let g = max_quantile(zeta, p, q)?;
    let density = max_pdf(g, p, q)?;
    Ok(1.0 / norm_pdf(norm_quantile(zeta)) - 1.0 / density)
}

/// Q_i = (∂G/∂ν_i)/(∂G/∂ν₀); negative.
pub fn q_ratio(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    let d = location_derivatives(i, args, rho, q)?;
    Ok(d.d_nui / d.d_nu0)
}

/// ∂Q_i/∂ν₀ composed from the first and second derivatives of G.
pub fn dq_dnu0(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_sorted(&args.nu)?;
    let d = location_derivatives(i, args, rho, q)?;
    Ok((d.d2_nu0_nui * d.d_nu0 - d.d2_nu0 * d.d_nui) / (d.d_nu0 * d.d_nu0))
}

/// H_i(t, ν) = (1/√(1−ρ)) Σ_j m(z_j)/m(z_i), z_j = (t − ν_j)/√(1−ρ).
pub fn h_i_eval(i: usize, t: f64, nu: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let args = LocationArgs::new(t, nu.to_vec())?;
    check_index(i, args.k())?;
    Ok(h_i_unchecked(i, t, nu, (1.0 - rho).sqrt()))
}

fn h_i_unchecked(i: usize, t: f64, nu: &[f64], c: f64) -> f64 {
    let log_mi = log_inverse_mills((t - nu[i]) / c);
    let sum: f64 = nu
        .iter()
        .map(|v| (log_inverse_mills((t - v) / c) - log_mi).exp())
        .sum();
    sum / c
}

/// ∂H_i/∂t = (1/(1−ρ)) Σ_j [m(z_j)/m(z_i)]·((ν_j − ν_i)/√(1−ρ) + m(z_i) − m(z_j)).
///
/// The bracket equals (z_i + m(z_i)) − (z_j + m(z_j)), which is how it is
/// evaluated; x + m(x) is increasing, so each term has the sign of ν_j − ν_i.
pub fn dh_i_dt(i: usize, t: f64, nu: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let args = LocationArgs::new(t, nu.to_vec())?;
    check_index(i, args.k())?;
    check_sorted(nu)?;
    let c = (1.0 - rho).sqrt();
    let zi = (t - nu[i]) / c;
    let log_mi = log_inverse_mills(zi);
    let shift_i = mills_shift(zi);
    let sum: f64 = nu
        .iter()
        .map(|v| {
            let zj = (t - v) / c;
            let ratio = (log_inverse_mills(zj) - log_mi).exp();
            if ratio == 0.0 {
                0.0
            } else {
                ratio * (shift_i - mills_shift(zj))
            }
        })
        .sum();
    Ok(sum / (1.0 - rho))
}

/// Δ_i evaluated two independent ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaPair {
    /// ∂²G/∂ν₀∂ν_i·∂G/∂ν₀ − ∂²G/∂ν₀²·∂G/∂ν_i from the adaptive kernel.
    pub derivative_form: f64,
    /// Symmetrised double integral with (s − t)(H_i(s) − H_i(t)) on a
    /// tensor grid.
    pub double_integral_form: f64,
}

impl DeltaPair {
    pub fn agree(&self) -> bool {
        let (a, b) = (self.derivative_form, self.double_integral_form);
        (a - b).abs() <= DELTA_REL_TOL * a.abs().max(b.abs()) + DELTA_ABS_FLOOR
    }
}

/// Δ_i by both routes. Disagreement beyond tolerance is an integrity error.
pub fn delta_i(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<DeltaPair> {
    let pair = delta_pair(i, args, rho, q)?;
    if !pair.agree() {
        return Err(Error::Integrity(format!(
            "delta forms disagree: {:e} vs {:e}",
            pair.derivative_form, pair.double_integral_form
        )));
    }
    Ok(pair)
}

fn delta_pair(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> Result<DeltaPair> {
    check_sorted(&args.nu)?;
    let d = location_derivatives(i, args, rho, q)?;
    let derivative_form = d.d2_nu0_nui * d.d_nu0 - d.d2_nu0 * d.d_nui;
    let double_integral_form = delta_double_integral(i, args, rho, q);
    Ok(DeltaPair {
        derivative_form,
        double_integral_form,
    })
}

/// In u-coordinates (t = ν₀ + √ρ·u), with a_i(u) = φ(z_i)∏_{j≠i}Φ(z_j):
///
/// ```text
/// Δ_i = 1/(2√(ρ(1−ρ))) ∬ φ(u)φ(v) a_i(u) a_i(v) (u − v)(H_i(t(u)) − H_i(t(v))) du dv
/// ```
///
/// The axis rule is the fixed composite rule with half the base node count.
fn delta_double_integral(i: usize, args: &LocationArgs, rho: f64, q: &QuadratureSpec) -> f64 {
    let kernel = Kernel::new(args.nu0, &args.nu, rho);
    let c = kernel.sqrt_1m_rho();
    let axis_panels = (q.nodes / 2 / PANEL_ORDER).max(1);
    let (us, ws) = composite_nodes(-q.radius, q.radius, axis_panels);

    // (u, weight·φ(u)·a_i(u), H_i) at nodes with non-negligible weight
    let nodes: Vec<(f64, f64, f64)> = us
        .iter()
        .zip(&ws)
        .filter_map(|(&u, &w)| {
            let log_a: f64 = (0..args.k())
                .map(|j| {
                    let z = kernel.z(u, j);
                    if j == i {
                        norm_log_pdf(z)
                    } else {
                        norm_log_cdf(z)
                    }
                })
                .sum();
            let log_weight = log_a + norm_log_pdf(u);
            if log_weight < -700.0 {
                return None;
            }
            let t = args.nu0 + kernel.sqrt_rho() * u;
            Some((u, w * log_weight.exp(), h_i_unchecked(i, t, &args.nu, c)))
        })
        .collect();

    let mut sum = 0.0;
    for (s, &(us, a_s, h_s)) in nodes.iter().enumerate() {
        let mut row = 0.0;
        for &(ut, a_t, h_t) in &nodes[s + 1..] {
            row += a_t * (us - ut) * (h_s - h_t);
        }
        sum += a_s * row;
    }
    // ordered pairs s < t cover half of the symmetric double sum
    sum / (rho * (1.0 - rho)).sqrt()
}

/// Copy of `nu` with every mean after index `i` moved to the −∞ surrogate.
pub fn limit_surrogate(nu: &[f64], i: usize, at: f64) -> Vec<f64> {
    nu.iter()
        .enumerate()
        .map(|(j, &v)| if j > i { at } else { v })
        .collect()
}

/// Point at which the proof-chain quantities are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofProbe {
    pub rho: f64,
    pub nu0: f64,
    /// Nonincreasing means.
    pub nu: Vec<f64>,
    pub t: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    ZEval,
    QRatioSum,
    DqDnu0,
    DhIDt,
    DeltaI,
    DeltaAgreement,
    Sampford,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::ZEval => "z_eval",
            Quantity::QRatioSum => "q_ratio_sum",
            Quantity::DqDnu0 => "dq_dnu0",
            Quantity::DhIDt => "dh_i_dt",
            Quantity::DeltaI => "delta_i",
            Quantity::DeltaAgreement => "delta_agreement",
            Quantity::Sampford => "sampford",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub quantity: Quantity,
    /// Coordinate index (0-based) for per-coordinate quantities.
    pub index: Option<usize>,
    pub value: f64,
    pub lower_bound_ok: bool,
    pub context: Option<ProofProbe>,
}

/// Flat JSON-lines record of a [`ProbeReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ReportLine<'a> {
    pub quantity: &'static str,
    pub index: Option<usize>,
    pub k: Option<usize>,
    pub rho: Option<f64>,
    pub nu0: Option<f64>,
    pub nu: Option<&'a [f64]>,
    pub t: Option<f64>,
    pub zeta: Option<f64>,
    pub value: f64,
    pub ok: bool,
}

impl ProbeReport {
    pub fn line(&self) -> ReportLine<'_> {
        let ctx = self.context.as_ref();
        ReportLine {
            quantity: self.quantity.name(),
            index: self.index,
            k: ctx.map(|c| c.nu.len()),
            rho: ctx.map(|c| c.rho),
            nu0: ctx.map(|c| c.nu0),
            nu: ctx.map(|c| c.nu.as_slice()),
            t: ctx.map(|c| c.t),
            zeta: ctx.map(|c| c.zeta),
            value: self.value,
            ok: self.lower_bound_ok,
        }
    }
}

/// Describes the probes of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub probes: usize,
    pub seed: u64,
    pub max_k: usize,
    pub rhos: Vec<f64>,
    pub nu_range: (f64, f64),
    /// Every n-th probe gets equal means (0 disables).
    pub equal_means_every: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            probes: 500,
            seed: 7,
            max_k: 4,
            rhos: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            nu_range: (-3.0, 1.0),
            equal_means_every: 10,
        }
    }
}

impl SweepSpec {
    /// Deterministic probe list.
    pub fn generate(&self) -> Vec<ProofProbe> {
        if self.probes == 0 || self.rhos.is_empty() || self.max_k == 0 {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, hi) = self.nu_range;
        (0..self.probes)
            .map(|n| {
                let k = rng.gen_range(1..=self.max_k);
                let rho = self.rhos[n % self.rhos.len()];
                let mut nu: Vec<f64> = if self.equal_means_every > 0 && n % self.equal_means_every == 0 {
                    vec![rng.gen_range(lo..hi); k]
                } else {
                    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
                };
                nu.sort_by(|a, b| b.total_cmp(a));
                let nu0 = rng.gen_range(nu[k - 1] - 1.5..nu[0] + 1.5);
                let t = rng.gen_range(nu[k - 1] - 2.0..nu[0] + 2.0);
                let zeta = rng.gen_range(0.01..0.99);
                ProofProbe { rho, nu0, nu, t, zeta }
            })
            .collect()
    }
}

fn spread(nu: &[f64]) -> f64 {
    let max = nu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// All reports for a single probe.
pub fn check_probe(probe: &ProofProbe, q: &QuadratureSpec) -> Result<Vec<ProbeReport>> {
    let k = probe.nu.len();
    let rho = probe.rho;
    let args = LocationArgs::new(probe.nu0, probe.nu.clone())?;
    let mut out = Vec::new();
    let report = |quantity, index, value: f64, ok: bool| ProbeReport {
        quantity,
        index,
        value,
        lower_bound_ok: ok,
        context: Some(probe.clone()),
    };

    let q_sum = (0..k)
        .map(|i| q_ratio(i, &args, rho, q))
        .sum::<Result<f64>>()?;
    out.push(report(Quantity::QRatioSum, None, q_sum, (q_sum + 1.0).abs() <= Q_SUM_TOL));

    if k >= 2 {
        let params = EquicorrParams::new(rho, probe.nu.clone())?;
        let z = z_eval(probe.zeta, &params, q)?;
        let strict = spread(&probe.nu) <= STRICT_SPREAD || z > 0.0;
        out.push(report(Quantity::ZEval, None, z, z >= Z_FLOOR && strict));
    }

    for i in 0..k {
        let nu_i = limit_surrogate(&probe.nu, i, NEG_INF_SURROGATE);
        let strict = spread(&probe.nu[..=i]) > STRICT_SPREAD;
        let args_i = LocationArgs::new(probe.nu0, nu_i.clone())?;

        let dq = dq_dnu0(i, &args_i, rho, q)?;
        let ok = dq >= DQ_FLOOR && (!strict || dq > 0.0);
        out.push(report(Quantity::DqDnu0, Some(i), dq, ok));

        let dh = dh_i_dt(i, probe.t, &nu_i, rho)?;
        let ok = dh >= DH_FLOOR && (!strict || dh > 0.0);
        out.push(report(Quantity::DhIDt, Some(i), dh, ok));

        let pair = delta_pair(i, &args_i, rho, q)?;
        let lo = pair.derivative_form.min(pair.double_integral_form);
        let ok = lo >= DELTA_FLOOR && (!strict || lo > 0.0);
        out.push(report(Quantity::DeltaI, Some(i), pair.derivative_form, ok));
        let rel = (pair.derivative_form - pair.double_integral_form).abs()
            / pair.derivative_form.abs().max(pair.double_integral_form.abs()).max(f64::MIN_POSITIVE);
        out.push(report(Quantity::DeltaAgreement, Some(i), rel, pair.agree()));
    }
    Ok(out)
}

/// 1 + m'(x) > 0 over an evenly spaced grid on [lo, hi]; reports the
/// smallest value seen.
pub fn sampford_check(lo: f64, hi: f64, points: usize) -> ProbeReport {
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    let min = (0..points)
        .map(|j| 1.0 + inverse_mills_deriv(lo + step * j as f64))
        .fold(f64::INFINITY, f64::min);
    ProbeReport {
        quantity: Quantity::Sampford,
        index: None,
        value: min,
        lower_bound_ok: min > 0.0,
        context: None,
    }
}

/// Runs every check over the probes of `spec` in parallel, followed by one
/// Sampford report over [−40, 40]. An empty probe list yields no reports.
/// Numerical failures propagate; violated bounds are data.
pub fn sweep_proof_chain(spec: &SweepSpec, q: &QuadratureSpec) -> Result<Vec<ProbeReport>> {
    let probes = spec.generate();
    sweep_probes(&probes, q)
}

/// [`sweep_proof_chain`] over an explicit probe list.
pub fn sweep_probes(probes: &[ProofProbe], q: &QuadratureSpec) -> Result<Vec<ProbeReport>> {
    if probes.is_empty() {
        return Ok(Vec::new());
    }
    let nested: Vec<Vec<ProbeReport>> = probes
        .par_iter()
        .map(|p| check_probe(p, q))
        .collect::<Result<_>>()?;
    let mut out: Vec<ProbeReport> = nested.into_iter().flatten().collect();
    out.push(sampford_check(-40.0, 40.0, 8001));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::inverse_mills;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn args(nu0: f64, nu: &[f64]) -> LocationArgs {
        LocationArgs::new(nu0, nu.to_vec()).unwrap()
    }

    #[test]
    fn z_cases() {
        let p = EquicorrParams::new(0.3, vec![-0.7]).unwrap();
        assert!(z_eval(0.4, &p, &q()).unwrap().abs() < 1e-8);
        let p = EquicorrParams::exchangeable(2, 0.5, 0.0).unwrap();
        assert!(z_eval(1.0 / 3.0, &p, &q()).unwrap() > 0.0);
        let p = EquicorrParams::new(0.3, vec![-0.2, -0.7, -1.5]).unwrap();
        assert!(z_eval(0.6, &p, &q()).unwrap() > 0.0);
        assert!(z_eval(1e-5, &p, &q()).is_err());
        assert!(z_eval(1.0 - 1e-5, &p, &q()).is_err());
    }

    #[test]
    fn z_vanishes_in_coordinate_limit() {
        let near = EquicorrParams::new(0.4, vec![0.0, -3.0, -3.5]).unwrap();
        let far = EquicorrParams::new(0.4, vec![0.0, -40.0, -40.0]).unwrap();
        let z_near = z_eval(0.5, &near, &q()).unwrap();
        let z_far = z_eval(0.5, &far, &q()).unwrap();
        assert!(z_near > 0.0);
        assert!(z_far.abs() < 1e-8);
    }

    #[test]
    fn q_ratio_cases() {
        let q1 = q_ratio(0, &args(0.2, &[1.1]), 0.5, &q()).unwrap();
        assert!((q1 + 1.0).abs() < 1e-9);

        let a = args(0.0, &[0.0, 0.0]);
        let (q1, q2) = (q_ratio(0, &a, 0.5, &q()).unwrap(), q_ratio(1, &a, 0.5, &q()).unwrap());
        assert!((q1 - q2).abs() < 1e-10);
        assert!((q1 + q2 + 1.0).abs() < 1e-8);

        let a = args(0.0, &[0.0, -2.0]);
        let (q1, q2) = (q_ratio(0, &a, 0.5, &q()).unwrap(), q_ratio(1, &a, 0.5, &q()).unwrap());
        assert!(q1 < 0.0 && q2 < 0.0);
        assert!(q1.abs() > q2.abs());
    }

    #[test]
    fn dq_cases() {
        assert!(dq_dnu0(0, &args(0.3, &[-0.4]), 0.6, &q()).unwrap().abs() < 1e-8);
        for nu0 in [-1.0, 0.0, 2.0] {
            for i in 0..2 {
                let v = dq_dnu0(i, &args(nu0, &[0.0, 0.0]), 0.5, &q()).unwrap();
                assert!(v.abs() < 1e-7, "nu0={nu0} i={i} v={v}");
            }
        }
        // last coordinate: positive before the limit
        let a = args(0.5, &[0.0, -1.0]);
        let last = dq_dnu0(1, &a, 0.5, &q()).unwrap();
        assert!(last > 0.0);
        // first coordinate is only positive in the limit form; before it the
        // two derivatives cancel because Σ Q_i ≡ −1
        let first = dq_dnu0(0, &a, 0.5, &q()).unwrap();
        assert!(first < 0.0);
        assert!((first + last).abs() < 1e-10);
        let v = dq_dnu0(2, &args(-0.2, &[0.0, -0.5, -1.0]), 0.3, &q()).unwrap();
        assert!(v > 0.0);
        assert!(dq_dnu0(0, &args(0.0, &[-1.0, 0.0]), 0.5, &q()).is_err());
    }

    #[test]
    fn dq_surrogate_converges() {
        let nu = [0.3, -0.6, -1.0];
        let i = 1;
        let at20 = dq_dnu0(i, &args(0.1, &limit_surrogate(&nu, i, -20.0)), 0.45, &q()).unwrap();
        let at40 = dq_dnu0(i, &args(0.1, &limit_surrogate(&nu, i, -40.0)), 0.45, &q()).unwrap();
        assert!(at40 > 0.0);
        assert!((at20 - at40).abs() < 1e-12);
    }

    #[test]
    fn h_i_cases() {
        let rho: f64 = 0.5;
        let c = (1.0 - rho).sqrt();
        let h = h_i_eval(0, 0.4, &[-0.3], rho).unwrap();
        assert!((h - 1.0 / c).abs() < 1e-14);
        let h = h_i_eval(1, 0.4, &[-0.3, -0.3, -0.3], rho).unwrap();
        assert!((h - 3.0 / c).abs() < 1e-13);
        let t = 0.3;
        let (z1, z2) = (t / c, (t + 1.0) / c);
        let h1 = h_i_eval(0, t, &[0.0, -1.0], rho).unwrap();
        let h2 = h_i_eval(1, t, &[0.0, -1.0], rho).unwrap();
        assert!((h1 / h2 - inverse_mills(z2) / inverse_mills(z1)).abs() < 1e-13);
        assert!(h_i_eval(3, t, &[0.0], rho).is_err());
    }

    #[test]
    fn dh_cases() {
        assert!(dh_i_dt(1, 0.7, &[-0.2, -0.2, -0.2], 0.4).unwrap().abs() < 1e-12);
        for t in [-2.0, 0.0, 3.0] {
            assert!(dh_i_dt(1, t, &[0.0, -1.0], 0.5).unwrap() > 0.0, "t={t}");
            // before the limit the first coordinate sees a negative term
            assert!(dh_i_dt(0, t, &[0.0, -1.0], 0.5).unwrap() < 0.0, "t={t}");
            // in the limit form it is the equality case
            let lim = dh_i_dt(0, t, &limit_surrogate(&[0.0, -1.0], 0, NEG_INF_SURROGATE), 0.5).unwrap();
            assert!(lim.abs() < 1e-12);
        }
        assert!(matches!(dh_i_dt(0, 0.0, &[-1.0, 0.0], 0.5), Err(Error::Unsorted)));
    }

    #[test]
    fn dh_matches_finite_difference() {
        let nu = [0.4, -0.1, -0.9, -1.3];
        let rho = 0.35;
        let h = 1e-5;
        for i in 0..nu.len() {
            let mut t = -4.0;
            while t <= 4.0 {
                let fd = (h_i_eval(i, t + h, &nu, rho).unwrap() - h_i_eval(i, t - h, &nu, rho).unwrap())
                    / (2.0 * h);
                let d = dh_i_dt(i, t, &nu, rho).unwrap();
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "i={i} t={t} fd={fd} d={d}");
                t += 0.25;
            }
        }
    }

    #[test]
    fn delta_cases() {
        for nu0 in [-1.0, 0.4] {
            let pair = delta_i(1, &args(nu0, &[-0.5, -0.5, -0.5]), 0.6, &q()).unwrap();
            assert!(pair.derivative_form.abs() < 1e-8);
            assert!(pair.double_integral_form.abs() < 1e-8);
        }
        let pair = delta_i(1, &args(0.0, &[0.0, -1.0]), 0.5, &q()).unwrap();
        assert!(pair.derivative_form > 0.0 && pair.double_integral_form > 0.0);
        let rel = (pair.derivative_form - pair.double_integral_form).abs() / pair.derivative_form;
        assert!(rel < 1e-5, "rel={rel}");

        let pair = delta_i(1, &args(-0.2, &[0.0, -0.5, -1.0]), 0.3, &q()).unwrap();
        assert!(pair.derivative_form > 0.0 && pair.agree());
    }

    #[test]
    fn delta_agreement_across_correlations() {
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for i in 0..3 {
                let nu = limit_surrogate(&[0.6, -0.4, -2.1], i, NEG_INF_SURROGATE);
                let pair = delta_pair(i, &args(-0.3, &nu), rho, &q()).unwrap();
                assert!(pair.agree(), "rho={rho} i={i} {pair:?}");
            }
        }
    }

    #[test]
    fn sweep_shapes() {
        let spec = SweepSpec { probes: 0, ..Default::default() };
        assert!(sweep_proof_chain(&spec, &q()).unwrap().is_empty());

        let probe = ProofProbe { rho: 0.4, nu0: 0.2, nu: vec![-0.3, -0.3], t: 0.5, zeta: 0.3 };
        let reports = sweep_probes(&[probe], &q()).unwrap();
        assert!(reports.iter().all(|r| r.lower_bound_ok), "{reports:?}");
        for r in &reports {
            if matches!(r.quantity, Quantity::DqDnu0 | Quantity::DhIDt | Quantity::DeltaI) {
                assert!(r.value.abs() < 1e-7, "{r:?}");
            }
        }
        let line = serde_json::to_value(reports[0].line()).unwrap();
        for key in ["quantity", "k", "rho", "nu0", "nu", "t", "zeta", "value", "ok"] {
            assert!(line.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn sweep_small_grid_passes() {
        let spec = SweepSpec { probes: 40, seed: 11, ..Default::default() };
        let reports = sweep_proof_chain(&spec, &q()).unwrap();
        let bad: Vec<_> = reports.iter().filter(|r| !r.lower_bound_ok).collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn probe_generation_is_deterministic_and_sorted() {
        let spec = SweepSpec { probes: 50, ..Default::default() };
        let a = spec.generate();
        assert_eq!(a, spec.generate());
        assert!(a.iter().all(|p| p.nu.windows(2).all(|w| w[0] >= w[1])));
        assert!(a.iter().all(|p| (1..=4).contains(&p.nu.len())));
    }

    #[test]
    fn sampford_holds() {
        assert!(sampford_check(-40.0, 40.0, 8001).lower_bound_ok);
    }
}
