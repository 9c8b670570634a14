//! Sampling oracle for X* through the random-effects form
//! X_i = μ_i + √ρ·Y₀ + √(1−ρ)·Y_i.
//!
//! Draw `n` uses ChaCha8 stream `n` under a key derived from the seed, so any
//! range of draws can be generated independently of the others. Normals come
//! from the inverse CDF, which keeps the output free of host libm variation.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::max_cdf_grid;
use crate::error::{Error, Result};
use crate::params::{EquicorrParams, QuadratureSpec};
use crate::special::norm_quantile;

const CHUNK: usize = 4096;

/// Sorted maxima of `n` seeded draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSample {
    pub seed: u64,
    pub n: usize,
    pub maxima: Vec<f64>,
    pub params: EquicorrParams,
}

/// Dvoretzky–Kiefer–Wolfowitz band: P(sup|F_n − F| > ε) ≤ α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DkwBand {
    pub epsilon: f64,
    pub alpha: f64,
}

impl DkwBand {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("sample size must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfDomain {
                what: "alpha",
                value: alpha,
                domain: "(0, 1)",
            });
        }
        let epsilon = ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt();
        Ok(Self { epsilon, alpha })
    }
}

/// Uniform on the open interval (0, 1) from the top 52 bits.
#[inline]
fn open_uniform(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

fn draw_max(base: &ChaCha8Rng, index: u64, mu: &[f64], a: f64, b: f64) -> f64 {
    let mut rng = base.clone();
    rng.set_stream(index);
    rng.set_word_pos(0);
    let common = a * norm_quantile(open_uniform(rng.next_u64()));
    mu.iter()
        .map(|m| m + common + b * norm_quantile(open_uniform(rng.next_u64())))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn sample_maxima(p: &EquicorrParams, n: usize, seed: u64) -> Result<McSample> {
    if n == 0 {
        return Err(Error::InvalidParams("sample size must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (p.rho().sqrt(), (1.0 - p.rho()).sqrt());
    let mut maxima = vec![0.0; n];
    maxima
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, out)| {
            let start = (c * CHUNK) as u64;
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = draw_max(&base, start + j as u64, p.mu(), a, b);
            }
        });
    maxima.par_sort_unstable_by(f64::total_cmp);
    Ok(McSample {
        seed,
        n,
        maxima,
        params: p.clone(),
    })
}

/// Fraction of the sample at or below `x`.
pub fn ecdf_at(s: &McSample, x: f64) -> f64 {
    s.maxima.partition_point(|&v| v <= x) as f64 / s.maxima.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub n: usize,
    pub band: DkwBand,
    pub worst_gap: f64,
    pub worst_x: f64,
    pub pass: bool,
}

/// Draws a sample under `p` and checks the kernel CDF against the DKW band
/// simultaneously over `grid`.
pub fn kernel_agreement(
    p: &EquicorrParams,
    n: usize,
    seed: u64,
    grid: &[f64],
    alpha: f64,
    q: &QuadratureSpec,
) -> Result<AgreementReport> {
    let sample = sample_maxima(p, n, seed)?;
    agreement_with(&sample, p, grid, alpha, q)
}

/// Compares an existing sample with the kernel evaluated at `kernel_params`,
/// which need not be the parameters that generated the sample.
pub fn agreement_with(
    sample: &McSample,
    kernel_params: &EquicorrParams,
    grid: &[f64],
    alpha: f64,
    q: &QuadratureSpec,
) -> Result<AgreementReport> {
    if let Some(&x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "grid", value: x });
    }
    let band = DkwBand::new(sample.n, alpha)?;
    let cdf = max_cdf_grid(grid, kernel_params, q)?;
    let (worst_gap, worst_x) = grid
        .iter()
        .zip(&cdf)
        .map(|(&x, &f)| ((ecdf_at(sample, x) - f).abs(), x))
        .fold((0.0, f64::NAN), |acc, cur| if cur.0 > acc.0 || acc.1.is_nan() { cur } else { acc });
    Ok(AgreementReport {
        n: sample.n,
        band,
        worst_gap,
        worst_x,
        pass: worst_gap <= band.epsilon,
    })
}

/// Writes the sample as CSV, header `index,x_star`, in sorted order.
pub fn write_csv<W: Write>(s: &McSample, mut w: W) -> std::io::Result<()> {
    writeln!(w, "index,x_star")?;
    for (i, x) in s.maxima.iter().enumerate() {
        writeln!(w, "{i},{x:.16e}")?;
    }
    Ok(())
}
