//! Composite Gauss–Legendre quadrature with per-panel bisection.
//!
//! The interval is split into equal panels of 16-point rules. Each panel is
//! compared against the sum over its two halves; panels whose difference
//! exceeds their share of the tolerance are split again. Integrands are
//! vector-valued so that several kernels can share one set of evaluations.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const PANEL_ORDER: usize = 16;
const MAX_DEPTH: u32 = 12;

/// Nodes and weights of an n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
}

fn panel<const N: usize, F>(f: &F, a: f64, b: f64) -> [f64; N]
where
    F: Fn(f64) -> [f64; N],
{
    let rule = panel_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = [0.0; N];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(mid + half * x);
        for (s, vi) in acc.iter_mut().zip(v) {
            *s += w * vi;
        }
    }
    acc.iter_mut().for_each(|s| *s *= half);
    acc
}

fn add<const N: usize>(a: [f64; N], b: [f64; N]) -> [f64; N] {
    let mut out = a;
    out.iter_mut().zip(b).for_each(|(o, x)| *o += x);
    out
}

fn scaled_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn refine<const N: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    whole: [f64; N],
    tol: f64,
    depth: u32,
) -> ([f64; N], f64)
where
    F: Fn(f64) -> [f64; N],
{
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let halves = add(left, right);
    let diff = scaled_diff(&halves, &whole);
    if diff <= tol || depth >= MAX_DEPTH {
        return (halves, diff);
    }
    let (l, el) = refine(f, a, m, left, 0.5 * tol, depth + 1);
    let (r, er) = refine(f, m, b, right, 0.5 * tol, depth + 1);
    (add(l, r), el + er)
}

/// Integrates `f` over [a, b] starting from `panels` equal panels.
///
/// The error criterion is applied per component and is absolute for
/// components of magnitude below one, relative above.
pub fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Estimate<N>
where
    F: Fn(f64) -> [f64; N],
{
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let share = tol / panels as f64;
    let mut value = [0.0; N];
    let mut error = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        let whole = panel(&f, lo, hi);
        let (v, e) = refine(&f, lo, hi, whole, share, 0);
        value = add(value, v);
        error += e;
    }
    Estimate { value, error }
}

/// Like [`integrate`], but fails when the estimated error exceeds `tol`.
pub fn integrate_checked<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    let est = integrate(f, a, b, panels, tol);
    if est.error > tol || est.value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature {
            estimate: est.error,
            tolerance: tol,
        });
    }
    Ok(est)
}

/// Fixed composite rule: `panels` panels of the 16-point rule, flattened to
/// absolute nodes and weights. Used where a tensor product of a 1-D rule is
/// needed.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = panel_rule();
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * PANEL_ORDER);
    let mut ws = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let mid = a + width * (p as f64 + 0.5);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            xs.push(mid + 0.5 * width * x);
            ws.push(0.5 * width * w);
        }
    }
    (xs, ws)
}
