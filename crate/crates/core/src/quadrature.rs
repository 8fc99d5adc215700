//! Composite Gauss–Legendre quadrature in one and two dimensions.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// `[a, b]` split into `panels` equal panels.
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + i as f64 * h;
                self.integrate(lo, lo + h, &f)
            })
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings of the panel-doubling tensor-product rule.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive2d {
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Adaptive2d {
    fn default() -> Self {
        Self {
            order: 10,
            initial_panels: 8,
            max_panels: 2048,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
        }
    }
}

/// Tensor-product composite rule over `[x0, x1] × [y0, y1]` with
/// `panels × panels` panels. Rows are evaluated in parallel and summed in
/// a fixed order.
pub fn tensor_2d<F>(rule: &GaussLegendre, x: (f64, f64), y: (f64, f64), panels: usize, f: &F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let hx = (x.1 - x.0) / panels as f64;
    let hy = (y.1 - y.0) / panels as f64;
    let rows: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let xa = x.0 + i as f64 * hx;
            let mut acc = 0.0;
            for (xi, wx) in rule.mapped(xa, xa + hx) {
                let mut inner = 0.0;
                for j in 0..panels {
                    let ya = y.0 + j as f64 * hy;
                    for (yj, wy) in rule.mapped(ya, ya + hy) {
                        inner += wy * f(xi, yj);
                    }
                }
                acc += wx * inner;
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

/// Double the panel count until two successive estimates agree to
/// `rel_tol * |I| + abs_tol`.
pub fn adaptive_2d<F>(settings: &Adaptive2d, x: (f64, f64), y: (f64, f64), f: &F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rule = GaussLegendre::new(settings.order);
    let mut panels = settings.initial_panels.max(1);
    let mut previous = tensor_2d(&rule, x, y, panels, f);
    loop {
        panels *= 2;
        let current = tensor_2d(&rule, x, y, panels, f);
        if (current - previous).abs() <= settings.rel_tol * current.abs() + settings.abs_tol {
            return Ok(current);
        }
        if panels >= settings.max_panels {
            return Err(Error::QuadratureNotConverged { previous, current });
        }
        previous = current;
    }
}
