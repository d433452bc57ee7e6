//! Brute-force check: the Hamiltonian discretized on Gauss-Legendre nodes is
//! a symmetric arrowhead matrix
//!
//! ```text
//! [ alpha  v_1  ...  v_N ]
//! [ v_1    E_1           ]
//! [ ...         ...      ]
//! [ v_N              E_N ]
//! ```
//!
//! with `v_i = sqrt(tau eta(E_i) w_i)`. Its eigenvalues are the roots of the
//! secular function `g(l) = alpha - l + sum v_i^2 / (l - E_i)`, one in each gap
//! between consecutive nodes plus one on either side, and the overlap of the
//! k-th eigenvector with the level is `1 / (1 + sum v_i^2 / (l_k - E_i)^2)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{DecayError, Result};
use crate::profiles::{ModelSpec, Support};
use crate::quad::gauss_legendre;
use crate::spectral::continuum_weight;
use crate::survival::{sig17, symmetric, AmplitudeSeries, Method};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedModel {
    pub alpha: f64,
    pub hbar: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub couplings: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl DiscretizedModel {
    /// Model with explicit nodes and couplings (weights set to 1).
    pub fn from_parts(alpha: f64, nodes: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if nodes.len() != couplings.len() {
            return Err(DecayError::Domain("nodes and couplings differ in length".into()));
        }
        let weights = vec![1.0; nodes.len()];
        Ok(Self { alpha, hbar: 1.0, nodes, weights, couplings, diagnostics: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len() + 1
    }

    /// Dense matrix, level first.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        m[0][0] = self.alpha;
        for (i, (&e, &v)) in self.nodes.iter().zip(&self.couplings).enumerate() {
            m[0][i + 1] = v;
            m[i + 1][0] = v;
            m[i + 1][i + 1] = e;
        }
        m
    }

    /// Recurrence time `2 pi hbar / dE` from the node spacing next to alpha.
    pub fn recurrence_time(&self) -> f64 {
        let idx = self.nodes.partition_point(|&e| e < self.alpha).clamp(1, self.nodes.len().max(2) - 1);
        let spacing = (self.nodes[idx] - self.nodes[idx - 1]).abs();
        2.0 * PI * self.hbar / spacing
    }
}

/// Gauss-Legendre discretization on `[-e_max, e_max]` or `[0, e_max]`.
pub fn discretize(spec: &ModelSpec, n: usize, e_max: f64) -> Result<DiscretizedModel> {
    if n < 2 {
        return Err(DecayError::Domain(format!("need at least 2 nodes, got {n}")));
    }
    if !(e_max > 0.0) || !e_max.is_finite() {
        return Err(DecayError::Domain(format!("cutoff must be positive, got {e_max}")));
    }
    let (x, w) = gauss_legendre(n);
    let (lo, hi) = match spec.support() {
        Support::FullLine => (-e_max, e_max),
        Support::HalfLine => (0.0, e_max),
    };
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let nodes: Vec<f64> = x.iter().map(|&u| c + h * u).collect();
    let weights: Vec<f64> = w.iter().map(|&wi| h * wi).collect();
    let couplings = nodes
        .iter()
        .zip(&weights)
        .map(|(&e, &wi)| (spec.eta(e) * wi).sqrt())
        .collect();

    let mut diagnostics = Vec::new();
    if let Ok(mass) = weight_beyond(spec, e_max) {
        if mass > 1e-6 {
            diagnostics.push(format!(
                "cutoff {e_max} leaves continuum weight {mass:.3e} outside the grid"
            ));
        }
    }
    Ok(DiscretizedModel { alpha: spec.alpha, hbar: spec.hbar, nodes, weights, couplings, diagnostics })
}

fn weight_beyond(spec: &ModelSpec, e_max: f64) -> Result<f64> {
    let opts = crate::quad::QuadOptions { abs_tol: 1e-12, rel_tol: 1e-8, max_segments: 2000 };
    let w = |l: f64| continuum_weight(spec, l).unwrap_or(0.0);
    let mut mass = crate::quad::integrate_to_infinity(w, e_max, opts)?.value;
    if spec.support() == Support::FullLine {
        mass += crate::quad::integrate_from_neg_infinity(w, -e_max, opts)?.value;
    }
    Ok(mass)
}

/// Eigenvalues (ascending) with the squared overlap `|<a|v_k>|^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub hbar: f64,
}

impl Eigensystem {
    /// `sum_k |<a|v_k>|^2 exp(-i l_k t / hbar)`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let s = t / self.hbar;
        self.values
            .iter()
            .zip(&self.overlaps)
            .map(|(&l, &w)| Complex64::from_polar(w, -l * s))
            .sum()
    }

    pub fn overlap_sum(&self) -> f64 {
        self.overlaps.iter().sum()
    }

    pub fn lowest(&self) -> (f64, f64) {
        (self.values[0], self.overlaps[0])
    }

    /// CSV dump `k,lambda_k,weight_k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda_k,weight_k\n");
        for (k, (l, w)) in self.values.iter().zip(&self.overlaps).enumerate() {
            let _ = writeln!(out, "{k},{},{}", sig17(*l), sig17(*w));
        }
        out
    }
}

/// Secular function relative to an origin node: `l = origin + delta`,
/// `d_j = E_j - origin`. Returns (g, g').
fn secular(alpha_rel: f64, d: &[f64], v2: &[f64], delta: f64) -> (f64, f64) {
    let mut g = alpha_rel - delta;
    let mut dg = -1.0;
    for (&dj, &vj) in d.iter().zip(v2) {
        let r = 1.0 / (delta - dj);
        g += vj * r;
        dg -= vj * r * r;
    }
    (g, dg)
}

/// Root of the decreasing function `g` in (lo, hi) by safeguarded Newton.
fn solve_decreasing<F: Fn(f64) -> (f64, f64)>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (gx, dgx) = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dgx;
        let next = if newton > lo && newton < hi && dgx < 0.0 { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= 0.0 {
            return next;
        }
        if next == lo || next == hi {
            return x;
        }
        x = next;
    }
    x
}

/// Eigen-decomposition of the arrowhead matrix in O(N^2).
pub fn diagonalize(model: &DiscretizedModel) -> Result<Eigensystem> {
    let mut pairs: Vec<(f64, f64)> = model
        .nodes
        .iter()
        .zip(&model.couplings)
        .map(|(&e, &v)| (e, v * v))
        .collect();
    if pairs.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) || !model.alpha.is_finite() {
        return Err(DecayError::NonFinite("matrix entries".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // zero couplings decouple their node: eigenvalue E_j with no level content
    let (active, decoupled): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|p| p.1 > 0.0);
    for w in active.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(DecayError::Eigen(format!("repeated node {} with nonzero coupling", w[0].0)));
        }
    }
    let e: Vec<f64> = active.iter().map(|p| p.0).collect();
    let v2: Vec<f64> = active.iter().map(|p| p.1).collect();
    let alpha = model.alpha;
    let n = e.len();

    let mut values = Vec::with_capacity(model.dim());
    let mut overlaps = Vec::with_capacity(model.dim());
    let push = |origin: f64, delta: f64, values: &mut Vec<f64>, overlaps: &mut Vec<f64>| {
        let mut s = 0.0;
        for (&ej, &vj) in e.iter().zip(&v2) {
            let r = delta - (ej - origin);
            s += vj / (r * r);
        }
        values.push(origin + delta);
        overlaps.push(1.0 / (1.0 + s));
    };

    if n == 0 {
        values.push(alpha);
        overlaps.push(1.0);
    } else {
        let spread = v2.iter().sum::<f64>().sqrt() + 1.0;
        // below the first node
        let origin = e[0];
        let d: Vec<f64> = e.iter().map(|&x| x - origin).collect();
        let lo = (alpha - origin).min(0.0) - spread - 1.0;
        let delta = solve_decreasing(|x| secular(alpha - origin, &d, &v2, x), lo, 0.0);
        push(origin, delta, &mut values, &mut overlaps);
        // one root per gap, computed relative to the nearer endpoint
        for i in 0..n - 1 {
            let gap = e[i + 1] - e[i];
            let d_left: Vec<f64> = e.iter().map(|&x| x - e[i]).collect();
            let (gm, _) = secular(alpha - e[i], &d_left, &v2, 0.5 * gap);
            let (origin, lo, hi) = if gm > 0.0 { (e[i + 1], -0.5 * gap, 0.0) } else { (e[i], 0.0, 0.5 * gap) };
            let d: Vec<f64> = e.iter().map(|&x| x - origin).collect();
            let delta = solve_decreasing(|x| secular(alpha - origin, &d, &v2, x), lo, hi);
            push(origin, delta, &mut values, &mut overlaps);
        }
        // above the last node
        let origin = e[n - 1];
        let d: Vec<f64> = e.iter().map(|&x| x - origin).collect();
        let hi = (alpha - origin).max(0.0) + spread + 1.0;
        let delta = solve_decreasing(|x| secular(alpha - origin, &d, &v2, x), 0.0, hi);
        push(origin, delta, &mut values, &mut overlaps);
    }
    for (ej, _) in decoupled {
        values.push(ej);
        overlaps.push(0.0);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let overlaps: Vec<f64> = order.iter().map(|&i| overlaps[i]).collect();
    if values.iter().chain(&overlaps).any(|x| !x.is_finite()) {
        return Err(DecayError::Eigen("secular solver produced non-finite values".into()));
    }
    Ok(Eigensystem { values, overlaps, hbar: model.hbar })
}

/// Normalized eigenvectors (level component first), for diagnostics and checks.
pub fn eigenvectors(model: &DiscretizedModel, eig: &Eigensystem) -> Vec<Vec<f64>> {
    eig.values
        .iter()
        .zip(&eig.overlaps)
        .map(|(&l, &w)| {
            if w == 0.0 {
                let mut x = vec![0.0; model.dim()];
                if let Some(j) = model.nodes.iter().position(|&e| e == l) {
                    x[j + 1] = 1.0;
                }
                return x;
            }
            let mut x = vec![1.0];
            x.extend(model.nodes.iter().zip(&model.couplings).map(|(&e, &v)| v / (l - e)));
            let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            x.iter().map(|c| c / norm).collect()
        })
        .collect()
}

/// Exact evolution in the truncated space.
pub fn survival_discrete(eig: &Eigensystem, times: &[f64]) -> Result<AmplitudeSeries> {
    let amp = symmetric(times, |t| Ok(eig.amplitude(t)))?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::Oracle))
}
