//! Survival amplitude `A(t) = <a| exp(-i t H / hbar) |a>` and probability
//! `W(t) = |A(t)|^2`.
//!
//! Negative times are never integrated: `A(-t) = conj(A(t))` for every method.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DecayError, Result};
use crate::profiles::{ModelSpec, Support};
use crate::pvcalc::{hilbert_full, hilbert_half};
use crate::quad::{LegendreSampler, PiecewiseLegendre};
use crate::spectral::{bound_state, continuum_weight, resonance_poles, weight_breaks, BoundState, PoleSet};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FlatClosed,
    Quadrature,
    GoldenRule,
    PoleSum,
    Oracle,
    CutDecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSeries {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub survival: Vec<f64>,
    pub method: Method,
}

impl AmplitudeSeries {
    pub fn new(times: Vec<f64>, amplitude: Vec<Complex64>, method: Method) -> Self {
        let survival = amplitude.iter().map(|a| a.norm_sqr()).collect();
        Self { times, amplitude, survival, method }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,re_a,im_a,w`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re_a,im_a,w\n");
        for ((t, a), w) in self.times.iter().zip(&self.amplitude).zip(&self.survival) {
            let _ = writeln!(out, "{},{},{},{}", sig17(*t), sig17(a.re), sig17(a.im), sig17(*w));
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Recompute `W = |A|^2` in place.
pub fn survival_probability(mut series: AmplitudeSeries) -> AmplitudeSeries {
    series.survival = series.amplitude.iter().map(|a| a.norm_sqr()).collect();
    series
}

/// Evaluate `f` at |t| and conjugate for negative t.
pub fn symmetric<F: FnMut(f64) -> Result<Complex64>>(times: &[f64], mut f: F) -> Result<Vec<Complex64>> {
    times
        .iter()
        .map(|&t| {
            let a = f(t.abs())?;
            Ok(if t < 0.0 { a.conj() } else { a })
        })
        .collect()
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(DecayError::NonFinite("time grid".into()));
    }
    Ok(())
}

/// `A(t) = exp(-i t alpha / hbar) exp(-pi eta t / hbar)` for the flat profile.
pub fn survival_flat_closed(spec: &ModelSpec, times: &[f64]) -> Result<AmplitudeSeries> {
    if !spec.profile.is_flat() {
        return Err(DecayError::WrongModel);
    }
    check_times(times)?;
    let eta = spec.tau * spec.profile.strength();
    let amp = symmetric(times, |t| {
        let s = t / spec.hbar;
        Ok(Complex64::from_polar((-PI * eta * s).exp(), -spec.alpha * s))
    })?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::FlatClosed))
}

/// Pure exponential with energy `alpha - pi sigma(alpha)` and W-rate `2 pi eta(alpha) / hbar`.
pub fn survival_golden_rule(spec: &ModelSpec, times: &[f64]) -> Result<AmplitudeSeries> {
    check_times(times)?;
    let alpha = spec.alpha;
    let eta = spec.eta(alpha);
    if !(eta > 0.0) {
        return Err(DecayError::Degenerate(format!(
            "eta(alpha) = {eta}: no first-order decay"
        )));
    }
    let sigma = match spec.support() {
        Support::FullLine => hilbert_full(spec, alpha)?.sigma,
        Support::HalfLine => hilbert_half(spec, alpha)?.sigma,
    };
    let energy = alpha - PI * sigma;
    let amp = symmetric(times, |t| {
        let s = t / spec.hbar;
        Ok(Complex64::from_polar((-PI * eta * s).exp(), -energy * s))
    })?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::GoldenRule))
}

/// `sum gamma exp(-i l t / hbar)` over the given poles, for t >= 0.
pub fn pole_sum_amplitude(poles: &PoleSet, t: f64, hbar: f64) -> Complex64 {
    poles
        .poles
        .iter()
        .map(|p| p.gamma * (-Complex64::i() * p.lambda * (t / hbar)).exp())
        .sum()
}

/// Pole-sum amplitude; exact for rational full-line profiles.
pub fn survival_pole_sum(spec: &ModelSpec, poles: &PoleSet, times: &[f64]) -> Result<AmplitudeSeries> {
    if spec.is_half_line() {
        return Err(DecayError::WrongSupport { expected: "full-line" });
    }
    if poles.is_empty() {
        return Err(DecayError::EmptyPoleSet);
    }
    check_times(times)?;
    let amp = symmetric(times, |t| Ok(pole_sum_amplitude(poles, t, spec.hbar)))?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::PoleSum))
}

/// Continuum weight interpolated panel by panel, ready for exact Fourier moments.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub table: PiecewiseLegendre,
    pub bound: Option<BoundState>,
    pub hbar: f64,
    /// largest |t| resolved by the panel layout
    pub horizon: f64,
}

impl WeightTable {
    /// `∫ w(l) exp(-i l t / hbar) dl + w0 exp(-i l0 t / hbar)` for t >= 0.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let s = t / self.hbar;
        let mut a = self.table.fourier(s);
        if let Some(b) = self.bound {
            a += Complex64::from_polar(b.weight0, -b.lambda0 * s);
        }
        a
    }
}

/// Tabulation range: where the neglected weight mass falls below ~1e-9.
fn weight_cutoff(spec: &ModelSpec) -> f64 {
    let (coeff, power) = spec.profile.tail();
    let c = (coeff * spec.tau).abs();
    let k = power as f64 + 1.0;
    (2.0 * c / k / 1e-9).powf(1.0 / k).clamp(1e3, 1e8)
}

fn geometric_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = lo;
    while x < hi {
        out.push(x);
        x *= 2.0;
    }
    out.push(hi);
    out
}

/// Tabulate the continuum weight, with core panels no wider than
/// `2 pi order hbar / t_max` so that every panel holds at most `order` periods.
pub fn weight_table(spec: &ModelSpec, t_max: f64, tol: &Tolerances) -> Result<WeightTable> {
    let poles = resonance_poles(spec, usize::MAX, tol).ok();
    let mut breaks = weight_breaks(spec, poles.as_ref());
    let l = weight_cutoff(spec);
    let core_lo = breaks.first().copied().unwrap_or(0.0) - 10.0;
    let core_hi = breaks.last().copied().unwrap_or(0.0) + 10.0;
    let (core_lo, outer): (f64, Vec<f64>) = match spec.support() {
        Support::FullLine => {
            let mut o: Vec<f64> = geometric_breaks(core_hi.abs().max(core_lo.abs()).max(1.0), l);
            let neg: Vec<f64> = o.iter().map(|x| -x).collect();
            o.extend(neg);
            (core_lo, o)
        }
        Support::HalfLine => {
            // resolve the logarithmic behaviour at the threshold
            let mut o: Vec<f64> = (1..=14).map(|k| 10f64.powi(-k)).collect();
            o.extend([0.0, l]);
            o.extend(geometric_breaks(core_hi.max(1.0), l));
            (0.0, o)
        }
    };
    breaks.extend(outer);

    let order = tol.panel_order;
    let span = core_hi - core_lo;
    let horizon = tol.panel_budget as f64 * 2.0 * PI * order as f64 * spec.hbar / span;
    let s_max = t_max.abs() / spec.hbar;
    if t_max.abs() > horizon {
        return Err(DecayError::Resolution { requested: t_max.abs(), horizon });
    }
    if s_max > 0.0 {
        let width = 2.0 * PI * order as f64 / s_max;
        let n = (span / width).ceil() as usize;
        if n > 1 {
            breaks.extend((1..n).map(|i| core_lo + span * i as f64 / n as f64));
        }
    }
    breaks.retain(|x| x.is_finite() && x.abs() <= l && (spec.support() == Support::FullLine || *x >= 0.0));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    let half = spec.is_half_line();
    let w = |x: f64| {
        if half && x <= 0.0 {
            0.0
        } else {
            continuum_weight(spec, x).unwrap_or(f64::NAN)
        }
    };
    let sampler = LegendreSampler::new(order);
    let table = PiecewiseLegendre::build(w, &breaks, &sampler, 1e-12, 1e-13, tol.panel_budget + breaks.len())?;
    let bound = if half { bound_state(spec, tol)? } else { None };
    Ok(WeightTable { table, bound, hbar: spec.hbar, horizon })
}

/// Oscillatory (Filon-type) quadrature of the spectral representation, plus
/// the bound-state term when present.
pub fn survival_quadrature(spec: &ModelSpec, times: &[f64], tol: &Tolerances) -> Result<AmplitudeSeries> {
    check_times(times)?;
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let table = weight_table(spec, t_max, tol)?;
    let amp = symmetric(times, |t| Ok(table.amplitude(t)))?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::Quadrature))
}

/// Least-squares fit of `ln W = c - rate * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fit the decay rate on the samples with `t >= 0` and `W` in [0.1, 0.9].
pub fn fit_rate(series: &AmplitudeSeries) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.survival)
        .filter(|(t, w)| **t >= 0.0 && (0.1..=0.9).contains(*w))
        .map(|(t, w)| (*t, w.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(DecayError::InsufficientData(format!(
            "{} samples with W in [0.1, 0.9]; need at least 3",
            pts.len()
        )));
    }
    let (slope, intercept) = least_squares(&pts);
    Ok(RateFit { rate: -slope, intercept, points: pts.len() })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Evenly spaced grid with `n` points.
pub fn linear_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t0];
    }
    (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect()
}

/// Logarithmically spaced grid with `n` points, `0 < t0 < t1`.
pub fn log_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    linear_grid(a, b, n).into_iter().map(f64::exp).collect()
}
