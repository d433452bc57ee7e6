//! Non-exponential tail of the half-line model.
//!
//! With the spectrum bounded below, the resolvent `1 / (alpha - l - pi xi(l))`
//! has a logarithmic branch point at threshold. Folding the inversion contour
//! onto the negative imaginary axis `l = -i mu` splits the amplitude into the
//! bound-state term, the resonance poles passed on the way (zeros on the
//! continued sheet with `Re l > 0`) and the cut integral
//!
//! ```text
//! cut(t) = -(1/2pi) ∫_0^∞ F(-i mu) exp(-mu t / hbar) d mu,
//! F(l)   = 1 / (alpha - l - pi xi_II(l)) - 1 / (alpha - l - pi xi_I(l)),
//! ```
//!
//! where `xi_II = xi_I + 2i eta` is the continuation through the positive axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DecayError, Result};
use crate::profiles::ModelSpec;
use crate::pvcalc::xi_half_stieltjes;
use crate::quad::{integrate, QuadOptions};
use crate::spectral::{bound_state, resonance_poles, BoundState, PoleSet};
use crate::survival::{least_squares, pole_sum_amplitude, symmetric, AmplitudeSeries, Method};
use crate::tolerance::Tolerances;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutJump {
    pub mu: f64,
    pub value: Complex64,
}

fn require_half_line(spec: &ModelSpec) -> Result<()> {
    if spec.is_half_line() {
        Ok(())
    } else {
        Err(DecayError::WrongSupport { expected: "half-line" })
    }
}

/// Resolvent on the two sides of the cut at `l = -i mu`: (sheet I, sheet II).
fn resolvents(spec: &ModelSpec, mu: f64) -> Result<(Complex64, Complex64)> {
    let z = Complex64::new(0.0, -mu);
    let xi1 = xi_half_stieltjes(spec, z)?;
    let xi2 = xi1 + 2.0 * I * spec.eta_c(z);
    let d1 = spec.alpha - z - PI * xi1;
    let d2 = spec.alpha - z - PI * xi2;
    if d1.norm() < 1e-14 || d2.norm() < 1e-14 || !d2.is_finite() && !xi1.is_finite() {
        return Err(DecayError::Pole(z));
    }
    let r2 = if d2.is_finite() { 1.0 / d2 } else { Complex64::new(0.0, 0.0) };
    Ok((1.0 / d1, r2))
}

/// Jump `F(-i mu)` of the resolvent across the cut.
pub fn cut_jump(spec: &ModelSpec, mu: f64) -> Result<CutJump> {
    require_half_line(spec)?;
    if !(mu > 0.0) {
        return Err(DecayError::Domain(format!("mu must be positive, got {mu}")));
    }
    let (r1, r2) = resolvents(spec, mu)?;
    Ok(CutJump { mu, value: r2 - r1 })
}

fn jump_or_nan(spec: &ModelSpec, mu: f64) -> Complex64 {
    match cut_jump(spec, mu) {
        Ok(j) => j.value,
        // exactly on a pole of eta: nudge off it, the jump itself is finite there
        Err(DecayError::Pole(_)) => cut_jump(spec, mu * (1.0 + 1e-9))
            .map(|j| j.value)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

fn cut_breaks(spec: &ModelSpec, mu_max: f64) -> Vec<f64> {
    let mut b: Vec<f64> = (1..=14).map(|k| mu_max * 10f64.powi(-k)).collect();
    b.extend(spec.profile.poles().iter().map(|p| p.pole.im.abs()).filter(|&m| m > 0.0 && m < mu_max));
    b
}

fn laplace(spec: &ModelSpec, t: f64, moment: i32) -> Result<Complex64> {
    require_half_line(spec)?;
    if !(t > 0.0) {
        return Err(DecayError::Domain(format!(
            "the cut integral needs t > 0, got {t}"
        )));
    }
    let s = t / spec.hbar;
    // exp(-mu s) < 1e-16 beyond mu_max
    let mu_max = 16.0 * 10f64.ln() / s;
    let f = |mu: f64| jump_or_nan(spec, mu) * (-mu * s).exp() * mu.powi(moment);
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_segments: 6000 };
    let v = integrate(f, 0.0, mu_max, &cut_breaks(spec, mu_max), opts)?;
    if !v.value.is_finite() {
        return Err(DecayError::NonFinite(format!("cut integral at t = {t}")));
    }
    Ok(v.value)
}

/// Cut contribution `-(1/2pi) ∫ F(-i mu) exp(-mu t / hbar) d mu` for t > 0.
pub fn cut_term(spec: &ModelSpec, t: f64) -> Result<Complex64> {
    Ok(-laplace(spec, t, 0)? / (2.0 * PI))
}

/// `d/dt` of [`cut_term`] from the `mu`-weighted integrand.
pub fn cut_term_derivative(spec: &ModelSpec, t: f64) -> Result<Complex64> {
    Ok(laplace(spec, t, 1)? / (2.0 * PI * spec.hbar))
}

pub fn survival_cut_integral(spec: &ModelSpec, times: &[f64]) -> Result<AmplitudeSeries> {
    let amp = times.iter().map(|&t| cut_term(spec, t)).collect::<Result<Vec<_>>>()?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::CutDecomposition))
}

/// Bound state, passed resonance poles and the cut, for one half-line model.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub spec: ModelSpec,
    pub bound: Option<BoundState>,
    pub poles: PoleSet,
}

impl Decomposition {
    pub fn new(spec: &ModelSpec, tol: &Tolerances) -> Result<Self> {
        require_half_line(spec)?;
        let bound = bound_state(spec, tol)?;
        let poles = match resonance_poles(spec, usize::MAX, tol) {
            Ok(p) => p,
            Err(DecayError::EmptyPoleSet) => PoleSet::default(),
            Err(e) => return Err(e),
        };
        Self::from_parts(spec, bound, poles)
    }

    /// Assemble from precomputed pieces; poles must lie right of the cut.
    pub fn from_parts(spec: &ModelSpec, bound: Option<BoundState>, poles: PoleSet) -> Result<Self> {
        require_half_line(spec)?;
        if let Some(p) = poles.poles.iter().find(|p| !(p.lambda.re > 0.0 && p.lambda.im < 0.0)) {
            return Err(DecayError::Composition(format!(
                "pole {} is not passed by the folded contour",
                p.lambda
            )));
        }
        if let Some(b) = bound {
            if !(b.lambda0 < 0.0) {
                return Err(DecayError::Composition(format!("bound state at {} is not below threshold", b.lambda0)));
            }
        }
        Ok(Self { spec: spec.clone(), bound, poles })
    }

    pub fn bound_term(&self, t: f64) -> Complex64 {
        self.bound
            .map(|b| Complex64::from_polar(b.weight0, -b.lambda0 * t / self.spec.hbar))
            .unwrap_or_default()
    }

    pub fn pole_term(&self, t: f64) -> Complex64 {
        pole_sum_amplitude(&self.poles, t, self.spec.hbar)
    }

    pub fn cut_term(&self, t: f64) -> Result<Complex64> {
        cut_term(&self.spec, t)
    }

    /// Full amplitude for t > 0; `A(0) = 1` by normalization.
    pub fn amplitude(&self, t: f64) -> Result<Complex64> {
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.bound_term(t) + self.pole_term(t) + self.cut_term(t)?)
    }

    /// |gamma_lead| exp(-|Im l_lead| t / hbar), the slowest pole envelope.
    pub fn leading_envelope(&self, t: f64) -> f64 {
        self.poles
            .leading()
            .map(|p| p.gamma.norm() * (p.lambda.im * t / self.spec.hbar).exp())
            .unwrap_or(0.0)
    }

    /// Time where the cut overtakes the leading pole envelope, by a log-spaced
    /// scan followed by bisection in log t.
    pub fn crossover(&self) -> Result<f64> {
        if self.poles.is_empty() {
            return Err(DecayError::Composition("no resonance pole to cross".into()));
        }
        let excess = |t: f64| -> Result<f64> { Ok(self.cut_term(t)?.norm().ln() - self.leading_envelope(t).ln()) };
        let scan: Vec<f64> = (0..=60).map(|k| 10f64.powf(-1.0 + 0.1 * k as f64) * self.spec.hbar).collect();
        let mut prev = scan[0];
        if excess(prev)? > 0.0 {
            return Ok(prev);
        }
        for &t in &scan[1..] {
            if excess(t)? > 0.0 {
                let (mut lo, mut hi) = (prev.ln(), t.ln());
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if excess(mid.exp())? > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok((0.5 * (lo + hi)).exp());
            }
            prev = t;
        }
        Err(DecayError::Composition("no crossover below t = 1e5".into()))
    }
}

/// Bound state + passed poles + cut, to be compared with the direct quadrature.
pub fn survival_decomposed(spec: &ModelSpec, times: &[f64], tol: &Tolerances) -> Result<AmplitudeSeries> {
    let d = Decomposition::new(spec, tol)?;
    let amp = symmetric(times, |t| d.amplitude(t))?;
    Ok(AmplitudeSeries::new(times.to_vec(), amp, Method::CutDecomposition))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFitReport {
    pub window: [f64; 2],
    pub slope: f64,
    pub slope_err: f64,
    pub exponential_rejected: bool,
}

fn residual_sum(pts: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    pts.iter().map(|(x, y)| (y - slope * x - intercept).powi(2)).sum()
}

/// Log-log slope of |A| on the window, with the competing log-linear fit.
pub fn tail_slope(series: &AmplitudeSeries, window: (f64, f64)) -> Result<TailFitReport> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(DecayError::Domain(format!("window [{lo}, {hi}] must satisfy 0 < lo < hi")));
    }
    let samples: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.amplitude)
        .filter(|(t, a)| **t >= lo && **t <= hi && a.norm() > 0.0)
        .map(|(t, a)| (*t, a.norm().ln()))
        .collect();
    if samples.len() < 8 {
        return Err(DecayError::InsufficientData(format!(
            "{} samples in the window; need at least 8",
            samples.len()
        )));
    }
    let loglog: Vec<(f64, f64)> = samples.iter().map(|(t, y)| (t.ln(), *y)).collect();
    let (slope, intercept) = least_squares(&loglog);
    let ssr_power = residual_sum(&loglog, slope, intercept);
    let (eslope, eintercept) = least_squares(&samples);
    let ssr_exp = residual_sum(&samples, eslope, eintercept);
    let n = loglog.len() as f64;
    let mx = loglog.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = loglog.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope_err = (ssr_power / (n - 2.0) / sxx).sqrt();
    Ok(TailFitReport {
        window: [lo, hi],
        slope,
        slope_err,
        exponential_rejected: ssr_power < ssr_exp,
    })
}
