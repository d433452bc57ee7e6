//! Principal-value quadrature and Hilbert transforms of coupling profiles.
//!
//! Two independent routes are provided for every transform:
//!
//! * quadrature: singularity subtraction around the pole, adaptive
//!   Gauss-Kronrod on the continuous remainder, and an analytic correction
//!   for the truncated tails;
//! * closed form: partial fractions of the rational profile. On the full line
//!   `xi(z) = 2i * sum over lower-half-plane poles p of c_pj / (z - p)^j`;
//!   on the half line the transform picks up a logarithm,
//!   `pi * xi(z) = -eta(z) Log(-z) - sum_p Res_p[eta(E) Log(-E) / (E - z)]`.
//!
//! Conventions: `sigma(l) = (1/pi) PV int eta(E) / (E - l) dE` and `xi` is the
//! function analytic in the upper half plane whose boundary value is
//! `sigma + i eta`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{DecayError, Result};
use crate::profiles::{ModelSpec, Support};
use crate::quad::{
    integrate, integrate_from_neg_infinity, integrate_to_infinity, Integral, QuadOptions, Scalar,
};
use crate::tolerance::Tolerances;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Integration domain; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn full_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn half_line() -> Self {
        Self::new(0.0, f64::INFINITY)
    }
}

/// Leading large-|E| behaviour `f(E) ~ coeff * E^(-power)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coeff: f64,
    pub power: i32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PvOptions {
    pub quad: QuadOptions,
    /// analytic tail model used beyond the core window on infinite sides
    pub tail: Option<PowerTail>,
    /// half width of the symmetric window around the pole; chosen automatically if `None`
    pub core_half_width: Option<f64>,
    /// extra breakpoints (peaks, kinks) for the adaptive quadrature
    pub breaks: Vec<f64>,
}


/// Adaptive integral over a possibly infinite interval.
pub fn integrate_line<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    quad: QuadOptions,
) -> Result<Integral<T>> {
    let finite_pts: Vec<f64> = breaks
        .iter()
        .copied()
        .chain([lo, hi])
        .filter(|x| x.is_finite())
        .collect();
    let core_lo = if lo.is_finite() {
        lo
    } else {
        finite_pts.iter().copied().fold(0.0, f64::min) - 1.0
    };
    let core_hi = if hi.is_finite() {
        hi
    } else {
        finite_pts.iter().copied().fold(0.0, f64::max) + 1.0
    };
    let mut total = integrate(&f, core_lo, core_hi, breaks, quad)?;
    if lo == f64::NEG_INFINITY {
        let left = integrate_from_neg_infinity(&f, core_lo, quad)?;
        total.value += left.value;
        total.abs_err += left.abs_err;
        total.converged &= left.converged;
    }
    if hi == f64::INFINITY {
        let right = integrate_to_infinity(&f, core_hi, quad)?;
        total.value += right.value;
        total.abs_err += right.abs_err;
        total.converged &= right.converged;
    }
    Ok(total)
}

/// `PV ∫_a^b f(E) / (E - λ) dE` by singularity subtraction:
/// `∫ (f(E) - f(λ)) / (E - λ) dE + f(λ) ln|(b - λ) / (λ - a)|`.
pub fn pv_finite<F: Fn(f64) -> f64>(
    f: &F,
    lambda: f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    quad: QuadOptions,
) -> Result<f64> {
    if !(a < lambda && lambda < b) {
        return Err(DecayError::Domain(format!(
            "pole {lambda} must lie strictly inside [{a}, {b}]"
        )));
    }
    let f_pole = f(lambda);
    if !f_pole.is_finite() {
        return Err(DecayError::NonFinite(format!("integrand at the pole {lambda}")));
    }
    let h = 1e-6 * (1.0 + lambda.abs());
    let slope = (f(lambda + h) - f(lambda - h)) / (2.0 * h);
    let remainder = |e: f64| {
        if e == lambda {
            slope
        } else {
            (f(e) - f_pole) / (e - lambda)
        }
    };
    let mut pts = breaks.to_vec();
    pts.push(lambda);
    let core = integrate(remainder, a, b, &pts, quad)?;
    Ok(core.value + f_pole * ((b - lambda) / (lambda - a)).abs().ln())
}

/// Analytic integral of `C (λ+u)^(-k) / u` for u in [R, ∞) (right) or (-∞, -R] (left),
/// to second order in λ/u.
fn tail_piece(tail: PowerTail, lambda: f64, r: f64, right: bool) -> f64 {
    let k = tail.power as f64;
    let c = tail.coeff;
    let lead = r.powf(-k) / k;
    let next = k * lambda * r.powf(-k - 1.0) / (k + 1.0);
    if right {
        c * (lead - next)
    } else {
        let sign = if tail.power % 2 == 0 { 1.0 } else { -1.0 };
        -c * sign * (lead + next)
    }
}

/// `PV ∫ f(E) / (E - λ) dE` over `domain`.
///
/// When λ lies outside the domain the integral is ordinary. A pole on the
/// boundary is rejected.
pub fn pv_integral<F: Fn(f64) -> f64>(
    f: F,
    lambda: f64,
    domain: Interval,
    opts: &PvOptions,
) -> Result<f64> {
    let Interval { lo, hi } = domain;
    if !lambda.is_finite() {
        return Err(DecayError::Domain("pole location is not finite".into()));
    }
    if lambda == lo || lambda == hi {
        return Err(DecayError::Domain(format!(
            "pole {lambda} lies on the boundary of the domain"
        )));
    }
    if lambda < lo || lambda > hi {
        let g = |e: f64| f(e) / (e - lambda);
        return Ok(integrate_line(g, lo, hi, &opts.breaks, opts.quad)?.value);
    }

    let auto_width = match opts.tail {
        Some(t) if t.power > 0 => {
            let k = t.power as f64;
            let target = (t.coeff.abs() * 10.0 * (1.0 + lambda.abs()) / opts.quad.abs_tol)
                .powf(1.0 / (k + 1.0));
            target.max(8.0 * (1.0 + lambda.abs())).min(1e7)
        }
        Some(_) => 8.0 * (1.0 + lambda.abs()),
        None => 1.0 + lambda.abs(),
    };
    let r = opts
        .core_half_width
        .unwrap_or(auto_width)
        .min(lambda - lo)
        .min(hi - lambda);
    let (a, b) = (lambda - r, lambda + r);
    let breaks: Vec<f64> = opts.breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    let mut total = pv_finite(&f, lambda, a, b, &breaks, opts.quad)?;

    let g = |e: f64| f(e) / (e - lambda);
    let outer_breaks = |keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        opts.breaks.iter().copied().filter(|&x| keep(x)).collect()
    };
    match (lo.is_finite(), opts.tail) {
        (true, _) => {
            if lo < a {
                total += integrate_line(g, lo, a, &outer_breaks(&|x| x < a), opts.quad)?.value;
            }
        }
        (false, Some(t)) if t.power == 0 => {
            if hi.is_finite() {
                return Err(DecayError::Domain("non-decaying integrand on a half-infinite domain".into()));
            }
        }
        (false, Some(t)) => {
            // the window may be pinched by a nearby finite end; extend before the expansion
            let far = auto_width.max(r);
            if far > r {
                total += integrate(g, lambda - far, a, &outer_breaks(&|x| x > lambda - far && x < a), opts.quad)?.value;
            }
            total += tail_piece(t, lambda, far, false)
        }
        (false, None) => {
            total += integrate_line(g, lo, a, &outer_breaks(&|x| x < a), opts.quad)?.value
        }
    }
    match (hi.is_finite(), opts.tail) {
        (true, _) => {
            if hi > b {
                total += integrate_line(g, b, hi, &outer_breaks(&|x| x > b), opts.quad)?.value;
            }
        }
        (false, Some(t)) if t.power == 0 => {
            if lo.is_finite() {
                return Err(DecayError::Domain("non-decaying integrand on a half-infinite domain".into()));
            }
        }
        (false, Some(t)) => {
            let far = auto_width.max(r);
            if far > r {
                total += integrate(g, b, lambda + far, &outer_breaks(&|x| x > b && x < lambda + far), opts.quad)?.value;
            }
            total += tail_piece(t, lambda, far, true)
        }
        (false, None) => {
            total += integrate_line(g, b, hi, &outer_breaks(&|x| x > b), opts.quad)?.value
        }
    }
    Ok(total)
}

/// Hilbert transform value at a real point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue {
    pub lambda: f64,
    pub sigma: f64,
    pub eta_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    Physical,
    Continued,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiValue {
    pub z: Complex64,
    pub value: Complex64,
    pub sheet: Sheet,
}

fn profile_breaks(spec: &ModelSpec) -> Vec<f64> {
    let mut b: Vec<f64> = spec
        .profile
        .poles()
        .iter()
        .flat_map(|t| {
            let w = t.pole.im.abs().max(1e-3);
            [t.pole.re - w, t.pole.re, t.pole.re + w]
        })
        .collect();
    b.extend([-1.0, 0.0, 1.0]);
    b.sort_by(|x, y| x.total_cmp(y));
    b.dedup();
    b
}

fn pv_options(spec: &ModelSpec, tol: &Tolerances) -> PvOptions {
    let (coeff, power) = spec.profile.tail();
    PvOptions {
        quad: tol.quad(),
        tail: Some(PowerTail { coeff: coeff * spec.tau, power }),
        core_half_width: None,
        breaks: profile_breaks(spec),
    }
}

fn lower_poles_closed(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in spec.profile.poles().iter().filter(|t| t.pole.im < 0.0) {
        if (z - t.pole).norm() <= 1e-14 * (1.0 + t.pole.norm()) {
            return Err(DecayError::Pole(t.pole));
        }
        acc += t.eval(z);
    }
    Ok(acc * 2.0 * I * spec.tau)
}

/// Closed-form `xi` for a full-line profile, analytically continued to the
/// whole plane (the lower half plane is the continued sheet).
pub fn xi_full_closed(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    if spec.profile.is_flat() {
        return Ok(I * spec.tau * spec.profile.strength());
    }
    lower_poles_closed(spec, z)
}

/// Derivative of the continued full-line `xi`.
pub fn xi_full_closed_derivative(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    if spec.profile.is_flat() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for t in spec.profile.poles().iter().filter(|t| t.pole.im < 0.0) {
        if (z - t.pole).norm() <= 1e-14 * (1.0 + t.pole.norm()) {
            return Err(DecayError::Pole(t.pole));
        }
        acc += t.eval_derivative(z, 1);
    }
    Ok(acc * 2.0 * I * spec.tau)
}

/// `sigma(l)` on the full line in closed form.
pub fn hilbert_full(spec: &ModelSpec, lambda: f64) -> Result<TransformValue> {
    if spec.support() != Support::FullLine {
        return Err(DecayError::WrongSupport { expected: "full-line" });
    }
    let xi = xi_full_closed(spec, Complex64::new(lambda, 0.0))?;
    Ok(TransformValue { lambda, sigma: xi.re, eta_at: spec.eta(lambda) })
}

/// `sigma(l)` on the full line by principal-value quadrature.
pub fn hilbert_full_quad(spec: &ModelSpec, lambda: f64, tol: &Tolerances) -> Result<TransformValue> {
    if spec.support() != Support::FullLine {
        return Err(DecayError::WrongSupport { expected: "full-line" });
    }
    let opts = pv_options(spec, tol);
    let v = pv_integral(|e| spec.eta(e), lambda, Interval::full_line(), &opts)?;
    Ok(TransformValue { lambda, sigma: v / PI, eta_at: spec.eta(lambda) })
}

/// Log of `-z`; on the positive real axis the boundary value from the upper
/// half plane is taken.
fn log_minus(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re > 0.0 {
        Complex64::new(z.re.ln(), -PI)
    } else {
        (-z).ln()
    }
}

/// `sum_p Res_{E=p} [eta(E) Log(-E) / (E - z)]` and its z-derivative.
fn residue_sums(spec: &ModelSpec, z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for t in spec.profile.poles() {
        let p = t.pole;
        let m = t.order();
        // Taylor coefficients of Log(-E) at p
        let mut log_taylor = Vec::with_capacity(m);
        log_taylor.push((-p).ln());
        for k in 1..m {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            log_taylor.push(sign / (k as f64 * p.powi(k as i32)));
        }
        let d = p - z;
        for (idx, &c) in t.coeffs.iter().enumerate() {
            let j = idx + 1;
            for (k, &lt) in log_taylor.iter().enumerate().take(j) {
                let mm = (j - 1 - k) as i32;
                let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
                // U_m = (-1)^m / (p - z)^(m+1);  dU_m/dz = (-1)^m (m+1) / (p - z)^(m+2)
                value += c * lt * sign / d.powi(mm + 1);
                deriv += c * lt * sign * (mm as f64 + 1.0) / d.powi(mm + 2);
            }
        }
    }
    (value * spec.tau, deriv * spec.tau)
}

fn near_profile_pole(spec: &ModelSpec, z: Complex64) -> bool {
    spec.profile
        .poles()
        .iter()
        .any(|t| (z - t.pole).norm() < 0.05 * (1.0 + t.pole.norm()))
}

/// `(1/pi) ∫_0^∞ eta(E) / (E - z)^power dE` by quadrature, z off the half line.
fn stieltjes_half_quad(spec: &ModelSpec, z: Complex64, power: i32, tol: &Tolerances) -> Result<Complex64> {
    let mut breaks = profile_breaks(spec);
    breaks.extend([z.re - z.im.abs(), z.re, z.re + z.im.abs()]);
    breaks.retain(|&b| b > 0.0);
    let f = |e: f64| Complex64::new(spec.eta(e), 0.0) / (Complex64::new(e, 0.0) - z).powi(power);
    Ok(integrate_line(f, 0.0, f64::INFINITY, &breaks, tol.quad())?.value / PI)
}

/// Physical-sheet half-line transform `(1/pi) ∫_0^∞ eta(E)/(E - z) dE` for z
/// off the positive real axis; on the positive axis the upper boundary value.
pub fn xi_half_stieltjes(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(DecayError::Domain("the branch point z = 0".into()));
    }
    if z.im != 0.0 && near_profile_pole(spec, z) {
        return stieltjes_half_quad(spec, z, 1, &Tolerances::profile(crate::tolerance::ToleranceProfile::Strict));
    }
    let (res, _) = residue_sums(spec, z);
    let eta = spec.eta_c(z);
    Ok((-eta * log_minus(z) - res) / PI)
}

/// z-derivative of [`xi_half_stieltjes`].
pub fn xi_half_stieltjes_derivative(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(DecayError::Domain("the branch point z = 0".into()));
    }
    if z.im != 0.0 && near_profile_pole(spec, z) {
        return stieltjes_half_quad(spec, z, 2, &Tolerances::profile(crate::tolerance::ToleranceProfile::Strict));
    }
    let (_, dres) = residue_sums(spec, z);
    let eta = spec.eta_c(z);
    let deta = spec.eta_c_derivative(z, 1);
    Ok((-deta * log_minus(z) - eta / z - dres) / PI)
}

/// Continuation of the half-line transform through the positive real axis
/// into the lower half plane: `xi_I(z) + 2i eta(z)`.
pub fn xi_half_second_sheet(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    check_pole(spec, z)?;
    Ok(xi_half_stieltjes(spec, z)? + 2.0 * I * spec.eta_c(z))
}

pub fn xi_half_second_sheet_derivative(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    check_pole(spec, z)?;
    Ok(xi_half_stieltjes_derivative(spec, z)? + 2.0 * I * spec.eta_c_derivative(z, 1))
}

fn check_pole(spec: &ModelSpec, z: Complex64) -> Result<()> {
    for t in spec.profile.poles() {
        if (z - t.pole).norm() <= 1e-12 * (1.0 + t.pole.norm()) {
            return Err(DecayError::Pole(t.pole));
        }
    }
    Ok(())
}

/// The real remainder `A(l, c)` in
/// `sigma_bar(l) = -(1/pi) eta(l) ln(-l/c) + (1/pi) A(l, c)` (continued to complex l).
pub fn log_remainder(spec: &ModelSpec, z: Complex64) -> Complex64 {
    let (res, _) = residue_sums(spec, z);
    -res - spec.eta_c(z) * spec.profile.log_scale_c().ln()
}

/// `sigma_bar(l)` in closed form (any real l != 0).
pub fn hilbert_half(spec: &ModelSpec, lambda: f64) -> Result<TransformValue> {
    if spec.support() != Support::HalfLine {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    if lambda == 0.0 {
        return Err(DecayError::Domain(
            "lambda = 0 is the branch point; approach it as a limit".into(),
        ));
    }
    let xi = xi_half_stieltjes(spec, Complex64::new(lambda, 0.0))?;
    Ok(TransformValue { lambda, sigma: xi.re, eta_at: spec.eta(lambda) })
}

/// `sigma_bar(l)` by quadrature: principal value for l > 0, ordinary integral for l < 0.
pub fn hilbert_half_quad(spec: &ModelSpec, lambda: f64, tol: &Tolerances) -> Result<TransformValue> {
    if spec.support() != Support::HalfLine {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    if lambda == 0.0 {
        return Err(DecayError::Domain(
            "lambda = 0 is the branch point; approach it as a limit".into(),
        ));
    }
    let mut opts = pv_options(spec, tol);
    opts.breaks.retain(|&b| b > 0.0);
    if lambda < 0.0 {
        opts.breaks.extend([-lambda, 10.0 * -lambda]);
    }
    let v = pv_integral(|e| spec.eta(e), lambda, Interval::half_line(), &opts)?;
    Ok(TransformValue { lambda, sigma: v / PI, eta_at: spec.eta(lambda) })
}

/// `sigma_bar'(l) = (1/pi) ∫_0^∞ eta(E) / (E - l)^2 dE` for l < 0.
pub fn hilbert_half_deriv(spec: &ModelSpec, lambda: f64, tol: &Tolerances) -> Result<f64> {
    if spec.support() != Support::HalfLine {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    if !(lambda < 0.0) {
        return Err(DecayError::Domain(format!(
            "derivative integral needs lambda < 0, got {lambda}"
        )));
    }
    let mut breaks = profile_breaks(spec);
    breaks.extend([-lambda, 10.0 * -lambda]);
    breaks.retain(|&b| b > 0.0);
    let f = |e: f64| spec.eta(e) / ((e - lambda) * (e - lambda));
    Ok(integrate_line(f, 0.0, f64::INFINITY, &breaks, tol.quad())?.value / PI)
}

/// `xi(z)` on the requested sheet.
///
/// Physical sheet: the upper-half-plane function, its boundary value
/// `sigma + i eta` on the real axis, and zero below the axis (the Cauchy
/// integral defining it vanishes there). Continued sheet: the analytic
/// continuation from the upper half plane through the support.
pub fn xi_eval(spec: &ModelSpec, z: Complex64, sheet: Sheet) -> Result<XiValue> {
    let value = match (spec.support(), sheet) {
        (_, Sheet::Physical) if z.im < 0.0 => Complex64::new(0.0, 0.0),
        (Support::FullLine, _) => xi_full_closed(spec, z)?,
        (Support::HalfLine, _) if z.im >= 0.0 => xi_half_stieltjes(spec, z)?,
        (Support::HalfLine, Sheet::Continued) => xi_half_second_sheet(spec, z)?,
        (Support::HalfLine, Sheet::Physical) => unreachable!(),
    };
    Ok(XiValue { z, value, sheet })
}

/// Derivative of the continued `xi`.
pub fn xi_derivative(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    match spec.support() {
        Support::FullLine => xi_full_closed_derivative(spec, z),
        Support::HalfLine if z.im >= 0.0 => xi_half_stieltjes_derivative(spec, z),
        Support::HalfLine => xi_half_second_sheet_derivative(spec, z),
    }
}

/// Numerical Cauchy integral `(1/(2 pi i)) ∫ (sigma(x) + i eta(x)) / (x - z) dx`.
pub fn xi_cauchy(spec: &ModelSpec, z: Complex64, tol: &Tolerances) -> Result<Complex64> {
    if spec.support() != Support::FullLine {
        return Err(DecayError::WrongSupport { expected: "full-line" });
    }
    if spec.profile.is_flat() {
        return Err(DecayError::Domain(
            "the Cauchy integral needs a decaying profile".into(),
        ));
    }
    if z.im == 0.0 {
        return Err(DecayError::Domain("Cauchy integral needs Im z != 0".into()));
    }
    let boundary = |x: f64| -> Complex64 {
        xi_full_closed(spec, Complex64::new(x, 0.0)).unwrap_or_default()
    };
    let x0 = z.re;
    let eps = z.im.abs();
    let r = 1e4 * (1.0 + x0.abs());
    let g0 = boundary(x0);
    let integrand = |x: f64| {
        if x == x0 {
            Complex64::new(0.0, 0.0)
        } else {
            (boundary(x) - g0) / (Complex64::new(x, 0.0) - z)
        }
    };
    let mut breaks = profile_breaks(spec);
    for k in 0..6 {
        let d = eps * 10f64.powi(k);
        breaks.extend([x0 - d, x0 + d]);
    }
    breaks.push(x0);
    breaks.extend([-100.0, -10.0, 10.0, 100.0, -1000.0, 1000.0]);
    let mut opts = tol.quad();
    opts.max_segments = opts.max_segments.max(10_000);
    let core = integrate(integrand, -r, r, &breaks, opts)?.value;
    let rz = Complex64::new(r, 0.0);
    let log_term = (rz - z).ln() - (-rz - z).ln();
    // sigma(x) ~ -c1 / x beyond the window
    let c1: f64 = (spec
        .profile
        .poles()
        .iter()
        .filter(|t| t.pole.im < 0.0)
        .map(|t| t.coeffs[0])
        .sum::<Complex64>()
        * (-2.0 * I)
        * spec.tau)
        .re;
    let tail = if z.norm() < 1e-12 {
        Complex64::new(2.0 / r, 0.0)
    } else {
        ((rz / (rz - z)).ln() + ((rz + z) / rz).ln()) / z
    } * -c1;
    Ok((core + g0 * log_term + tail) / (2.0 * PI * I))
}

/// Double principal value `(1/pi) ∫ eta(z) P 1/(z - x) P 1/(z - y) dz` for x != y,
/// by subtracting both simple poles.
pub fn sigma_tilde(spec: &ModelSpec, x: f64, y: f64, tol: &Tolerances) -> Result<f64> {
    if x == y {
        return Err(DecayError::Degenerate(
            "x = y: the diagonal carries a delta term".into(),
        ));
    }
    let (lo_support, half) = match spec.support() {
        Support::FullLine => (f64::NEG_INFINITY, false),
        Support::HalfLine => (0.0, true),
    };
    let (coeff, power) = spec.profile.tail();
    let coeff = coeff * spec.tau;
    let k = power as f64;
    let center = 0.5 * (x + y);
    let r = (8.0 * (1.0 + x.abs() + y.abs()))
        .max((coeff.abs() / tol.quad_abs).powf(1.0 / (k + 1.0)))
        .min(1e7);
    let lo = if half { 0.0 } else { center - r };
    let hi = center + r;
    let inside = |p: f64| p > lo && p < hi;
    let ax = if inside(x) { spec.eta(x) / (x - y) } else { 0.0 };
    let ay = if inside(y) { spec.eta(y) / (y - x) } else { 0.0 };
    let g = |z: f64| spec.eta(z) / ((z - x) * (z - y)) - ax / (z - x) - ay / (z - y);
    let mut breaks = profile_breaks(spec);
    breaks.extend([x, y]);
    let core = integrate(g, lo, hi, &breaks, tol.quad())?.value;
    let mut total = core;
    if inside(x) {
        total += ax * ((hi - x) / (x - lo)).abs().ln();
    }
    if inside(y) {
        total += ay * ((hi - y) / (y - lo)).abs().ln();
    }
    // tails of eta(z) / z^2 ~ coeff z^-(k+2)
    total += coeff * hi.powf(-k - 1.0) / (k + 1.0);
    if lo_support == f64::NEG_INFINITY {
        let sign = if power % 2 == 0 { 1.0 } else { -1.0 };
        total += coeff * sign * lo.abs().powf(-k - 1.0) / (k + 1.0);
    }
    Ok(total / PI)
}

/// Support-appropriate closed-form transform.
pub fn sigma_closed(spec: &ModelSpec, lambda: f64) -> Result<f64> {
    match spec.support() {
        Support::FullLine => Ok(hilbert_full(spec, lambda)?.sigma),
        Support::HalfLine => Ok(hilbert_half(spec, lambda)?.sigma),
    }
}

pub mod theorems {
    //! Executable checks of the Hilbert-transform identities: involution,
    //! the delta identity of the double principal-value kernel, boundary
    //! values of `xi`, its vanishing below the axis, and the resolvent
    //! identity for `sigma_tilde`.

    use super::*;
    use crate::quad::{LegendreSampler, PiecewiseLegendre};

    #[derive(Debug, Clone, Serialize)]
    pub struct TheoremReport {
        pub involution_max_residual: Option<f64>,
        pub delta_identity_max_residual: Option<f64>,
        /// (epsilon, max residual) pairs
        pub boundary_value_residuals: Vec<(f64, f64)>,
        pub lower_half_plane_max_modulus: Option<f64>,
        pub resolvent_max_residual: f64,
        pub closed_vs_quadrature_max: f64,
    }

    impl TheoremReport {
        pub fn max_residual(&self) -> f64 {
            [
                self.involution_max_residual,
                self.delta_identity_max_residual,
                self.lower_half_plane_max_modulus,
                Some(self.resolvent_max_residual),
                Some(self.closed_vs_quadrature_max),
            ]
            .into_iter()
            .flatten()
            .chain(self.boundary_value_residuals.iter().map(|p| p.1))
            .fold(0.0, f64::max)
        }

        pub fn boundary_decreasing(&self) -> bool {
            self.boundary_value_residuals.windows(2).all(|w| w[1].1 < w[0].1)
        }
    }

    /// The 20 test points used by the suite.
    pub fn test_points() -> Vec<f64> {
        (0..20).map(|i| -2.85 + 0.3 * i as f64).collect()
    }

    fn tabulation_breaks(l: f64) -> Vec<f64> {
        let mut pos = vec![0.25, 0.5, 1.0];
        while *pos.last().unwrap() < l {
            let next = pos.last().unwrap() * 2.0;
            pos.push(next.min(l));
        }
        let mut b: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
        b.push(0.0);
        b.extend(pos);
        b
    }

    /// `(1/pi) PV ∫ f(x) / (x - y) dx` for a tabulated f on [-l, l] with
    /// `f(x) ~ -c1 / x` beyond the table.
    fn hilbert_of_table(table: &PiecewiseLegendre, y: f64, c1: f64, quad: QuadOptions) -> Result<f64> {
        let l = table.hi();
        let breaks: Vec<f64> = table.panels.iter().map(|p| p.a).skip(1).collect();
        let core = pv_finite(&|x| table.eval(x), y, -l, l, &breaks, quad)?;
        let tail = if y.abs() < 1e-12 {
            2.0 / l
        } else {
            ((l + y) / (l - y)).ln() / y
        } * -c1;
        Ok((core + tail) / PI)
    }

    /// Involution: the transform of the tabulated sigma reproduces -eta.
    pub fn involution_residuals(spec: &ModelSpec, points: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
        let l = 2048.0;
        let sampler = LegendreSampler::new(tol.panel_order);
        let sigma = |x: f64| hilbert_full_quad(spec, x, tol).map(|v| v.sigma).unwrap_or(f64::NAN);
        let table = PiecewiseLegendre::build(sigma, &tabulation_breaks(l), &sampler, 1e-11, 1e-11, tol.panel_budget)?;
        let c1 = (-2.0 * I
            * spec
                .profile
                .poles()
                .iter()
                .filter(|t| t.pole.im < 0.0)
                .map(|t| t.coeffs[0])
                .sum::<Complex64>()
            * spec.tau)
            .re;
        points
            .iter()
            .map(|&y| Ok((hilbert_of_table(&table, y, c1, tol.quad())? + spec.eta(y)).abs()))
            .collect()
    }

    /// Delta identity in smeared form with the test function exp(-x^2):
    /// applying the double kernel `(1/pi^2) ∫ P 1/(E-l) P 1/(E-l')` returns the function.
    pub fn delta_identity_residuals(points: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
        let phi = |x: f64| (-x * x).exp();
        let l = 2048.0;
        let opts = PvOptions {
            quad: tol.quad(),
            tail: None,
            core_half_width: Some(12.0),
            breaks: vec![-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0],
        };
        let h_phi = |e: f64| -> f64 {
            // outside the support of phi the transform is an ordinary integral
            let window = Interval::new(-40.0, 40.0);
            pv_integral(phi, e, window, &opts).map(|v| v / PI).unwrap_or(f64::NAN)
        };
        let sampler = LegendreSampler::new(tol.panel_order);
        let table = PiecewiseLegendre::build(h_phi, &tabulation_breaks(l), &sampler, 1e-11, 1e-11, tol.panel_budget)?;
        // H phi (e) ~ -(1/pi) (∫phi) / e = -1/(sqrt(pi) e)
        let c1 = 1.0 / PI.sqrt();
        points
            .iter()
            .map(|&x| Ok((-hilbert_of_table(&table, x, c1, tol.quad())? - phi(x)).abs()))
            .collect()
    }

    pub fn run(spec: &ModelSpec, tol: &Tolerances) -> Result<TheoremReport> {
        let points = test_points();
        let full = spec.support() == Support::FullLine && !spec.profile.is_flat();

        let (involution, delta, boundary, lower) = if full {
            let inv = involution_residuals(spec, &points, tol)?.into_iter().fold(0.0, f64::max);
            let delta = delta_identity_residuals(&points, tol)?.into_iter().fold(0.0, f64::max);
            let xs = [-1.5, -0.3, 0.4, 1.0, 2.2];
            let mut boundary = Vec::new();
            for eps in [1e-2, 1e-3, 1e-4] {
                let mut worst: f64 = 0.0;
                for &x in &xs {
                    let target = xi_full_closed(spec, Complex64::new(x, 0.0))?;
                    let v = xi_cauchy(spec, Complex64::new(x, eps), tol)?;
                    worst = worst.max((v - target).norm());
                }
                boundary.push((eps, worst));
            }
            let mut lower: f64 = 0.0;
            for &x in &xs {
                for y in [0.5, 1.0, 2.0] {
                    lower = lower.max(xi_cauchy(spec, Complex64::new(x, -y), tol)?.norm());
                }
            }
            (Some(inv), Some(delta), boundary, Some(lower))
        } else {
            (None, None, Vec::new(), None)
        };

        let resolvent_points: Vec<f64> = match spec.support() {
            Support::FullLine => vec![-2.0, -1.0, -0.25, 0.5, 1.0, 2.0],
            Support::HalfLine => vec![0.2, 0.5, 1.0, 1.5, 2.5, 4.0],
        };
        let mut resolvent: f64 = 0.0;
        for (i, &x) in resolvent_points.iter().enumerate() {
            for &y in &resolvent_points[i + 1..] {
                let lhs = sigma_tilde(spec, x, y, tol)?;
                let rhs = (sigma_closed(spec, x)? - sigma_closed(spec, y)?) / (x - y);
                resolvent = resolvent.max((lhs - rhs).abs());
            }
        }

        let mut closed_vs_quad: f64 = 0.0;
        let probe: Vec<f64> = match spec.support() {
            Support::FullLine => points.clone(),
            Support::HalfLine => vec![-3.0, -1.0, -0.1, -1e-3, 1e-3, 0.1, 0.7, 1.0, 2.5],
        };
        for &x in &probe {
            let (c, q) = match spec.support() {
                Support::FullLine => (hilbert_full(spec, x)?.sigma, hilbert_full_quad(spec, x, tol)?.sigma),
                Support::HalfLine => (hilbert_half(spec, x)?.sigma, hilbert_half_quad(spec, x, tol)?.sigma),
            };
            closed_vs_quad = closed_vs_quad.max((c - q).abs());
        }

        Ok(TheoremReport {
            involution_max_residual: involution,
            delta_identity_max_residual: delta,
            boundary_value_residuals: boundary,
            lower_half_plane_max_modulus: lower,
            resolvent_max_residual: resolvent,
            closed_vs_quadrature_max: closed_vs_quad,
        })
    }
}
