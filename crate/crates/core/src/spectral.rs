//! Spectral content of the Hamiltonian as seen from the discrete level: the
//! continuum weight `|<a|l>|^2`, the bound state below threshold, resonance
//! poles of the continued resolvent with their residue weights, and the
//! completeness sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DecayError, Result};
use crate::profiles::{ModelSpec, Support};
use crate::pvcalc::{
    hilbert_full, hilbert_half, integrate_line, xi_derivative, xi_eval, xi_half_stieltjes,
    xi_half_stieltjes_derivative, Sheet,
};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub lambda0: f64,
    pub weight0: f64,
}

/// A zero of `alpha - l - pi xi(l)` on the continued sheet and its residue weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub lambda: Complex64,
    pub gamma: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleSet {
    /// sorted by decreasing imaginary part: the longest-lived pole first
    pub poles: Vec<Pole>,
    /// Newton seeds that failed to converge
    pub failed_seeds: usize,
}

impl PoleSet {
    pub fn gamma_sum(&self) -> Complex64 {
        self.poles.iter().map(|p| p.gamma).sum()
    }

    pub fn leading(&self) -> Option<&Pole> {
        self.poles.first()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub grid: Vec<f64>,
    pub weight: Vec<f64>,
    pub bound_state: Option<BoundState>,
    pub completeness_residual: f64,
}

/// `sigma` of the support-appropriate transform.
fn sigma(spec: &ModelSpec, lambda: f64) -> Result<f64> {
    match spec.support() {
        Support::FullLine => Ok(hilbert_full(spec, lambda)?.sigma),
        Support::HalfLine => Ok(hilbert_half(spec, lambda)?.sigma),
    }
}

/// `eta / ((alpha - l - pi sigma)^2 + pi^2 eta^2)` on the open support.
pub fn continuum_weight(spec: &ModelSpec, lambda: f64) -> Result<f64> {
    if spec.is_half_line() && !(lambda > 0.0) {
        return Err(DecayError::Domain(format!(
            "continuum weight needs lambda > 0 on the half line, got {lambda}"
        )));
    }
    let eta = spec.eta(lambda);
    let d = spec.alpha - lambda - PI * sigma(spec, lambda)?;
    let w = eta / (d * d + PI * PI * eta * eta);
    if w.is_finite() {
        Ok(w)
    } else {
        Err(DecayError::NonFinite(format!("continuum weight at {lambda}")))
    }
}

/// `alpha - l - pi sigma_bar(l)` for l < 0; strictly decreasing in l.
fn bound_function(spec: &ModelSpec, lambda: f64) -> Result<f64> {
    Ok(spec.alpha - lambda - PI * hilbert_half(spec, lambda)?.sigma)
}

fn eta_at_threshold(spec: &ModelSpec) -> f64 {
    spec.tau * spec.profile.shape(0.0)
}

/// `pi sigma_bar(0-)`, the largest alpha admitting a bound state; `None` when
/// `eta(0) > 0` makes it infinite.
pub fn bound_threshold(spec: &ModelSpec) -> Result<Option<f64>> {
    if !spec.is_half_line() {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    if eta_at_threshold(spec) > 0.0 {
        return Ok(None);
    }
    // eta(z) Log(-z) vanishes at the branch point when eta(0) = 0
    let v = xi_half_stieltjes(spec, Complex64::new(-1e-200, 0.0))?;
    Ok(Some(PI * v.re))
}

/// Same threshold as `pi (1/pi) ∫ eta(E)/E dE` by direct quadrature.
pub fn bound_threshold_quad(spec: &ModelSpec, tol: &Tolerances) -> Result<Option<f64>> {
    if !spec.is_half_line() {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    if eta_at_threshold(spec) > 0.0 {
        return Ok(None);
    }
    let breaks: Vec<f64> = spec.profile.poles().iter().map(|t| t.pole.norm()).collect();
    let v = integrate_line(|e: f64| spec.eta(e) / e, 0.0, f64::INFINITY, &breaks, tol.quad())?;
    Ok(Some(v.value))
}

/// Bound state below the half-line continuum, by bisection on
/// `alpha - l - pi sigma_bar(l)` over `[-L, -floor]` with L grown geometrically.
pub fn bound_state(spec: &ModelSpec, tol: &Tolerances) -> Result<Option<BoundState>> {
    if !spec.is_half_line() {
        return Err(DecayError::WrongSupport { expected: "half-line" });
    }
    let mut hi = -tol.bracket_floor;
    if bound_function(spec, hi)? >= 0.0 {
        if eta_at_threshold(spec) <= 0.0 {
            return Ok(None);
        }
        // sigma_bar diverges logarithmically at 0-: the root exists but may sit
        // exponentially close to the threshold
        while bound_function(spec, hi)? >= 0.0 {
            hi *= 1e-3;
            if -hi < 1e-300 {
                return Err(DecayError::BracketExhausted(tol.bracket_max));
            }
        }
    }
    let mut lo = hi.min(-1.0);
    while bound_function(spec, lo)? <= 0.0 {
        hi = lo;
        lo *= 2.0;
        if -lo > tol.bracket_max {
            return Err(DecayError::BracketExhausted(tol.bracket_max));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound_function(spec, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda0 = 0.5 * (lo + hi);
    let d_sigma = xi_half_stieltjes_derivative(spec, Complex64::new(lambda0, 0.0))?.re;
    Ok(Some(BoundState { lambda0, weight0: 1.0 / (1.0 + PI * d_sigma) }))
}

fn continued_xi(spec: &ModelSpec, z: Complex64) -> Result<Complex64> {
    Ok(xi_eval(spec, z, Sheet::Continued)?.value)
}

/// Newton iteration on `alpha - z - pi xi(z)`; `None` if it fails to settle.
fn newton(spec: &ModelSpec, start: Complex64, tol: &Tolerances) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..tol.newton_max_iter {
        let g = spec.alpha - z - PI * continued_xi(spec, z).ok()?;
        let dg = -1.0 - PI * xi_derivative(spec, z).ok()?;
        if dg.norm() == 0.0 || !g.is_finite() {
            return None;
        }
        let step = g / dg;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() < tol.newton_step * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

/// Newton seeds: the Golden-Rule point and, next to every lower-half-plane
/// pole p of order m of eta, the m points where the pole term of `pi xi`
/// balances `alpha - p`.
pub fn pole_seeds(spec: &ModelSpec) -> Vec<Complex64> {
    let mut seeds = Vec::new();
    let alpha = spec.alpha;
    let golden = match spec.support() {
        Support::FullLine => hilbert_full(spec, alpha).ok(),
        Support::HalfLine if alpha > 0.0 => hilbert_half(spec, alpha).ok(),
        Support::HalfLine => None,
    };
    if let Some(v) = golden {
        seeds.push(Complex64::new(alpha - PI * v.sigma, -PI * v.eta_at));
    }
    for term in spec.profile.poles().iter().filter(|t| t.pole.im < 0.0) {
        let m = term.order();
        let lead = term.coeffs[m - 1] * Complex64::new(0.0, 2.0 * PI * spec.tau);
        let gap = Complex64::new(alpha, 0.0) - term.pole;
        let base = if gap.norm() > 1e-12 { lead / gap } else { lead };
        let r = base.powf(1.0 / m as f64);
        for k in 0..m {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
            seeds.push(term.pole + r * rot);
        }
    }
    seeds
}

/// Zeros of `alpha - l - pi xi(l)` on the continued sheet in the lower half
/// plane, with residue weights. On the half line only the zeros right of the
/// imaginary axis are returned, the ones passed when the contour is folded
/// onto the negative imaginary axis.
pub fn resonance_poles(spec: &ModelSpec, max_poles: usize, tol: &Tolerances) -> Result<PoleSet> {
    let half = spec.is_half_line();
    let mut failed = 0;
    let mut roots: Vec<Complex64> = Vec::new();
    for seed in pole_seeds(spec) {
        match newton(spec, seed, tol) {
            Some(z) => {
                let keep = z.im < 0.0 && (!half || z.re > 0.0);
                let fresh = roots.iter().all(|r| (r - z).norm() > tol.dedup_radius * (1.0 + z.norm()));
                if keep && fresh {
                    roots.push(z);
                }
            }
            None => failed += 1,
        }
    }
    roots.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));
    roots.truncate(max_poles);
    if roots.is_empty() {
        return Err(DecayError::EmptyPoleSet);
    }
    let poles = roots
        .into_iter()
        .map(|lambda| Pole { lambda, gamma: Complex64::new(0.0, 0.0) })
        .collect();
    pole_weights(spec, PoleSet { poles, failed_seeds: failed })
}

/// Fill `gamma = 1 / (1 + pi xi'(l))` for every pole.
pub fn pole_weights(spec: &ModelSpec, mut set: PoleSet) -> Result<PoleSet> {
    for p in &mut set.poles {
        let denom = 1.0 + PI * xi_derivative(spec, p.lambda)?;
        if denom.norm() < 1e-10 {
            return Err(DecayError::Degenerate(format!(
                "multiple root near {}; the residue weight is undefined",
                p.lambda
            )));
        }
        p.gamma = 1.0 / denom;
    }
    Ok(set)
}

/// Breakpoints resolving the peaks of the continuum weight.
pub fn weight_breaks(spec: &ModelSpec, poles: Option<&PoleSet>) -> Vec<f64> {
    let mut b = vec![spec.alpha, 0.0, 1.0, -1.0];
    for t in spec.profile.poles() {
        b.push(t.pole.re);
    }
    if let Some(set) = poles {
        for p in &set.poles {
            let w = p.lambda.im.abs();
            for k in [-10.0, -1.0, -0.1, 0.0, 0.1, 1.0, 10.0] {
                b.push(p.lambda.re + k * w);
            }
        }
    }
    if spec.is_half_line() {
        b.retain(|&x| x > 0.0);
    }
    b.sort_by(|x, y| x.total_cmp(y));
    b.dedup();
    b
}

/// `∫ w(l) dl` over the support.
pub fn continuum_integral(spec: &ModelSpec, tol: &Tolerances) -> Result<f64> {
    let poles = resonance_poles(spec, usize::MAX, tol).ok();
    let breaks = weight_breaks(spec, poles.as_ref());
    let lo = if spec.is_half_line() { 0.0 } else { f64::NEG_INFINITY };
    let w = |l: f64| if spec.is_half_line() && l <= 0.0 { 0.0 } else { continuum_weight(spec, l).unwrap_or(f64::NAN) };
    let mut opts = tol.quad();
    opts.abs_tol = opts.abs_tol.min(1e-12);
    let v = integrate_line(w, lo, f64::INFINITY, &breaks, opts)?;
    if !v.value.is_finite() {
        return Err(DecayError::Quadrature("continuum weight integral is not finite".into()));
    }
    Ok(v.value)
}

/// `|∫ w + w0 - 1|`.
pub fn completeness(spec: &ModelSpec, tol: &Tolerances) -> Result<f64> {
    if !(spec.tau > 0.0) {
        return Err(DecayError::Domain("completeness needs tau > 0".into()));
    }
    let bound = if spec.is_half_line() { bound_state(spec, tol)? } else { None };
    let w0 = bound.map_or(0.0, |b| b.weight0);
    Ok((continuum_integral(spec, tol)? + w0 - 1.0).abs())
}

/// Weight tabulation on `grid` (points outside the support are skipped) with
/// the bound state and completeness residual.
pub fn spectral_data(spec: &ModelSpec, grid: &[f64], tol: &Tolerances) -> Result<SpectralData> {
    let mut g = Vec::with_capacity(grid.len());
    let mut weight = Vec::with_capacity(grid.len());
    for &l in grid {
        if spec.is_half_line() && l <= 0.0 {
            continue;
        }
        g.push(l);
        weight.push(continuum_weight(spec, l)?);
    }
    let bound_state = if spec.is_half_line() { bound_state(spec, tol)? } else { None };
    Ok(SpectralData {
        grid: g,
        weight,
        bound_state,
        completeness_residual: completeness(spec, tol)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub re: f64,
    pub im: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub lambda0: f64,
    pub weight: f64,
}

/// Serialized form shared by the `poles`, `bound` and `spectrum` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub poles: Vec<PoleRecord>,
    pub bound: Option<BoundRecord>,
    pub completeness_residual: f64,
}

impl SpectralReport {
    pub fn new(poles: Option<&PoleSet>, bound: Option<BoundState>, completeness_residual: f64) -> Self {
        Self {
            poles: poles
                .map(|s| {
                    s.poles
                        .iter()
                        .map(|p| PoleRecord {
                            re: p.lambda.re,
                            im: p.lambda.im,
                            gamma_re: p.gamma.re,
                            gamma_im: p.gamma.im,
                        })
                        .collect()
                })
                .unwrap_or_default(),
            bound: bound.map(|b| BoundRecord { lambda0: b.lambda0, weight: b.weight0 }),
            completeness_residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::examples::*;
    use crate::pvcalc::hilbert_half_deriv;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn flat_weight_peak() {
        let w = continuum_weight(&flat(), 1.0).unwrap();
        assert!((w - 0.01 / (PI * PI * 1e-4)).abs() < 1e-12);
        let w = continuum_weight(&flat(), 0.7).unwrap();
        assert!((w - 0.01 / (0.09 + PI * PI * 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn lorentzian_weight_matches_direct_formula() {
        let spec = lorentzian(1.0, 0.1);
        for l in [-2.0, 0.0, 1.0, 1.2, 3.0] {
            let eta = 0.1 / (1.0 + l * l);
            let sigma = -0.1 * l / (1.0 + l * l);
            let d = 1.0 - l - PI * sigma;
            let oracle = eta / (d * d + PI * PI * eta * eta);
            assert!((continuum_weight(&spec, l).unwrap() - oracle).abs() < 1e-14);
        }
    }

    #[test]
    fn half_line_weight_vanishes_at_threshold() {
        let spec = half_line_case2(1.0);
        assert!(continuum_weight(&spec, 1e-8).unwrap() < 1e-7);
        assert!(matches!(continuum_weight(&spec, -1.0), Err(DecayError::Domain(_))));
    }

    #[test]
    fn bound_state_existence() {
        assert!(bound_state(&half_line_case1(1.0), &tol()).unwrap().is_some());
        assert!(bound_state(&half_line_case1(5.0), &tol()).unwrap().is_some());
        assert!(bound_state(&half_line_case2(1.0), &tol()).unwrap().is_none());
        let b = bound_state(&half_line_case2(0.1), &tol()).unwrap().unwrap();
        assert!(b.lambda0 < 0.0);
        assert!(b.weight0 > 0.0 && b.weight0 < 1.0);
        // the root satisfies the defining equation
        let residual = 0.1 - b.lambda0 - PI * hilbert_half(&half_line_case2(0.1), b.lambda0).unwrap().sigma;
        assert!(residual.abs() < 1e-12);
        // weight from the quadrature derivative
        let d = hilbert_half_deriv(&half_line_case2(0.1), b.lambda0, &tol()).unwrap();
        assert!((b.weight0 - 1.0 / (1.0 + PI * d)).abs() < 1e-9);
        assert!(matches!(bound_state(&flat(), &tol()), Err(DecayError::WrongSupport { .. })));
    }

    #[test]
    fn threshold_closed_form_and_quadrature() {
        let spec = half_line_case2(1.0);
        let closed = bound_threshold(&spec).unwrap().unwrap();
        let quad = bound_threshold_quad(&spec, &tol()).unwrap().unwrap();
        assert!((closed - PI * 0.1).abs() < 1e-14);
        assert!((quad - PI * 0.1).abs() < 1e-10);
        assert_eq!(bound_threshold(&half_line_case1(1.0)).unwrap(), None);
    }

    #[test]
    fn flat_pole() {
        let set = resonance_poles(&flat(), 8, &tol()).unwrap();
        assert_eq!(set.poles.len(), 1);
        let p = set.poles[0];
        assert!((p.lambda - Complex64::new(1.0, -PI * 0.01)).norm() < 1e-14);
        assert!((p.gamma - 1.0).norm() < 1e-15);
    }

    #[test]
    fn lorentzian_poles_match_quadratic_formula() {
        let spec = lorentzian(1.0, 0.1);
        let set = resonance_poles(&spec, 8, &tol()).unwrap();
        assert_eq!(set.poles.len(), 2);
        // (alpha - l)(l + i) + pi g^2 = 0
        let b = Complex64::new(1.0, -1.0);
        let c = Complex64::new(PI * 0.1, 1.0);
        let disc = (b * b + 4.0 * c).sqrt();
        let mut roots = [(b + disc) / 2.0, (b - disc) / 2.0];
        roots.sort_by(|x, y| y.im.total_cmp(&x.im));
        for (p, r) in set.poles.iter().zip(roots) {
            assert!((p.lambda - r).norm() < 1e-12, "{} vs {r}", p.lambda);
            let xi_prime = 0.1 / ((r + Complex64::i()) * (r + Complex64::i()));
            assert!((p.gamma - 1.0 / (1.0 + PI * xi_prime)).norm() < 1e-12);
        }
        assert!((set.gamma_sum() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn small_coupling_leading_pole() {
        let base = lorentzian(1.0, 0.1);
        let mut prev_err = f64::INFINITY;
        for tau in [0.1, 0.01, 0.001] {
            let spec = base.clone().with_tau(tau);
            let set = resonance_poles(&spec, 8, &tol()).unwrap();
            let lead = set.leading().unwrap();
            // Golden-Rule point alpha - pi tau (sigma(alpha) + i eta(alpha)), sigma(1) = -0.05
            let golden = Complex64::new(1.0 + PI * tau * 0.05, -PI * tau * 0.05);
            let err = (lead.lambda - golden).norm();
            assert!(err < 10.0 * tau * tau, "tau={tau}: {err}");
            assert!(err < prev_err);
            prev_err = err;
            assert!((lead.gamma - 1.0).norm() < 10.0 * tau);
            assert!((set.gamma_sum() - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn half_line_poles_right_of_axis() {
        let set = resonance_poles(&half_line_case2(1.0), 8, &tol()).unwrap();
        assert_eq!(set.poles.len(), 2);
        let expect = [
            (Complex64::new(0.113223670754813, -0.260256531442773), Complex64::new(-0.020766220689, -0.342346715236)),
            (Complex64::new(1.22924525197674, -0.258578403382352), Complex64::new(0.844415222729, 0.342538951566)),
        ];
        for (root, gamma) in expect {
            let p = set.poles.iter().find(|p| (p.lambda - root).norm() < 1e-10).expect("missing root");
            assert!((p.gamma - gamma).norm() < 1e-9);
        }
        for p in &set.poles {
            assert!(p.lambda.re > 0.0 && p.lambda.im < 0.0);
        }
    }

    #[test]
    fn completeness_of_shipped_models() {
        for (name, spec) in all() {
            let r = completeness(&spec, &tol()).unwrap();
            assert!(r < 1e-6, "{name}: {r}");
        }
    }

    #[test]
    fn report_json_shape() {
        let set = resonance_poles(&flat(), 1, &tol()).unwrap();
        let r = SpectralReport::new(Some(&set), None, 0.0);
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["bound"].is_null());
        assert!(v["poles"][0]["gamma_re"].as_f64().unwrap() > 0.99);
        let back: SpectralReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn poles_stay_below_axis(tau in 0.01f64..1.0, alpha in -2.0f64..2.0) {
            let spec = lorentzian(alpha, 0.1).with_tau(tau);
            let set = resonance_poles(&spec, 8, &tol()).unwrap();
            for p in &set.poles {
                proptest::prop_assert!(p.lambda.im < 0.0);
            }
            proptest::prop_assert!((set.gamma_sum() - 1.0).norm() < 1e-8);
        }

        #[test]
        fn weight_positive_where_eta_positive(l in 1e-6f64..50.0) {
            for spec in [half_line_case1(1.0), half_line_case2(1.0)] {
                proptest::prop_assert!(continuum_weight(&spec, l).unwrap() > 0.0);
            }
        }

        #[test]
        fn half_sigma_positive_and_increasing_below_threshold(l in -50.0f64..-1e-6) {
            for spec in [half_line_case1(1.0), half_line_case2(1.0)] {
                let s = hilbert_half(&spec, l).unwrap().sigma;
                let d = hilbert_half_deriv(&spec, l, &tol()).unwrap();
                proptest::prop_assert!(s > 0.0 && d > 0.0);
            }
        }
    }
}
