//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;

use num_complex::Complex64;

use decaylab::error::Result;
use decaylab::oracle::{diagonalize, discretize, survival_discrete};
use decaylab::profiles::examples::{flat, half_line_case1, half_line_case2, lorentzian};
use decaylab::profiles::ModelSpec;
use decaylab::pvcalc::theorems;
use decaylab::spectral::{
    bound_state, bound_threshold, bound_threshold_quad, completeness, resonance_poles,
};
use decaylab::survival::{
    fit_rate, linear_grid, log_grid, survival_flat_closed, survival_golden_rule,
    survival_pole_sum, survival_quadrature, AmplitudeSeries,
};
use decaylab::tailfit::{survival_decomposed, tail_slope, Decomposition};
use decaylab::tolerance::Tolerances;

type Check = Result<(bool, String)>;
type Criterion = (&'static str, fn(&Tolerances) -> Check);

fn max_amp_diff(a: &AmplitudeSeries, b: &AmplitudeSeries) -> f64 {
    a.amplitude.iter().zip(&b.amplitude).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn exactness(tol: &Tolerances) -> Check {
    let spec = flat();
    let gamma = 2.0 * PI * spec.eta(spec.alpha) / spec.hbar;
    let times = linear_grid(0.0, 20.0, 401);
    let quad = survival_quadrature(&spec, &times, tol)?;
    let w_err = times
        .iter()
        .zip(&quad.survival)
        .map(|(t, w)| (w - (-gamma * t).exp()).abs())
        .fold(0.0, f64::max);
    let poles = resonance_poles(&spec, 4, tol)?;
    let expected = Complex64::new(spec.alpha, -PI * spec.eta(spec.alpha));
    let p_err = poles.leading().map_or(f64::INFINITY, |p| (p.lambda - expected).norm());
    Ok((w_err < 1e-6 && p_err < 1e-10, format!("max |dW| = {w_err:.2e} (< 1e-6), pole error = {p_err:.2e} (< 1e-10)")))
}

fn golden_rule(tol: &Tolerances) -> Check {
    let mut errs = Vec::new();
    for tau in [0.04, 0.01] {
        let spec = lorentzian(1.0, 0.1).with_tau(tau);
        let rate = 2.0 * PI * spec.eta(spec.alpha) / spec.hbar;
        let times = linear_grid(0.0, 2.5 / rate, 400);
        let fit = fit_rate(&survival_quadrature(&spec, &times, tol)?)?;
        errs.push((fit.rate - rate).abs() / rate);
    }
    let pass = errs[1] < 0.1 && errs[1] < errs[0];
    Ok((pass, format!("relative rate error {:.2e} at tau=0.04, {:.2e} at tau=0.01 (< 10%, shrinking)", errs[0], errs[1])))
}

fn pole_sum(tol: &Tolerances) -> Check {
    let spec = lorentzian(1.0, 0.1);
    let poles = resonance_poles(&spec, usize::MAX, tol)?;
    let times = linear_grid(0.0, 20.0, 401);
    let diff = max_amp_diff(&survival_quadrature(&spec, &times, tol)?, &survival_pole_sum(&spec, &poles, &times)?);
    let sum_err = (poles.gamma_sum() - 1.0).norm();
    let pass = poles.poles.len() == 2 && diff < 1e-6 && sum_err < 1e-8;
    Ok((pass, format!("{} poles, max |dA| = {diff:.2e} (< 1e-6), |sum gamma - 1| = {sum_err:.2e} (< 1e-8)", poles.poles.len())))
}

fn theorem_suite(tol: &Tolerances) -> Check {
    let r = theorems::run(&lorentzian(1.0, 0.1), tol)?;
    let inv = r.involution_max_residual.unwrap_or(f64::INFINITY);
    let lhp = r.lower_half_plane_max_modulus.unwrap_or(f64::INFINITY);
    let dec = r.boundary_decreasing();
    let pass = inv < 1e-4 && dec && lhp < 1e-6 && r.resolvent_max_residual < 1e-6;
    Ok((
        pass,
        format!(
            "involution {inv:.2e} (< 1e-4), boundary decreasing {dec}, lower half plane {lhp:.2e} (< 1e-6), resolvent {:.2e} (< 1e-6)",
            r.resolvent_max_residual
        ),
    ))
}

fn bound_states(tol: &Tolerances) -> Check {
    let mut pass = true;
    let mut always = true;
    for alpha in [-1.0, 0.2, 1.0, 2.0, 5.0] {
        let found = bound_state(&half_line_case1(alpha), tol)?;
        always &= found.is_some_and(|b| b.lambda0 < 0.0);
    }
    pass &= always;

    let probe = half_line_case2(1.0);
    let thr = bound_threshold(&probe)?.unwrap_or(f64::NAN);
    let thr_q = bound_threshold_quad(&probe, tol)?.unwrap_or(f64::NAN);
    let thr_err = (thr - thr_q).abs();
    pass &= thr_err < 1e-8;
    let below = bound_state(&half_line_case2(thr - 0.05), tol)?.is_some();
    let above = bound_state(&half_line_case2(thr + 0.05), tol)?.is_some();
    pass &= below && !above;

    let mut comp: f64 = 0.0;
    for spec in [half_line_case1(1.0), half_line_case2(0.1), half_line_case2(1.0), lorentzian(1.0, 0.1)] {
        comp = comp.max(completeness(&spec, tol)?);
    }
    pass &= comp < 1e-6;

    let spec = half_line_case2(0.1);
    let lambda0 = bound_state(&spec, tol)?.map_or(f64::NAN, |b| b.lambda0);
    let eig = diagonalize(&discretize(&spec, 2000, 200.0)?)?;
    let oracle_err = (eig.lowest().0 - lambda0).abs();
    pass &= oracle_err < 1e-4;

    Ok((
        pass,
        format!(
            "case 1 always bound {always}; threshold {thr:.10} vs quadrature diff {thr_err:.2e} (< 1e-8), bound below {below}, above {above}; completeness {comp:.2e} (< 1e-6); oracle lambda0 error {oracle_err:.2e} (< 1e-4)"
        ),
    ))
}

fn oracle_equivalence(tol: &Tolerances) -> Check {
    let spec = lorentzian(1.0, 0.1);
    let lead = resonance_poles(&spec, 4, tol)?.leading().map(|p| p.lambda).unwrap_or_default();
    let lifetime = spec.hbar / (2.0 * lead.im.abs());
    let times = linear_grid(0.0, 10.0 * lifetime, 401);
    let quad = survival_quadrature(&spec, &times, tol)?;
    let mut errs = Vec::new();
    for n in [250, 500, 1000, 2000] {
        let eig = diagonalize(&discretize(&spec, n, 40.0)?)?;
        errs.push(max_amp_diff(&survival_discrete(&eig, &times)?, &quad));
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().unwrap();
    let listed: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    Ok((
        last < 1e-3 && monotone,
        format!("t <= {:.1}, max |dA| for n = 250..2000: [{}] (< 1e-3 at 2000, monotone {monotone})", 10.0 * lifetime, listed.join(", ")),
    ))
}

fn decomposition_gap(spec: &ModelSpec, tol: &Tolerances) -> Result<f64> {
    let times = log_grid(1e-3, 50.0, 120);
    let quad = survival_quadrature(spec, &times, tol)?;
    Ok(max_amp_diff(&quad, &survival_decomposed(spec, &times, tol)?))
}

fn anomaly(tol: &Tolerances) -> Check {
    let spec = half_line_case2(1.0);
    let gap2 = decomposition_gap(&spec, tol)?;
    let gap1 = decomposition_gap(&half_line_case1(1.0), tol)?;
    let d = Decomposition::new(&spec, tol)?;
    let tc = d.crossover()?;
    let mut dominates = true;
    for t in log_grid(1.05 * tc, 100.0 * tc, 40) {
        dominates &= d.cut_term(t)?.norm() > d.pole_term(t).norm();
    }
    let window = (10.0 * tc, 1000.0 * tc);
    let times = log_grid(window.0, window.1, 64);
    let amp = times.iter().map(|&t| d.amplitude(t)).collect::<Result<Vec<_>>>()?;
    let fit = tail_slope(&AmplitudeSeries::new(times, amp, decaylab::survival::Method::CutDecomposition), window)?;
    let pass = gap1 < 1e-4 && gap2 < 1e-4 && dominates && fit.slope <= -1.0 && fit.exponential_rejected;
    Ok((
        pass,
        format!(
            "decomposition gap {gap2:.2e} (eta(0)=0), {gap1:.2e} (eta(0)>0) (< 1e-4); crossover t = {tc:.2}, cut dominates after {dominates}; slope {:.3} on [{:.0}, {:.0}] (<= -1), exponential rejected {}",
            fit.slope, window.0, window.1, fit.exponential_rejected
        ),
    ))
}

fn symmetry_and_kink(tol: &Tolerances) -> Check {
    let pos = [0.5, 1.3, 2.7, 7.1];
    let times: Vec<f64> = pos.iter().map(|t| -t).chain(pos).collect();
    let lor = lorentzian(1.0, 0.1);
    let case2 = half_line_case2(1.0);
    let series = [
        survival_flat_closed(&flat(), &times)?,
        survival_quadrature(&lor, &times, tol)?,
        survival_quadrature(&case2, &times, tol)?,
        survival_golden_rule(&lor, &times)?,
        survival_pole_sum(&lor, &resonance_poles(&lor, usize::MAX, tol)?, &times)?,
        survival_discrete(&diagonalize(&discretize(&lor, 500, 40.0)?)?, &times)?,
        survival_decomposed(&case2, &times, tol)?,
    ];
    let k = pos.len();
    let mut sym: f64 = 0.0;
    for s in &series {
        for i in 0..k {
            sym = sym.max((s.amplitude[i] - s.amplitude[k + i].conj()).norm());
        }
    }

    let spec = flat();
    let h = 1e-4;
    let w = survival_quadrature(&spec, &[-h, 0.0, h], tol)?.survival;
    let slope = 2.0 * PI * spec.eta(spec.alpha) / spec.hbar;
    let right = (w[2] - w[1]) / h;
    let left = (w[1] - w[0]) / h;
    let kink = ((right + slope).abs() / slope).max((left - slope).abs() / slope);
    Ok((
        sym < 1e-12 && kink < 1e-3,
        format!("max |A(-t) - conj A(t)| = {sym:.2e} over {} methods; one-sided slopes {right:.6}, {left:.6} vs -/+{slope:.6}, relative error {kink:.2e} (< 1e-3)", series.len()),
    ))
}

fn main() -> ExitCode {
    let tol = Tolerances::from_env();
    let criteria: [Criterion; 8] = [
        ("flat model exactness", exactness),
        ("golden-rule rate", golden_rule),
        ("pole-sum equivalence", pole_sum),
        ("transform identities", theorem_suite),
        ("bound-state physics", bound_states),
        ("oracle equivalence", oracle_equivalence),
        ("late-time anomaly", anomaly),
        ("symmetry and kink", symmetry_and_kink),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check(&tol).unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!("criterion {} {name}: {} | {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
