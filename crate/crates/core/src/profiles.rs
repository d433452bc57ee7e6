//! Coupling profiles `eta(E) = rho(E) a(E)^2` and full model specifications.
//!
//! A profile is a scaled rational shape `strength * num(E) / den(E)` living on
//! either the full real line or the half line `E > 0`. The partial-fraction
//! expansion of the shape is computed once at construction; every closed-form
//! transform downstream is built from it.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DecayError, Result};
use crate::poly::{cluster_roots, partial_fractions, PoleTerm, Poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Flat,
    RationalFullLine,
    RationalHalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    FullLine,
    HalfLine,
}

/// Serialized form of a [`CouplingProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    pub strength: f64,
    #[serde(default = "unit_poly")]
    pub num: Vec<f64>,
    #[serde(default = "unit_poly")]
    pub den: Vec<f64>,
    pub support: Support,
    #[serde(default = "default_log_scale")]
    pub log_scale_c: f64,
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

fn default_log_scale() -> f64 {
    1.0
}

fn default_one() -> f64 {
    1.0
}

/// Density-weighted coupling with its analytic structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileConfig", into = "ProfileConfig")]
pub struct CouplingProfile {
    kind: ProfileKind,
    strength: f64,
    num: Poly,
    den: Poly,
    support: Support,
    log_scale_c: f64,
    /// Principal parts of `strength * num / den`, sorted by imaginary part.
    poles: Vec<PoleTerm>,
}

impl TryFrom<ProfileConfig> for CouplingProfile {
    type Error = DecayError;

    fn try_from(cfg: ProfileConfig) -> Result<Self> {
        CouplingProfile::new(cfg.kind, cfg.strength, &cfg.num, &cfg.den, cfg.support, cfg.log_scale_c)
    }
}

impl From<CouplingProfile> for ProfileConfig {
    fn from(p: CouplingProfile) -> Self {
        ProfileConfig {
            kind: p.kind,
            strength: p.strength,
            num: p.num.coeffs().to_vec(),
            den: p.den.coeffs().to_vec(),
            support: p.support,
            log_scale_c: p.log_scale_c,
        }
    }
}

impl CouplingProfile {
    pub fn new(
        kind: ProfileKind,
        strength: f64,
        num: &[f64],
        den: &[f64],
        support: Support,
        log_scale_c: f64,
    ) -> Result<Self> {
        let (num, den) = match kind {
            ProfileKind::Flat => (Poly::new(&[1.0]), Poly::new(&[1.0])),
            _ => (Poly::new(num), Poly::new(den)),
        };
        if den.is_zero() {
            return Err(DecayError::InvalidModel("denominator polynomial is zero".into()));
        }
        let poles = if kind == ProfileKind::Flat || den.degree() == 0 || num.degree() >= den.degree() {
            Vec::new()
        } else {
            partial_fractions(&num, &den, 1e-5)
                .into_iter()
                .map(|mut t| {
                    t.coeffs.iter_mut().for_each(|c| *c *= strength);
                    t
                })
                .collect()
        };
        Ok(Self { kind, strength, num, den, support, log_scale_c, poles })
    }

    /// Constant `eta = rho a^2` on the full line.
    pub fn flat(strength: f64) -> Self {
        Self::new(ProfileKind::Flat, strength, &[1.0], &[1.0], Support::FullLine, 1.0)
            .expect("flat profile is always constructible")
    }

    pub fn rational_full_line(strength: f64, num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(ProfileKind::RationalFullLine, strength, num, den, Support::FullLine, 1.0)
    }

    pub fn rational_half_line(strength: f64, num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(ProfileKind::RationalHalfLine, strength, num, den, Support::HalfLine, 1.0)
    }

    pub fn with_log_scale(mut self, c: f64) -> Self {
        self.log_scale_c = c;
        self
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn log_scale_c(&self) -> f64 {
        self.log_scale_c
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_flat(&self) -> bool {
        self.kind == ProfileKind::Flat
    }

    /// Principal parts of the (unscaled by tau) shape.
    pub fn poles(&self) -> &[PoleTerm] {
        &self.poles
    }

    /// `strength * num(E) / den(E)` ignoring the support.
    pub fn shape(&self, e: f64) -> f64 {
        self.strength * self.num.eval(e) / self.den.eval(e)
    }

    pub fn shape_c(&self, z: Complex64) -> Complex64 {
        self.num.eval_c(z) / self.den.eval_c(z) * self.strength
    }

    /// Leading asymptotics `shape(E) ~ coeff * E^(-power)` for |E| -> inf.
    pub fn tail(&self) -> (f64, i32) {
        if self.is_flat() {
            return (self.strength, 0);
        }
        let power = self.den.degree() as i32 - self.num.degree() as i32;
        (self.strength * self.num.leading() / self.den.leading(), power)
    }
}

impl fmt::Display for CouplingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProfileKind::Flat => write!(f, "flat eta = {}", self.strength),
            _ => write!(
                f,
                "{:?} eta = {} * {:?} / {:?}",
                self.kind,
                self.strength,
                self.num.coeffs(),
                self.den.coeffs()
            ),
        }
    }
}

/// A complete model instance: discrete level, coupling profile, coupling
/// scale and hbar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub tau: f64,
    #[serde(default = "default_one")]
    pub hbar: f64,
    pub profile: CouplingProfile,
}

impl ModelSpec {
    pub fn new(alpha: f64, profile: CouplingProfile) -> Self {
        Self { alpha, tau: 1.0, hbar: 1.0, profile }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn support(&self) -> Support {
        self.profile.support
    }

    pub fn is_half_line(&self) -> bool {
        self.profile.support == Support::HalfLine
    }

    /// Effective density `tau * eta(E)` restricted to the support.
    pub fn eta(&self, e: f64) -> f64 {
        if self.is_half_line() && e <= 0.0 {
            return 0.0;
        }
        self.tau * self.profile.shape(e)
    }

    /// Analytic continuation of `tau * eta` (no support cut-off).
    pub fn eta_c(&self, z: Complex64) -> Complex64 {
        self.profile.shape_c(z) * self.tau
    }

    /// k-th derivative of the continued `tau * eta` at z.
    pub fn eta_c_derivative(&self, z: Complex64, k: usize) -> Complex64 {
        if self.profile.is_flat() {
            return if k == 0 {
                Complex64::new(self.tau * self.profile.strength, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.profile
            .poles
            .iter()
            .map(|t| t.eval_derivative(z, k))
            .sum::<Complex64>()
            * self.tau
    }

    /// Principal parts of `tau * eta`.
    pub fn scaled_poles(&self) -> Vec<PoleTerm> {
        self.profile
            .poles
            .iter()
            .map(|t| PoleTerm {
                pole: t.pole,
                coeffs: t.coeffs.iter().map(|c| c * self.tau).collect(),
            })
            .collect()
    }
}

/// Effective density at energy `e`; zero below threshold on the half line.
pub fn eta_eval(spec: &ModelSpec, e: f64) -> Result<f64> {
    if !e.is_finite() {
        return Err(DecayError::Domain(format!("energy {e} is not finite")));
    }
    if spec.is_half_line() && e <= 0.0 {
        return Ok(0.0);
    }
    if !spec.profile.is_flat() && spec.profile.den.eval(e) == 0.0 {
        return Err(DecayError::Domain(format!("denominator vanishes at E = {e}")));
    }
    Ok(spec.eta(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    NonPositiveTau,
    NonPositiveHbar,
    NegativeStrength,
    NonPositiveLogScale,
    FlatRequiresFullLine,
    KindSupportMismatch,
    TailDecayTooSlow,
    RealPoleInSupport,
    NegativeDensity,
    ZeroAlphaOnHalfLine,
    NonFinite,
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn diag(code: DiagnosticCode, message: &str) -> Diagnostic {
    Diagnostic { code, message: message.to_string() }
}

/// Energies covering the support and its far tails.
pub fn validation_grid(support: Support, n: usize) -> Vec<f64> {
    match support {
        Support::FullLine => (0..n)
            .map(|i| (-25.0 + 50.0 * i as f64 / (n - 1) as f64).sinh())
            .collect(),
        Support::HalfLine => (0..n)
            .map(|i| (-30.0 + 55.0 * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// Check every model invariant; an empty list means the spec is well formed.
pub fn validate(spec: &ModelSpec) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let p = &spec.profile;
    let mut out = Vec::new();
    let finite = [spec.alpha, spec.tau, spec.hbar, p.strength, p.log_scale_c]
        .iter()
        .chain(p.num.coeffs())
        .chain(p.den.coeffs())
        .all(|v| v.is_finite());
    if !finite {
        out.push(diag(NonFinite, "non-finite parameter"));
        return out;
    }
    if spec.tau <= 0.0 {
        out.push(diag(NonPositiveTau, "coupling scale tau must be positive"));
    }
    if spec.hbar <= 0.0 {
        out.push(diag(NonPositiveHbar, "hbar must be positive"));
    }
    if p.strength < 0.0 {
        out.push(diag(NegativeStrength, "strength must be non-negative"));
    }
    if p.log_scale_c <= 0.0 {
        out.push(diag(NonPositiveLogScale, "log scale c must be positive"));
    }
    match (p.kind, p.support) {
        (ProfileKind::Flat, Support::HalfLine) => {
            out.push(diag(FlatRequiresFullLine, "flat profile requires full-line support"))
        }
        (ProfileKind::RationalFullLine, Support::HalfLine)
        | (ProfileKind::RationalHalfLine, Support::FullLine) => {
            out.push(diag(KindSupportMismatch, "profile kind does not match its support"))
        }
        _ => {}
    }
    if p.support == Support::HalfLine && spec.alpha == 0.0 {
        out.push(diag(ZeroAlphaOnHalfLine, "alpha must be nonzero for half-line support"));
    }
    if p.kind == ProfileKind::Flat {
        return out;
    }
    if p.den.degree() < p.num.degree() + 2 {
        out.push(diag(TailDecayTooSlow, "tail decay too slow"));
    }
    let scale = 1.0 + p.den.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    let real_in_support = cluster_roots(&p.den.roots(), 1e-5).iter().any(|r| {
        r.value.im.abs() <= 1e-9 * scale
            && match p.support {
                Support::FullLine => true,
                Support::HalfLine => r.value.re >= -1e-12 * scale,
            }
    });
    if real_in_support {
        out.push(diag(RealPoleInSupport, "denominator vanishes in the support"));
    }
    if validation_grid(p.support, 1000).iter().any(|&e| p.shape(e) < 0.0) {
        out.push(diag(NegativeDensity, "coupling density is negative somewhere in the support"));
    }
    out
}

/// Reject specs that fail validation.
pub fn ensure_valid(spec: &ModelSpec) -> Result<()> {
    let diags = validate(spec);
    if diags.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = diags.iter().map(|d| d.message.clone()).collect();
        Err(DecayError::InvalidModel(msg.join("; ")))
    }
}

/// Built-in example models used by tests, the acceptance suite and the CLI.
pub mod examples {
    use super::*;

    /// Flat coupling with rho = 1, a = 0.1, alpha = 1.
    pub fn flat() -> ModelSpec {
        ModelSpec::new(1.0, CouplingProfile::flat(0.01))
    }

    /// `eta = g2 / (1 + E^2)` on the full line.
    pub fn lorentzian(alpha: f64, g2: f64) -> ModelSpec {
        ModelSpec::new(
            alpha,
            CouplingProfile::rational_full_line(g2, &[1.0], &[1.0, 0.0, 1.0]).unwrap(),
        )
    }

    /// Half line with `eta(0) > 0`: `eta = 0.1 / (1 + E^2)`.
    pub fn half_line_case1(alpha: f64) -> ModelSpec {
        ModelSpec::new(
            alpha,
            CouplingProfile::rational_half_line(0.1, &[1.0], &[1.0, 0.0, 1.0]).unwrap(),
        )
    }

    /// Half line with `eta(0) = 0`: `eta = 0.4 E / (1 + E^2)^2`.
    pub fn half_line_case2(alpha: f64) -> ModelSpec {
        ModelSpec::new(
            alpha,
            CouplingProfile::rational_half_line(0.4, &[0.0, 1.0], &[1.0, 0.0, 2.0, 0.0, 1.0])
                .unwrap(),
        )
    }

    /// Named models shipped with the CLI.
    pub fn all() -> Vec<(&'static str, ModelSpec)> {
        vec![
            ("flat", flat()),
            ("lorentzian", lorentzian(1.0, 0.1)),
            ("halfline_case1", half_line_case1(1.0)),
            ("halfline_case2", half_line_case2(1.0)),
            ("halfline_case2_bound", half_line_case2(0.1)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;

    #[test]
    fn eta_eval_examples() {
        assert_eq!(eta_eval(&flat(), 5.0).unwrap(), 0.01);
        assert_eq!(eta_eval(&half_line_case2(1.0), 0.0).unwrap(), 0.0);
        assert!((eta_eval(&lorentzian(1.0, 0.1), 1.0).unwrap() - 0.05).abs() < 1e-16);
    }

    #[test]
    fn eta_eval_rejects_denominator_root() {
        let p = CouplingProfile::rational_full_line(1.0, &[1.0], &[-1.0, 0.0, 1.0]).unwrap();
        let spec = ModelSpec::new(0.5, p);
        assert!(matches!(eta_eval(&spec, 1.0), Err(DecayError::Domain(_))));
    }

    #[test]
    fn validate_flags_flat_on_half_line() {
        let p = CouplingProfile::new(ProfileKind::Flat, 0.01, &[1.0], &[1.0], Support::HalfLine, 1.0)
            .unwrap();
        let d = validate(&ModelSpec::new(1.0, p));
        assert!(d.iter().any(|d| d.message == "flat profile requires full-line support"));
    }

    #[test]
    fn validate_flags_slow_tail() {
        let p = CouplingProfile::rational_full_line(1.0, &[1.0, 0.0, 1.0], &[2.0, 0.0, 1.0]).unwrap();
        let d = validate(&ModelSpec::new(1.0, p));
        assert!(d.iter().any(|d| d.message == "tail decay too slow"));
    }

    #[test]
    fn validate_accepts_shipped_models() {
        for (name, spec) in all() {
            assert!(validate(&spec).is_empty(), "{name}: {:?}", validate(&spec));
        }
    }

    #[test]
    fn validate_flags_negative_density_and_real_pole() {
        let p = CouplingProfile::rational_full_line(1.0, &[-1.0], &[1.0, 0.0, 1.0]).unwrap();
        let d = validate(&ModelSpec::new(1.0, p));
        assert!(d.iter().any(|d| d.code == DiagnosticCode::NegativeDensity));
        let p = CouplingProfile::rational_half_line(1.0, &[1.0], &[-1.0, 0.0, 1.0]).unwrap();
        let d = validate(&ModelSpec::new(1.0, p));
        assert!(d.iter().any(|d| d.code == DiagnosticCode::RealPoleInSupport));
        // a real pole left of the half-line threshold is allowed
        let p = CouplingProfile::rational_half_line(1.0, &[1.0], &[1.0, 2.0, 1.0]).unwrap();
        assert!(validate(&ModelSpec::new(1.0, p)).is_empty());
    }

    #[test]
    fn validate_flags_zero_alpha_on_half_line() {
        let d = validate(&half_line_case1(0.0));
        assert!(d.iter().any(|d| d.code == DiagnosticCode::ZeroAlphaOnHalfLine));
    }

    #[test]
    fn sampled_density_is_nonnegative() {
        for (_, spec) in all() {
            for e in validation_grid(spec.support(), 1000) {
                assert!(eta_eval(&spec, e).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn half_line_is_zero_below_threshold() {
        for spec in [half_line_case1(1.0), half_line_case2(1.0)] {
            for e in [-5.0, -1e-9, 0.0] {
                assert_eq!(eta_eval(&spec, e).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{ "alpha": 1.0, "tau": 1.0, "hbar": 1.0, "profile": { "kind": "rational_full_line", "strength": 0.1, "num": [1.0], "den": [1.0, 0.0, 1.0], "support": "full_line", "log_scale_c": 1.0 } }"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, lorentzian(1.0, 0.1));
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    proptest::proptest! {
        #[test]
        fn eta_is_linear_in_tau(e in -50.0f64..50.0, tau in 0.01f64..10.0) {
            for (_, spec) in all() {
                let one = eta_eval(&spec, e).unwrap();
                let scaled = eta_eval(&spec.clone().with_tau(tau), e).unwrap();
                proptest::prop_assert!((scaled - tau * one).abs() <= 1e-15 * scaled.abs().max(1e-300));
            }
        }
    }
}
