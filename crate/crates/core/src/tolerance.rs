//! Numerical tolerance profiles shared by all modules.

use serde::{Deserialize, Serialize};

use crate::quad::QuadOptions;

/// Name of the environment variable selecting the default profile.
pub const TOLERANCE_ENV: &str = "DECAYLAB_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceProfile {
    Strict,
    Default,
    Fast,
}

impl std::str::FromStr for ToleranceProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "default" => Ok(Self::Default),
            "fast" => Ok(Self::Fast),
            other => Err(format!("unknown tolerance profile `{other}`")),
        }
    }
}

/// Tolerances for quadrature, root finding and tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// absolute tolerance of adaptive quadrature panels
    pub quad_abs: f64,
    /// relative tolerance of adaptive quadrature
    pub quad_rel: f64,
    /// target accuracy of transform values
    pub transform: f64,
    pub max_segments: usize,
    /// Newton stopping rule |dz| < newton_step * (1 + |z|)
    pub newton_step: f64,
    pub newton_max_iter: usize,
    /// roots closer than this are merged
    pub dedup_radius: f64,
    /// upper end of the bound-state bracket, [-lambda_max, -bracket_floor]
    pub bracket_floor: f64,
    pub bracket_max: f64,
    /// interpolation order of the oscillatory quadrature panels
    pub panel_order: usize,
    pub panel_budget: usize,
    /// absolute accuracy target for tabulated spectral weights
    pub weight_abs: f64,
    pub completeness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::profile(ToleranceProfile::Default)
    }
}

impl Tolerances {
    pub fn profile(profile: ToleranceProfile) -> Self {
        let base = Self {
            quad_abs: 1e-10,
            quad_rel: 1e-12,
            transform: 1e-8,
            max_segments: 4000,
            newton_step: 1e-12,
            newton_max_iter: 100,
            dedup_radius: 1e-8,
            bracket_floor: 1e-9,
            bracket_max: 1e12,
            panel_order: 20,
            panel_budget: 20_000,
            weight_abs: 1e-12,
            completeness: 1e-6,
        };
        match profile {
            ToleranceProfile::Default => base,
            ToleranceProfile::Strict => Self {
                quad_abs: 1e-12,
                quad_rel: 1e-13,
                transform: 1e-10,
                max_segments: 20_000,
                panel_order: 24,
                panel_budget: 50_000,
                weight_abs: 1e-13,
                ..base
            },
            ToleranceProfile::Fast => Self {
                quad_abs: 1e-8,
                quad_rel: 1e-9,
                transform: 1e-6,
                max_segments: 1000,
                panel_order: 16,
                panel_budget: 5000,
                weight_abs: 1e-9,
                completeness: 1e-4,
                ..base
            },
        }
    }

    /// Profile named by `DECAYLAB_TOL`, falling back to the default profile.
    pub fn from_env() -> Self {
        std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .map(Self::profile)
            .unwrap_or_default()
    }

    pub fn quad(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.quad_abs,
            rel_tol: self.quad_rel,
            max_segments: self.max_segments,
        }
    }
}
