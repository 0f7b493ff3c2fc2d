//! Scenario configuration: TOML parsing and validation.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Errors raised before any computation starts; mapped to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// The TOML parser reports line and column in its message.
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "orbit")]
    Orbit,
    #[serde(rename = "pfaff")]
    Pfaff,
    #[serde(rename = "pseudolinear")]
    Pseudolinear,
    #[serde(rename = "custom-gl-field-eqs")]
    CustomGlFieldEqs,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Orbit => "orbit",
            ScenarioKind::Pfaff => "pfaff",
            ScenarioKind::Pseudolinear => "pseudolinear",
            ScenarioKind::CustomGlFieldEqs => "custom-gl-field-eqs",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

/// Scenario parameters; which fields are required depends on the kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Orbit: field expression name (`rotation`, `identity-linear`,
    /// `constant`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    /// Components for `xi = "constant"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_vector: Option<Vec<f64>>,
    /// Orbit: initial point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Orbit: number of perturbed comparison curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<usize>,
    /// Orbit: perturbation amplitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Orbit: RK4 step count for the integrated orbit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrate_steps: Option<usize>,

    /// Pfaff: 1-form expression (`constant`, `exact-linear`, `nonclosed`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_form: Option<String>,

    /// Shared constants.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vprime: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wprime: Option<f64>,

    /// Pseudolinear: closed form (`exponential` or `quotient`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    /// Pseudolinear: decomposition ordering (`e3` or `pl`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<String>,

    /// Field equations: base metric (`euclidean`, `sphere`, `conformal`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_dim: Option<usize>,
    /// Slope vector of the conformal exponent for `gamma = "conformal"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conformal_slope: Option<Vec<f64>>,
    /// Field equations: conformal exponent (`zero`, `log-speed`,
    /// `direction-induced`, `y-only`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    /// Field equations: fiber sample box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_hi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_resolution: Option<Vec<usize>>,
    /// Field equations: gravific constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Field equations: singular-locus margin for sample rejection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locus_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Functional values against their targets (orbit bound check).
    pub functional: f64,
    /// Pointwise system and level-set residuals.
    pub residual: f64,
    /// Slack on the exact discrete lower bound.
    pub bound_slack: f64,
    /// Equality cases of the lower bound.
    pub equality: f64,
    /// Invariance checks (scaling, energy agreement).
    pub invariance: f64,
    /// Riemannian-reduction zeros.
    pub riemannian_zero: f64,
    /// Cross-integrator trajectory agreement.
    pub geodesic_match: f64,
    /// Euler-Lagrange residual along analytic solutions.
    pub el_residual: f64,
    /// Level a non-solution comparison curve must exceed.
    pub el_contrast: f64,
    /// Margin perturbed curves must exceed the bound by.
    pub perturbation_margin: f64,
    /// First-variation derivative magnitude at solutions.
    pub first_variation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            functional: 1e-4,
            residual: 1e-9,
            bound_slack: 1e-9,
            equality: 1e-8,
            invariance: 1e-10,
            riemannian_zero: 1e-12,
            geodesic_match: 1e-6,
            el_residual: 1e-5,
            el_contrast: 1e-2,
            perturbation_margin: 1e-6,
            first_variation: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn override_all(&mut self, eps: f64) {
        *self = Tolerances {
            functional: eps,
            residual: eps,
            bound_slack: eps,
            equality: eps,
            invariance: eps,
            riemannian_zero: eps,
            geodesic_match: eps,
            el_residual: eps,
            el_contrast: eps,
            perturbation_margin: eps,
            first_variation: eps,
        };
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub emit_plots: bool,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ScenarioConfig::from_str(&text)
    }

    /// Override every axis resolution.
    pub fn override_grid(&mut self, k: usize) {
        for r in self.domain.resolution.iter_mut() {
            *r = k;
        }
        if let Some(yres) = self.params.y_resolution.as_mut() {
            for r in yres.iter_mut() {
                *r = k;
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = self.domain.lo.len();
        if self.domain.hi.len() != m || self.domain.resolution.len() != m || m == 0 {
            return Err(ConfigError::Invalid(
                "domain.lo, domain.hi and domain.resolution must have equal nonzero length"
                    .into(),
            ));
        }
        for k in 0..m {
            if !(self.domain.hi[k] > self.domain.lo[k]) {
                return Err(ConfigError::Invalid(format!(
                    "domain axis {k}: lo must be strictly below hi"
                )));
            }
            if self.domain.resolution[k] < 3 {
                return Err(ConfigError::Invalid(format!(
                    "domain axis {k}: grid resolution must be at least 3"
                )));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("functional", t.functional),
            ("residual", t.residual),
            ("bound_slack", t.bound_slack),
            ("equality", t.equality),
            ("invariance", t.invariance),
            ("riemannian_zero", t.riemannian_zero),
            ("geodesic_match", t.geodesic_match),
            ("el_residual", t.el_residual),
            ("el_contrast", t.el_contrast),
            ("perturbation_margin", t.perturbation_margin),
            ("first_variation", t.first_variation),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "tolerances.{name} must be positive"
                )));
            }
        }
        let p = &self.params;
        match self.kind {
            ScenarioKind::Orbit => {
                let xi = p
                    .xi
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid("orbit scenario needs params.xi".into()))?;
                if xi == "constant" && p.xi_vector.is_none() {
                    return Err(ConfigError::Invalid(
                        "xi = \"constant\" needs params.xi_vector".into(),
                    ));
                }
                if m != 1 {
                    return Err(ConfigError::Invalid(
                        "orbit scenario runs over a 1-dimensional time interval".into(),
                    ));
                }
                if p.x0.is_none() {
                    return Err(ConfigError::Invalid("orbit scenario needs params.x0".into()));
                }
            }
            ScenarioKind::Pfaff => {
                if p.a_form.is_none() {
                    return Err(ConfigError::Invalid(
                        "pfaff scenario needs params.a_form".into(),
                    ));
                }
                if p.v.is_none() {
                    return Err(ConfigError::Invalid("pfaff scenario needs params.v".into()));
                }
            }
            ScenarioKind::Pseudolinear => {
                let form = p.form.as_deref().ok_or_else(|| {
                    ConfigError::Invalid("pseudolinear scenario needs params.form".into())
                })?;
                if p.v.is_none() {
                    return Err(ConfigError::Invalid(
                        "pseudolinear scenario needs params.v".into(),
                    ));
                }
                match form {
                    "exponential" => {}
                    "quotient" => {
                        if p.vprime.is_none() || p.wprime.is_none() {
                            return Err(ConfigError::Invalid(
                                "quotient form needs params.vprime and params.wprime".into(),
                            ));
                        }
                    }
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "unknown pseudolinear form {other:?} (expected \"exponential\" or \"quotient\")"
                        )))
                    }
                }
                if let Some(ord) = p.ordering.as_deref() {
                    if ord != "e3" && ord != "pl" {
                        return Err(ConfigError::Invalid(format!(
                            "unknown ordering {ord:?} (expected \"e3\" or \"pl\")"
                        )));
                    }
                }
            }
            ScenarioKind::CustomGlFieldEqs => {
                if p.gamma.is_none() || p.sigma.is_none() {
                    return Err(ConfigError::Invalid(
                        "field-equation scenario needs params.gamma and params.sigma".into(),
                    ));
                }
                let (Some(y_lo), Some(y_hi), Some(y_res)) =
                    (p.y_lo.as_ref(), p.y_hi.as_ref(), p.y_resolution.as_ref())
                else {
                    return Err(ConfigError::Invalid(
                        "field-equation scenario needs params.y_lo, params.y_hi, params.y_resolution"
                            .into(),
                    ));
                };
                if y_lo.len() != m || y_hi.len() != m || y_res.len() != m {
                    return Err(ConfigError::Invalid(
                        "fiber box must match the base dimension".into(),
                    ));
                }
                if let Some(margin) = p.locus_margin {
                    if !(margin > 0.0) {
                        return Err(ConfigError::Invalid(
                            "params.locus_margin must be positive".into(),
                        ));
                    }
                }
                if let Some(kappa) = p.kappa {
                    if kappa == 0.0 {
                        return Err(ConfigError::Invalid(
                            "params.kappa must be nonzero".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_orbit_config() {
        let text = r#"
kind = "orbit"
[domain]
lo = [0.0]
hi = [6.283185307179586]
resolution = [2000]
[params]
xi = "rotation"
x0 = [1.0, 0.0]
"#;
        let cfg = ScenarioConfig::from_str(text).unwrap();
        assert_eq!(cfg.kind, ScenarioKind::Orbit);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerances.residual, 1e-9);
    }

    #[test]
    fn missing_xi_is_rejected() {
        let text = r#"
kind = "orbit"
[domain]
lo = [0.0]
hi = [1.0]
resolution = [100]
[params]
x0 = [1.0, 0.0]
"#;
        assert!(matches!(
            ScenarioConfig::from_str(text),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn parse_error_mentions_line() {
        let text = "kind = \"orbit\"\ngarbage garbage\n";
        match ScenarioConfig::from_str(text) {
            Err(ConfigError::Parse(e)) => {
                assert!(e.to_string().contains("line"), "message: {e}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn coarse_grids_rejected() {
        let text = r#"
kind = "orbit"
[domain]
lo = [0.0]
hi = [1.0]
resolution = [2]
[params]
xi = "rotation"
x0 = [1.0, 0.0]
"#;
        assert!(matches!(
            ScenarioConfig::from_str(text),
            Err(ConfigError::Invalid(_))
        ));
    }
}
