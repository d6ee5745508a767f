//! Strict JSON scenario configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::reversed::{BoxDomain, ReversedPeriscopeSpec};
use crate::scalar_field::{Bump, Family, GradientMode, ScalarField};
use crate::spherical::{Patch, SphericalPeriscopeSpec};

use super::RunError;

pub const MAX_GRID_COUNT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Spherical,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Synthesize,
    Trace,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Constant,
    Affine,
    Quadratic,
    GaussianBump,
    SumOfBumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorConfig {
    pub family: FamilyKind,
    pub params: serde_json::Value,
    #[serde(default)]
    pub gradient_mode: GradientMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineParams {
    coefficients: Vec<f64>,
    #[serde(default)]
    offset: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticParams {
    matrix: Vec<Vec<f64>>,
    linear: Vec<f64>,
    #[serde(default)]
    offset: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianBumpParams {
    #[serde(default)]
    offset: f64,
    amplitude: f64,
    center: Vec<f64>,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SumOfBumpsParams {
    #[serde(default)]
    offset: f64,
    bumps: Vec<Bump>,
}

impl MirrorConfig {
    pub fn to_field(&self) -> Result<ScalarField, RunError> {
        fn parse<T: for<'de> Deserialize<'de>>(v: &serde_json::Value) -> Result<T, RunError> {
            T::deserialize(v).map_err(|e| RunError::Config(format!("mirror.params: {e}")))
        }
        let family = match self.family {
            FamilyKind::Constant => {
                let p: ConstantParams = parse(&self.params)?;
                Family::Constant { value: p.value }
            }
            FamilyKind::Affine => {
                let p: AffineParams = parse(&self.params)?;
                Family::Affine {
                    coefficients: p.coefficients,
                    offset: p.offset,
                }
            }
            FamilyKind::Quadratic => {
                let p: QuadraticParams = parse(&self.params)?;
                Family::Quadratic {
                    matrix: p.matrix,
                    linear: p.linear,
                    offset: p.offset,
                }
            }
            FamilyKind::GaussianBump => {
                let p: GaussianBumpParams = parse(&self.params)?;
                Family::GaussianBump {
                    offset: p.offset,
                    bump: Bump {
                        amplitude: p.amplitude,
                        center: p.center,
                        sigma: p.sigma,
                    },
                }
            }
            FamilyKind::SumOfBumps => {
                let p: SumOfBumpsParams = parse(&self.params)?;
                Family::SumOfBumps {
                    offset: p.offset,
                    bumps: p.bumps,
                }
            }
        };
        Ok(ScalarField {
            family,
            gradient_mode: self.gradient_mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Overrides of the pass/fail thresholds. Missing values take the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesize: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<f64>,
}

/// Thresholds actually applied in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedTolerances {
    pub trace: f64,
    pub synthesize: f64,
    pub frobenius: f64,
}

pub const TRACE_TOL_ANALYTIC: f64 = 1e-9;
pub const TRACE_TOL_FD: f64 = 1e-5;
pub const SYNTHESIZE_TOL: f64 = 1e-10;
pub const FROBENIUS_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv+json")]
    CsvJson,
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "json")]
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrobeniusConfig {
    /// Finite-difference step; defaults to 1e-4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub dimension: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub mirror: MirrorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<PatchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    pub grid: Vec<usize>,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<FrobeniusConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated, constructed scenario.
#[derive(Debug, Clone)]
pub enum Scenario {
    Spherical(SphericalPeriscopeSpec),
    Reversed(ReversedPeriscopeSpec),
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| RunError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Shape checks that need no geometry.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        if self.dimension < 2 {
            return bad(format!("dimension must be >= 2, got {}", self.dimension));
        }
        if !self.c.is_finite() {
            return bad("C must be finite".into());
        }
        if self.grid.len() != self.dimension - 1 {
            return bad(format!(
                "grid needs {} counts (dimension - 1), got {}",
                self.dimension - 1,
                self.grid.len()
            ));
        }
        if let Some(&n) = self
            .grid
            .iter()
            .find(|&&n| !(1..=MAX_GRID_COUNT).contains(&n))
        {
            return bad(format!(
                "grid counts must lie in [1, {MAX_GRID_COUNT}], got {n}"
            ));
        }
        if self.checks.is_empty() {
            return bad("checks must name at least one of synthesize, trace, frobenius".into());
        }
        if self.checks.contains(&Check::Frobenius) && self.dimension != 4 {
            return bad(format!(
                "the frobenius check needs dimension 4 (3-dimensional fronts), got {}",
                self.dimension
            ));
        }
        for t in [
            self.tolerances.trace,
            self.tolerances.synthesize,
            self.tolerances.frobenius,
        ]
        .into_iter()
        .flatten()
        {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tolerances must be positive and finite, got {t}"));
            }
        }
        if let Some(step) = self.frobenius.as_ref().and_then(|f| f.step) {
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("frobenius.step must be positive, got {step}"));
            }
        }
        match self.scenario {
            ScenarioKind::Spherical => {
                let Some(patch) = &self.patch else {
                    return bad("spherical scenarios need a patch".into());
                };
                if self.domain.is_some() {
                    return bad("spherical scenarios take a patch, not a domain".into());
                }
                if patch.center.len() != self.dimension {
                    return bad(format!(
                        "patch.center needs {} components, got {}",
                        self.dimension,
                        patch.center.len()
                    ));
                }
                if !finite(&patch.center) || !patch.radius.is_finite() {
                    return bad("patch values must be finite".into());
                }
            }
            ScenarioKind::Reversed => {
                let Some(domain) = &self.domain else {
                    return bad("reversed scenarios need a domain".into());
                };
                if self.patch.is_some() {
                    return bad("reversed scenarios take a domain, not a patch".into());
                }
                let m = self.dimension - 1;
                if domain.min.len() != m || domain.max.len() != m {
                    return bad(format!("domain bounds need {m} components each"));
                }
                if !finite(&domain.min) || !finite(&domain.max) {
                    return bad("domain values must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> ResolvedTolerances {
        let trace_default = match self.mirror.gradient_mode {
            GradientMode::Analytic => TRACE_TOL_ANALYTIC,
            GradientMode::FiniteDifference { .. } => TRACE_TOL_FD,
        };
        ResolvedTolerances {
            trace: self.tolerances.trace.unwrap_or(trace_default),
            synthesize: self.tolerances.synthesize.unwrap_or(SYNTHESIZE_TOL),
            frobenius: self.tolerances.frobenius.unwrap_or(FROBENIUS_TOL),
        }
    }

    pub fn frobenius_step(&self) -> f64 {
        self.frobenius
            .as_ref()
            .and_then(|f| f.step)
            .unwrap_or(crate::frobenius::DEFAULT_STEP)
    }

    /// Builds the geometric spec. Shape problems are config errors; violated
    /// geometric invariants are reported as infeasible.
    pub fn build(&self) -> Result<Scenario, RunError> {
        self.validate()?;
        let field = self.mirror.to_field()?;
        let classify = |e: Error| match e {
            Error::Infeasible { .. }
            | Error::SlopeBound { .. }
            | Error::PathBudget { .. }
            | Error::VerticalDegenerate { .. } => RunError::Infeasible(e),
            other => RunError::Config(other.to_string()),
        };
        match self.scenario {
            ScenarioKind::Spherical => {
                let p = self.patch.as_ref().expect("validated");
                let patch = Patch::new(crate::geom::Vector::from_column_slice(&p.center), p.radius)
                    .map_err(classify)?;
                SphericalPeriscopeSpec::new(field, self.c, patch)
                    .map(Scenario::Spherical)
                    .map_err(classify)
            }
            ScenarioKind::Reversed => {
                let d = self.domain.as_ref().expect("validated");
                let domain = BoxDomain::new(d.min.clone(), d.max.clone()).map_err(classify)?;
                ReversedPeriscopeSpec::new(field, self.c, domain)
                    .map(Scenario::Reversed)
                    .map_err(classify)
            }
        }
    }
}
