//! Strict TOML experiment configuration.
//!
//! Physics parameters (step sizes, moment orders, tail levels, sample
//! counts) have no defaults and must be written out. Bookkeeping knobs
//! such as bootstrap resamples and quadrature orders default to the
//! values documented in `docs/formats.md`; the resolved configuration is
//! echoed into every output header.

use mala_core::kernel::{theorem1_policy, StepSizePolicy, C0};
use mala_core::targets::{make_anisotropic, make_cosine_perturbed, make_flat, make_isotropic, make_quadratic, TargetDensity};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductance: Option<ConductanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lovasz: Option<LovaszSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Quadratic { eigenvalues: Vec<f64> },
    Isotropic { dim: usize, sigma: f64 },
    Anisotropic { dim: usize, l: f64 },
    Cosine { dim: usize, a: f64 },
    Flat { dim: usize },
}

impl TargetSpec {
    pub fn build(&self) -> Result<TargetDensity, LabError> {
        let t = match self {
            TargetSpec::Quadratic { eigenvalues } => make_quadratic(eigenvalues),
            TargetSpec::Isotropic { dim, sigma } => make_isotropic(*dim, *sigma),
            TargetSpec::Anisotropic { dim, l } => make_anisotropic(*dim, *l),
            TargetSpec::Cosine { dim, a } => make_cosine_perturbed(*dim, *a),
            TargetSpec::Flat { dim } if *dim > 0 => Ok(make_flat(*dim)),
            TargetSpec::Flat { .. } => return Err(LabError::Config("flat target needs dim >= 1".into())),
        };
        t.map_err(|e| LabError::Config(format!("target: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    Manual {
        eta: f64,
    },
    Theorem1 {
        warmness: f64,
        eps: f64,
        /// Explicit `c₀`; when absent, `c₀` is calibrated against the
        /// acceptance lemma at level `calibration_delta`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration_delta: Option<f64>,
    },
}

impl PolicySpec {
    pub fn build(&self, target: &TargetDensity) -> Result<StepSizePolicy, LabError> {
        let p = match self {
            PolicySpec::Manual { eta } => StepSizePolicy::manual(*eta),
            PolicySpec::Theorem1 {
                warmness,
                eps,
                c0,
                calibration_delta,
            } => {
                let c0 = match (c0, calibration_delta) {
                    (Some(_), Some(_)) => {
                        return Err(LabError::Config(
                            "policy: give either c0 or calibration_delta, not both".into(),
                        ))
                    }
                    (Some(v), None) => C0::Value(*v),
                    (None, Some(d)) => C0::Calibrated { delta: *d },
                    (None, None) => {
                        return Err(LabError::Config(
                            "policy: theorem1 needs c0 or calibration_delta".into(),
                        ))
                    }
                };
                theorem1_policy(&target.profile(), *warmness, *eps, c0)
            }
        };
        p.map_err(|e| LabError::Config(format!("policy: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub n_steps: u64,
    pub lazy: bool,
    #[serde(default = "one")]
    pub thinning: u64,
    #[serde(default = "one_usize")]
    pub chains: usize,
    /// Initial point; when absent chains start from exact target draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(default = "csv_format")]
    pub format: TrajectoryFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaName {
    GradNorm,
    QuadraticForm,
    QuadraticFormAtQt,
    GradDiff,
    BEta,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSpec {
    pub lemmas: Vec<LemmaName>,
    pub ells: Vec<u32>,
    pub n_samples: usize,
    /// Step sizes for the lemmas that follow a leapfrog path.
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Path times as fractions of each `eta`.
    #[serde(default)]
    pub t_fractions: Vec<f64>,
    /// Evaluation point of the quadratic-form lemma (origin if absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default = "resamples")]
    pub resamples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub deltas: Vec<f64>,
    pub n_samples: usize,
    /// Step size override; by default each δ uses the largest admissible η.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub etas: Vec<f64>,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    #[serde(default = "twenty")]
    pub grid: usize,
    pub max_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSpec {
    pub dims: Vec<usize>,
    pub eps: f64,
    pub m_target: f64,
    pub replicas: usize,
    #[serde(default = "one_f64")]
    pub l: f64,
    #[serde(default = "n_max")]
    pub n_max: u64,
    #[serde(default = "resamples")]
    pub resamples: usize,
    #[serde(default = "calibration_delta")]
    pub calibration_delta: f64,
    /// When set, the run fails if the fitted slope exceeds it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Stationary,
    PointMass,
    Gaussian,
}

/// Grid and warm start of a 1D finite-chain discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub start: StartKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductanceSpec {
    pub s_values: Vec<f64>,
    pub n_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LovaszSpec {
    pub n_max: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Sets `s = eps / (2M)` when `s` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

fn one() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn twenty() -> usize {
    20
}
fn resamples() -> usize {
    1000
}
fn n_max() -> u64 {
    200_000
}
fn calibration_delta() -> f64 {
    0.05
}
fn csv_format() -> TrajectoryFormat {
    TrajectoryFormat::Csv
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// The configuration with defaults filled in, as TOML.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn target(&self) -> Result<TargetDensity, LabError> {
        self.target
            .as_ref()
            .ok_or_else(|| LabError::Config("missing [target] table".into()))?
            .build()
    }

    pub fn policy(&self, target: &TargetDensity) -> Result<StepSizePolicy, LabError> {
        self.policy
            .as_ref()
            .ok_or_else(|| LabError::Config("missing [policy] table".into()))?
            .build(target)
    }
}

pub fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, LabError> {
    s.as_ref().ok_or_else(|| LabError::Config(format!("missing [{name}] table")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_the_key() {
        let err = Config::parse("stepsize = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("stepsize"), "{err}");
        let err = Config::parse("[policy]\nkind = \"manual\"\nstepsize = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("stepsize"), "{err}");
    }

    #[test]
    fn physics_parameters_are_required() {
        assert!(Config::parse("[policy]\nkind = \"manual\"\n").is_err());
        assert!(Config::parse("[tail]\ndeltas = [0.1]\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "[target]\nkind = \"isotropic\"\ndim = 2\nsigma = 1.0\n\n[overlap]\nmax_ratio = 4.0\n";
        let c = Config::parse(text).unwrap();
        let resolved = c.resolved();
        assert!(resolved.contains("grid = 20"));
        assert_eq!(Config::parse(&resolved).unwrap(), c);
    }

    #[test]
    fn theorem1_needs_a_constant() {
        let c = Config::parse(
            "[target]\nkind = \"isotropic\"\ndim = 1\nsigma = 1.0\n[policy]\nkind = \"theorem1\"\nwarmness = 2.0\neps = 0.1\n",
        )
        .unwrap();
        let t = c.target().unwrap();
        assert!(c.policy(&t).is_err());
    }
}
