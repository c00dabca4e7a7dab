//! Experiment descriptions: a scenario file names the cell capacity, the
//! traffic class table, the workload and the admission policy, and is the
//! unit of reproducibility. Two shipped scenarios cover the default
//! experiments; user files use the same TOML schema.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admission::{AdmissionError, CallKind, ClassId, RestorePolicy, Tick, TrafficClass};

/// Admission policy a run is driven with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    SoftStrict,
    SoftElastic,
    Hard,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::SoftStrict => "soft-strict",
            Policy::SoftElastic => "soft-elastic",
            Policy::Hard => "hard",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "soft-strict" => Ok(Policy::SoftStrict),
            "soft-elastic" => Ok(Policy::SoftElastic),
            "hard" => Ok(Policy::Hard),
            other => Err(format!(
                "unknown policy `{other}` (expected hard, soft-strict or soft-elastic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadVariant {
    /// The fixed eight-call request cycle, one arrival per tick.
    FixedCycle,
    /// Per-class Poisson arrival streams merged in time order.
    Stochastic,
}

/// Per-request new/handoff assignment rule.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindPattern {
    #[default]
    AllNew,
    AllHandoff,
    /// `new` new calls followed by `handoff` handoffs, repeating.
    Alternating {
        new: u32,
        handoff: u32,
    },
    /// Explicit kind list, cycled when shorter than the run.
    Explicit(Vec<CallKind>),
}

impl KindPattern {
    /// Kind of the i-th request (0-based).
    pub fn kind_at(&self, index: u64) -> CallKind {
        match self {
            KindPattern::AllNew => CallKind::New,
            KindPattern::AllHandoff => CallKind::Handoff,
            KindPattern::Alternating { new, handoff } => {
                let cycle = u64::from(*new) + u64::from(*handoff);
                if index % cycle < u64::from(*new) {
                    CallKind::New
                } else {
                    CallKind::Handoff
                }
            }
            KindPattern::Explicit(kinds) => kinds[(index % kinds.len() as u64) as usize],
        }
    }

    /// Length of one repetition of the pattern.
    pub fn cycle_len(&self) -> u64 {
        match self {
            KindPattern::AllNew | KindPattern::AllHandoff => 1,
            KindPattern::Alternating { new, handoff } => u64::from(*new) + u64::from(*handoff),
            KindPattern::Explicit(kinds) => kinds.len() as u64,
        }
    }
}

/// Call holding time model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldingSpec {
    /// Calls never complete on their own.
    #[default]
    Infinite,
    Fixed {
        ticks: Tick,
    },
    ExponentialMean {
        mean_ticks: f64,
    },
}

/// Arrival rate for one class in a stochastic workload, in calls per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRate {
    pub class_id: ClassId,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub variant: WorkloadVariant,
    pub total_requests: u64,
    #[serde(default)]
    pub kind_pattern: KindPattern,
    #[serde(default)]
    pub holding: HoldingSpec,
    /// Per-class arrival rates; stochastic workloads only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<ClassRate>>,
    /// Optional arrival cutoff for stochastic workloads: generation stops
    /// at this tick even if fewer than `total_requests` calls arrived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_ticks: Option<Tick>,
}

impl WorkloadSpec {
    /// True when any part of request generation draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        self.variant == WorkloadVariant::Stochastic
            || matches!(self.holding, HoldingSpec::ExponentialMean { .. })
    }
}

/// A reproducible experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub label: String,
    /// Total cell capacity, kbps.
    pub capacity: f64,
    pub classes: Vec<TrafficClass>,
    pub workload: WorkloadSpec,
    pub policy: Policy,
    #[serde(default = "default_restore_policy")]
    pub restore_policy: RestorePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_schema_version() -> u32 {
    1
}

fn default_restore_policy() -> RestorePolicy {
    RestorePolicy::RestoreOnDepart
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario document is not valid TOML: {0}")]
    Parse(String),
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown built-in scenario `{0}` (available: {})", BUILTIN_SCENARIOS.join(", "))]
    UnknownBuiltin(String),
    #[error("sweep points must be non-empty and strictly ascending")]
    InvalidPoints,
    #[error("the workload kind pattern never produces a {0} call")]
    KindNeverOccurs(CallKind),
    #[error(transparent)]
    Engine(#[from] AdmissionError),
}

impl Scenario {
    /// Parse without validating, so callers can apply overrides first.
    pub fn parse_toml(text: &str) -> Result<Scenario, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Parse and validate in one step.
    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario = Self::parse_toml(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// First violation, if any. [`Self::violations`] reports all of them.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self.violations().into_iter().next() {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Every invariant violation in this scenario, one entry per offence.
    pub fn violations(&self) -> Vec<ScenarioError> {
        let mut out = Vec::new();
        let invalid = |field: &str, reason: String| ScenarioError::Invalid {
            field: field.to_owned(),
            reason,
        };

        if self.schema_version != 1 {
            out.push(invalid(
                "schema_version",
                format!(
                    "unsupported version {} (this build reads version 1)",
                    self.schema_version
                ),
            ));
        }
        if !self.capacity.is_finite() || self.capacity <= 0.0 {
            out.push(invalid(
                "capacity",
                format!("must be > 0, got {}", self.capacity),
            ));
        }
        if self.classes.is_empty() {
            out.push(invalid("classes", "class table must not be empty".into()));
        }
        for (i, class) in self.classes.iter().enumerate() {
            if let Err(e) = class.validate() {
                out.push(invalid(&format!("classes[{i}]"), e.to_string()));
            }
            if self.classes[..i]
                .iter()
                .any(|c| c.class_id == class.class_id)
            {
                out.push(invalid(
                    &format!("classes[{i}].class_id"),
                    format!("duplicate class id {}", class.class_id),
                ));
            }
        }

        let w = &self.workload;
        match &w.kind_pattern {
            KindPattern::Alternating { new, handoff } if *new == 0 && *handoff == 0 => {
                out.push(invalid(
                    "workload.kind_pattern",
                    "alternating pattern needs new + handoff > 0".into(),
                ));
            }
            KindPattern::Explicit(kinds) if kinds.is_empty() => {
                out.push(invalid(
                    "workload.kind_pattern",
                    "explicit kind list must not be empty".into(),
                ));
            }
            _ => {}
        }
        match w.holding {
            HoldingSpec::Fixed { ticks: 0 } => {
                out.push(invalid(
                    "workload.holding",
                    "fixed holding time must be > 0 ticks".into(),
                ));
            }
            HoldingSpec::ExponentialMean { mean_ticks }
                if mean_ticks <= 0.0 || !mean_ticks.is_finite() =>
            {
                out.push(invalid(
                    "workload.holding",
                    format!("exponential mean must be > 0 ticks, got {mean_ticks}"),
                ));
            }
            _ => {}
        }
        match w.variant {
            WorkloadVariant::Stochastic => match &w.rates {
                None => out.push(invalid(
                    "workload.rates",
                    "stochastic workloads need per-class arrival rates".into(),
                )),
                Some(rates) => {
                    if rates.is_empty() {
                        out.push(invalid(
                            "workload.rates",
                            "rate list must not be empty".into(),
                        ));
                    }
                    for (i, r) in rates.iter().enumerate() {
                        if !r.rate.is_finite() || r.rate <= 0.0 {
                            out.push(invalid(
                                &format!("workload.rates[{i}].rate"),
                                format!("must be > 0, got {}", r.rate),
                            ));
                        }
                        if !self.classes.iter().any(|c| c.class_id == r.class_id) {
                            out.push(invalid(
                                &format!("workload.rates[{i}].class_id"),
                                format!("unknown class id {}", r.class_id),
                            ));
                        }
                    }
                }
            },
            WorkloadVariant::FixedCycle => {
                if w.rates.is_some() {
                    out.push(invalid(
                        "workload.rates",
                        "rates are only meaningful for stochastic workloads".into(),
                    ));
                }
                if w.horizon_ticks.is_some() {
                    out.push(invalid(
                        "workload.horizon_ticks",
                        "horizon is only meaningful for stochastic workloads".into(),
                    ));
                }
            }
        }
        if let Some(0) = w.horizon_ticks {
            out.push(invalid(
                "workload.horizon_ticks",
                "must be > 0 when present".into(),
            ));
        }

        if w.is_stochastic() && self.seed.is_none() {
            out.push(invalid(
                "seed",
                "a seed is required when the workload draws random numbers".into(),
            ));
        }
        if !w.is_stochastic() && self.seed.is_some() {
            out.push(invalid(
                "seed",
                "a seed is only meaningful for stochastic workloads".into(),
            ));
        }

        out
    }
}

/// Names of the scenarios embedded in the crate.
pub const BUILTIN_SCENARIOS: &[&str] = &["table2_default", "table2_handoff_mix"];

/// TOML text of a built-in scenario.
pub fn builtin_scenario_toml(name: &str) -> Option<&'static str> {
    match name {
        "table2_default" => Some(include_str!("../data/table2_default.toml")),
        "table2_handoff_mix" => Some(include_str!("../data/table2_handoff_mix.toml")),
        _ => None,
    }
}

/// A parsed built-in scenario. Shipped files are covered by tests, so the
/// expect cannot fire on a released build.
pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenario_toml(name)
        .map(|text| Scenario::from_toml(text).expect("built-in scenario is valid"))
}
