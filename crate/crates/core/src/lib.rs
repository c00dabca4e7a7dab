//! Soft-QoS call admission control at desk scale.
//!
//! The crate has four parts:
//!
//! - [`catalog`]: a queryable catalog of QoS parameters (per-layer,
//!   per-service priority order) and the directed "influences" relation
//!   between them.
//! - [`admission`]: the cell bandwidth model. New and handoff calls are
//!   admitted either against free capacity only (hard QoS) or by squeezing
//!   existing calls down to class-specific floor ratios (soft QoS).
//! - [`simulator`]: a deterministic discrete-event engine that drives the
//!   admission model with a fixed call-request cycle or a seeded stochastic
//!   workload and records a per-decision event log.
//! - [`metrics`]: blocked/dropped call rates and prefix curves computed from
//!   an event log, plus CSV/text report writers.

pub mod admission;
pub mod catalog;
pub mod metrics;
pub mod scenario;
pub mod simulator;

pub use admission::{
    ActiveCall, AdmissionDecision, AdmissionError, AdmissionMode, CallId, CallKind, CallRequest,
    CellState, ClassId, Outcome, RestorePolicy, Tick, TrafficClass, KBPS_TOL,
};
pub use catalog::{
    Catalog, CatalogError, DependencyEdge, Layer, Placement, Provenance, QosParameter, Service,
};
pub use metrics::{MetricsError, PrefixCurves, RatePoint, RateSummary};
pub use scenario::{
    builtin_scenario, HoldingSpec, KindPattern, Policy, Scenario, ScenarioError, WorkloadSpec,
    WorkloadVariant, BUILTIN_SCENARIOS,
};
pub use simulator::{EventLog, EventRecord, SweepAxis, SweepRow};
