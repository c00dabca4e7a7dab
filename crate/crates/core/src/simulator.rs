//! Discrete-event engine.
//!
//! Time is integer ticks. Events are processed in time order; at equal
//! ticks departures run before arrivals (a completing call frees room for
//! the call arriving in the same tick), and equal-tick arrivals keep their
//! request order. A run is single-threaded and fully determined by its
//! scenario, seed included: repeating a run reproduces the event log byte
//! for byte.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::admission::{
    AdmissionMode, CallId, CallKind, CallRequest, CellState, ClassId, Outcome, Tick,
};
use crate::metrics;
use crate::scenario::{
    HoldingSpec, KindPattern, Policy, Scenario, ScenarioError, WorkloadSpec, WorkloadVariant,
};

/// The request cycle driving the default experiments: voice, web, background,
/// voice, video, web, voice, background (class ids 1, 3, 4, 1, 2, 3, 1, 4).
pub const FIXED_CYCLE_CLASSES: [u32; 8] = [1, 3, 4, 1, 2, 3, 1, 4];

/// Class of the i-th request (0-based) in the fixed request cycle.
pub fn fixed_cycle_class(index: u64) -> ClassId {
    ClassId(FIXED_CYCLE_CLASSES[(index % 8) as usize])
}

/// The first `n` requests of the fixed cycle in its plain form: all new
/// calls, one arrival per tick starting at tick 1, infinite holding.
pub fn generate_fixed_cycle(n: u64) -> Vec<CallRequest> {
    (0..n)
        .map(|i| CallRequest {
            call_id: CallId(i + 1),
            class_id: fixed_cycle_class(i),
            kind: CallKind::New,
            arrival_time: i + 1,
            holding_time: None,
        })
        .collect()
}

/// One admission decision as it entered the log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: Tick,
    pub call_id: CallId,
    pub class_id: ClassId,
    pub kind: CallKind,
    pub outcome: Outcome,
    /// Bandwidth squeezed from existing calls for this admission, kbps.
    pub released: f64,
    pub occupied_after: f64,
    pub free_after: f64,
}

/// Ordered per-decision trace of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

pub const EVENT_LOG_CSV_HEADER: &str =
    "time,call_id,class_id,kind,outcome,released,occupied_after,free_after";

#[derive(Debug, Error)]
pub enum EventLogCsvError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("missing header row `{EVENT_LOG_CSV_HEADER}`")]
    MissingHeader,
}

impl EventLog {
    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index (1-based, in request order) of the first blocked new call.
    pub fn first_blocked_index(&self) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.outcome == Outcome::Blocked)
            .map(|i| i + 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(EVENT_LOG_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.time,
                r.call_id,
                r.class_id,
                r.kind,
                r.outcome,
                r.released,
                r.occupied_after,
                r.free_after
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<EventLog, EventLogCsvError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == EVENT_LOG_CSV_HEADER => {}
            _ => return Err(EventLogCsvError::MissingHeader),
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: String| EventLogCsvError::Malformed {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(malformed(format!(
                    "expected 8 fields, got {}",
                    fields.len()
                )));
            }
            let parse_u64 = |s: &str, what: &str| {
                s.parse::<u64>()
                    .map_err(|e| malformed(format!("{what}: {e}")))
            };
            let parse_f64 = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|e| malformed(format!("{what}: {e}")))
            };
            let kind = match fields[3] {
                "new" => CallKind::New,
                "handoff" => CallKind::Handoff,
                other => return Err(malformed(format!("unknown kind `{other}`"))),
            };
            let outcome = match fields[4] {
                "accepted" => Outcome::Accepted,
                "blocked" => Outcome::Blocked,
                "dropped" => Outcome::Dropped,
                other => return Err(malformed(format!("unknown outcome `{other}`"))),
            };
            records.push(EventRecord {
                time: parse_u64(fields[0], "time")?,
                call_id: CallId(parse_u64(fields[1], "call_id")?),
                class_id: ClassId(parse_u64(fields[2], "class_id")? as u32),
                kind,
                outcome,
                released: parse_f64(fields[5], "released")?,
                occupied_after: parse_f64(fields[6], "occupied_after")?,
                free_after: parse_f64(fields[7], "free_after")?,
            });
        }
        Ok(EventLog { records })
    }
}

fn substream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn holding_time(holding: HoldingSpec, rng: &mut Option<ChaCha8Rng>) -> Option<Tick> {
    match holding {
        HoldingSpec::Infinite => None,
        HoldingSpec::Fixed { ticks } => Some(ticks),
        HoldingSpec::ExponentialMean { mean_ticks } => {
            let rng = rng
                .as_mut()
                .expect("validated scenario carries a seed for exponential holding");
            let exp = Exp::new(1.0 / mean_ticks).expect("validated mean is positive");
            let sample: f64 = exp.sample(rng);
            Some((sample.ceil() as Tick).max(1))
        }
    }
}

/// Attach call ids, kinds and holding times to a list of (tick, class)
/// arrivals, in arrival order.
fn assemble(
    arrivals: Vec<(Tick, ClassId)>,
    workload: &WorkloadSpec,
    seed: Option<u64>,
) -> Vec<CallRequest> {
    let mut holding_rng = seed.map(|s| substream(s, 2));
    arrivals
        .into_iter()
        .enumerate()
        .map(|(i, (tick, class_id))| CallRequest {
            call_id: CallId(i as u64 + 1),
            class_id,
            kind: workload.kind_pattern.kind_at(i as u64),
            arrival_time: tick,
            holding_time: holding_time(workload.holding, &mut holding_rng),
        })
        .collect()
}

/// Stochastic workload: one exponential inter-arrival stream per class at
/// its configured rate, merged by earliest next arrival (ties break on
/// class id), cut at `total_requests` and at the horizon when set.
/// Deterministic for a fixed seed.
pub fn generate_stochastic(
    workload: &WorkloadSpec,
    seed: u64,
) -> Result<Vec<CallRequest>, ScenarioError> {
    let invalid_rates = |reason: String| ScenarioError::Invalid {
        field: "workload.rates".to_owned(),
        reason,
    };
    let rates = workload
        .rates
        .as_ref()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| invalid_rates("stochastic workloads need per-class arrival rates".into()))?;
    let mut streams: Vec<(ClassId, f64, ChaCha8Rng, Exp<f64>)> = Vec::with_capacity(rates.len());
    for r in rates {
        let exp = Exp::new(r.rate)
            .map_err(|_| invalid_rates(format!("rate for class {} must be > 0", r.class_id)))?;
        let mut rng = substream(seed, 100 + u64::from(r.class_id.0));
        let first: f64 = exp.sample(&mut rng);
        streams.push((r.class_id, first, rng, exp));
    }

    let mut merged = Vec::with_capacity(workload.total_requests as usize);
    while (merged.len() as u64) < workload.total_requests {
        let next = streams
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.1.partial_cmp(&b.1)
                    .expect("arrival times are finite")
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
            .expect("rate list is non-empty");
        let (class_id, at) = (streams[next].0, streams[next].1);
        let tick = (at.ceil() as Tick).max(1);
        if let Some(horizon) = workload.horizon_ticks {
            if tick > horizon {
                break;
            }
        }
        merged.push((tick, class_id));
        let step: f64 = {
            let stream = &mut streams[next];
            stream.3.sample(&mut stream.2)
        };
        streams[next].1 += step;
    }
    Ok(assemble(merged, workload, Some(seed)))
}

/// Materialize the scenario's request list: classes and arrival ticks from
/// the workload variant, kinds from the kind pattern, holding times from
/// the holding model. Deterministic for a fixed scenario (seed included).
pub fn generate_requests(scenario: &Scenario) -> Result<Vec<CallRequest>, ScenarioError> {
    let workload = &scenario.workload;
    match workload.variant {
        WorkloadVariant::FixedCycle => {
            let arrivals = (0..workload.total_requests)
                .map(|i| (i + 1, fixed_cycle_class(i)))
                .collect();
            Ok(assemble(arrivals, workload, scenario.seed))
        }
        WorkloadVariant::Stochastic => {
            let seed = scenario
                .seed
                .expect("validated stochastic scenario carries a seed");
            generate_stochastic(workload, seed)
        }
    }
}

/// Drive the scenario through the admission engine and record every decision.
pub fn run(scenario: &Scenario) -> Result<EventLog, ScenarioError> {
    scenario.validate()?;
    let requests = generate_requests(scenario)?;
    let mut cell = CellState::new(scenario.capacity, scenario.classes.iter().cloned())?;
    // Min-heap of (departure tick, call id): equal-tick departures leave in
    // call-id order.
    let mut departures: BinaryHeap<Reverse<(Tick, CallId)>> = BinaryHeap::new();
    let mut records = Vec::with_capacity(requests.len());

    for request in &requests {
        while let Some(&Reverse((tick, call_id))) = departures.peek() {
            if tick > request.arrival_time {
                break;
            }
            departures.pop();
            cell.depart(call_id, scenario.restore_policy)?;
        }
        let decision = match scenario.policy {
            Policy::Hard => cell.hard_admit(request)?,
            Policy::SoftStrict => cell.soft_admit(request, AdmissionMode::Strict)?,
            Policy::SoftElastic => cell.soft_admit(request, AdmissionMode::Elastic)?,
        };
        if decision.accepted() {
            if let Some(call) = cell.call(request.call_id) {
                if let Some(at) = call.departure_time {
                    departures.push(Reverse((at, request.call_id)));
                }
            }
        }
        records.push(EventRecord {
            time: request.arrival_time,
            call_id: request.call_id,
            class_id: request.class_id,
            kind: request.kind,
            outcome: decision.outcome,
            released: decision.released,
            occupied_after: cell.occupied_bandwidth(),
            free_after: cell.free_bandwidth(),
        });
    }
    Ok(EventLog { records })
}

/// Experiment axis for rate-versus-load curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    RequestedNewCalls,
    RequestedHandoffCalls,
}

impl SweepAxis {
    pub fn kind(self) -> CallKind {
        match self {
            SweepAxis::RequestedNewCalls => CallKind::New,
            SweepAxis::RequestedHandoffCalls => CallKind::Handoff,
        }
    }
}

/// One sweep sample: the terminal blocked (new axis) or dropped (handoff
/// axis) rate after `n` requests of the axis kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub rate: f64,
}

/// How many requests the pattern needs before `n` of them are of `kind`.
fn requests_needed(pattern: &KindPattern, kind: CallKind, n: u64) -> Result<u64, ScenarioError> {
    if n == 0 {
        return Ok(0);
    }
    let cycle = pattern.cycle_len();
    let per_cycle = (0..cycle).filter(|&i| pattern.kind_at(i) == kind).count() as u64;
    if per_cycle == 0 {
        return Err(ScenarioError::KindNeverOccurs(kind));
    }
    let full_cycles = (n - 1) / per_cycle;
    let mut remaining = n - full_cycles * per_cycle;
    for i in 0..cycle {
        if pattern.kind_at(i) == kind {
            remaining -= 1;
            if remaining == 0 {
                return Ok(full_cycles * cycle + i + 1);
            }
        }
    }
    unreachable!("per_cycle > 0 guarantees the loop terminates");
}

/// Run the scenario once per point, each time truncated so the request
/// stream contains exactly `n` calls of the axis kind, and record the
/// terminal blocked or dropped rate.
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    points: &[u64],
) -> Result<Vec<SweepRow>, ScenarioError> {
    scenario.validate()?;
    if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ScenarioError::InvalidPoints);
    }
    let kind = axis.kind();
    let mut rows = Vec::with_capacity(points.len());
    for &n in points {
        let mut truncated = scenario.clone();
        truncated.workload.total_requests =
            requests_needed(&scenario.workload.kind_pattern, kind, n)?;
        let log = run(&truncated)?;
        let summary = metrics::summarize(&log).expect("engine logs are well-formed");
        let rate = match axis {
            SweepAxis::RequestedNewCalls => summary.blocked_rate,
            SweepAxis::RequestedHandoffCalls => summary.dropped_rate,
        };
        rows.push(SweepRow { n, rate });
    }
    Ok(rows)
}
