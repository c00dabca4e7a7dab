//! Cell bandwidth model and call admission control.
//!
//! Each traffic class carries two floor ratios: `xi_min`, the fraction of
//! the requested bandwidth a call can be squeezed to when admitting a
//! handoff call, and `xi_min_new >= xi_min`, the (higher) floor that
//! applies when squeezing for a new call. Because the handoff floor is
//! lower, a cell can always release at least as much bandwidth for a
//! handoff as for a new call.
//!
//! A [`CellState`] is a plain value: operations take the current state and
//! leave a new one plus an [`AdmissionDecision`]. Rejections never mutate
//! the cell. Distinct cells can be processed on distinct threads; one
//! cell's event stream is strictly sequential.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for all kbps comparisons. Proportional squeezing
/// produces non-terminating decimals, so exact equality is never required.
pub const KBPS_TOL: f64 = 1e-9;

/// Simulation time in integer ticks.
pub type Tick = u64;

/// Traffic class index (`m` in a class table of `M` classes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unique identifier of a call within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CallId(pub u64);

impl fmt::Display for CallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether a call arrives fresh in the cell or hands off from a neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallKind {
    New,
    Handoff,
}

impl CallKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::New => "new",
            CallKind::Handoff => "handoff",
        }
    }
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the soft admission test is evaluated.
///
/// `Strict` requires room for the full requested bandwidth (after
/// squeezing) and admits at ratio 1. `Elastic` requires room only for the
/// request scaled by its own floor ratio and admits with a partial grant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissionMode {
    Strict,
    Elastic,
}

/// Whether bandwidth freed by a departure is redistributed to degraded calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestorePolicy {
    RestoreOnDepart,
    NoRestore,
}

/// One traffic class: uniform per-call requested bandwidth and its floors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficClass {
    pub class_id: ClassId,
    pub name: String,
    /// Requested bandwidth per call, kbps.
    pub requested_bandwidth: f64,
    /// Floor ratio when squeezing for a handoff call, in (0, 1].
    pub xi_min: f64,
    /// Floor ratio when squeezing for a new call; `xi_min <= xi_min_new <= 1`.
    pub xi_min_new: f64,
    /// Real-time conversational classes are never squeezed: both floors are 1.
    #[serde(default)]
    pub conversational: bool,
}

impl TrafficClass {
    /// Floor ratio that applies when releasing bandwidth for `kind`.
    pub fn floor(&self, kind: CallKind) -> f64 {
        match kind {
            CallKind::Handoff => self.xi_min,
            CallKind::New => self.xi_min_new,
        }
    }

    pub fn validate(&self) -> Result<(), AdmissionError> {
        let fail = |what: &str| {
            Err(AdmissionError::InvalidClass {
                class_id: self.class_id,
                name: self.name.clone(),
                reason: what.to_owned(),
            })
        };
        if !self.requested_bandwidth.is_finite() || self.requested_bandwidth <= 0.0 {
            return fail("requested_bandwidth must be > 0");
        }
        if !self.xi_min.is_finite() || self.xi_min <= 0.0 || self.xi_min > 1.0 {
            return fail("xi_min must lie in (0, 1]");
        }
        if !self.xi_min_new.is_finite() || self.xi_min_new <= 0.0 || self.xi_min_new > 1.0 {
            return fail("xi_min_new must lie in (0, 1]");
        }
        if self.xi_min > self.xi_min_new {
            return fail("xi_min must not exceed xi_min_new");
        }
        if self.conversational && (self.xi_min != 1.0 || self.xi_min_new != 1.0) {
            return fail("conversational classes must have xi_min = xi_min_new = 1");
        }
        Ok(())
    }
}

/// An arriving call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRequest {
    pub call_id: CallId,
    pub class_id: ClassId,
    pub kind: CallKind,
    pub arrival_time: Tick,
    /// `None` means the call never completes on its own.
    pub holding_time: Option<Tick>,
}

/// An admitted call and its current allocation ratio.
///
/// Allocated bandwidth is `requested_bandwidth(class) * ratio`; the ratio
/// stays within `[xi_min(class), 1]` for the call's whole lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveCall {
    pub call_id: CallId,
    pub class_id: ClassId,
    pub ratio: f64,
    pub departure_time: Option<Tick>,
}

/// Result of one admission decision.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionDecision {
    pub outcome: Outcome,
    /// Bandwidth actually squeezed from existing calls, kbps. Zero on rejection.
    pub released: f64,
    /// Ratio granted to the incoming call; absent on rejection.
    pub ratio_granted: Option<f64>,
}

impl AdmissionDecision {
    fn rejected(kind: CallKind) -> Self {
        AdmissionDecision {
            outcome: match kind {
                CallKind::New => Outcome::Blocked,
                CallKind::Handoff => Outcome::Dropped,
            },
            released: 0.0,
            ratio_granted: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.outcome == Outcome::Accepted
    }
}

/// Fate of a request: rejected new calls are blocked, rejected handoffs
/// count as dropped calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accepted,
    Blocked,
    Dropped,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accepted => "accepted",
            Outcome::Blocked => "blocked",
            Outcome::Dropped => "dropped",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum AdmissionError {
    #[error("class {class_id} ({name}): {reason}")]
    InvalidClass {
        class_id: ClassId,
        name: String,
        reason: String,
    },
    #[error("duplicate class id {0}")]
    DuplicateClass(ClassId),
    #[error("cell capacity must be > 0 (got {0})")]
    InvalidCapacity(f64),
    #[error("unknown class id {0}")]
    UnknownClass(ClassId),
    #[error("unknown call id {0}")]
    UnknownCall(CallId),
    #[error("duplicate call id {0}")]
    DuplicateCall(CallId),
    #[error("degrade amount {amount} kbps exceeds releasable {releasable} kbps")]
    DegradeExceedsReleasable { amount: f64, releasable: f64 },
}

/// One cell: total capacity, the class table and the set of active calls.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    capacity: f64,
    classes: Vec<TrafficClass>,
    calls: Vec<ActiveCall>,
}

impl CellState {
    pub fn new(
        capacity: f64,
        classes: impl IntoIterator<Item = TrafficClass>,
    ) -> Result<Self, AdmissionError> {
        if !capacity.is_finite() || capacity <= 0.0 {
            return Err(AdmissionError::InvalidCapacity(capacity));
        }
        let mut table: Vec<TrafficClass> = Vec::new();
        for class in classes {
            class.validate()?;
            if table.iter().any(|c| c.class_id == class.class_id) {
                return Err(AdmissionError::DuplicateClass(class.class_id));
            }
            table.push(class);
        }
        Ok(CellState {
            capacity,
            classes: table,
            calls: Vec::new(),
        })
    }

    /// Build a cell already holding the given calls, checking the same
    /// invariants the admission path maintains: known classes, unique call
    /// ids, ratios within `[xi_min, 1]`, occupancy within capacity.
    pub fn with_calls(
        capacity: f64,
        classes: impl IntoIterator<Item = TrafficClass>,
        calls: impl IntoIterator<Item = ActiveCall>,
    ) -> Result<Self, AdmissionError> {
        let mut cell = Self::new(capacity, classes)?;
        for call in calls {
            let class = cell
                .class(call.class_id)
                .ok_or(AdmissionError::UnknownClass(call.class_id))?;
            if call.ratio < class.xi_min - KBPS_TOL || call.ratio > 1.0 + KBPS_TOL {
                return Err(AdmissionError::InvalidClass {
                    class_id: call.class_id,
                    name: class.name.clone(),
                    reason: format!(
                        "call {} ratio {} outside [{}, 1]",
                        call.call_id, call.ratio, class.xi_min
                    ),
                });
            }
            if cell.call(call.call_id).is_some() {
                return Err(AdmissionError::DuplicateCall(call.call_id));
            }
            cell.calls.push(call);
        }
        if cell.occupied_bandwidth() > capacity + KBPS_TOL {
            return Err(AdmissionError::InvalidCapacity(capacity));
        }
        Ok(cell)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn classes(&self) -> &[TrafficClass] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> Option<&TrafficClass> {
        self.classes.iter().find(|c| c.class_id == id)
    }

    pub fn calls(&self) -> &[ActiveCall] {
        &self.calls
    }

    pub fn call(&self, id: CallId) -> Option<&ActiveCall> {
        self.calls.iter().find(|c| c.call_id == id)
    }

    fn class_of(&self, call: &ActiveCall) -> &TrafficClass {
        self.class(call.class_id)
            .expect("active call always references a known class")
    }

    /// Total bandwidth held by active calls: the sum of requested
    /// bandwidth times current ratio over every call.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.calls
            .iter()
            .map(|call| self.class_of(call).requested_bandwidth * call.ratio)
            .sum()
    }

    pub fn free_bandwidth(&self) -> f64 {
        self.capacity - self.occupied_bandwidth()
    }

    /// Bandwidth recoverable by squeezing every call down to the floor that
    /// applies for `kind`. A call already at or below the applicable floor
    /// contributes nothing (a handoff-driven squeeze can leave ratios below
    /// `xi_min_new`, which would otherwise make the new-call sum negative).
    pub fn releasable_bandwidth(&self, kind: CallKind) -> f64 {
        self.calls
            .iter()
            .map(|call| {
                let class = self.class_of(call);
                class.requested_bandwidth * (call.ratio - class.floor(kind)).max(0.0)
            })
            .sum()
    }

    /// Admission test for the soft-QoS scheme.
    ///
    /// Strict mode: admit at ratio 1 when free capacity covers the request,
    /// squeezing existing calls for exactly the shortfall when free plus
    /// releasable bandwidth suffices; reject otherwise. Elastic mode:
    /// admit whenever free plus releasable covers the request scaled by its
    /// own floor, granting `min(1, (free + released) / requested)`.
    pub fn soft_admit(
        &mut self,
        request: &CallRequest,
        mode: AdmissionMode,
    ) -> Result<AdmissionDecision, AdmissionError> {
        let class = self
            .class(request.class_id)
            .ok_or(AdmissionError::UnknownClass(request.class_id))?;
        let need = class.requested_bandwidth;
        let admit_floor = class.floor(request.kind);
        let free = self.free_bandwidth();

        if free + KBPS_TOL >= need {
            self.push_call(request, 1.0);
            return Ok(AdmissionDecision {
                outcome: Outcome::Accepted,
                released: 0.0,
                ratio_granted: Some(1.0),
            });
        }

        let releasable = self.releasable_bandwidth(request.kind);
        match mode {
            AdmissionMode::Strict => {
                if free + releasable + KBPS_TOL >= need {
                    let released = self.degrade(need - free, request.kind)?;
                    self.push_call(request, 1.0);
                    Ok(AdmissionDecision {
                        outcome: Outcome::Accepted,
                        released,
                        ratio_granted: Some(1.0),
                    })
                } else {
                    Ok(AdmissionDecision::rejected(request.kind))
                }
            }
            AdmissionMode::Elastic => {
                if free + releasable + KBPS_TOL >= need * admit_floor {
                    let released = self.degrade((need - free).min(releasable), request.kind)?;
                    let ratio = ((free + released) / need).clamp(admit_floor, 1.0);
                    self.push_call(request, ratio);
                    Ok(AdmissionDecision {
                        outcome: Outcome::Accepted,
                        released,
                        ratio_granted: Some(ratio),
                    })
                } else {
                    Ok(AdmissionDecision::rejected(request.kind))
                }
            }
        }
    }

    /// Baseline admission test: full bandwidth from free capacity or nothing.
    pub fn hard_admit(
        &mut self,
        request: &CallRequest,
    ) -> Result<AdmissionDecision, AdmissionError> {
        let class = self
            .class(request.class_id)
            .ok_or(AdmissionError::UnknownClass(request.class_id))?;
        if self.free_bandwidth() + KBPS_TOL >= class.requested_bandwidth {
            self.push_call(request, 1.0);
            Ok(AdmissionDecision {
                outcome: Outcome::Accepted,
                released: 0.0,
                ratio_granted: Some(1.0),
            })
        } else {
            Ok(AdmissionDecision::rejected(request.kind))
        }
    }

    /// Squeeze `amount` kbps out of the existing calls, spread across every
    /// call in proportion to its headroom above the floor for `kind`.
    /// Returns the bandwidth actually released (equal to `amount` within
    /// [`KBPS_TOL`]). The caller must have checked `amount` against
    /// [`Self::releasable_bandwidth`].
    pub fn degrade(&mut self, amount: f64, kind: CallKind) -> Result<f64, AdmissionError> {
        if amount <= KBPS_TOL {
            return Ok(0.0);
        }
        let headrooms: Vec<f64> = self
            .calls
            .iter()
            .map(|call| {
                let class = self.class_of(call);
                class.requested_bandwidth * (call.ratio - class.floor(kind)).max(0.0)
            })
            .collect();
        let total: f64 = headrooms.iter().sum();
        if amount > total + KBPS_TOL {
            return Err(AdmissionError::DegradeExceedsReleasable {
                amount,
                releasable: total,
            });
        }
        let take = amount.min(total);
        let mut released = 0.0;
        for (i, headroom) in headrooms.iter().enumerate() {
            if *headroom <= 0.0 {
                continue;
            }
            let class_bw = self.class_of(&self.calls[i]).requested_bandwidth;
            let floor = self.class_of(&self.calls[i]).floor(kind);
            let old = self.calls[i].ratio;
            let next = (old - take * headroom / total / class_bw).max(floor);
            self.calls[i].ratio = next;
            released += (old - next) * class_bw;
        }
        Ok(released)
    }

    /// Hand `amount` kbps back to degraded calls by water-filling: each
    /// round distributes the remainder in proportion to the calls' deficits
    /// `requested * (1 - ratio)`, capping ratios at 1, until the amount is
    /// exhausted or no call is degraded. The grant never exceeds the cell's
    /// free bandwidth, so occupancy cannot overshoot capacity.
    pub fn restore(&mut self, amount: f64) -> f64 {
        let mut remaining = amount.min(self.free_bandwidth()).max(0.0);
        let mut granted_total = 0.0;
        loop {
            let deficits: Vec<f64> = self
                .calls
                .iter()
                .map(|call| self.class_of(call).requested_bandwidth * (1.0 - call.ratio))
                .collect();
            let total: f64 = deficits.iter().sum();
            if total <= KBPS_TOL || remaining <= KBPS_TOL {
                break;
            }
            let round = remaining.min(total);
            let mut granted = 0.0;
            for (i, deficit) in deficits.iter().enumerate() {
                if *deficit <= 0.0 {
                    continue;
                }
                let class_bw = self.class_of(&self.calls[i]).requested_bandwidth;
                let old = self.calls[i].ratio;
                let next = (old + round * deficit / total / class_bw).min(1.0);
                self.calls[i].ratio = next;
                granted += (next - old) * class_bw;
            }
            granted_total += granted;
            remaining -= granted;
            if granted <= KBPS_TOL {
                break;
            }
        }
        granted_total
    }

    /// Remove a call. Under [`RestorePolicy::RestoreOnDepart`] the freed
    /// bandwidth is immediately redistributed to degraded calls. Returns
    /// the bandwidth the departing call held.
    pub fn depart(
        &mut self,
        call_id: CallId,
        policy: RestorePolicy,
    ) -> Result<f64, AdmissionError> {
        let idx = self
            .calls
            .iter()
            .position(|c| c.call_id == call_id)
            .ok_or(AdmissionError::UnknownCall(call_id))?;
        let call = self.calls.remove(idx);
        let freed = self.class_of(&call).requested_bandwidth * call.ratio;
        if policy == RestorePolicy::RestoreOnDepart {
            self.restore(freed);
        }
        Ok(freed)
    }

    fn push_call(&mut self, request: &CallRequest, ratio: f64) {
        self.calls.push(ActiveCall {
            call_id: request.call_id,
            class_id: request.class_id,
            ratio,
            departure_time: request.holding_time.map(|h| request.arrival_time + h),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table2() -> Vec<TrafficClass> {
        vec![
            TrafficClass {
                class_id: ClassId(1),
                name: "Conversational Voice".into(),
                requested_bandwidth: 16.0,
                xi_min: 1.0,
                xi_min_new: 1.0,
                conversational: true,
            },
            TrafficClass {
                class_id: ClassId(2),
                name: "Streaming Video".into(),
                requested_bandwidth: 32.0,
                xi_min: 0.7,
                xi_min_new: 0.8,
                conversational: false,
            },
            TrafficClass {
                class_id: ClassId(3),
                name: "Interactive Web Browsing".into(),
                requested_bandwidth: 10.0,
                xi_min: 0.7,
                xi_min_new: 0.8,
                conversational: false,
            },
            TrafficClass {
                class_id: ClassId(4),
                name: "Background".into(),
                requested_bandwidth: 25.0,
                xi_min: 0.4,
                xi_min_new: 0.6,
                conversational: false,
            },
        ]
    }

    fn request(id: u64, class: u32, kind: CallKind) -> CallRequest {
        CallRequest {
            call_id: CallId(id),
            class_id: ClassId(class),
            kind,
            arrival_time: id,
            holding_time: None,
        }
    }

    fn cell_with_one_call_per_class(capacity: f64, ratios: [f64; 4]) -> CellState {
        let mut cell = CellState::new(capacity, table2()).unwrap();
        for (i, ratio) in ratios.iter().enumerate() {
            cell.calls.push(ActiveCall {
                call_id: CallId(i as u64 + 1),
                class_id: ClassId(i as u32 + 1),
                ratio: *ratio,
                departure_time: None,
            });
        }
        cell
    }

    #[test]
    fn occupied_bandwidth_of_empty_cell_is_zero() {
        let cell = CellState::new(100.0, table2()).unwrap();
        assert_eq!(cell.occupied_bandwidth(), 0.0);
    }

    #[test]
    fn occupied_bandwidth_single_voice_call() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.soft_admit(&request(1, 1, CallKind::New), AdmissionMode::Strict)
            .unwrap();
        assert!((cell.occupied_bandwidth() - 16.0).abs() < KBPS_TOL);
    }

    #[test]
    fn occupied_bandwidth_all_classes_at_their_handoff_floors() {
        // 16*1 + 32*0.7 + 10*0.7 + 25*0.4
        let cell = cell_with_one_call_per_class(100.0, [1.0, 0.7, 0.7, 0.4]);
        let expected = 16.0 * 1.0 + 32.0 * 0.7 + 10.0 * 0.7 + 25.0 * 0.4;
        assert!((cell.occupied_bandwidth() - expected).abs() < KBPS_TOL);
    }

    #[test]
    fn releasable_bandwidth_matches_direct_sums() {
        let cell = cell_with_one_call_per_class(200.0, [1.0, 1.0, 1.0, 1.0]);
        let handoff = 16.0 * 0.0 + 32.0 * 0.3 + 10.0 * 0.3 + 25.0 * 0.6;
        let newcall = 32.0 * 0.2 + 10.0 * 0.2 + 25.0 * 0.4;
        assert!((cell.releasable_bandwidth(CallKind::Handoff) - handoff).abs() < KBPS_TOL);
        assert!((cell.releasable_bandwidth(CallKind::New) - newcall).abs() < KBPS_TOL);
    }

    #[test]
    fn releasable_bandwidth_is_zero_at_the_floors() {
        let cell = cell_with_one_call_per_class(100.0, [1.0, 0.7, 0.7, 0.4]);
        assert!(cell.releasable_bandwidth(CallKind::Handoff).abs() < KBPS_TOL);
    }

    #[test]
    fn ratio_below_new_floor_contributes_zero_not_negative() {
        // Background squeezed to 0.5 by an earlier handoff admission sits
        // below its new-call floor 0.6.
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.calls.push(ActiveCall {
            call_id: CallId(1),
            class_id: ClassId(4),
            ratio: 0.5,
            departure_time: None,
        });
        assert_eq!(cell.releasable_bandwidth(CallKind::New), 0.0);
        assert!((cell.releasable_bandwidth(CallKind::Handoff) - 25.0 * 0.1).abs() < KBPS_TOL);
    }

    #[test]
    fn soft_admit_with_free_capacity_takes_no_releases() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        let d = cell
            .soft_admit(&request(1, 1, CallKind::New), AdmissionMode::Strict)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Accepted);
        assert_eq!(d.released, 0.0);
        assert_eq!(d.ratio_granted, Some(1.0));
    }

    #[test]
    fn soft_admit_handoff_video_into_full_73kbps_cell_is_dropped() {
        // Releasable for a handoff is 32*0.3 + 25*0.6 = 24.6 < 32, so the
        // request cannot fit even after squeezing video and background.
        let mut cell = CellState::new(73.0, table2()).unwrap();
        for (id, class) in [(1u64, 2u32), (2, 4), (3, 1)] {
            let d = cell
                .soft_admit(&request(id, class, CallKind::New), AdmissionMode::Strict)
                .unwrap();
            assert!(d.accepted());
        }
        assert!(cell.free_bandwidth().abs() < KBPS_TOL);
        let before = cell.clone();
        let d = cell
            .soft_admit(&request(4, 2, CallKind::Handoff), AdmissionMode::Strict)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Dropped);
        assert_eq!(d.released, 0.0);
        assert_eq!(cell, before);
    }

    #[test]
    fn soft_admit_degrades_exactly_the_shortfall() {
        // 73-kbps cell full with video+background+voice; a handoff web
        // request (10 kbps) fits after squeezing 10 from the 24.6 releasable.
        let mut cell = CellState::new(73.0, table2()).unwrap();
        for (id, class) in [(1u64, 2u32), (2, 4), (3, 1)] {
            cell.soft_admit(&request(id, class, CallKind::New), AdmissionMode::Strict)
                .unwrap();
        }
        let d = cell
            .soft_admit(&request(4, 3, CallKind::Handoff), AdmissionMode::Strict)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Accepted);
        assert!((d.released - 10.0).abs() < KBPS_TOL);
        assert!(cell.free_bandwidth().abs() < KBPS_TOL);
        // Voice must not move; video and background share 10 in
        // proportion 9.6 : 15.
        let voice = cell.call(CallId(3)).unwrap();
        assert_eq!(voice.ratio, 1.0);
        let video = cell.call(CallId(1)).unwrap();
        assert!((video.ratio - (1.0 - 10.0 * 9.6 / 24.6 / 32.0)).abs() < 1e-12);
    }

    #[test]
    fn rejection_with_zero_free_and_zero_releasable_leaves_cell_unchanged() {
        let mut cell = cell_with_one_call_per_class(55.4, [1.0, 0.7, 0.7, 0.4]);
        let before = cell.clone();
        for kind in [CallKind::New, CallKind::Handoff] {
            for class in 1..=4u32 {
                let d = cell
                    .soft_admit(&request(99, class, kind), AdmissionMode::Strict)
                    .unwrap();
                assert_ne!(d.outcome, Outcome::Accepted);
                assert_eq!(cell, before);
            }
        }
    }

    #[test]
    fn elastic_mode_admits_with_partial_grant() {
        // 30 kbps free for a 32-kbps video request: strict rejects, elastic
        // grants 30/32 = 0.9375.
        let mut strict_cell = CellState::new(30.0, table2()).unwrap();
        let d = strict_cell
            .soft_admit(&request(1, 2, CallKind::New), AdmissionMode::Strict)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Blocked);

        let mut elastic_cell = CellState::new(30.0, table2()).unwrap();
        let d = elastic_cell
            .soft_admit(&request(1, 2, CallKind::New), AdmissionMode::Elastic)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Accepted);
        assert!((d.ratio_granted.unwrap() - 0.9375).abs() < 1e-12);
        assert!(elastic_cell.free_bandwidth().abs() < KBPS_TOL);
    }

    #[test]
    fn elastic_mode_rejects_below_the_scaled_floor() {
        // 24 kbps free < 32 * 0.8 for a new video request.
        let mut cell = CellState::new(24.0, table2()).unwrap();
        let d = cell
            .soft_admit(&request(1, 2, CallKind::New), AdmissionMode::Elastic)
            .unwrap();
        assert_eq!(d.outcome, Outcome::Blocked);
    }

    #[test]
    fn hard_admit_boundary_free_exactly_equal_is_accepted() {
        let mut cell = CellState::new(16.0, table2()).unwrap();
        let d = cell.hard_admit(&request(1, 1, CallKind::New)).unwrap();
        assert_eq!(d.outcome, Outcome::Accepted);
        assert_eq!(d.ratio_granted, Some(1.0));
    }

    #[test]
    fn hard_admit_request_larger_than_capacity_is_blocked() {
        let mut cell = CellState::new(10.0, table2()).unwrap();
        let d = cell.hard_admit(&request(1, 2, CallKind::New)).unwrap();
        assert_eq!(d.outcome, Outcome::Blocked);
        assert!(cell.calls().is_empty());
    }

    #[test]
    fn hard_admit_never_degrades() {
        let mut cell = CellState::new(48.0, table2()).unwrap();
        cell.hard_admit(&request(1, 2, CallKind::New)).unwrap();
        let d = cell.hard_admit(&request(2, 2, CallKind::Handoff)).unwrap();
        assert_eq!(d.outcome, Outcome::Dropped);
        assert_eq!(cell.call(CallId(1)).unwrap().ratio, 1.0);
    }

    #[test]
    fn unknown_class_is_an_error() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        let r = request(1, 9, CallKind::New);
        assert!(matches!(
            cell.soft_admit(&r, AdmissionMode::Strict),
            Err(AdmissionError::UnknownClass(ClassId(9)))
        ));
        assert!(matches!(
            cell.hard_admit(&r),
            Err(AdmissionError::UnknownClass(ClassId(9)))
        ));
    }

    #[test]
    fn degrade_zero_amount_is_a_no_op() {
        let mut cell = cell_with_one_call_per_class(100.0, [1.0, 1.0, 1.0, 1.0]);
        let before = cell.clone();
        let released = cell.degrade(0.0, CallKind::Handoff).unwrap();
        assert_eq!(released, 0.0);
        assert_eq!(cell, before);
    }

    #[test]
    fn degrade_splits_proportionally_to_headroom() {
        // Video (headroom 9.6) and background (headroom 15) share 5 kbps.
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.calls.push(ActiveCall {
            call_id: CallId(1),
            class_id: ClassId(2),
            ratio: 1.0,
            departure_time: None,
        });
        cell.calls.push(ActiveCall {
            call_id: CallId(2),
            class_id: ClassId(4),
            ratio: 1.0,
            departure_time: None,
        });
        let released = cell.degrade(5.0, CallKind::Handoff).unwrap();
        assert!((released - 5.0).abs() < KBPS_TOL);
        let video = cell.call(CallId(1)).unwrap().ratio;
        let background = cell.call(CallId(2)).unwrap().ratio;
        assert!((video - (1.0 - 5.0 * 9.6 / 24.6 / 32.0)).abs() < 1e-12);
        assert!((background - (1.0 - 5.0 * 15.0 / 24.6 / 25.0)).abs() < 1e-12);
    }

    #[test]
    fn degrading_the_full_releasable_lands_every_call_on_its_floor() {
        let mut cell = cell_with_one_call_per_class(200.0, [1.0, 1.0, 1.0, 1.0]);
        let releasable = cell.releasable_bandwidth(CallKind::Handoff);
        let released = cell.degrade(releasable, CallKind::Handoff).unwrap();
        assert!((released - releasable).abs() < KBPS_TOL);
        for call in cell.calls() {
            let floor = cell.class(call.class_id).unwrap().xi_min;
            assert!((call.ratio - floor).abs() < 1e-12);
        }
    }

    #[test]
    fn degrade_beyond_releasable_is_a_caller_bug() {
        let mut cell = cell_with_one_call_per_class(200.0, [1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            cell.degrade(1000.0, CallKind::Handoff),
            Err(AdmissionError::DegradeExceedsReleasable { .. })
        ));
    }

    #[test]
    fn restore_with_no_degraded_calls_grants_nothing() {
        let mut cell = cell_with_one_call_per_class(200.0, [1.0, 1.0, 1.0, 1.0]);
        let before = cell.clone();
        assert_eq!(cell.restore(50.0), 0.0);
        assert_eq!(cell, before);
    }

    #[test]
    fn restore_caps_a_single_degraded_call_at_one() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.calls.push(ActiveCall {
            call_id: CallId(1),
            class_id: ClassId(2),
            ratio: 0.7,
            departure_time: None,
        });
        let granted = cell.restore(50.0);
        assert!((granted - 32.0 * 0.3).abs() < KBPS_TOL);
        assert_eq!(cell.call(CallId(1)).unwrap().ratio, 1.0);
    }

    #[test]
    fn restore_splits_proportionally_to_deficit() {
        // Deficits 9.6 (video at 0.7) and 15 (background at 0.4); grant 5.
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.calls.push(ActiveCall {
            call_id: CallId(1),
            class_id: ClassId(2),
            ratio: 0.7,
            departure_time: None,
        });
        cell.calls.push(ActiveCall {
            call_id: CallId(2),
            class_id: ClassId(4),
            ratio: 0.4,
            departure_time: None,
        });
        let granted = cell.restore(5.0);
        assert!((granted - 5.0).abs() < KBPS_TOL);
        let video = cell.call(CallId(1)).unwrap().ratio;
        let background = cell.call(CallId(2)).unwrap().ratio;
        assert!((video - (0.7 + 5.0 * 9.6 / 24.6 / 32.0)).abs() < 1e-12);
        assert!((background - (0.4 + 5.0 * 15.0 / 24.6 / 25.0)).abs() < 1e-12);
    }

    #[test]
    fn depart_the_only_call_empties_the_cell() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        cell.soft_admit(&request(1, 2, CallKind::New), AdmissionMode::Strict)
            .unwrap();
        let freed = cell.depart(CallId(1), RestorePolicy::NoRestore).unwrap();
        assert!((freed - 32.0).abs() < KBPS_TOL);
        assert!(cell.calls().is_empty());
        assert_eq!(cell.occupied_bandwidth(), 0.0);
    }

    #[test]
    fn depart_without_restore_leaves_other_ratios_alone() {
        let mut cell = cell_with_one_call_per_class(100.0, [1.0, 0.8, 0.9, 0.5]);
        let free_before = cell.free_bandwidth();
        cell.depart(CallId(1), RestorePolicy::NoRestore).unwrap();
        assert!((cell.free_bandwidth() - free_before - 16.0).abs() < KBPS_TOL);
        assert_eq!(cell.call(CallId(2)).unwrap().ratio, 0.8);
        assert_eq!(cell.call(CallId(4)).unwrap().ratio, 0.5);
    }

    #[test]
    fn depart_with_restore_lifts_the_degraded_survivor() {
        // A full-rate voice call leaves; the video call at its floor rises
        // back to 1 because the freed 16 kbps covers its 9.6 deficit.
        let mut cell = CellState::new(48.0, table2()).unwrap();
        cell.calls.push(ActiveCall {
            call_id: CallId(1),
            class_id: ClassId(1),
            ratio: 1.0,
            departure_time: None,
        });
        cell.calls.push(ActiveCall {
            call_id: CallId(2),
            class_id: ClassId(2),
            ratio: 0.7,
            departure_time: None,
        });
        cell.depart(CallId(1), RestorePolicy::RestoreOnDepart)
            .unwrap();
        assert_eq!(cell.call(CallId(2)).unwrap().ratio, 1.0);
    }

    #[test]
    fn depart_unknown_call_is_an_error() {
        let mut cell = CellState::new(100.0, table2()).unwrap();
        assert!(matches!(
            cell.depart(CallId(7), RestorePolicy::NoRestore),
            Err(AdmissionError::UnknownCall(CallId(7)))
        ));
    }

    #[test]
    fn class_validation_rejects_inverted_floors() {
        let class = TrafficClass {
            class_id: ClassId(1),
            name: "bad".into(),
            requested_bandwidth: 10.0,
            xi_min: 0.8,
            xi_min_new: 0.7,
            conversational: false,
        };
        assert!(class.validate().is_err());
    }

    #[test]
    fn class_validation_rejects_squeezable_conversational() {
        let class = TrafficClass {
            class_id: ClassId(1),
            name: "bad".into(),
            requested_bandwidth: 10.0,
            xi_min: 0.9,
            xi_min_new: 0.9,
            conversational: true,
        };
        assert!(class.validate().is_err());
    }

    // Strategy: small cells over the four-class table with ratios on a
    // 0.1 grid between each class's handoff floor and 1.
    fn grid_cell() -> impl Strategy<Value = CellState> {
        proptest::collection::vec((0..4usize, 0..=10u32), 0..=4).prop_map(|picks| {
            let classes = table2();
            let mut cell = CellState::new(10_000.0, classes.clone()).unwrap();
            for (i, (class_idx, step)) in picks.into_iter().enumerate() {
                let class = &classes[class_idx];
                let ratio = class.xi_min + (1.0 - class.xi_min) * f64::from(step) / 10.0;
                cell.calls.push(ActiveCall {
                    call_id: CallId(i as u64 + 1),
                    class_id: class.class_id,
                    ratio,
                    departure_time: None,
                });
            }
            cell
        })
    }

    proptest! {
        #[test]
        fn prop_releasable_handoff_dominates_new(cell in grid_cell()) {
            prop_assert!(
                cell.releasable_bandwidth(CallKind::Handoff)
                    >= cell.releasable_bandwidth(CallKind::New) - KBPS_TOL
            );
        }

        #[test]
        fn prop_releasable_matches_bruteforce_enumeration(cell in grid_cell()) {
            // Independent route: raw per-call arithmetic on copied fields.
            for kind in [CallKind::Handoff, CallKind::New] {
                let mut expected = 0.0;
                for call in cell.calls() {
                    let class = cell.class(call.class_id).unwrap();
                    let floor = match kind {
                        CallKind::Handoff => class.xi_min,
                        CallKind::New => class.xi_min_new,
                    };
                    let headroom = call.ratio - floor;
                    if headroom > 0.0 {
                        expected += class.requested_bandwidth * headroom;
                    }
                }
                prop_assert!((cell.releasable_bandwidth(kind) - expected).abs() < KBPS_TOL);
            }
        }

        #[test]
        fn prop_call_order_does_not_change_outcomes(
            cell in grid_cell(),
            amount_step in 0..=10u32,
            kind_pick in 0..2u8,
        ) {
            let kind = if kind_pick == 0 { CallKind::Handoff } else { CallKind::New };
            let mut reversed = cell.clone();
            reversed.calls.reverse();
            let amount = cell.releasable_bandwidth(kind) * f64::from(amount_step) / 10.0;

            let mut a = cell.clone();
            let mut b = reversed.clone();
            let ra = a.degrade(amount, kind).unwrap();
            let rb = b.degrade(amount, kind).unwrap();
            prop_assert!((ra - rb).abs() < KBPS_TOL);
            for call in a.calls() {
                let other = b.call(call.call_id).unwrap();
                prop_assert!((call.ratio - other.ratio).abs() < 1e-9);
            }
        }

        #[test]
        fn prop_degrade_then_restore_round_trips_from_full_rate(
            picks in proptest::collection::vec(0..4usize, 1..=4),
            amount_step in 0..=10u32,
        ) {
            // From an all-ratio-1 state the per-call headrooms and the
            // deficits left by a squeeze are the same weights, so restoring
            // the released amount is an exact inverse.
            let classes = table2();
            let mut cell = CellState::new(10_000.0, classes.clone()).unwrap();
            for (i, class_idx) in picks.iter().enumerate() {
                cell.calls.push(ActiveCall {
                    call_id: CallId(i as u64 + 1),
                    class_id: classes[*class_idx].class_id,
                    ratio: 1.0,
                    departure_time: None,
                });
            }
            let amount = cell.releasable_bandwidth(CallKind::Handoff)
                * f64::from(amount_step) / 10.0;
            let released = cell.degrade(amount, CallKind::Handoff).unwrap();
            cell.restore(released);
            for call in cell.calls() {
                prop_assert!((call.ratio - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn prop_hard_acceptance_implies_soft_acceptance(
            cell in grid_cell(),
            class_pick in 1..=4u32,
            kind_pick in 0..2u8,
            capacity_step in 1..=40u32,
        ) {
            // On the identical state, free >= need implies
            // free + releasable >= need, for either mode.
            let kind = if kind_pick == 0 { CallKind::Handoff } else { CallKind::New };
            let mut hard_cell = cell.clone();
            hard_cell.capacity = f64::from(capacity_step) * 10.0;
            let occupied = hard_cell.occupied_bandwidth();
            prop_assume!(occupied <= hard_cell.capacity);
            let request = request(999, class_pick, kind);
            let mut strict_cell = hard_cell.clone();
            let mut elastic_cell = hard_cell.clone();
            if hard_cell.hard_admit(&request).unwrap().accepted() {
                prop_assert!(strict_cell
                    .soft_admit(&request, AdmissionMode::Strict)
                    .unwrap()
                    .accepted());
                prop_assert!(elastic_cell
                    .soft_admit(&request, AdmissionMode::Elastic)
                    .unwrap()
                    .accepted());
            }
        }

        #[test]
        fn prop_degrade_respects_floors_and_restore_respects_caps(
            cell in grid_cell(),
            amount_step in 0..=10u32,
            restore_amount in 0.0..200.0f64,
        ) {
            let mut cell = cell;
            let amount = cell.releasable_bandwidth(CallKind::Handoff)
                * f64::from(amount_step) / 10.0;
            cell.degrade(amount, CallKind::Handoff).unwrap();
            cell.restore(restore_amount);
            for call in cell.calls() {
                let class = cell.class(call.class_id).unwrap();
                prop_assert!(call.ratio >= class.xi_min - 1e-12);
                prop_assert!(call.ratio <= 1.0 + 1e-12);
            }
        }
    }
}
