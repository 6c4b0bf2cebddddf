//! Service flows, QoS parameter rules and per-frame downlink scheduling.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default per-flow queue capacity, bytes.
pub const DEFAULT_QUEUE_CAPACITY_BYTES: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ServiceClass {
    #[serde(rename = "UGS")]
    Ugs,
    #[serde(rename = "ertPS")]
    ErtPs,
    #[serde(rename = "rtPS")]
    RtPs,
    #[serde(rename = "nrtPS")]
    NrtPs,
    #[serde(rename = "BE")]
    Be,
}

impl ServiceClass {
    /// All classes in scheduling priority order.
    pub const ALL: [ServiceClass; 5] = [
        ServiceClass::Ugs,
        ServiceClass::ErtPs,
        ServiceClass::RtPs,
        ServiceClass::NrtPs,
        ServiceClass::Be,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceClass::Ugs => "UGS",
            ServiceClass::ErtPs => "ertPS",
            ServiceClass::RtPs => "rtPS",
            ServiceClass::NrtPs => "nrtPS",
            ServiceClass::Be => "BE",
        }
    }

    /// Which QoS parameters the class carries.
    pub fn applicability(self) -> Applicability {
        use ServiceClass::*;
        Applicability {
            min_reserved: matches!(self, RtPs | ErtPs | NrtPs),
            max_latency: matches!(self, Ugs | RtPs | ErtPs),
            tolerated_jitter: matches!(self, Ugs),
            traffic_priority: matches!(self, NrtPs | Be),
        }
    }
}

impl fmt::Display for ServiceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown service class {0:?} (expected UGS, ertPS, rtPS, nrtPS or BE)")]
pub struct UnknownClass(pub String);

impl FromStr for ServiceClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ServiceClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

/// Applicability of the optional QoS parameters for one class. The maximum
/// sustained rate applies to every class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Applicability {
    pub min_reserved: bool,
    pub max_latency: bool,
    pub tolerated_jitter: bool,
    pub traffic_priority: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QosParams {
    pub max_sustained_rate_bps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_reserved_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_latency_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerated_jitter_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_priority: Option<u8>,
}

impl QosParams {
    /// Keeps only the parameters applicable to `class`, filling missing ones
    /// from `defaults`.
    pub fn project(&self, class: ServiceClass, defaults: &QosParams) -> QosParams {
        let a = class.applicability();
        let pick = |on: bool, own: Option<f64>, fallback: Option<f64>| if on { own.or(fallback) } else { None };
        QosParams {
            max_sustained_rate_bps: self.max_sustained_rate_bps,
            min_reserved_rate_bps: pick(
                a.min_reserved,
                self.min_reserved_rate_bps,
                defaults.min_reserved_rate_bps,
            ),
            max_latency_ms: pick(a.max_latency, self.max_latency_ms, defaults.max_latency_ms),
            tolerated_jitter_ms: pick(
                a.tolerated_jitter,
                self.tolerated_jitter_ms,
                defaults.tolerated_jitter_ms,
            ),
            traffic_priority: if a.traffic_priority {
                self.traffic_priority.or(defaults.traffic_priority)
            } else {
                None
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QosParam {
    MaxSustainedRate,
    MinReservedRate,
    MaxLatency,
    ToleratedJitter,
    TrafficPriority,
}

impl fmt::Display for QosParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QosParam::MaxSustainedRate => "max_sustained_rate_bps",
            QosParam::MinReservedRate => "min_reserved_rate_bps",
            QosParam::MaxLatency => "max_latency_ms",
            QosParam::ToleratedJitter => "tolerated_jitter_ms",
            QosParam::TrafficPriority => "traffic_priority",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QosViolation {
    NotApplicable { class: ServiceClass, param: QosParam },
    Missing { class: ServiceClass, param: QosParam },
    OutOfRange { param: QosParam, reason: String },
}

impl fmt::Display for QosViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QosViolation::NotApplicable { class, param } => {
                write!(f, "{param} is not applicable to {class}")
            }
            QosViolation::Missing { class, param } => write!(f, "{class} requires {param}"),
            QosViolation::OutOfRange { param, reason } => write!(f, "{param}: {reason}"),
        }
    }
}

/// Checks `qos` against the parameter set of `class`.
pub fn validate_flow(class: ServiceClass, qos: &QosParams) -> Result<(), Vec<QosViolation>> {
    let mut violations = Vec::new();
    let a = class.applicability();
    let mut check = |applicable: bool, present: bool, param: QosParam| match (applicable, present) {
        (true, false) => violations.push(QosViolation::Missing { class, param }),
        (false, true) => violations.push(QosViolation::NotApplicable { class, param }),
        _ => {}
    };
    check(
        a.min_reserved,
        qos.min_reserved_rate_bps.is_some(),
        QosParam::MinReservedRate,
    );
    check(a.max_latency, qos.max_latency_ms.is_some(), QosParam::MaxLatency);
    check(
        a.tolerated_jitter,
        qos.tolerated_jitter_ms.is_some(),
        QosParam::ToleratedJitter,
    );
    check(
        a.traffic_priority,
        qos.traffic_priority.is_some(),
        QosParam::TrafficPriority,
    );

    let mut range = |param: QosParam, reason: &str| {
        violations.push(QosViolation::OutOfRange {
            param,
            reason: reason.to_string(),
        })
    };
    if !(qos.max_sustained_rate_bps > 0.0 && qos.max_sustained_rate_bps.is_finite()) {
        range(QosParam::MaxSustainedRate, "must be a positive rate");
    }
    if let Some(min) = qos.min_reserved_rate_bps {
        if !(min >= 0.0) {
            range(QosParam::MinReservedRate, "must be non-negative");
        } else if min > qos.max_sustained_rate_bps {
            range(QosParam::MinReservedRate, "exceeds max_sustained_rate_bps");
        }
    }
    if let Some(lat) = qos.max_latency_ms {
        if !(lat > 0.0) {
            range(QosParam::MaxLatency, "must be positive");
        }
    }
    if let Some(j) = qos.tolerated_jitter_ms {
        if !(j >= 0.0) {
            range(QosParam::ToleratedJitter, "must be non-negative");
        }
    }
    if let Some(p) = qos.traffic_priority {
        if p > 7 {
            range(QosParam::TrafficPriority, "must lie in 0..=7");
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub flow_id: FlowId,
    pub size_bytes: u32,
    pub created_at_ms: f64,
    pub enqueued_at_ms: f64,
    /// Index of the media frame this packet carries a fragment of.
    pub frame_index: u64,
    pub deadline_ms: Option<f64>,
}

impl Packet {
    pub fn bits(&self) -> u64 {
        u64::from(self.size_bytes) * 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DropReason {
    BufferOverflow,
    DeadlineExpired,
    LinkOutage,
    /// Reached the client after its playout deadline.
    LateArrival,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::BufferOverflow,
        DropReason::DeadlineExpired,
        DropReason::LinkOutage,
        DropReason::LateArrival,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::BufferOverflow => "BufferOverflow",
            DropReason::DeadlineExpired => "DeadlineExpired",
            DropReason::LinkOutage => "LinkOutage",
            DropReason::LateArrival => "LateArrival",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped(DropReason, Packet),
}

/// A packet whose last bit left the transmitter during a grant.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub packet: Packet,
    /// Bits of the grant consumed up to and including this packet's last bit.
    pub end_offset_bits: u64,
}

/// A MAC connection with its queue.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceFlow {
    pub id: FlowId,
    pub class: ServiceClass,
    pub qos: QosParams,
    pub queue_capacity_bytes: u64,
    queue: VecDeque<Packet>,
    queued_bytes: u64,
    /// Bits of the head packet already sent in earlier frames.
    head_sent_bits: u64,
}

impl ServiceFlow {
    pub fn new(id: FlowId, class: ServiceClass, qos: QosParams, queue_capacity_bytes: u64) -> Self {
        ServiceFlow {
            id,
            class,
            qos,
            queue_capacity_bytes,
            queue: VecDeque::new(),
            queued_bytes: 0,
            head_sent_bits: 0,
        }
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queued_bytes
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Bits still waiting for transmission.
    pub fn backlog_bits(&self) -> u64 {
        self.queued_bytes * 8 - self.head_sent_bits
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    /// Per-frame cap from the maximum sustained rate.
    pub fn cap_bits(&self, frame_duration_ms: f64) -> u64 {
        rate_bits_per_frame(self.qos.max_sustained_rate_bps, frame_duration_ms)
    }

    /// Per-frame reservation from the minimum reserved rate.
    pub fn reserved_bits(&self, frame_duration_ms: f64) -> u64 {
        self.qos
            .min_reserved_rate_bps
            .map_or(0, |r| rate_bits_per_frame(r, frame_duration_ms))
    }

    pub fn enqueue_packet(&mut self, mut pkt: Packet, now_ms: f64) -> EnqueueOutcome {
        debug_assert!(pkt.size_bytes > 0);
        if self.queued_bytes + u64::from(pkt.size_bytes) > self.queue_capacity_bytes {
            return EnqueueOutcome::Dropped(DropReason::BufferOverflow, pkt);
        }
        pkt.enqueued_at_ms = now_ms;
        pkt.deadline_ms = self.qos.max_latency_ms.map(|lat| now_ms + lat);
        self.queued_bytes += u64::from(pkt.size_bytes);
        self.queue.push_back(pkt);
        EnqueueOutcome::Accepted
    }

    /// Removes every queued packet whose deadline is strictly before `now_ms`.
    /// A head packet that has started transmission is kept.
    pub fn expire_deadlines(&mut self, now_ms: f64) -> Vec<Packet> {
        if self.qos.max_latency_ms.is_none() || self.queue.is_empty() {
            return Vec::new();
        }
        let protected = usize::from(self.head_sent_bits > 0);
        let mut kept = VecDeque::with_capacity(self.queue.len());
        let mut expired = Vec::new();
        for (i, pkt) in self.queue.drain(..).enumerate() {
            let late = pkt.deadline_ms.is_some_and(|d| d < now_ms);
            if late && i >= protected {
                self.queued_bytes -= u64::from(pkt.size_bytes);
                expired.push(pkt);
            } else {
                kept.push_back(pkt);
            }
        }
        self.queue = kept;
        expired
    }

    /// Sends up to `granted_bits` from the head of the queue. Packets may be
    /// fragmented across grants; only completed packets are returned.
    pub fn transmit(&mut self, granted_bits: u64) -> (Vec<Transmission>, u64) {
        let mut used = 0u64;
        let mut done = Vec::new();
        while used < granted_bits {
            let Some(head) = self.queue.front() else { break };
            let remaining = head.bits() - self.head_sent_bits;
            let budget = granted_bits - used;
            if remaining <= budget {
                used += remaining;
                self.head_sent_bits = 0;
                let packet = self.queue.pop_front().expect("head exists");
                self.queued_bytes -= u64::from(packet.size_bytes);
                done.push(Transmission {
                    packet,
                    end_offset_bits: used,
                });
            } else {
                self.head_sent_bits += budget;
                used += budget;
            }
        }
        (done, used)
    }

    /// Empties the queue, returning what was waiting.
    pub fn drain_all(&mut self) -> Vec<Packet> {
        self.queued_bytes = 0;
        self.head_sent_bits = 0;
        self.queue.drain(..).collect()
    }
}

fn rate_bits_per_frame(rate_bps: f64, frame_duration_ms: f64) -> u64 {
    let bits = (rate_bps * frame_duration_ms / 1000.0).floor();
    if bits.is_finite() && bits > 0.0 {
        bits as u64
    } else {
        0
    }
}

/// Strict-priority downlink scheduler with per-class round robin.
///
/// Order of service within a frame:
/// 1. UGS: fixed grant of the sustained rate, whatever the backlog.
/// 2. ertPS: sustained-rate grant shrunk to the backlog.
/// 3. rtPS then nrtPS: top-up to the minimum reserved rate.
/// 4. rtPS then nrtPS: remaining backlog.
/// 5. BE: whatever is left.
///
/// Every grant is capped at the sustained rate and the sum never exceeds the
/// frame capacity.
#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    round: u64,
}

impl Scheduler {
    pub fn new() -> Self {
        Scheduler::default()
    }

    /// Grants for one frame. Rotates the round-robin start on every call.
    pub fn schedule_frame(
        &mut self,
        flows: &[ServiceFlow],
        capacity_bits: u64,
        frame_duration_ms: f64,
    ) -> BTreeMap<FlowId, u64> {
        let grants = schedule_with_rotation(flows, capacity_bits, frame_duration_ms, self.round);
        self.round = self.round.wrapping_add(1);
        grants
    }
}

/// One frame of scheduling with no round-robin rotation.
pub fn schedule_frame(flows: &[ServiceFlow], capacity_bits: u64, frame_duration_ms: f64) -> BTreeMap<FlowId, u64> {
    schedule_with_rotation(flows, capacity_bits, frame_duration_ms, 0)
}

/// Indexes of `flows` in class `class`, in service order for `round`.
fn class_order(flows: &[ServiceFlow], class: ServiceClass, round: u64) -> Vec<usize> {
    let mut members: Vec<usize> = (0..flows.len()).filter(|&i| flows[i].class == class).collect();
    members.sort_by_key(|&i| flows[i].id);
    if !members.is_empty() {
        let shift = (round % members.len() as u64) as usize;
        members.rotate_left(shift);
    }
    if matches!(class, ServiceClass::NrtPs | ServiceClass::Be) {
        // Stable: equal priorities keep their round-robin order.
        members.sort_by_key(|&i| std::cmp::Reverse(flows[i].qos.traffic_priority.unwrap_or(0)));
    }
    members
}

fn schedule_with_rotation(
    flows: &[ServiceFlow],
    capacity_bits: u64,
    frame_duration_ms: f64,
    round: u64,
) -> BTreeMap<FlowId, u64> {
    let mut granted = vec![0u64; flows.len()];
    let mut remaining = capacity_bits;
    let order: BTreeMap<ServiceClass, Vec<usize>> = ServiceClass::ALL
        .into_iter()
        .map(|c| (c, class_order(flows, c, round)))
        .collect();

    let give = |i: usize, want: u64, granted: &mut Vec<u64>, remaining: &mut u64| {
        let cap = flows[i].cap_bits(frame_duration_ms);
        let room = cap.saturating_sub(granted[i]);
        let g = want.min(room).min(*remaining);
        granted[i] += g;
        *remaining -= g;
    };

    for &i in &order[&ServiceClass::Ugs] {
        let fixed = flows[i].cap_bits(frame_duration_ms);
        give(i, fixed, &mut granted, &mut remaining);
    }
    for &i in &order[&ServiceClass::ErtPs] {
        let backlog = flows[i].backlog_bits();
        give(i, backlog, &mut granted, &mut remaining);
    }
    for class in [ServiceClass::RtPs, ServiceClass::NrtPs] {
        for &i in &order[&class] {
            let want = flows[i].reserved_bits(frame_duration_ms).min(flows[i].backlog_bits());
            give(i, want, &mut granted, &mut remaining);
        }
    }
    for class in [ServiceClass::RtPs, ServiceClass::NrtPs, ServiceClass::Be] {
        for &i in &order[&class] {
            let want = flows[i].backlog_bits().saturating_sub(granted[i]);
            give(i, want, &mut granted, &mut remaining);
        }
    }

    flows.iter().zip(granted).map(|(f, g)| (f.id, g)).collect()
}
