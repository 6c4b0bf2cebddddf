//! Discrete-event simulation of one cell's downlink.
//!
//! Media frames leave the server, cross the wired elements, queue at the
//! base station and are sent in fixed-length MAC frames. Events at the same
//! instant run in rank order: arrivals, then the MAC frame boundary.

pub mod outcome;
pub mod scenario;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::{DropReason, EnqueueOutcome, FlowId, Packet, Scheduler, ServiceFlow};
use crate::metrics::{compute_report, timeseries, MetricsError, MetricsReport, StreamInfo, TimeseriesRow};
use crate::phy::{select_mcs, Direction, McsProfile, PhyError};
use crate::propagation::{compute_sinr, LinkBudget, PathLossModel, PropagationError, SPEED_OF_LIGHT_M_S};
use crate::traffic::{packetize, MediaKind};

pub use outcome::{write_packet_log, DelayComponents, OutcomeStatus, PacketOutcome};
pub use scenario::{build_scenario, ConfigError, McsMode, Scenario, ScenarioConfig, ValidationReport};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("link budget: {0}")]
    Propagation(#[from] PropagationError),
    #[error("phy: {0}")]
    Phy(#[from] PhyError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

/// Summary of one run, serialized as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub duration_s: f64,
    pub model: String,
    pub ss_distance_m: f64,
    pub path_loss_db: f64,
    pub sinr_db: f64,
    /// Name of the MCS in use, or `outage`.
    pub mcs: String,
    pub frame_capacity_bits: u64,
    pub video_trace: Option<String>,
    pub metrics: MetricsReport,
}

impl RunReport {
    /// Pretty JSON with a stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub outcomes: Vec<PacketOutcome>,
    pub streams: BTreeMap<FlowId, StreamInfo>,
}

impl RunOutput {
    pub fn timeseries(&self) -> Vec<TimeseriesRow> {
        timeseries(&self.outcomes, &self.streams, self.report.duration_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Rank {
    Arrival = 1,
    MacFrame = 2,
}

#[derive(Debug)]
enum EventKind {
    /// Frame `frame` of flow `flow_idx` leaves the server.
    SourceFrame {
        flow_idx: usize,
        frame: usize,
    },
    /// Packets reach the base-station queue.
    BsArrival {
        flow_idx: usize,
        packets: Vec<Packet>,
    },
    MacFrame {
        index: u64,
    },
}

impl EventKind {
    fn rank(&self) -> Rank {
        match self {
            EventKind::SourceFrame { .. } | EventKind::BsArrival { .. } => Rank::Arrival,
            EventKind::MacFrame { .. } => Rank::MacFrame,
        }
    }
}

#[derive(Debug)]
struct Event {
    time_ms: f64,
    rank: Rank,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_ms
            .total_cmp(&other.time_ms)
            .then(self.rank.cmp(&other.rank))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time_ms: f64, kind: EventKind) {
        let rank = kind.rank();
        self.heap.push(Reverse(Event {
            time_ms,
            rank,
            seq: self.seq,
            kind,
        }));
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Replaces a configured Erceg shadowing spread with one seeded draw.
pub fn realize_budget(budget: &LinkBudget, seed: u64) -> LinkBudget {
    let mut b = *budget;
    if let PathLossModel::ErcegSuburban {
        shadow_s,
        shadow_sigma_db: Some(sigma),
        ..
    } = &mut b.model
    {
        if *sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, *sigma).expect("sigma validated as non-negative");
            *shadow_s = normal.sample(&mut rng);
        }
    }
    b
}

/// MCS in use for a given SINR, or `None` for outage.
pub fn choose_mcs(scenario: &Scenario, sinr_db: f64) -> Option<McsProfile> {
    match &scenario.mcs_mode {
        McsMode::Adaptive => select_mcs(&scenario.phy.mcs_table, sinr_db).copied(),
        McsMode::Fixed { mcs, force } => (*force || sinr_db >= mcs.min_sinr_db).then_some(*mcs),
    }
}

fn dropped(pkt: &Packet, reason: DropReason, at_ms: f64) -> PacketOutcome {
    PacketOutcome {
        packet_id: pkt.id,
        flow: pkt.flow_id,
        frame_index: pkt.frame_index,
        size_bytes: pkt.size_bytes,
        status: OutcomeStatus::Dropped(reason),
        created_ms: pkt.created_at_ms,
        delivered_ms: None,
        resolved_ms: at_ms,
        delays: None,
    }
}

/// Runs `scenario` to completion.
///
/// Packets still queued or in wired transit when the window closes are
/// reported as in flight.
pub fn run(scenario: &Scenario) -> Result<RunOutput, EngineError> {
    let budget = realize_budget(&scenario.budget, scenario.seed);
    let distance = scenario.cell.ss_distance_m;
    let path_loss_db = budget.model.path_loss_db(distance, budget.carrier_freq_mhz)?;
    let sinr_db = compute_sinr(&budget, distance)?;
    let mcs = choose_mcs(scenario, sinr_db);
    let frame_ms = scenario.phy.frame_duration_ms;
    let capacity_bits = match &mcs {
        Some(m) => m.frame_capacity_bits(frame_ms, Direction::Downlink)?,
        None => 0,
    };
    let rate_bps = mcs.as_ref().map_or(0.0, |m| m.rate_bps(Direction::Downlink));

    let path = scenario.path;
    let transit_ms = path.wired_transit_ms();
    let d_proc = f64::from(path.element_count()) * path.per_element_proc_ms;
    let d_prop = path.wired_prop_ms() + distance / SPEED_OF_LIGHT_M_S * 1000.0;
    let duration_ms = scenario.duration_s * 1000.0;

    let mut flows: Vec<ServiceFlow> = scenario
        .flows
        .iter()
        .map(|f| ServiceFlow::new(f.id, f.class, f.qos, f.queue_capacity_bytes))
        .collect();
    let traces: Vec<_> = scenario.flows.iter().map(|f| &scenario.traces[&f.source]).collect();
    let mut sent = vec![0u64; flows.len()];

    let mut events = Queue::default();
    for (i, trace) in traces.iter().enumerate() {
        if let Some(first) = trace.frames.first() {
            events.push(first.t_ms, EventKind::SourceFrame { flow_idx: i, frame: 0 });
        }
    }
    let mut k = 0u64;
    while (k as f64) * frame_ms < duration_ms {
        events.push(k as f64 * frame_ms, EventKind::MacFrame { index: k });
        k += 1;
    }

    let mut scheduler = Scheduler::new();
    let mut outcomes = Vec::new();
    let mut next_packet_id = 0u64;

    while let Some(ev) = events.pop() {
        let now = ev.time_ms;
        match ev.kind {
            EventKind::SourceFrame { flow_idx, frame } => {
                let trace = traces[flow_idx];
                let rec = &trace.frames[frame];
                let mut packets = packetize(rec, scenario.mtu_payload_bytes, flows[flow_idx].id, next_packet_id);
                next_packet_id += packets.len() as u64;
                sent[flow_idx] += packets.len() as u64;
                for p in &mut packets {
                    p.created_at_ms = now;
                }
                if !packets.is_empty() {
                    events.push(now + transit_ms, EventKind::BsArrival { flow_idx, packets });
                }
                if let Some(next) = trace.frames.get(frame + 1) {
                    events.push(
                        next.t_ms,
                        EventKind::SourceFrame {
                            flow_idx,
                            frame: frame + 1,
                        },
                    );
                }
            }
            EventKind::BsArrival { flow_idx, packets } => {
                for p in packets {
                    if let EnqueueOutcome::Dropped(reason, p) = flows[flow_idx].enqueue_packet(p, now) {
                        outcomes.push(dropped(&p, reason, now));
                    }
                }
            }
            EventKind::MacFrame { index } => {
                debug_assert_eq!(now, index as f64 * frame_ms);
                if mcs.is_none() {
                    for f in &mut flows {
                        outcomes.extend(f.drain_all().iter().map(|p| dropped(p, DropReason::LinkOutage, now)));
                    }
                    continue;
                }
                for f in &mut flows {
                    outcomes.extend(
                        f.expire_deadlines(now)
                            .iter()
                            .map(|p| dropped(p, DropReason::DeadlineExpired, now)),
                    );
                }
                let grants = scheduler.schedule_frame(&flows, capacity_bits, frame_ms);
                let mut offset_bits = 0u64;
                for f in &mut flows {
                    let granted = grants.get(&f.id).copied().unwrap_or(0);
                    if granted == 0 {
                        continue;
                    }
                    let (done, used) = f.transmit(granted);
                    for tx in done {
                        let p = tx.packet;
                        let end_bits = offset_bits + tx.end_offset_bits;
                        let completion = now + end_bits as f64 / rate_bps * 1000.0;
                        let d_trans = p.bits() as f64 / rate_bps * 1000.0;
                        let delays = DelayComponents {
                            d_proc,
                            d_queue: (completion - d_trans) - p.enqueued_at_ms,
                            d_trans,
                            d_prop,
                        };
                        let delivered = p.created_at_ms + delays.total();
                        let late = scenario.playout_deadline_ms.is_some_and(|lim| delays.total() > lim);
                        outcomes.push(if late {
                            dropped(&p, DropReason::LateArrival, delivered)
                        } else {
                            PacketOutcome {
                                packet_id: p.id,
                                flow: p.flow_id,
                                frame_index: p.frame_index,
                                size_bytes: p.size_bytes,
                                status: OutcomeStatus::Delivered,
                                created_ms: p.created_at_ms,
                                delivered_ms: Some(delivered),
                                resolved_ms: delivered,
                                delays: Some(delays),
                            }
                        });
                    }
                    offset_bits += used;
                }
                debug_assert!(offset_bits <= capacity_bits);
            }
        }
    }

    let streams: BTreeMap<FlowId, StreamInfo> = scenario
        .flows
        .iter()
        .zip(&traces)
        .zip(&sent)
        .map(|((f, t), &n)| {
            (
                f.id,
                StreamInfo {
                    name: f.name.clone(),
                    nominal_interval_ms: t.frame_interval_ms(),
                    sent: n,
                },
            )
        })
        .collect();
    let metrics = compute_report(&outcomes, &streams, scenario.duration_s)?;
    let report = RunReport {
        seed: scenario.seed,
        duration_s: scenario.duration_s,
        model: budget.model.name().to_string(),
        ss_distance_m: distance,
        path_loss_db,
        sinr_db,
        mcs: mcs.map_or_else(|| "outage".to_string(), |m| m.name()),
        frame_capacity_bits: capacity_bits,
        video_trace: scenario.traces.get(&MediaKind::Video).map(|t| t.label.clone()),
        metrics,
    };
    Ok(RunOutput {
        report,
        outcomes,
        streams,
    })
}
