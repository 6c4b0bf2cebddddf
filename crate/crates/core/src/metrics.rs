//! Packet loss, end-to-end delay, jitter and throughput from a packet
//! outcome log, and the VoD acceptability thresholds.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::outcome::{OutcomeStatus, PacketOutcome};
use crate::mac::{DropReason, FlowId};
use crate::scalar::Scalar;

/// Largest acceptable packet loss ratio (inclusive).
pub const PLR_LIMIT: f64 = 1e-3;
/// Mean end-to-end delay must stay strictly below this, ms.
pub const E2E_LIMIT_MS: f64 = 400.0;
/// Mean jitter must stay strictly below this, ms.
pub const JITTER_LIMIT_MS: f64 = 50.0;
/// Typical VBR stream load range, kbit/s. Informational only.
pub const REFERENCE_THROUGHPUT_KBPS: (f64, f64) = (221.0, 5311.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("throughput window must be positive, got {0} s")]
    Window(f64),
}

/// `lost / (lost + received)`, 0 when nothing was expected.
pub fn packet_loss_ratio<T: Scalar>(lost: u64, received: u64) -> T {
    let total = lost + received;
    if total == 0 {
        T::zero()
    } else {
        T::lit(lost as f64) / T::lit(total as f64)
    }
}

/// End-to-end delay of a delivered packet; `None` for drops.
pub fn e2e_delay_ms(outcome: &PacketOutcome) -> Option<f64> {
    match outcome.status {
        OutcomeStatus::Delivered => outcome.delays.map(|d| d.total()),
        OutcomeStatus::Dropped(_) => None,
    }
}

/// `t_actual − t_expected`.
pub fn packet_jitter_ms<T: Scalar>(t_actual: T, t_expected: T) -> T {
    t_actual - t_expected
}

/// `8 · bytes / window`.
pub fn throughput_bps<T: Scalar>(delivered_bytes: u64, window_s: T) -> Result<T, MetricsError> {
    if !(window_s > T::zero()) {
        return Err(MetricsError::Window(window_s.as_f64()));
    }
    Ok(T::lit(8.0 * delivered_bytes as f64) / window_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acceptability {
    pub plr_ok: bool,
    pub e2e_ok: bool,
    pub jitter_ok: bool,
}

impl Acceptability {
    pub fn all_ok(&self) -> bool {
        self.plr_ok && self.e2e_ok && self.jitter_ok
    }
}

pub fn acceptability(plr: f64, mean_e2e_ms: f64, mean_jitter_ms: f64) -> Acceptability {
    Acceptability {
        plr_ok: plr <= PLR_LIMIT,
        e2e_ok: mean_e2e_ms < E2E_LIMIT_MS,
        jitter_ok: mean_jitter_ms < JITTER_LIMIT_MS,
    }
}

/// What the report needs to know about each stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamInfo {
    pub name: String,
    pub nominal_interval_ms: f64,
    pub sent: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub flow: FlowId,
    pub name: String,
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub plr: f64,
    pub mean_e2e_ms: f64,
    pub mean_jitter_ms: f64,
    pub rfc3550_jitter_ms: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub duration_s: f64,
    pub sent: u64,
    pub delivered: u64,
    pub dropped_by_reason: BTreeMap<DropReason, u64>,
    pub in_flight: u64,
    pub plr: f64,
    pub mean_e2e_ms: f64,
    pub p99_e2e_ms: f64,
    pub mean_jitter_ms: f64,
    pub rfc3550_jitter_ms: f64,
    pub delivered_bytes: u64,
    pub dropped_bytes: u64,
    pub throughput_bps: f64,
    pub dropped_bps: f64,
    /// Whether the throughput falls inside the reference VBR range.
    pub throughput_in_reference_range: bool,
    pub acceptability: Acceptability,
    pub per_flow: Vec<FlowMetrics>,
}

impl MetricsReport {
    pub fn dropped(&self) -> u64 {
        self.dropped_by_reason.values().sum()
    }
}

/// Per-packet absolute jitter of each delivered packet, anchored at the first
/// delivery of its stream: `t_expected = first_delivery + Δframe · interval`.
fn stream_jitter(delivered: &[&PacketOutcome], interval_ms: f64) -> Vec<f64> {
    let Some(first) = delivered
        .iter()
        .min_by(|a, b| a.delivered_ms.unwrap_or(0.0).total_cmp(&b.delivered_ms.unwrap_or(0.0)))
    else {
        return Vec::new();
    };
    let anchor_t = first.delivered_ms.unwrap_or(0.0);
    let anchor_frame = first.frame_index as f64;
    delivered
        .iter()
        .map(|o| {
            let expected = anchor_t + (o.frame_index as f64 - anchor_frame) * interval_ms;
            packet_jitter_ms(o.delivered_ms.unwrap_or(0.0), expected).abs()
        })
        .collect()
}

/// Interarrival jitter estimator with gain 1/16, run in delivery order.
fn rfc3550_jitter(delivered: &[&PacketOutcome]) -> f64 {
    let mut by_arrival: Vec<&&PacketOutcome> = delivered.iter().collect();
    by_arrival.sort_by(|a, b| {
        a.delivered_ms
            .unwrap_or(0.0)
            .total_cmp(&b.delivered_ms.unwrap_or(0.0))
            .then(a.packet_id.cmp(&b.packet_id))
    });
    let mut j = 0.0;
    for pair in by_arrival.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        let transit_p = p.delivered_ms.unwrap_or(0.0) - p.created_ms;
        let transit_q = q.delivered_ms.unwrap_or(0.0) - q.created_ms;
        j += ((transit_q - transit_p).abs() - j) / 16.0;
    }
    j
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0u64), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Nearest-rank percentile of an unsorted slice; 0 when empty.
fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Aggregates an outcome log over a `duration_s` window.
///
/// `streams` lists every flow with its packet count; packets sent but absent
/// from the log are counted as in flight.
pub fn compute_report(
    outcomes: &[PacketOutcome],
    streams: &BTreeMap<FlowId, StreamInfo>,
    duration_s: f64,
) -> Result<MetricsReport, MetricsError> {
    if !(duration_s > 0.0) {
        return Err(MetricsError::Window(duration_s));
    }
    let mut dropped_by_reason: BTreeMap<DropReason, u64> = DropReason::ALL.iter().map(|&r| (r, 0)).collect();
    let mut delivered_bytes = 0u64;
    let mut dropped_bytes = 0u64;
    let mut e2e = Vec::new();
    let mut jitter_all = Vec::new();
    let mut per_flow = Vec::new();
    let mut rfc_weighted = (0.0, 0u64);

    for (&flow, info) in streams {
        let mine: Vec<&PacketOutcome> = outcomes.iter().filter(|o| o.flow == flow).collect();
        let delivered: Vec<&PacketOutcome> = mine.iter().copied().filter(|o| o.is_delivered()).collect();
        let mut dropped = 0u64;
        for o in &mine {
            if let Some(r) = o.drop_reason() {
                *dropped_by_reason.entry(r).or_insert(0) += 1;
                dropped += 1;
                dropped_bytes += u64::from(o.size_bytes);
            }
        }
        let bytes: u64 = delivered.iter().map(|o| u64::from(o.size_bytes)).sum();
        delivered_bytes += bytes;
        let delays: Vec<f64> = delivered.iter().filter_map(|o| e2e_delay_ms(o)).collect();
        let jitter = stream_jitter(&delivered, info.nominal_interval_ms);
        let rfc = rfc3550_jitter(&delivered);
        rfc_weighted.0 += rfc * delivered.len() as f64;
        rfc_weighted.1 += delivered.len() as u64;

        per_flow.push(FlowMetrics {
            flow,
            name: info.name.clone(),
            sent: info.sent,
            delivered: delivered.len() as u64,
            dropped,
            in_flight: info.sent.saturating_sub(mine.len() as u64),
            plr: packet_loss_ratio(dropped, delivered.len() as u64),
            mean_e2e_ms: mean(delays.iter().copied()),
            mean_jitter_ms: mean(jitter.iter().copied()),
            rfc3550_jitter_ms: rfc,
            throughput_bps: throughput_bps(bytes, duration_s)?,
        });
        e2e.extend(delays);
        jitter_all.extend(jitter);
    }

    let sent: u64 = streams.values().map(|s| s.sent).sum();
    let delivered = per_flow.iter().map(|f| f.delivered).sum::<u64>();
    let dropped: u64 = dropped_by_reason.values().sum();
    let plr = packet_loss_ratio(dropped, delivered);
    let mean_e2e_ms = mean(e2e.iter().copied());
    let mean_jitter_ms = mean(jitter_all.iter().copied());
    let throughput = throughput_bps(delivered_bytes, duration_s)?;
    let kbps = throughput / 1000.0;
    Ok(MetricsReport {
        duration_s,
        sent,
        delivered,
        in_flight: sent.saturating_sub(delivered + dropped),
        dropped_by_reason,
        plr,
        mean_e2e_ms,
        p99_e2e_ms: percentile(&e2e, 0.99),
        mean_jitter_ms,
        rfc3550_jitter_ms: if rfc_weighted.1 == 0 {
            0.0
        } else {
            rfc_weighted.0 / rfc_weighted.1 as f64
        },
        delivered_bytes,
        dropped_bytes,
        throughput_bps: throughput,
        dropped_bps: throughput_bps(dropped_bytes, duration_s)?,
        throughput_in_reference_range: (REFERENCE_THROUGHPUT_KBPS.0..=REFERENCE_THROUGHPUT_KBPS.1).contains(&kbps),
        acceptability: acceptability(plr, mean_e2e_ms, mean_jitter_ms),
        per_flow,
    })
}

/// One-second bin of the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub t_s: u64,
    pub throughput_bps: f64,
    pub drops: u64,
    pub mean_e2e_ms: f64,
    pub mean_jitter_ms: f64,
}

/// Bins outcomes by the second in which they were resolved. Outcomes past
/// the window fall into the last bin.
pub fn timeseries(
    outcomes: &[PacketOutcome],
    streams: &BTreeMap<FlowId, StreamInfo>,
    duration_s: f64,
) -> Vec<TimeseriesRow> {
    let bins = duration_s.ceil().max(1.0) as u64;
    let bin_of = |t_ms: f64| ((t_ms / 1000.0).floor().max(0.0) as u64).min(bins - 1);

    let mut bytes = vec![0u64; bins as usize];
    let mut drops = vec![0u64; bins as usize];
    let mut e2e: Vec<Vec<f64>> = vec![Vec::new(); bins as usize];
    let mut jit: Vec<Vec<f64>> = vec![Vec::new(); bins as usize];

    for (&flow, info) in streams {
        let delivered: Vec<&PacketOutcome> = outcomes.iter().filter(|o| o.flow == flow && o.is_delivered()).collect();
        for (o, j) in delivered
            .iter()
            .zip(stream_jitter(&delivered, info.nominal_interval_ms))
        {
            jit[bin_of(o.resolved_ms) as usize].push(j);
        }
    }
    for o in outcomes {
        let b = bin_of(o.resolved_ms) as usize;
        if o.is_delivered() {
            bytes[b] += u64::from(o.size_bytes);
            if let Some(d) = e2e_delay_ms(o) {
                e2e[b].push(d);
            }
        } else {
            drops[b] += 1;
        }
    }
    (0..bins as usize)
        .map(|b| {
            // The last bin may be shorter than a second.
            let width = (duration_s - b as f64).clamp(f64::MIN_POSITIVE, 1.0);
            TimeseriesRow {
                t_s: b as u64,
                throughput_bps: bytes[b] as f64 * 8.0 / width,
                drops: drops[b],
                mean_e2e_ms: mean(e2e[b].iter().copied()),
                mean_jitter_ms: mean(jit[b].iter().copied()),
            }
        })
        .collect()
}

/// Writes `t_s,throughput_bps,drops,mean_e2e_ms,mean_jitter_ms`.
pub fn write_timeseries<W: Write>(rows: &[TimeseriesRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["t_s", "throughput_bps", "drops", "mean_e2e_ms", "mean_jitter_ms"])?;
    }
    w.flush()?;
    Ok(())
}
