use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::mac::{DropReason, FlowId};

/// Per-packet delay decomposition, all in ms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DelayComponents {
    pub d_proc: f64,
    pub d_queue: f64,
    pub d_trans: f64,
    pub d_prop: f64,
}

impl DelayComponents {
    pub fn total(&self) -> f64 {
        self.d_proc + self.d_queue + self.d_trans + self.d_prop
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum OutcomeStatus {
    Delivered,
    Dropped(DropReason),
}

/// Final fate of one packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketOutcome {
    pub packet_id: u64,
    pub flow: FlowId,
    pub frame_index: u64,
    pub size_bytes: u32,
    pub status: OutcomeStatus,
    pub created_ms: f64,
    /// Set for delivered packets.
    pub delivered_ms: Option<f64>,
    /// Time at which the outcome was decided (delivery or drop).
    pub resolved_ms: f64,
    /// Set for delivered packets.
    pub delays: Option<DelayComponents>,
}

impl PacketOutcome {
    pub fn is_delivered(&self) -> bool {
        self.status == OutcomeStatus::Delivered
    }

    pub fn drop_reason(&self) -> Option<DropReason> {
        match self.status {
            OutcomeStatus::Dropped(r) => Some(r),
            OutcomeStatus::Delivered => None,
        }
    }
}

/// Writes the packet log as
/// `packet_id,flow,status,reason,created_ms,delivered_ms,d_proc,d_queue,d_trans,d_prop`.
pub fn write_packet_log<W: Write>(outcomes: &[PacketOutcome], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "packet_id",
        "flow",
        "status",
        "reason",
        "created_ms",
        "delivered_ms",
        "d_proc",
        "d_queue",
        "d_trans",
        "d_prop",
    ])?;
    for o in outcomes {
        let (status, reason) = match o.status {
            OutcomeStatus::Delivered => ("Delivered", ""),
            OutcomeStatus::Dropped(r) => ("Dropped", r.as_str()),
        };
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let d = o.delays;
        w.write_record([
            o.packet_id.to_string(),
            o.flow.to_string(),
            status.to_string(),
            reason.to_string(),
            o.created_ms.to_string(),
            opt(o.delivered_ms),
            opt(d.map(|d| d.d_proc)),
            opt(d.map(|d| d.d_queue)),
            opt(d.map(|d| d.d_trans)),
            opt(d.map(|d| d.d_prop)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
