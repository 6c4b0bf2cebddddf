//! Media traces, CBR audio synthesis and packetization.
//!
//! Trace files use one canonical CSV layout:
//!
//! ```text
//! # comment lines start with '#'
//! index,t_ms,size_bytes,kind
//! 0,0,14812,video
//! 1,,3120,video
//! ```
//!
//! An empty `t_ms` is filled in as `index · 1000 / fps`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::{FlowId, Packet};

/// Default payload bytes per packet.
pub const DEFAULT_MTU_PAYLOAD_BYTES: u32 = 1460;
/// Nominal video frame rate.
pub const VIDEO_FPS: f64 = 30.0;
/// Nominal audio frame rate.
pub const AUDIO_FPS: f64 = 21.6;
/// Audio frame size giving 128 kbit/s at 21.6 fps.
pub const DEFAULT_AUDIO_FRAME_BYTES: u32 = 741;

const HEADER: [&str; 4] = ["index", "t_ms", "size_bytes", "kind"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    #[error("empty trace")]
    Empty,
    #[error("{0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Video,
    Audio,
}

impl MediaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Video => "video",
            MediaKind::Audio => "audio",
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MediaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "video" => Ok(MediaKind::Video),
            "audio" => Ok(MediaKind::Audio),
            other => Err(format!("unknown media kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub t_ms: f64,
    pub size_bytes: u32,
    pub kind: MediaKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaTrace {
    pub frames: Vec<FrameRecord>,
    pub nominal_fps: f64,
    pub label: String,
}

impl MediaTrace {
    /// Checks index continuity, monotone timestamps and positive sizes.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut last_t = f64::NEG_INFINITY;
        for (i, f) in self.frames.iter().enumerate() {
            let line = i as u64 + 1;
            if f.index != i as u64 {
                return Err(TraceError::Validation {
                    line,
                    message: format!("index {} out of sequence, expected {i}", f.index),
                });
            }
            if f.size_bytes == 0 {
                return Err(TraceError::Validation {
                    line,
                    message: "size_bytes must be positive".into(),
                });
            }
            if !(f.t_ms >= 0.0) || f.t_ms < last_t {
                return Err(TraceError::Validation {
                    line,
                    message: format!("t_ms {} is negative or decreasing", f.t_ms),
                });
            }
            last_t = f.t_ms;
        }
        Ok(())
    }

    /// Nominal inter-arrival time in ms.
    pub fn frame_interval_ms(&self) -> f64 {
        1000.0 / self.nominal_fps
    }

    /// Frames with `t_ms < duration_ms`.
    pub fn truncated(&self, duration_ms: f64) -> MediaTrace {
        MediaTrace {
            frames: self
                .frames
                .iter()
                .copied()
                .take_while(|f| f.t_ms < duration_ms)
                .collect(),
            nominal_fps: self.nominal_fps,
            label: self.label.clone(),
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.frames.iter().map(|f| u64::from(f.size_bytes)).sum()
    }

    /// Average bit rate over the trace span at the nominal frame rate.
    pub fn mean_rate_bps(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.total_bytes() as f64 * 8.0 * self.nominal_fps / self.frames.len() as f64
    }

    /// Writes the canonical CSV form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let io = |e: csv::Error| TraceError::Domain(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER).map_err(io)?;
        for f in &self.frames {
            w.write_record([
                f.index.to_string(),
                f.t_ms.to_string(),
                f.size_bytes.to_string(),
                f.kind.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TraceError::Domain(e.to_string()))
    }
}

/// Loads and validates a trace file. The label is the file stem.
pub fn load_trace(path: &Path, kind: MediaKind, nominal_fps: f64) -> Result<MediaTrace, TraceError> {
    let file = std::fs::File::open(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_trace(file, kind, nominal_fps, label)
}

/// Parses canonical trace CSV from any reader.
pub fn parse_trace<R: Read>(
    reader: R,
    kind: MediaKind,
    nominal_fps: f64,
    label: String,
) -> Result<MediaTrace, TraceError> {
    if !(nominal_fps > 0.0) {
        return Err(TraceError::Domain(format!(
            "nominal_fps must be positive, got {nominal_fps}"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| TraceError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(TraceError::Parse {
            line: headers.position().map_or(1, |p| p.line()),
            message: format!("expected header {}", HEADER.join(",")),
        });
    }

    let mut frames = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for record in rdr.records() {
        let record = record.map_err(|e| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |what: &str, raw: &str| TraceError::Parse {
            line,
            message: format!("invalid {what} {raw:?}"),
        };
        let invalid = |message: String| TraceError::Validation { line, message };

        let index: u64 = record[0].parse().map_err(|_| parse_err("index", &record[0]))?;
        if index != frames.len() as u64 {
            return Err(invalid(format!(
                "index {index} out of sequence, expected {}",
                frames.len()
            )));
        }
        let t_ms = if record[1].is_empty() {
            index as f64 * 1000.0 / nominal_fps
        } else {
            record[1].parse::<f64>().map_err(|_| parse_err("t_ms", &record[1]))?
        };
        if !(t_ms >= 0.0) || !t_ms.is_finite() {
            return Err(invalid(format!("t_ms {t_ms} must be non-negative")));
        }
        if t_ms < last_t {
            return Err(invalid(format!("t_ms {t_ms} decreases (previous {last_t})")));
        }
        let size: i64 = record[2].parse().map_err(|_| parse_err("size_bytes", &record[2]))?;
        if size <= 0 {
            return Err(invalid(format!("size_bytes {size} must be positive")));
        }
        let size_bytes = u32::try_from(size).map_err(|_| invalid(format!("size_bytes {size} too large")))?;
        let row_kind: MediaKind = record[3]
            .parse()
            .map_err(|m: String| TraceError::Parse { line, message: m })?;
        if row_kind != kind {
            return Err(invalid(format!("kind {row_kind} in a {kind} trace")));
        }
        last_t = t_ms;
        frames.push(FrameRecord {
            index,
            t_ms,
            size_bytes,
            kind,
        });
    }
    if frames.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(MediaTrace {
        frames,
        nominal_fps,
        label,
    })
}

/// Constant-size frames at `t = k/fps` for every `k` with `t < duration`.
pub fn synthesize_cbr(
    duration_s: f64,
    fps: f64,
    frame_size_bytes: u32,
    kind: MediaKind,
) -> Result<MediaTrace, TraceError> {
    if !(duration_s > 0.0) || !(fps > 0.0) || frame_size_bytes == 0 {
        return Err(TraceError::Domain(format!(
            "synthesize_cbr needs positive inputs (duration {duration_s} s, fps {fps}, size {frame_size_bytes})"
        )));
    }
    // k/fps < duration, i.e. k < duration·fps, with slack for the product's
    // rounding error (60 s at 21.6 fps must give 1296 frames, not 1297).
    let limit = duration_s * fps;
    let limit = limit - 1e-9 * limit.max(1.0);
    let frames = (0u64..)
        .take_while(|&k| (k as f64) < limit)
        .map(|k| FrameRecord {
            index: k,
            t_ms: k as f64 * 1000.0 / fps,
            size_bytes: frame_size_bytes,
            kind,
        })
        .collect();
    Ok(MediaTrace {
        frames,
        nominal_fps: fps,
        label: format!("CBR-{kind}"),
    })
}

/// Splits a frame into packets of at most `mtu_payload_bytes`, numbered from
/// `first_id`.
pub fn packetize(frame: &FrameRecord, mtu_payload_bytes: u32, flow_id: FlowId, first_id: u64) -> Vec<Packet> {
    assert!(mtu_payload_bytes > 0, "mtu_payload_bytes must be positive");
    let mut left = frame.size_bytes;
    let mut out = Vec::with_capacity(frame.size_bytes.div_ceil(mtu_payload_bytes) as usize);
    while left > 0 {
        let size = left.min(mtu_payload_bytes);
        left -= size;
        out.push(Packet {
            id: first_id + out.len() as u64,
            flow_id,
            size_bytes: size,
            created_at_ms: frame.t_ms,
            enqueued_at_ms: frame.t_ms,
            frame_index: frame.index,
            deadline_ms: None,
        });
    }
    out
}

/// Parameters of the synthetic GOP-structured VBR source.
///
/// Frame size = GOP-position weight × log-normal frame noise × slowly varying
/// scene activity (AR(1) in the log domain), scaled to a target mean rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VbrModel {
    pub label: String,
    pub mean_rate_bps: f64,
    pub fps: f64,
    /// Frame-type pattern, e.g. `IBBPBBPBBPBB`.
    pub gop: String,
    pub i_weight: f64,
    pub p_weight: f64,
    pub b_weight: f64,
    /// Log-domain standard deviation of per-frame noise.
    pub frame_sigma: f64,
    /// Log-domain standard deviation of scene activity.
    pub scene_sigma: f64,
    /// Frame-to-frame correlation of scene activity.
    pub scene_corr: f64,
}

impl VbrModel {
    /// Stand-in for a scalable (base + enhancement) stream.
    pub fn svc() -> Self {
        VbrModel {
            label: "SVC".into(),
            mean_rate_bps: 3.6e6,
            fps: VIDEO_FPS,
            gop: "IBBPBBPBBPBBPBBP".into(),
            i_weight: 3.0,
            p_weight: 1.2,
            b_weight: 0.7,
            frame_sigma: 0.15,
            scene_sigma: 0.25,
            scene_corr: 0.995,
        }
    }

    /// Stand-in for an MPEG-4 Part 2 stream.
    pub fn mpeg4() -> Self {
        VbrModel {
            label: "MPEG-4".into(),
            mean_rate_bps: 3.9e6,
            gop: "IBBPBBPBBPBB".into(),
            i_weight: 3.5,
            frame_sigma: 0.2,
            scene_sigma: 0.3,
            ..Self::svc()
        }
    }

    /// Stand-in for an H.264/AVC stream; burstier I frames.
    pub fn avc() -> Self {
        VbrModel {
            label: "AVC".into(),
            mean_rate_bps: 4.3e6,
            gop: "IBBPBBPBBPBBPBBP".into(),
            i_weight: 6.0,
            p_weight: 1.0,
            b_weight: 0.5,
            frame_sigma: 0.3,
            scene_sigma: 0.4,
            ..Self::svc()
        }
    }

    fn weight(&self, index: u64) -> f64 {
        let gop = self.gop.as_bytes();
        if gop.is_empty() {
            return 1.0;
        }
        match gop[(index % gop.len() as u64) as usize] {
            b'I' => self.i_weight,
            b'B' => self.b_weight,
            _ => self.p_weight,
        }
    }
}

/// Generates a seeded VBR video trace of `duration_s`.
pub fn synthesize_vbr(model: &VbrModel, duration_s: f64, seed: u64) -> Result<MediaTrace, TraceError> {
    if !(duration_s > 0.0) || !(model.fps > 0.0) || !(model.mean_rate_bps > 0.0) {
        return Err(TraceError::Domain(
            "synthesize_vbr needs positive duration, fps and rate".into(),
        ));
    }
    let gop_len = model.gop.len().max(1) as u64;
    let mean_weight = (0..gop_len).map(|i| model.weight(i)).sum::<f64>() / gop_len as f64;
    let mean_frame_bytes = model.mean_rate_bps / 8.0 / model.fps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - model.scene_corr * model.scene_corr).max(0.0).sqrt();
    let mut scene: f64 = model.scene_sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng);

    let count = (duration_s * model.fps).ceil() as u64;
    let mut frames = Vec::with_capacity(count as usize);
    for k in 0..count {
        let t_ms = k as f64 * 1000.0 / model.fps;
        if t_ms >= duration_s * 1000.0 {
            break;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        scene = model.scene_corr * scene + innovation * model.scene_sigma * z;
        let noise: f64 = StandardNormal.sample(&mut rng);
        let log_factor =
            scene - model.scene_sigma.powi(2) / 2.0 + model.frame_sigma * noise - model.frame_sigma.powi(2) / 2.0;
        let size = mean_frame_bytes * model.weight(k) / mean_weight * log_factor.exp();
        frames.push(FrameRecord {
            index: k,
            t_ms,
            size_bytes: size.round().max(1.0) as u32,
            kind: MediaKind::Video,
        });
    }
    Ok(MediaTrace {
        frames,
        nominal_fps: model.fps,
        label: model.label.clone(),
    })
}
