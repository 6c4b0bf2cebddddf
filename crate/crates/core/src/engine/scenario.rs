//! Scenario configuration document and its validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::{validate_flow, FlowId, QosParams, ServiceClass, DEFAULT_QUEUE_CAPACITY_BYTES};
use crate::phy::{find_mcs, McsProfile, PhyProfile};
use crate::propagation::{LinkBudget, PathLossModel};
use crate::traffic::{
    load_trace, synthesize_cbr, synthesize_vbr, MediaKind, MediaTrace, VbrModel, AUDIO_FPS, DEFAULT_AUDIO_FRAME_BYTES,
    DEFAULT_MTU_PAYLOAD_BYTES, VIDEO_FPS,
};

/// Every problem found while turning a config into a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    pub radius_km: f64,
    pub bs_count: u32,
    /// Distance of the streaming subscriber from its base station.
    pub ss_distance_m: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            radius_km: 0.2,
            bs_count: 7,
            ss_distance_m: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhyConfig {
    pub channel_bandwidth_mhz: f64,
    pub frame_duration_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcs_table: Option<Vec<McsProfile>>,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            channel_bandwidth_mhz: 5.0,
            frame_duration_ms: 5.0,
            mcs_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum McsModeConfig {
    #[default]
    Adaptive,
    Fixed {
        mcs: String,
        #[serde(default)]
        force: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WiredConfig {
    /// Wired network elements between server and base station.
    pub element_count: u32,
    pub per_element_proc_ms: f64,
    pub per_element_prop_ms: f64,
}

impl Default for WiredConfig {
    fn default() -> Self {
        WiredConfig {
            element_count: 2,
            per_element_proc_ms: 0.05,
            per_element_prop_ms: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ClientConfig {
    /// Packets whose end-to-end delay exceeds this are discarded by the
    /// client as late.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub playout_deadline_ms: Option<f64>,
}

fn default_queue_capacity() -> u64 {
    DEFAULT_QUEUE_CAPACITY_BYTES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub class: ServiceClass,
    pub qos: QosParams,
    pub source: MediaKind,
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceSource {
    /// Canonical trace CSV; relative paths resolve against the config file.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Cbr {
        fps: f64,
        frame_size_bytes: u32,
    },
    SyntheticVbr {
        model: VbrModel,
        #[serde(default)]
        seed: u64,
    },
}

impl TraceSource {
    pub fn default_audio() -> Self {
        TraceSource::Cbr {
            fps: AUDIO_FPS,
            frame_size_bytes: DEFAULT_AUDIO_FRAME_BYTES,
        }
    }

    fn load(&self, kind: MediaKind, duration_s: f64, base_dir: &Path) -> Result<MediaTrace, String> {
        let trace = match self {
            TraceSource::File { path, fps, label } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let default_fps = if kind == MediaKind::Video { VIDEO_FPS } else { AUDIO_FPS };
                let mut t = load_trace(&full, kind, fps.unwrap_or(default_fps))
                    .map_err(|e| format!("{kind} trace {}: {e}", full.display()))?;
                if let Some(l) = label {
                    t.label = l.clone();
                }
                t
            }
            TraceSource::Cbr { fps, frame_size_bytes } => {
                synthesize_cbr(duration_s, *fps, *frame_size_bytes, kind).map_err(|e| format!("{kind} trace: {e}"))?
            }
            TraceSource::SyntheticVbr { model, seed } => {
                let mut t = synthesize_vbr(model, duration_s, *seed).map_err(|e| format!("{kind} trace: {e}"))?;
                for f in &mut t.frames {
                    f.kind = kind;
                }
                t
            }
        };
        Ok(trace.truncated(duration_s * 1000.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TracesConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub video: Option<TraceSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audio: Option<TraceSource>,
}

fn default_duration() -> f64 {
    60.0
}

fn default_mtu() -> u32 {
    DEFAULT_MTU_PAYLOAD_BYTES
}

/// JSON scenario document. Unknown top-level keys are rejected, except
/// `matrix`, which only the matrix runner reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cell: CellConfig,
    #[serde(default)]
    pub phy: PhyConfig,
    #[serde(default)]
    pub mcs_mode: McsModeConfig,
    #[serde(default)]
    pub budget: LinkBudget,
    pub flows: Vec<FlowConfig>,
    #[serde(default)]
    pub traces: TracesConfig,
    #[serde(default)]
    pub wired: WiredConfig,
    #[serde(default = "default_mtu")]
    pub mtu_payload_bytes: u32,
    #[serde(default)]
    pub client: ClientConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<serde_json::Value>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads a config file; returns it with the directory relative paths
    /// resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = Self::from_json(&text).map_err(|source| ConfigError::Json {
            path: path.display().to_string(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, dir))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum McsMode {
    Fixed { mcs: McsProfile, force: bool },
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub name: String,
    pub class: ServiceClass,
    pub qos: QosParams,
    pub source: MediaKind,
    pub queue_capacity_bytes: u64,
}

/// Wired part of the path plus the radio hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathDelays {
    pub wired_elements: u32,
    pub per_element_proc_ms: f64,
    pub per_element_prop_ms: f64,
}

impl PathDelays {
    /// Network elements between server and subscriber, radio hop included.
    pub fn element_count(&self) -> u32 {
        self.wired_elements + 1
    }

    pub fn wired_prop_ms(&self) -> f64 {
        f64::from(self.wired_elements) * self.per_element_prop_ms
    }

    /// Server to base-station queue.
    pub fn wired_transit_ms(&self) -> f64 {
        f64::from(self.wired_elements) * (self.per_element_proc_ms + self.per_element_prop_ms)
    }
}

/// A fully validated simulation input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub duration_s: f64,
    pub seed: u64,
    pub cell: CellConfig,
    pub phy: PhyProfile,
    pub mcs_mode: McsMode,
    pub budget: LinkBudget,
    pub flows: Vec<FlowSpec>,
    pub traces: BTreeMap<MediaKind, MediaTrace>,
    pub path: PathDelays,
    pub mtu_payload_bytes: u32,
    pub playout_deadline_ms: Option<f64>,
}

/// Validates `config` and loads its traces. Relative trace paths resolve
/// against `base_dir`. All violations are collected before returning.
pub fn build_scenario(config: &ScenarioConfig, base_dir: &Path) -> Result<Scenario, ValidationReport> {
    let mut v = Vec::new();

    if !(config.duration_s > 0.0 && config.duration_s.is_finite()) {
        v.push(format!("duration_s must be positive, got {}", config.duration_s));
    }
    let cell = &config.cell;
    if !(cell.radius_km > 0.0) {
        v.push(format!("cell.radius_km must be positive, got {}", cell.radius_km));
    }
    if cell.bs_count == 0 {
        v.push("cell.bs_count must be at least 1".into());
    }
    if !(cell.ss_distance_m > 0.0) {
        v.push(format!(
            "cell.ss_distance_m must be positive, got {}",
            cell.ss_distance_m
        ));
    } else if cell.ss_distance_m > cell.radius_km * 1000.0 {
        v.push(format!(
            "cell.ss_distance_m {} m lies outside the {} km cell radius",
            cell.ss_distance_m, cell.radius_km
        ));
    }

    let phy = PhyProfile {
        channel_bandwidth_mhz: config.phy.channel_bandwidth_mhz,
        frame_duration_ms: config.phy.frame_duration_ms,
        mcs_table: config
            .phy
            .mcs_table
            .clone()
            .unwrap_or_else(|| PhyProfile::<f64>::default().mcs_table),
    };
    if let Err(e) = phy.validate() {
        v.push(format!("phy: {e}"));
    }

    let mcs_mode = match &config.mcs_mode {
        McsModeConfig::Adaptive => McsMode::Adaptive,
        McsModeConfig::Fixed { mcs, force } => match find_mcs(&phy.mcs_table, mcs) {
            Ok(m) => McsMode::Fixed { mcs: *m, force: *force },
            Err(e) => {
                v.push(format!("mcs_mode: {e}"));
                McsMode::Adaptive
            }
        },
    };

    if let Err(e) = config.budget.validate() {
        v.push(format!("budget: {e}"));
    }
    let min_d = config.budget.model.min_distance_m();
    if cell.ss_distance_m > 0.0 && cell.ss_distance_m < min_d {
        v.push(format!(
            "cell.ss_distance_m {} m is below the {} model's {} m validity limit",
            cell.ss_distance_m,
            config.budget.model.name(),
            min_d
        ));
    }

    if config.mtu_payload_bytes == 0 {
        v.push("mtu_payload_bytes must be positive".into());
    }
    let w = &config.wired;
    if !(w.per_element_proc_ms >= 0.0) || !(w.per_element_prop_ms >= 0.0) {
        v.push("wired delays must be non-negative".into());
    }
    if let Some(p) = config.client.playout_deadline_ms {
        if !(p > 0.0) {
            v.push(format!("client.playout_deadline_ms must be positive, got {p}"));
        }
    }

    let mut seen = BTreeSet::new();
    let mut flows = Vec::new();
    for f in &config.flows {
        if !seen.insert(f.id) {
            v.push(format!("flow {}: duplicate id", f.id));
        }
        if let Err(errs) = validate_flow(f.class, &f.qos) {
            for e in errs {
                v.push(format!("flow {} ({}): {e}", f.id, f.class));
            }
        }
        if f.queue_capacity_bytes == 0 {
            v.push(format!("flow {}: queue_capacity_bytes must be positive", f.id));
        }
        flows.push(FlowSpec {
            id: FlowId(f.id),
            name: f.name.clone().unwrap_or_else(|| f.source.to_string()),
            class: f.class,
            qos: f.qos,
            source: f.source,
            queue_capacity_bytes: f.queue_capacity_bytes,
        });
    }
    flows.sort_by_key(|f| f.id);

    let mut traces = BTreeMap::new();
    if config.duration_s > 0.0 {
        let needed: BTreeSet<MediaKind> = flows.iter().map(|f| f.source).collect();
        for kind in needed {
            let source = match kind {
                MediaKind::Video => config.traces.video.clone(),
                MediaKind::Audio => config
                    .traces
                    .audio
                    .clone()
                    .or_else(|| Some(TraceSource::default_audio())),
            };
            match source {
                None => v.push(format!("a flow streams {kind} but traces.{kind} is not configured")),
                Some(src) => match src.load(kind, config.duration_s, base_dir) {
                    Ok(t) => {
                        traces.insert(kind, t);
                    }
                    Err(e) => v.push(e),
                },
            }
        }
    }

    if !v.is_empty() {
        return Err(ValidationReport { violations: v });
    }
    Ok(Scenario {
        duration_s: config.duration_s,
        seed: config.seed,
        cell: cell.clone(),
        phy,
        mcs_mode,
        budget: config.budget,
        flows,
        traces,
        path: PathDelays {
            wired_elements: w.element_count,
            per_element_proc_ms: w.per_element_proc_ms,
            per_element_prop_ms: w.per_element_prop_ms,
        },
        mtu_payload_bytes: config.mtu_payload_bytes,
        playout_deadline_ms: config.client.playout_deadline_ms,
    })
}

/// Default rtPS QoS for a stream sustained at up to `max_rate_bps`.
pub fn rtps_qos(max_rate_bps: f64, min_reserved_bps: f64) -> QosParams {
    QosParams {
        max_sustained_rate_bps: max_rate_bps,
        min_reserved_rate_bps: Some(min_reserved_bps),
        max_latency_ms: Some(400.0),
        ..QosParams::default()
    }
}

impl ScenarioConfig {
    /// Network defaults: 0.2 km cell, 7 base stations, subscriber at 150 m,
    /// 5 MHz OFDM, free-space propagation and one rtPS video flow plus one
    /// rtPS audio flow.
    pub fn with_video(video: TraceSource) -> Self {
        ScenarioConfig {
            duration_s: default_duration(),
            seed: 0,
            cell: CellConfig::default(),
            phy: PhyConfig::default(),
            mcs_mode: McsModeConfig::Adaptive,
            budget: LinkBudget::with_model(PathLossModel::free_space()),
            flows: vec![
                FlowConfig {
                    id: 1,
                    name: Some("video".into()),
                    class: ServiceClass::RtPs,
                    qos: rtps_qos(20.0e6, 2.0e6),
                    source: MediaKind::Video,
                    queue_capacity_bytes: DEFAULT_QUEUE_CAPACITY_BYTES,
                },
                FlowConfig {
                    id: 2,
                    name: Some("audio".into()),
                    class: ServiceClass::RtPs,
                    qos: rtps_qos(256.0e3, 128.0e3),
                    source: MediaKind::Audio,
                    queue_capacity_bytes: DEFAULT_QUEUE_CAPACITY_BYTES,
                },
            ],
            traces: TracesConfig {
                video: Some(video),
                audio: Some(TraceSource::default_audio()),
            },
            wired: WiredConfig::default(),
            mtu_payload_bytes: default_mtu(),
            client: ClientConfig::default(),
            matrix: None,
        }
    }
}
