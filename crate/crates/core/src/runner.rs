//! Single runs, scenario-family matrices and plot data.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::scenario::{McsModeConfig, TraceSource};
use crate::engine::{build_scenario, run, write_packet_log, ConfigError, EngineError, RunReport, ScenarioConfig};
use crate::mac::{QosParams, ServiceClass};
use crate::metrics::write_timeseries;
use crate::phy::PhyProfile;
use crate::propagation::PathLossModel;
use crate::traffic::{MediaKind, VbrModel};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0} matrix row(s) failed")]
    RowsFailed(usize),
}

impl RunnerError {
    /// 2 for an invalid config or usage, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(ConfigError::Invalid(_) | ConfigError::Json { .. }) | RunnerError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunnerError {
    let context = context.into();
    move |source| RunnerError::Io { context, source }
}

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub duration_s: Option<f64>,
    pub packets_log: bool,
}

impl RunOptions {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.duration_s {
            cfg.duration_s = d;
        }
    }
}

/// Runs one config and writes `report.json`, `timeseries.csv` and, when
/// asked, `packets.csv` into `out_dir`.
pub fn run_single(config_path: &Path, out_dir: &Path, opts: RunOptions) -> Result<RunReport, RunnerError> {
    let (mut cfg, base_dir) = ScenarioConfig::load(config_path)?;
    opts.apply(&mut cfg);
    let scenario = build_scenario(&cfg, &base_dir).map_err(ConfigError::from)?;
    let output = run(&scenario)?;

    fs::create_dir_all(out_dir).map_err(io_err(format!("create {}", out_dir.display())))?;
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, output.report.to_json() + "\n")
        .map_err(io_err(format!("write {}", report_path.display())))?;
    let ts_path = out_dir.join("timeseries.csv");
    let ts = File::create(&ts_path).map_err(io_err(format!("write {}", ts_path.display())))?;
    write_timeseries(&output.timeseries(), BufWriter::new(ts))?;
    if opts.packets_log {
        let p = out_dir.join("packets.csv");
        let f = File::create(&p).map_err(io_err(format!("write {}", p.display())))?;
        write_packet_log(&output.outcomes, BufWriter::new(f))?;
    }
    Ok(output.report)
}

/// Loads and validates a config without running it.
pub fn validate_config(config_path: &Path) -> Result<(), ConfigError> {
    let (cfg, base_dir) = ScenarioConfig::load(config_path)?;
    build_scenario(&cfg, &base_dir)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    CodecFamily,
    PathLossFamily,
    ClassFamily,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::CodecFamily, Family::PathLossFamily, Family::ClassFamily];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::CodecFamily => "CodecFamily",
            Family::PathLossFamily => "PathLossFamily",
            Family::ClassFamily => "ClassFamily",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = RunnerError;

    /// Accepts the family name or its axis name (`codec`, `path_loss`,
    /// `service_class`), case-insensitively, with `-` for `_`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "codecfamily" | "codec" | "codecs" => Ok(Family::CodecFamily),
            "pathlossfamily" | "path_loss" | "pathloss" => Ok(Family::PathLossFamily),
            "classfamily" | "class" | "service_class" => Ok(Family::ClassFamily),
            _ => Err(RunnerError::Usage(format!(
                "unknown family {s:?}; expected codec, path_loss or service_class"
            ))),
        }
    }
}

/// One codec axis entry of the matrix section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecEntry {
    pub name: String,
    pub trace: TraceSource,
}

/// Optional `matrix` section of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub codecs: Vec<CodecEntry>,
    /// Run the codec family once per MCS instead of once per codec.
    pub expand_codec_mcs: bool,
}

impl Default for MatrixConfig {
    /// Synthetic stand-ins for the three codec traces.
    fn default() -> Self {
        let vbr = |model: VbrModel| CodecEntry {
            name: model.label.clone(),
            trace: TraceSource::SyntheticVbr { model, seed: 0 },
        };
        MatrixConfig {
            codecs: vec![vbr(VbrModel::svc()), vbr(VbrModel::mpeg4()), vbr(VbrModel::avc())],
            expand_codec_mcs: false,
        }
    }
}

impl MatrixConfig {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self, RunnerError> {
        match &cfg.matrix {
            None => Ok(MatrixConfig::default()),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| {
                RunnerError::Config(ConfigError::Invalid(crate::engine::ValidationReport {
                    violations: vec![format!("matrix: {e}")],
                }))
            }),
        }
    }
}

/// Fully specified matrix cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCell {
    pub family: Family,
    /// MCS name, or `adaptive`.
    pub mcs: String,
    pub axis_value: String,
    pub config: ScenarioConfig,
}

/// Model axis of the path-loss family.
pub fn path_loss_axis(carrier_freq_mhz: f64) -> [PathLossModel; 4] {
    [
        PathLossModel::free_space(),
        PathLossModel::erceg_hilly(carrier_freq_mhz),
        PathLossModel::PedestrianOutdoorIndoor,
        PathLossModel::vehicular(),
    ]
}

/// QoS of the video flow when re-homed to `class`. Parameters the class does
/// not use are dropped. Fixed-grant classes are sized to the stream's mean
/// rate; polled classes keep the base sustained rate.
pub fn class_qos(base: &QosParams, class: ServiceClass, stream_mean_bps: f64) -> QosParams {
    let defaults = QosParams {
        max_sustained_rate_bps: base.max_sustained_rate_bps,
        min_reserved_rate_bps: base.min_reserved_rate_bps.or(Some(stream_mean_bps.ceil())),
        max_latency_ms: base.max_latency_ms.or(Some(crate::metrics::E2E_LIMIT_MS)),
        tolerated_jitter_ms: Some(crate::metrics::JITTER_LIMIT_MS),
        traffic_priority: Some(0),
    };
    let mut q = base.project(class, &defaults);
    if matches!(class, ServiceClass::Ugs | ServiceClass::ErtPs) {
        q.max_sustained_rate_bps = stream_mean_bps.ceil();
    }
    q
}

fn mcs_names(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.phy
        .mcs_table
        .clone()
        .unwrap_or_else(|| PhyProfile::<f64>::default().mcs_table)
        .iter()
        .map(|m| m.name())
        .collect()
}

fn fixed(cfg: &mut ScenarioConfig, mcs: &str) {
    cfg.mcs_mode = McsModeConfig::Fixed {
        mcs: mcs.to_string(),
        force: false,
    };
}

fn absolutize(source: &mut TraceSource, base_dir: &Path) {
    if let TraceSource::File { path, .. } = source {
        if path.is_relative() {
            *path = base_dir.join(&*path);
        }
    }
}

/// Expands `family` over `base`. Cell configs carry absolute trace paths so
/// each can be re-run on its own. Row order is the canonical output order.
pub fn matrix_cells(family: Family, base: &ScenarioConfig, base_dir: &Path) -> Result<Vec<MatrixCell>, RunnerError> {
    let matrix = MatrixConfig::from_scenario(base)?;
    let base_dir = &std::path::absolute(base_dir).unwrap_or_else(|_| base_dir.to_path_buf());
    let mut base = base.clone();
    base.matrix = None;
    if let Some(v) = &mut base.traces.video {
        absolutize(v, base_dir);
    }
    if let Some(a) = &mut base.traces.audio {
        absolutize(a, base_dir);
    }
    let mcs = mcs_names(&base);
    let mut cells = Vec::new();
    match family {
        Family::CodecFamily => {
            let mcs_axis: Vec<Option<&String>> = if matrix.expand_codec_mcs {
                mcs.iter().map(Some).collect()
            } else {
                vec![None]
            };
            for m in mcs_axis {
                for codec in &matrix.codecs {
                    let mut cfg = base.clone();
                    let mut trace = codec.trace.clone();
                    absolutize(&mut trace, base_dir);
                    cfg.traces.video = Some(trace);
                    match m {
                        Some(name) => fixed(&mut cfg, name),
                        None => cfg.mcs_mode = McsModeConfig::Adaptive,
                    }
                    cells.push(MatrixCell {
                        family,
                        mcs: m.cloned().unwrap_or_else(|| "adaptive".into()),
                        axis_value: codec.name.clone(),
                        config: cfg,
                    });
                }
            }
        }
        Family::PathLossFamily => {
            for m in &mcs {
                for model in path_loss_axis(base.budget.carrier_freq_mhz) {
                    let mut cfg = base.clone();
                    cfg.budget.model = model;
                    fixed(&mut cfg, m);
                    cells.push(MatrixCell {
                        family,
                        mcs: m.clone(),
                        axis_value: model.name().to_string(),
                        config: cfg,
                    });
                }
            }
        }
        Family::ClassFamily => {
            // The mean rate of the video stream sizes the fixed grants.
            let probe = build_scenario(&base, Path::new(".")).map_err(ConfigError::from)?;
            let video_mean = probe.traces.get(&MediaKind::Video).map_or(0.0, |t| t.mean_rate_bps());
            for m in &mcs {
                for class in ServiceClass::ALL {
                    let mut cfg = base.clone();
                    for f in cfg.flows.iter_mut().filter(|f| f.source == MediaKind::Video) {
                        f.qos = class_qos(&f.qos, class, video_mean);
                        f.class = class;
                    }
                    fixed(&mut cfg, m);
                    cells.push(MatrixCell {
                        family,
                        mcs: m.clone(),
                        axis_value: class.to_string(),
                        config: cfg,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// One line of `matrix.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub family: Family,
    pub mcs: String,
    pub axis_value: String,
    pub mean_jitter_ms: f64,
    pub mean_e2e_ms: f64,
    pub dropped_bps: f64,
    pub throughput_bps: f64,
    /// `ok`, `outage`, or `error: ...`.
    pub status: String,
}

impl MatrixRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "mean_jitter_ms" => Some(self.mean_jitter_ms),
            "mean_e2e_ms" => Some(self.mean_e2e_ms),
            "dropped_bps" => Some(self.dropped_bps),
            "throughput_bps" => Some(self.throughput_bps),
            _ => None,
        }
    }

    pub fn failed(&self) -> bool {
        self.status.starts_with("error")
    }
}

pub const METRICS: [&str; 4] = ["mean_jitter_ms", "mean_e2e_ms", "dropped_bps", "throughput_bps"];

/// Runs one cell. Failures become a row with `error` status.
pub fn run_cell(cell: &MatrixCell) -> MatrixRow {
    let result = build_scenario(&cell.config, Path::new("."))
        .map_err(|e| e.to_string().replace('\n', " "))
        .and_then(|s| run(&s).map_err(|e| e.to_string()));
    let mut row = MatrixRow {
        family: cell.family,
        mcs: cell.mcs.clone(),
        axis_value: cell.axis_value.clone(),
        mean_jitter_ms: 0.0,
        mean_e2e_ms: 0.0,
        dropped_bps: 0.0,
        throughput_bps: 0.0,
        status: "ok".into(),
    };
    match result {
        Ok(out) => {
            let m = &out.report.metrics;
            row.mean_jitter_ms = m.mean_jitter_ms;
            row.mean_e2e_ms = m.mean_e2e_ms;
            row.dropped_bps = m.dropped_bps;
            row.throughput_bps = m.throughput_bps;
            if out.report.mcs == "outage" {
                row.status = "outage".into();
            }
        }
        Err(e) => row.status = format!("error: {}", e.trim()),
    }
    row
}

/// Runs every cell concurrently; rows come back in cell order.
pub fn run_cells(cells: &[MatrixCell]) -> Vec<MatrixRow> {
    let mut indexed: Vec<(usize, MatrixRow)> = cells.par_iter().enumerate().map(|(i, c)| (i, run_cell(c))).collect();
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

pub fn write_matrix_csv<W: Write>(rows: &[MatrixRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "family",
        "mcs",
        "axis_value",
        "mean_jitter_ms",
        "mean_e2e_ms",
        "dropped_bps",
        "throughput_bps",
        "status",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> csv::Result<Vec<MatrixRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Runs a family from a base config file and writes `matrix.csv` plus one
/// config per cell under `cells/`. Fails with [`RunnerError::RowsFailed`]
/// after writing if any row errored.
pub fn run_matrix(
    family: Family,
    config_path: &Path,
    out_dir: &Path,
    opts: RunOptions,
    expand_codec_mcs: bool,
) -> Result<Vec<MatrixRow>, RunnerError> {
    let (mut cfg, base_dir) = ScenarioConfig::load(config_path)?;
    opts.apply(&mut cfg);
    build_scenario(&cfg, &base_dir).map_err(ConfigError::from)?;
    if expand_codec_mcs {
        let mut m = MatrixConfig::from_scenario(&cfg)?;
        m.expand_codec_mcs = true;
        cfg.matrix = Some(serde_json::to_value(m).expect("matrix config serializes"));
    }
    let cells = matrix_cells(family, &cfg, &base_dir)?;
    let rows = run_cells(&cells);

    let cell_dir = out_dir.join("cells");
    fs::create_dir_all(&cell_dir).map_err(io_err(format!("create {}", cell_dir.display())))?;
    for c in &cells {
        let name = format!("{}_{}_{}.json", c.family, c.mcs, c.axis_value).replace('/', "_");
        let text = serde_json::to_string_pretty(&c.config).expect("config serializes");
        fs::write(cell_dir.join(&name), text + "\n").map_err(io_err(format!("write cell {name}")))?;
    }
    let path = out_dir.join("matrix.csv");
    let f = File::create(&path).map_err(io_err(format!("write {}", path.display())))?;
    write_matrix_csv(&rows, BufWriter::new(f))?;

    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        return Err(RunnerError::RowsFailed(failed));
    }
    Ok(rows)
}

/// Pivots `rows` of one family into a grouped-bar table: one line per MCS,
/// one column per axis value, cells holding `metric`. Lines and columns keep
/// their first-appearance order. An empty input yields just the header.
pub fn emit_plot_data<W: Write>(rows: &[MatrixRow], metric: &str, group_by: Family, out: W) -> Result<(), RunnerError> {
    if !METRICS.contains(&metric) {
        return Err(RunnerError::Usage(format!(
            "unknown metric {metric:?}; expected one of {}",
            METRICS.join(", ")
        )));
    }
    let mut mcs_order: Vec<&str> = Vec::new();
    let mut axis_order: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.family == group_by) {
        if !mcs_order.contains(&r.mcs.as_str()) {
            mcs_order.push(&r.mcs);
        }
        if !axis_order.contains(&r.axis_value.as_str()) {
            axis_order.push(&r.axis_value);
        }
        cells.insert((&r.mcs, &r.axis_value), r.metric(metric).expect("metric checked"));
    }
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = std::iter::once("mcs").chain(axis_order.iter().copied()).collect();
    w.write_record(&header)?;
    for m in &mcs_order {
        let mut line = vec![m.to_string()];
        for a in &axis_order {
            line.push(cells.get(&(*m, *a)).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&line)?;
    }
    w.flush().map_err(io_err("write plot data"))
}

/// Inverse of [`emit_plot_data`]: `(mcs, axis_value, value)` triples.
pub fn unpivot<R: Read>(input: R) -> csv::Result<Vec<(String, String, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mcs = rec.get(0).unwrap_or_default().to_string();
        for (i, axis) in header.iter().enumerate().skip(1) {
            let cell = rec.get(i).unwrap_or_default();
            if !cell.is_empty() {
                let v = cell
                    .parse::<f64>()
                    .map_err(|e| csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
                out.push((mcs.clone(), axis.clone(), v));
            }
        }
    }
    Ok(out)
}

/// Reads `matrix.csv` and writes the pivot to `out`.
pub fn plot_data_from_file<W: Write>(
    matrix_csv: &Path,
    metric: &str,
    group_by: Family,
    out: W,
) -> Result<(), RunnerError> {
    let f = File::open(matrix_csv).map_err(io_err(format!("open {}", matrix_csv.display())))?;
    let rows = read_matrix_csv(f)?;
    emit_plot_data(&rows, metric, group_by, out)
}

/// Where the cells of a matrix run keep their configs.
pub fn cell_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("cells")
}
