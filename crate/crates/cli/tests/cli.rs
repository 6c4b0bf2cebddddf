use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wimax-iptv"))
}

fn base_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/base.json")
}

fn exec(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["run", "--duration", "5", "--packets-log", "--config"])
            .arg(base_config())
            .arg("--out")
            .arg(dir.path()),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_like::Report = serde_like::parse(&fs::read_to_string(dir.path().join("report.json")).unwrap());
    assert_eq!(report.mcs, "64QAM-3/4");
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(ts.starts_with("t_s,throughput_bps,drops,mean_e2e_ms,mean_jitter_ms\n"));
    assert_eq!(ts.lines().count(), 6);
    let packets = fs::read_to_string(dir.path().join("packets.csv")).unwrap();
    assert!(packets.starts_with("packet_id,flow,status,reason,created_ms,delivered_ms,d_proc,d_queue,d_trans,d_prop\n"));
}

#[test]
fn same_seed_gives_identical_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = exec(
            bin()
                .args(["run", "--seed", "7", "--duration", "3", "--config"])
                .arg(base_config())
                .arg("--out")
                .arg(d.path()),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        fs::read(a.path().join("report.json")).unwrap(),
        fs::read(b.path().join("report.json")).unwrap()
    );
}

fn invalid_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(base_config()).unwrap().replace(
        r#""class": "rtPS",
      "qos": { "max_sustained_rate_bps": 20000000.0"#,
        r#""class": "UGS",
      "qos": { "max_sustained_rate_bps": 20000000.0"#,
    );
    let text = text.replace("../crates", &format!("{}/../../crates", env!("CARGO_MANIFEST_DIR")));
    let path = dir.join("bad.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn ugs_with_min_reserved_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = invalid_config(dir.path());
    let out = exec(
        bin()
            .args(["run", "--config"])
            .arg(&bad)
            .arg("--out")
            .arg(dir.path().join("o")),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("min_reserved_rate_bps is not applicable to UGS"),
        "{}",
        stderr(&out)
    );

    let out = exec(bin().args(["validate", "--config"]).arg(&bad));
    assert_eq!(out.status.code(), Some(2));
    let out = exec(bin().args(["validate", "--config"]).arg(base_config()));
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn missing_config_exits_1() {
    let out = exec(bin().args(["run", "--config", "/nonexistent/x.json", "--out", "/tmp/unused"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn matrix_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["matrix", "--family", "path_loss", "--duration", "2", "--config"])
            .arg(base_config())
            .arg("--out")
            .arg(dir.path()),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let matrix = dir.path().join("matrix.csv");
    let text = fs::read_to_string(&matrix).unwrap();
    assert!(text.starts_with("family,mcs,axis_value,mean_jitter_ms,mean_e2e_ms,dropped_bps,throughput_bps,status\n"));
    assert_eq!(text.lines().count(), 29);
    assert_eq!(fs::read_dir(dir.path().join("cells")).unwrap().count(), 28);

    let out = exec(
        bin()
            .args([
                "plot-data",
                "--metric",
                "mean_jitter_ms",
                "--group-by",
                "path_loss",
                "--matrix",
            ])
            .arg(&matrix),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let pivot = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = pivot.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0], "mcs,free_space,erceg_suburban,pedestrian,vehicular");
    assert!(lines[1].starts_with("QPSK-1/2,"));

    let out = exec(
        bin()
            .args(["plot-data", "--metric", "psnr", "--group-by", "path_loss", "--matrix"])
            .arg(&matrix),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cell_configs_reproduce_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["matrix", "--family", "codec", "--duration", "2", "--config"])
            .arg(base_config())
            .arg("--out")
            .arg(dir.path()),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let cell = dir.path().join("cells/CodecFamily_adaptive_AVC.json");
    let out = exec(
        bin()
            .args(["run", "--config"])
            .arg(&cell)
            .arg("--out")
            .arg(dir.path().join("avc")),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = serde_like::parse(&fs::read_to_string(dir.path().join("avc/report.json")).unwrap());
    let matrix = fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    let row = matrix.lines().find(|l| l.contains(",AVC,")).unwrap();
    let throughput: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
    assert_eq!(throughput, report.throughput_bps);
}

#[test]
fn unknown_family_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["matrix", "--family", "weather", "--config"])
            .arg(base_config())
            .arg("--out")
            .arg(dir.path()),
    );
    assert_eq!(out.status.code(), Some(2));
}

/// Just enough of report.json for these tests, read without a JSON crate.
mod serde_like {
    pub struct Report {
        pub mcs: String,
        pub throughput_bps: f64,
    }

    fn field<'a>(text: &'a str, key: &str) -> &'a str {
        let start = text
            .find(&format!("\"{key}\": "))
            .unwrap_or_else(|| panic!("{key} missing"))
            + key.len()
            + 4;
        let rest = &text[start..];
        rest[..rest.find([',', '\n']).unwrap()].trim()
    }

    pub fn parse(text: &str) -> Report {
        Report {
            mcs: field(text, "mcs").trim_matches('"').to_string(),
            throughput_bps: field(text, "throughput_bps").parse().unwrap(),
        }
    }
}
