//! Writes the synthetic codec traces shipped in `data/traces/`.
//!
//! Usage: `cargo run -p wimax-iptv --example gen_traces [out_dir] [seconds]`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use wimax_iptv::traffic::{synthesize_vbr, VbrModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/traces"));
    let seconds: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(120.0);
    std::fs::create_dir_all(&dir)?;
    for (file, model) in [
        ("svc", VbrModel::svc()),
        ("mpeg4", VbrModel::mpeg4()),
        ("avc", VbrModel::avc()),
    ] {
        let trace = synthesize_vbr(&model, seconds, 0)?;
        let path = dir.join(format!("{file}.csv"));
        trace.write_csv(BufWriter::new(File::create(&path)?))?;
        println!(
            "{}: {} frames, {:.0} bps",
            path.display(),
            trace.frames.len(),
            trace.mean_rate_bps()
        );
    }
    Ok(())
}
