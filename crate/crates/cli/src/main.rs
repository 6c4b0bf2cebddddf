use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wimax_iptv::runner::{self, Family, RunOptions, RunnerError};

#[derive(Parser)]
#[command(name = "wimax-iptv", version, about = "IPTV over fixed WiMAX downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds; overrides the config.
        #[arg(long)]
        duration: Option<f64>,
        /// Also write packets.csv.
        #[arg(long)]
        packets_log: bool,
    },
    /// Run a scenario family and write matrix.csv.
    Matrix {
        /// codec, path_loss or service_class.
        #[arg(long)]
        family: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Run the codec family once per MCS.
        #[arg(long)]
        expand_mcs: bool,
    },
    /// Pivot matrix.csv into a grouped-bar table on stdout.
    PlotData {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long)]
        group_by: String,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<(), RunnerError> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            duration,
            packets_log,
        } => {
            let opts = RunOptions {
                seed,
                duration_s: duration,
                packets_log,
            };
            let report = runner::run_single(&config, &out, opts)?;
            let m = &report.metrics;
            println!(
                "mcs {} sinr {:.2} dB: sent {} delivered {} dropped {} plr {:.4} e2e {:.2} ms jitter {:.2} ms throughput {:.0} bps",
                report.mcs,
                report.sinr_db,
                m.sent,
                m.delivered,
                m.dropped(),
                m.plr,
                m.mean_e2e_ms,
                m.mean_jitter_ms,
                m.throughput_bps
            );
        }
        Command::Matrix {
            family,
            config,
            out,
            seed,
            duration,
            expand_mcs,
        } => {
            let family: Family = family.parse()?;
            let opts = RunOptions {
                seed,
                duration_s: duration,
                packets_log: false,
            };
            let rows = runner::run_matrix(family, &config, &out, opts, expand_mcs)?;
            println!("{family}: {} rows -> {}", rows.len(), out.join("matrix.csv").display());
        }
        Command::PlotData {
            matrix,
            metric,
            group_by,
        } => {
            let group_by: Family = group_by.parse()?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            runner::plot_data_from_file(&matrix, &metric, group_by, &mut lock)?;
            lock.flush().map_err(|source| RunnerError::Io {
                context: "stdout".into(),
                source,
            })?;
        }
        Command::Validate { config } => {
            runner::validate_config(&config)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
