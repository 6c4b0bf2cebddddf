//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wimax_iptv::engine::outcome::{DelayComponents, OutcomeStatus, PacketOutcome};
use wimax_iptv::engine::scenario::{FlowConfig, McsModeConfig, TraceSource};
use wimax_iptv::engine::{build_scenario, run, write_packet_log, ScenarioConfig};
use wimax_iptv::mac::{DropReason, FlowId, QosParams, ServiceClass};
use wimax_iptv::metrics::{
    acceptability, compute_report, e2e_delay_ms, packet_jitter_ms, packet_loss_ratio, throughput_bps, StreamInfo,
};
use wimax_iptv::phy::{default_mcs_table, CodingRate, Direction, Modulation, DL_MBPS_PER_BIT, UL_MBPS_PER_BIT};
use wimax_iptv::propagation::{free_space_rx_power, PathLossModel};
use wimax_iptv::runner::{read_matrix_csv, run_matrix, Family, MatrixRow, RunOptions};
use wimax_iptv::traffic::{MediaKind, VbrModel};

type Check = Result<String, String>;

/// Modulation, coding rate, bits/symbol, min SINR, DL Mbps, UL Mbps.
type PrintedRow = (Modulation, (u32, u32), f64, f64, f64, f64);

/// Report JSON, packet log, then sent / delivered / dropped / in flight.
type RunBytes = (String, Vec<u8>, u64, u64, u64, u64);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn base_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/base.json")
}

// 1 -------------------------------------------------------------------------

fn mcs_table() -> Check {
    let printed: [PrintedRow; 7] = [
        (Modulation::Qpsk, (1, 2), 1.0, 5.0, 3.17, 2.28),
        (Modulation::Qpsk, (3, 4), 1.5, 8.0, 4.75, 3.43),
        (Modulation::Qam16, (1, 2), 2.0, 10.5, 6.34, 4.57),
        (Modulation::Qam16, (3, 4), 3.0, 14.0, 9.5, 6.85),
        (Modulation::Qam64, (1, 2), 3.0, 16.0, 9.5, 6.85),
        (Modulation::Qam64, (2, 3), 4.0, 18.0, 12.6, 9.14),
        // Printed as 4 bits/symbol; 6 × 3/4 = 4.5 matches the printed rates.
        (Modulation::Qam64, (3, 4), 4.5, 20.0, 14.26, 10.28),
    ];
    let table = default_mcs_table::<f64>();
    ensure(table.len() == 7, format!("{} rows", table.len()))?;
    for (row, (m, (n, d), bits, sinr, dl, ul)) in table.iter().zip(printed) {
        let name = row.name();
        ensure(row.modulation == m, format!("{name}: modulation"))?;
        ensure(
            row.coding_rate == CodingRate::new(n, d).unwrap(),
            format!("{name}: coding rate"),
        )?;
        ensure(
            row.bits_per_symbol == bits && row.min_sinr_db == sinr && row.dl_rate_mbps == dl && row.ul_rate_mbps == ul,
            format!("{name}: values differ from the printed table"),
        )?;
        let dl_per_bit = row.dl_rate_mbps / row.bits_per_symbol;
        let ul_per_bit = row.ul_rate_mbps / row.bits_per_symbol;
        ensure(
            (dl_per_bit / DL_MBPS_PER_BIT - 1.0).abs() <= 0.01,
            format!("{name}: DL/bit {dl_per_bit:.4}"),
        )?;
        ensure(
            (ul_per_bit / UL_MBPS_PER_BIT - 1.0).abs() <= 0.01,
            format!("{name}: UL/bit {ul_per_bit:.4}"),
        )?;
    }
    Ok("7 rows as printed (64QAM-3/4 at 4.5 bits), DL/bit and UL/bit within 1%".into())
}

// 2 -------------------------------------------------------------------------

/// Reference evaluator of the four path-loss formulas, written from the
/// formulas alone.
mod reference {
    use std::f64::consts::PI;

    pub fn free_space_db(r_m: f64, gt: f64, gr: f64, l: f64) -> f64 {
        // P_rx/P_tx = Gt·Gr / ((4π)²·r²·L); loss is its inverse in dB.
        let ratio = gt * gr / (16.0 * PI * PI * r_m * r_m * l);
        -10.0 * ratio.log10()
    }

    pub fn erceg_db(d_m: f64, f_mhz: f64, gamma: f64, xf: f64, xh: f64, s: f64) -> f64 {
        let lambda = 299_792_458.0 / (f_mhz * 1e6);
        let a = 20.0 * (4.0 * PI * 100.0 / lambda).log10();
        a + 10.0 * gamma * (d_m / 100.0).log10() + xf + xh + s
    }

    pub fn pedestrian_db(r_km: f64, f_mhz: f64) -> f64 {
        40.0 * r_km.log10() + 30.0 * f_mhz.log10() + 49.0
    }

    pub fn vehicular_db(r_km: f64, f_mhz: f64, dh: f64) -> f64 {
        40.0 * (1.0 - 4e-3 * dh) * r_km.log10() - 18.0 * dh.log10() + 21.0 * f_mhz.log10() + 80.0
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn path_loss_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut compared = 0;
    for _ in 0..100 {
        let (gt, gr, l) = (
            rng.random_range(0.5..20.0),
            rng.random_range(0.5..20.0),
            rng.random_range(1.0..4.0),
        );
        let r = rng.random_range(1.0..20_000.0);
        let f = rng.random_range(700.0..6000.0);
        let model = PathLossModel::FreeSpace {
            g_tx: gt,
            g_rx: gr,
            sys_loss: l,
        };
        let got = model.path_loss_db(r, f).map_err(|e| e.to_string())?;
        let want = reference::free_space_db(r, gt, gr, l);
        ensure(rel_close(got, want), format!("free space r={r} got {got} want {want}"))?;
        let pt = rng.random_range(0.01..100.0);
        let rx = free_space_rx_power(pt, gt, gr, r, l).map_err(|e| e.to_string())?;
        let want_rx = pt * gt * gr / (16.0 * std::f64::consts::PI.powi(2) * r * r * l);
        ensure((rx - want_rx).abs() <= 1e-9 * want_rx, "free-space received power")?;

        let (gamma, xf, xh, s) = (
            rng.random_range(2.0..6.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-8.0..8.0),
        );
        let d = rng.random_range(100.0..10_000.0);
        let model = PathLossModel::ErcegSuburban {
            gamma,
            x_f: xf,
            x_h: xh,
            shadow_s: s,
            shadow_sigma_db: None,
        };
        let got = model.path_loss_db(d, f).map_err(|e| e.to_string())?;
        let want = reference::erceg_db(d, f, gamma, xf, xh, s);
        ensure(rel_close(got, want), format!("erceg d={d} got {got} want {want}"))?;

        let got = PathLossModel::PedestrianOutdoorIndoor
            .path_loss_db(r, f)
            .map_err(|e| e.to_string())?;
        let want = reference::pedestrian_db(r / 1000.0, f);
        ensure(rel_close(got, want), format!("pedestrian r={r} got {got} want {want}"))?;

        let dh = rng.random_range(1.0..200.0);
        let got = PathLossModel::Vehicular {
            bs_antenna_height_m: dh,
        }
        .path_loss_db(r, f)
        .map_err(|e| e.to_string())?;
        let want = reference::vehicular_db(r / 1000.0, f, dh);
        ensure(rel_close(got, want), format!("vehicular r={r} got {got} want {want}"))?;
        compared += 4;
    }

    let models = [
        PathLossModel::free_space(),
        PathLossModel::erceg_hilly(3500.0),
        PathLossModel::PedestrianOutdoorIndoor,
        PathLossModel::vehicular(),
    ];
    let mut pairs = 0;
    for model in models {
        for _ in 0..1000 {
            let a = rng.random_range(100.0..20_000.0);
            let b = rng.random_range(100.0..20_000.0);
            if a == b {
                continue;
            }
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            let f = rng.random_range(700.0..6000.0);
            let ln = model.path_loss_db(near, f).map_err(|e| e.to_string())?;
            let lf = model.path_loss_db(far, f).map_err(|e| e.to_string())?;
            ensure(
                ln < lf,
                format!("{} not increasing: {near} m {ln} dB, {far} m {lf} dB", model.name()),
            )?;
            pairs += 1;
        }
    }
    Ok(format!(
        "{compared} draws match the reference within 1e-9; {pairs} distance pairs monotone"
    ))
}

// 3 -------------------------------------------------------------------------

/// Twenty packets of one 1000-byte CBR stream at 10 ms spacing. Packets 4 and
/// 13 are lost; packet k otherwise waits (k mod 3) ms in the queue.
fn synthetic_log() -> Vec<PacketOutcome> {
    (0..20u64)
        .map(|k| {
            let created = 10.0 * k as f64;
            let base = PacketOutcome {
                packet_id: k,
                flow: FlowId(1),
                frame_index: k,
                size_bytes: 1000,
                status: OutcomeStatus::Delivered,
                created_ms: created,
                delivered_ms: None,
                resolved_ms: created,
                delays: None,
            };
            match k {
                4 => PacketOutcome {
                    status: OutcomeStatus::Dropped(DropReason::DeadlineExpired),
                    ..base
                },
                13 => PacketOutcome {
                    status: OutcomeStatus::Dropped(DropReason::BufferOverflow),
                    ..base
                },
                _ => {
                    let d = DelayComponents {
                        d_proc: 0.1,
                        d_queue: (k % 3) as f64,
                        d_trans: 2.0,
                        d_prop: 0.5,
                    };
                    let t = created + d.total();
                    PacketOutcome {
                        delivered_ms: Some(t),
                        resolved_ms: t,
                        delays: Some(d),
                        ..base
                    }
                }
            }
        })
        .collect()
}

fn metric_formulas() -> Check {
    let log = synthetic_log();
    let streams = BTreeMap::from([(
        FlowId(1),
        StreamInfo {
            name: "cbr".into(),
            nominal_interval_ms: 10.0,
            sent: 20,
        },
    )]);
    let r = compute_report(&log, &streams, 0.2).map_err(|e| e.to_string())?;

    // By hand: 18 delivered, queue waits (k mod 3) sum to 17 over them.
    let tol = 1e-9;
    ensure(r.delivered == 18 && r.dropped() == 2 && r.in_flight == 0, "counts")?;
    ensure((r.plr - 0.1).abs() < tol, format!("plr {}", r.plr))?;
    ensure(
        (r.mean_e2e_ms - (2.6 + 17.0 / 18.0)).abs() < tol,
        format!("e2e {}", r.mean_e2e_ms),
    )?;
    ensure(
        (r.mean_jitter_ms - 17.0 / 18.0).abs() < tol,
        format!("jitter {}", r.mean_jitter_ms),
    )?;
    ensure(
        (r.throughput_bps - 720_000.0).abs() < tol,
        format!("throughput {}", r.throughput_bps),
    )?;
    ensure((r.dropped_bps - 80_000.0).abs() < tol, "dropped_bps")?;
    for o in log.iter().filter(|o| o.is_delivered()) {
        let e2e = e2e_delay_ms(o).unwrap();
        ensure(
            (e2e - (o.delivered_ms.unwrap() - o.created_ms)).abs() < tol,
            "decomposition",
        )?;
    }
    ensure(e2e_delay_ms(&log[4]).is_none(), "dropped packet has no delay")?;
    let components = DelayComponents {
        d_proc: 0.1,
        d_queue: 2.0,
        d_trans: 3.685,
        d_prop: 0.6,
    };
    ensure((components.total() - 6.385).abs() < tol, "component sum")?;
    ensure((packet_jitter_ms(105.5f64, 100.0) - 5.5).abs() < tol, "jitter formula")?;
    ensure(
        (throughput_bps(1_250_000, 1.0f64).unwrap() - 1e7).abs() < tol,
        "throughput formula",
    )?;
    ensure(throughput_bps(1, 0.0f64).is_err(), "zero window rejected")?;

    // Boundaries.
    let plr_edge: f64 = packet_loss_ratio(1, 999);
    ensure(plr_edge == 1e-3, format!("plr(1, 999) = {plr_edge}"))?;
    ensure(
        acceptability(plr_edge, 6.4, 0.0).all_ok(),
        "1e-3 / 6.4 ms / 0 ms acceptable",
    )?;
    ensure(!acceptability(0.01, 6.4, 0.0).plr_ok, "plr 0.01")?;
    ensure(
        !acceptability(f64::from_bits(1e-3f64.to_bits() + 1), 0.0, 0.0).plr_ok,
        "plr just above 1e-3",
    )?;
    ensure(!acceptability(0.0, 400.0, 0.0).e2e_ok, "e2e 400 ms is not acceptable")?;
    ensure(
        acceptability(0.0, f64::from_bits(400f64.to_bits() - 1), 0.0).e2e_ok,
        "e2e just below 400 ms",
    )?;
    ensure(
        !acceptability(0.0, 0.0, 50.0).jitter_ok,
        "jitter 50 ms is not acceptable",
    )?;
    ensure(
        acceptability(0.0, 0.0, f64::from_bits(50f64.to_bits() - 1)).jitter_ok,
        "jitter just below 50 ms",
    )?;
    Ok("20-packet log: plr 0.1, e2e 3.5444 ms, jitter 0.9444 ms, 720 kbps; thresholds exact".into())
}

// 4 -------------------------------------------------------------------------

fn random_config(rng: &mut ChaCha8Rng) -> ScenarioConfig {
    let video = match rng.random_range(0..3) {
        0 => TraceSource::Cbr {
            fps: 30.0,
            frame_size_bytes: rng.random_range(500..40_000),
        },
        1 => TraceSource::SyntheticVbr {
            model: [VbrModel::svc(), VbrModel::mpeg4(), VbrModel::avc()][rng.random_range(0..3)].clone(),
            seed: rng.random(),
        },
        _ => TraceSource::File {
            path: PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/traces/avc.csv"),
            fps: None,
            label: None,
        },
    };
    let mut cfg = ScenarioConfig::with_video(video);
    cfg.duration_s = 10.0;
    cfg.seed = rng.random();
    let names: Vec<String> = default_mcs_table::<f64>().iter().map(|m| m.name()).collect();
    cfg.mcs_mode = if rng.random_bool(0.2) {
        McsModeConfig::Adaptive
    } else {
        McsModeConfig::Fixed {
            mcs: names[rng.random_range(0..names.len())].clone(),
            force: rng.random_bool(0.3),
        }
    };
    cfg.budget.model = match rng.random_range(0..4) {
        0 => PathLossModel::free_space(),
        1 => {
            let mut m = PathLossModel::erceg_hilly(3500.0);
            if let PathLossModel::ErcegSuburban { shadow_sigma_db, .. } = &mut m {
                *shadow_sigma_db = Some(8.0);
            }
            m
        }
        2 => PathLossModel::PedestrianOutdoorIndoor,
        _ => PathLossModel::vehicular(),
    };
    cfg.budget.tx_power_dbm = rng.random_range(10.0..60.0);
    cfg.cell.ss_distance_m = rng.random_range(100.0..200.0);
    for f in &mut cfg.flows {
        f.queue_capacity_bytes = rng.random_range(5_000..3_000_000);
    }
    if rng.random_bool(0.5) {
        let class = ServiceClass::ALL[rng.random_range(0..5)];
        let id = cfg.flows.len() as u32 + 1;
        let max_rate = rng.random_range(2e5..2e7);
        let qos = wimax_iptv::runner::class_qos(
            &QosParams {
                max_sustained_rate_bps: max_rate,
                ..Default::default()
            },
            class,
            rng.random_range(1e5..max_rate / 2.0),
        );
        cfg.flows.push(FlowConfig {
            id,
            name: None,
            class,
            qos,
            source: MediaKind::Video,
            queue_capacity_bytes: rng.random_range(5_000..3_000_000),
        });
    }
    if rng.random_bool(0.5) {
        cfg.client.playout_deadline_ms = Some(rng.random_range(50.0..1000.0));
    }
    cfg
}

fn serialized(cfg: &ScenarioConfig) -> Result<RunBytes, String> {
    let scenario = build_scenario(cfg, Path::new(".")).map_err(|e| e.to_string())?;
    let out = run(&scenario).map_err(|e| e.to_string())?;
    let mut log = Vec::new();
    write_packet_log(&out.outcomes, &mut log).map_err(|e| e.to_string())?;
    let m = &out.report.metrics;
    Ok((out.report.to_json(), log, m.sent, m.delivered, m.dropped(), m.in_flight))
}

fn conservation_and_determinism() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut packets = 0;
    for i in 0..50 {
        let cfg = random_config(&mut rng);
        let a = serialized(&cfg).map_err(|e| format!("scenario {i}: {e}"))?;
        let b = serialized(&cfg)?;
        let (_, _, sent, delivered, dropped, in_flight) = a;
        ensure(
            sent == delivered + dropped + in_flight,
            format!("scenario {i}: {sent} != {delivered} + {dropped} + {in_flight}"),
        )?;
        ensure(a.0 == b.0, format!("scenario {i}: reports differ"))?;
        ensure(a.1 == b.1, format!("scenario {i}: packet logs differ"))?;
        packets += sent;
    }
    Ok(format!(
        "50 scenarios, {packets} packets conserved, reports byte-identical"
    ))
}

// 5 -------------------------------------------------------------------------

fn overload_oracle() -> Check {
    // 41 667 B frames at 30 fps: 10.0 Mbps offered.
    let mut cfg = ScenarioConfig::with_video(TraceSource::Cbr {
        fps: 30.0,
        frame_size_bytes: 41_667,
    });
    cfg.flows.truncate(1);
    cfg.flows[0].queue_capacity_bytes = 1 << 40;
    cfg.flows[0].qos.max_latency_ms = Some(400.0);
    cfg.duration_s = 60.0;
    cfg.mcs_mode = McsModeConfig::Fixed {
        mcs: "QPSK-1/2".into(),
        force: false,
    };
    let scenario = build_scenario(&cfg, Path::new(".")).map_err(|e| e.to_string())?;
    let out = run(&scenario).map_err(|e| e.to_string())?;
    let m = &out.report.metrics;
    let predicted = 1.0 - 3.17 / 10.0;
    let rate = wimax_iptv::phy::find_mcs(&default_mcs_table::<f64>(), "QPSK-1/2")
        .unwrap()
        .rate_bps(Direction::Downlink);
    ensure(
        (m.plr - predicted).abs() <= 0.05,
        format!("plr {:.4} vs {predicted:.3}", m.plr),
    )?;
    ensure(
        (m.throughput_bps / rate - 1.0).abs() <= 0.02,
        format!("throughput {:.0} vs {rate}", m.throughput_bps),
    )?;
    Ok(format!(
        "plr {:.4} (predicted {predicted:.3}), throughput {:.4} Mbps (link 3.17)",
        m.plr,
        m.throughput_bps / 1e6
    ))
}

// 6 and 7 -------------------------------------------------------------------

struct Matrices {
    rows: BTreeMap<Family, Vec<MatrixRow>>,
    elapsed: Duration,
}

fn run_matrices() -> Result<Matrices, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rows = BTreeMap::new();
    for family in Family::ALL {
        let out = dir.path().join(family.as_str());
        run_matrix(family, &base_config_path(), &out, RunOptions::default(), false).map_err(|e| e.to_string())?;
        let file = std::fs::File::open(out.join("matrix.csv")).map_err(|e| e.to_string())?;
        rows.insert(family, read_matrix_csv(file).map_err(|e| e.to_string())?);
    }
    Ok(Matrices {
        rows,
        elapsed: start.elapsed(),
    })
}

fn cell<'a>(rows: &'a [MatrixRow], mcs: &str, axis: &str) -> Result<&'a MatrixRow, String> {
    rows.iter()
        .find(|r| r.mcs == mcs && r.axis_value == axis)
        .ok_or_else(|| format!("no row for {mcs} / {axis}"))
}

fn orderings(m: &Matrices) -> Check {
    // (a) Path-loss models at 64QAM-3/4, 150 m.
    let pl = &m.rows[&Family::PathLossFamily];
    let tp = |axis: &str| cell(pl, "64QAM-3/4", axis).map(|r| r.throughput_bps);
    let models = ["free_space", "erceg_suburban", "pedestrian", "vehicular"];
    let free = tp("free_space")?;
    let veh = tp("vehicular")?;
    for other in models {
        ensure(free >= tp(other)?, format!("(a) free space {free} below {other}"))?;
        ensure(veh <= tp(other)?, format!("(a) vehicular {veh} above {other}"))?;
    }
    ensure(free > veh, format!("(a) free space {free} not above vehicular {veh}"))?;
    let veh_drop = cell(pl, "64QAM-3/4", "vehicular")?.dropped_bps;
    for other in models {
        ensure(
            veh_drop >= cell(pl, "64QAM-3/4", other)?.dropped_bps,
            "(a) vehicular drops not highest",
        )?;
    }

    // (b) Jitter under overload: the SVC stream exceeds the QPSK rates.
    let jitter = |mcs: &str| cell(pl, mcs, "free_space").map(|r| r.mean_jitter_ms);
    let overloaded = ["QPSK-1/2", "QPSK-3/4"];
    for q in overloaded {
        let dropped = cell(pl, q, "free_space")?.dropped_bps;
        ensure(dropped > 0.0, format!("(b) {q} is not overloaded"))?;
        for hi in ["16QAM-1/2", "16QAM-3/4", "64QAM-1/2", "64QAM-2/3", "64QAM-3/4"] {
            ensure(
                jitter(hi)? <= jitter(q)?,
                format!("(b) jitter {hi} {} above {q} {}", jitter(hi)?, jitter(q)?),
            )?;
        }
    }

    // (c) Service classes, every MCS row.
    let cl = &m.rows[&Family::ClassFamily];
    let mcs_names: Vec<String> = default_mcs_table::<f64>().iter().map(|p| p.name()).collect();
    for mcs in &mcs_names {
        let rt = cell(cl, mcs, "rtPS")?;
        for other in ["nrtPS", "BE"] {
            let o = cell(cl, mcs, other)?;
            ensure(
                rt.throughput_bps >= o.throughput_bps,
                format!(
                    "(c) {mcs}: rtPS {} below {other} {}",
                    rt.throughput_bps, o.throughput_bps
                ),
            )?;
        }
        for other in ["UGS", "ertPS"] {
            let o = cell(cl, mcs, other)?;
            ensure(
                o.dropped_bps >= rt.dropped_bps,
                format!(
                    "(c) {mcs}: {other} drops {} below rtPS {}",
                    o.dropped_bps, rt.dropped_bps
                ),
            )?;
        }
    }
    Ok(format!(
        "(a) free space {:.2} Mbps > vehicular {:.2} Mbps; (b) QPSK-1/2 jitter {:.1} ms vs 64QAM-3/4 {:.1} ms; (c) holds on all {} MCS rows",
        free / 1e6,
        veh / 1e6,
        jitter("QPSK-1/2")?,
        jitter("64QAM-3/4")?,
        mcs_names.len()
    ))
}

fn cardinality(m: &Matrices) -> Check {
    let counts: Vec<usize> = Family::ALL.iter().map(|f| m.rows[f].len()).collect();
    ensure(counts == [3, 28, 35], format!("row counts {counts:?}"))?;
    let failed = m.rows.values().flatten().filter(|r| r.failed()).count();
    ensure(failed == 0, format!("{failed} rows failed"))?;
    Ok("3 + 28 + 35 = 66 rows".into())
}

// ---------------------------------------------------------------------------

fn report(id: &str, title: &str, limit: Duration, elapsed: Duration, result: Check) -> bool {
    let result = result.and_then(|msg| {
        if elapsed <= limit {
            Ok(msg)
        } else {
            Err(format!("took {elapsed:.2?}, limit {limit:?}"))
        }
    });
    match &result {
        Ok(msg) => println!("PASS criterion {id} {title} [{elapsed:.2?}]: {msg}"),
        Err(msg) => println!("FAIL criterion {id} {title} [{elapsed:.2?}]: {msg}"),
    }
    result.is_ok()
}

fn timed(f: impl FnOnce() -> Check) -> (Duration, Check) {
    let start = Instant::now();
    let r = f();
    (start.elapsed(), r)
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;

    let (t, r) = timed(mcs_table);
    ok &= report("1", "MCS table fidelity", secs(1), t, r);
    let (t, r) = timed(path_loss_oracle);
    ok &= report("2", "path-loss oracle equivalence", secs(5), t, r);
    let (t, r) = timed(metric_formulas);
    ok &= report("3", "metric formulas", secs(1), t, r);
    let (t, r) = timed(conservation_and_determinism);
    ok &= report("4", "conservation and determinism", secs(60), t, r);
    let (t, r) = timed(overload_oracle);
    ok &= report("5", "overload oracle", secs(10), t, r);

    match run_matrices() {
        Ok(m) => {
            let (t, r) = timed(|| orderings(&m));
            ok &= report("6", "scenario-family orderings", secs(300), m.elapsed + t, r);
            let (t, r) = timed(|| cardinality(&m));
            ok &= report("7", "matrix cardinality", secs(300), m.elapsed + t, r);
        }
        Err(e) => {
            ok &= report(
                "6",
                "scenario-family orderings",
                secs(300),
                Duration::ZERO,
                Err(e.clone()),
            );
            ok &= report("7", "matrix cardinality", secs(300), Duration::ZERO, Err(e));
        }
    }

    if ok {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
}
