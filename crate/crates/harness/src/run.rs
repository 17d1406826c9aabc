//! Dispatch from a validated configuration to the core experiments.

use std::path::Path;

use serde::Serialize;
use ssotfs_core::analysis::{avg_determinant_experiment, DetEvalSetup};
use ssotfs_core::comm::{fer_experiment, FerSeries, FerSetup};
use ssotfs_core::radar::{aoa_demo_experiment, miss_detection_experiment, AoaDemoSetup, MissDetectionSetup};
use ssotfs_core::stats::CurvePoint;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::table::ResultTable;

/// Build identifier recorded in every output: crate version plus an optional
/// revision supplied at compile time through `SSOTFS_BUILD_REV`.
pub fn build_id() -> String {
    match option_env!("SSOTFS_BUILD_REV") {
        Some(rev) => format!("ssotfs-{}+{rev}", env!("CARGO_PKG_VERSION")),
        None => format!("ssotfs-{}", env!("CARGO_PKG_VERSION")),
    }
}

fn x_axis(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::AoaDemo => "receive angular index",
        ExperimentKind::MissDetection => "radar SNR alpha_total/N0 [dB]",
        ExperimentKind::Fer => "average symbol SNR Es/N0 [dB]",
        ExperimentKind::DetEval => "squared Euclidean distance d_E^2",
    }
}

fn metric_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::AoaDemo => "normalised block trace",
        ExperimentKind::MissDetection => "miss-detection probability",
        ExperimentKind::Fer => "frame error rate",
        ExperimentKind::DetEval => "mean det(Omega)",
    }
}

fn metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut m = vec![
        ("build".to_string(), build_id()),
        ("kind".to_string(), cfg.kind.label().to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("config_sha256".to_string(), cfg.hash()),
        ("x".to_string(), x_axis(cfg.kind).to_string()),
        ("metric".to_string(), metric_name(cfg.kind).to_string()),
    ];
    if cfg.kind == ExperimentKind::Fer && cfg.coded {
        // Rate-1/2 code: each coded BPSK/QPSK bit carries half an information bit.
        m.push(("eb_n0_offset_db".to_string(), format!("{:.4}", 10.0 * 2f64.log10())));
    }
    m
}

fn fer_series(cfg: &ExperimentConfig) -> Vec<FerSeries> {
    let mut out = Vec::new();
    for p in &cfg.precoding {
        for a in &cfg.power_allocation {
            out.push(FerSeries {
                label: format!("precoding={}/alloc={}", p.label(), a.policy().label()),
                precoding: p.policy(),
                allocation: a.policy(),
                doppler: cfg.doppler_model(),
                detector: cfg.detector_kind(),
            });
        }
    }
    out
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    let params = cfg.frame_params()?;
    let points = match cfg.kind {
        ExperimentKind::AoaDemo => aoa_demo_experiment(&AoaDemoSetup {
            params,
            users: cfg.users,
            paths: cfg.paths,
            l_max: cfg.l_max,
            k_max: cfg.k_max,
            doppler: cfg.doppler_model(),
            constellation: cfg.constellation_kind(),
            allocation: cfg.power_allocation[0].policy(),
            beam_widths: cfg.n_range.clone(),
            snr_db: cfg.snr_db[0],
            frames: cfg.trials,
            seed: cfg.seed,
        })?,
        ExperimentKind::MissDetection => miss_detection_experiment(&MissDetectionSetup {
            params,
            users: cfg.users,
            paths: cfg.paths,
            l_max: cfg.l_max,
            k_max: cfg.k_max,
            doppler: cfg.doppler_model(),
            n_range: cfg.n_range[0],
            constellation: cfg.constellation_kind(),
            precoding: cfg.precoding[0].policy(),
            allocations: cfg.power_allocation.iter().map(|a| a.policy()).collect(),
            snr_db: cfg.snr_db.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
        })?,
        ExperimentKind::Fer => fer_experiment(&FerSetup {
            params,
            users: cfg.users,
            paths: cfg.paths,
            l_max: cfg.l_max,
            k_max: cfg.k_max,
            policy: cfg.delay_doppler(),
            min_doppler_separation: cfg.min_doppler_separation,
            n_range: cfg.n_range[0],
            constellation: cfg.constellation_kind(),
            coded: cfg.coded,
            mp: cfg.mp_options(),
            series: fer_series(cfg),
            snr_db: cfg.snr_db.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
        })?,
        ExperimentKind::DetEval => avg_determinant_experiment(&DetEvalSetup {
            params,
            path_counts: cfg.path_counts.clone(),
            l_max: cfg.l_max,
            k_max: cfg.k_max,
            min_doppler_separation: cfg.min_doppler_separation,
            repeats: cfg.repeats.clone(),
            policies: cfg.det_policies.iter().map(|p| p.policy()).collect(),
            draws: cfg.trials,
            seed: cfg.seed,
        })?,
    };
    Ok(points)
}

/// Runs the experiment, on a dedicated pool of `threads` workers when given.
///
/// Trials draw from per-trial random streams and results are reduced in trial
/// order, so the table does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ResultTable> {
    cfg.validate()?;
    let rows = match threads {
        Some(0) => return Err(HarnessError::validation("threads", "must be positive")),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(|| dispatch(cfg))?,
        None => dispatch(cfg)?,
    };
    Ok(ResultTable::new(metadata(cfg), rows))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    build: String,
    config_sha256: String,
    seed: u64,
    threads: Option<usize>,
    elapsed_seconds: f64,
    rows: usize,
    config: &'a ExperimentConfig,
}

/// Per-run JSON metadata next to the CSV. Unlike the CSV it records the
/// worker count and wall time, so it is not expected to be reproducible.
pub fn write_sidecar(
    cfg: &ExperimentConfig,
    table: &ResultTable,
    threads: Option<usize>,
    elapsed_seconds: f64,
    path: &Path,
) -> Result<()> {
    let doc = Sidecar {
        build: build_id(),
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        threads,
        elapsed_seconds,
        rows: table.rows.len(),
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}
