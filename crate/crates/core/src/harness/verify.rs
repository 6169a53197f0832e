use std::fmt::Write as _;
use std::path::Path;

use super::{
    meta_path, oracle_cost, read_grid, write_file, GridMeta, GridResult, HarnessError, RunRecord,
};
use crate::harness::SweepConfig;
use crate::plant::{GainMap, PlantParams};
use crate::tuner::GainPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyRow {
    pub seed: u64,
    pub gains: GainPoint,
    pub j: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub delta: f64,
    pub argmin: GainPoint,
    pub j_argmin: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "grid argmin k_p={} k_d={} J={} delta={}",
            self.argmin.k_p, self.argmin.k_d, self.j_argmin, self.delta
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "seed {}: k_p={} k_d={} J={} bound={} {}",
                r.seed,
                r.gains.k_p,
                r.gains.k_d,
                r.j,
                r.bound,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let _ = writeln!(
            s,
            "{} ({passed}/{})",
            if self.all_pass() { "PASS" } else { "FAIL" },
            self.rows.len()
        );
        s
    }
}

/// Checks each `(seed, gains)` against `J <= (1 + delta) * J(argmin)`,
/// re-flying the gains with the sweep's repetition seeds.
pub fn verify_gains(
    tuned: &[(u64, GainPoint)],
    grid: &GridResult,
    plant: &PlantParams,
    gm: &GainMap,
    sweep: &SweepConfig,
    delta: f64,
) -> VerifyReport {
    let j_argmin = grid.argmin.mean_j;
    let bound = if delta.is_infinite() {
        f64::INFINITY
    } else {
        (1.0 + delta) * j_argmin
    };
    let rows = tuned
        .iter()
        .map(|&(seed, gains)| {
            let j = oracle_cost(gains, plant, gm, sweep);
            VerifyRow {
                seed,
                gains,
                j,
                bound,
                pass: j <= bound,
            }
        })
        .collect();
    VerifyReport {
        delta,
        argmin: grid.argmin.gains(),
        j_argmin,
        rows,
    }
}

/// `verify`: compares a run directory's tuned gains with a sweep's grid
/// and writes `verify-report.txt` into the run directory.
pub fn cmd_verify(
    run_dir: &Path,
    grid_csv: &Path,
    delta: Option<f64>,
) -> Result<VerifyReport, HarnessError> {
    let record = RunRecord::load(&run_dir.join("summary.json"))?;
    let meta_file = meta_path(grid_csv);
    let text = std::fs::read_to_string(&meta_file).map_err(|e| HarnessError::io(&meta_file, e))?;
    let meta: GridMeta = serde_json::from_str(&text).map_err(|e| HarnessError::Json {
        path: meta_file.clone(),
        source: e,
    })?;
    let cfg = &record.config;
    if meta.oracle_digest != cfg.oracle_digest() {
        let mut diffs = Vec::new();
        if meta.plant != cfg.plant {
            diffs.push("plant");
        }
        if meta.gain_map != cfg.gain_map {
            diffs.push("gain_map");
        }
        if meta.sweep != cfg.sweep {
            diffs.push("sweep");
        }
        return Err(HarnessError::Mismatch(format!(
            "run and sweep configs differ in {}",
            if diffs.is_empty() {
                "digest".to_string()
            } else {
                diffs.join(", ")
            }
        )));
    }
    let grid = read_grid(grid_csv)?;
    let tuned: Vec<(u64, GainPoint)> = record
        .runs
        .iter()
        .map(|r| {
            (
                r.seed,
                GainPoint {
                    k_p: r.k_p,
                    k_d: r.k_d,
                },
            )
        })
        .collect();
    let delta = delta.unwrap_or(cfg.delta);
    if delta.is_nan() || delta < 0.0 {
        return Err(HarnessError::Config {
            field: "delta".into(),
            reason: format!("{delta} must be >= 0"),
        });
    }
    let report = verify_gains(&tuned, &grid, &cfg.plant, &cfg.gain_map, &cfg.sweep, delta);
    write_file(
        &run_dir.join("verify-report.txt"),
        report.render().as_bytes(),
    )?;
    Ok(report)
}
