use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_file, ExperimentConfig, HarnessError, SweepConfig};
use crate::plant::{fly_primitive, GainMap, PlantParams};
use crate::tuner::GainPoint;

/// One `grid.csv` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub k_p: f64,
    pub k_d: f64,
    pub mean_j: f64,
    pub log10_mean_j: f64,
}

impl GridNode {
    pub fn gains(&self) -> GainPoint {
        GainPoint {
            k_p: self.k_p,
            k_d: self.k_d,
        }
    }
}

/// Written next to `grid.csv` so `verify` can refuse a foreign oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub oracle_digest: String,
    pub plant: PlantParams,
    pub gain_map: GainMap,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// `k_p`-major, `grid * grid` nodes.
    pub nodes: Vec<GridNode>,
    pub argmin: GridNode,
}

impl GridResult {
    /// Index of the argmin node as `(i_kp, i_kd)`.
    pub fn argmin_cell(&self) -> (usize, usize) {
        let g = (self.nodes.len() as f64).sqrt().round() as usize;
        let i = self
            .nodes
            .iter()
            .position(|n| n == &self.argmin)
            .expect("argmin is a node");
        (i / g, i % g)
    }
}

/// Mean tracking cost of `p` over the sweep's repetition seeds.
pub fn oracle_cost(p: GainPoint, plant: &PlantParams, gm: &GainMap, sweep: &SweepConfig) -> f64 {
    sweep
        .seeds()
        .map(|s| fly_primitive(p, plant, gm, s).cost)
        .sum::<f64>()
        / sweep.reps as f64
}

pub fn grid_axis(grid: usize) -> Vec<f64> {
    (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect()
}

/// Brute-force cost over the `grid x grid` lattice of the unit box.
pub fn sweep_grid(plant: &PlantParams, gm: &GainMap, sweep: &SweepConfig) -> GridResult {
    let axis = grid_axis(sweep.grid);
    let points: Vec<GainPoint> = axis
        .iter()
        .flat_map(|&k_p| axis.iter().map(move |&k_d| GainPoint { k_p, k_d }))
        .collect();
    let nodes: Vec<GridNode> = points
        .par_iter()
        .map(|&p| {
            let mean_j = oracle_cost(p, plant, gm, sweep);
            GridNode {
                k_p: p.k_p,
                k_d: p.k_d,
                mean_j,
                log10_mean_j: mean_j.log10(),
            }
        })
        .collect();
    // First minimum in row order wins ties.
    let argmin = *nodes
        .iter()
        .reduce(|best, n| if n.mean_j < best.mean_j { n } else { best })
        .expect("grid >= 2");
    GridResult { nodes, argmin }
}

/// Rows in lattice order followed by a repeat of the argmin row.
pub fn grid_csv(grid: &GridResult) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for n in grid.nodes.iter().chain(std::iter::once(&grid.argmin)) {
        w.serialize(n)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Csv(e.into_error().into()))
}

pub fn meta_path(grid_csv: &Path) -> PathBuf {
    grid_csv.with_file_name("grid-meta.json")
}

pub fn read_grid(path: &Path) -> Result<GridResult, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<GridNode> = r.deserialize().collect::<Result<_, _>>()?;
    let argmin = rows
        .pop()
        .ok_or_else(|| HarnessError::Grid(format!("{} has no rows", path.display())))?;
    let g = (rows.len() as f64).sqrt().round() as usize;
    if g < 2 || g * g != rows.len() || !rows.contains(&argmin) {
        return Err(HarnessError::Grid(format!(
            "{}: expected a square grid followed by its argmin row",
            path.display()
        )));
    }
    Ok(GridResult {
        nodes: rows,
        argmin,
    })
}

/// `sweep`: writes `grid.csv` and `grid-meta.json` to `out`.
pub fn cmd_sweep(
    config: &Path,
    out: &Path,
    grid: Option<usize>,
    reps: Option<usize>,
) -> Result<GridResult, HarnessError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(g) = grid {
        cfg.sweep.grid = g;
    }
    if let Some(r) = reps {
        cfg.sweep.reps = r;
    }
    cfg.validate()?;
    let result = sweep_grid(&cfg.plant, &cfg.gain_map, &cfg.sweep);
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let csv_path = out.join("grid.csv");
    write_file(&csv_path, &grid_csv(&result)?)?;
    let meta = GridMeta {
        oracle_digest: cfg.oracle_digest(),
        plant: cfg.plant,
        gain_map: cfg.gain_map,
        sweep: cfg.sweep,
    };
    write_file(&meta_path(&csv_path), &super::pretty_json(&meta))?;
    Ok(result)
}
