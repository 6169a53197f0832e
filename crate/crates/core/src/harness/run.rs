use std::io::ErrorKind;
use std::net::SocketAddr;
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_file, ExperimentConfig, HarnessError};
use crate::swarm::{run_experiment, ExperimentResult, MavAgent};
use crate::transport::{serve_agent, transport_registry, TransportConfig, TransportError};

/// Where the coordinator's transport comes from for one invocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config's transport mode.
    pub transport: Option<String>,
    pub listen: Option<SocketAddr>,
    /// Wait for `agent` processes instead of spawning agents in-process.
    pub external_agents: bool,
}

/// One `runs.csv` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub k_p: f64,
    pub k_d: f64,
    pub duration_s: f64,
    pub total_evals: usize,
    pub final_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; `null` for a single run.
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() > 1)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub k_p: Stat,
    pub k_d: Stat,
    pub final_j: Stat,
    pub duration_s: Stat,
}

impl Summary {
    pub fn of(rows: &[RunRow]) -> Self {
        let col = |f: fn(&RunRow) -> f64| Stat::of(&rows.iter().map(f).collect::<Vec<_>>());
        Self {
            runs: rows.len(),
            k_p: col(|r| r.k_p),
            k_d: col(|r| r.k_d),
            final_j: col(|r| r.final_j),
            duration_s: col(|r| r.duration_s),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub runs: Vec<RunRow>,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json {
            path: path.to_owned(),
            source: e,
        })
    }
}

fn row(seed: u64, r: &ExperimentResult) -> RunRow {
    RunRow {
        seed,
        k_p: r.final_gains.k_p,
        k_d: r.final_gains.k_d,
        duration_s: r.simulated_duration_s,
        total_evals: r.total_evals,
        final_j: r.final_cost,
    }
}

/// Runs the experiment once per configured seed, in seed order.
pub fn run_seeds(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<Vec<(u64, ExperimentResult)>, HarnessError> {
    cfg.validate()?;
    let mode = opts.transport.as_deref().unwrap_or(&cfg.transport);
    let mut tcfg = TransportConfig::default();
    if let Some(addr) = opts.listen {
        tcfg.listen = addr;
    }
    if opts.external_agents {
        tcfg.external_agents = Some(cfg.n);
    }
    let fixed_port = tcfg.listen.port() != 0;
    let transport = transport_registry()
        .build(mode, tcfg)
        .map_err(TransportError::from)?;
    let one = |&seed: &u64| -> Result<(u64, ExperimentResult), HarnessError> {
        log::info!("seed {seed}: running over {}", transport.name());
        Ok((seed, run_experiment(&cfg.setup(seed)?, transport.as_ref())?))
    };
    // A fixed listen address can only host one experiment at a time.
    if opts.external_agents || fixed_port {
        cfg.seeds.iter().map(one).collect()
    } else {
        cfg.seeds.par_iter().map(one).collect()
    }
}

pub fn runs_csv(rows: &[RunRow]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Csv(e.into_error().into()))
}

/// `run`: writes `runs.csv`, `summary.json` and `results.json` to `out`.
pub fn cmd_run(config: &Path, out: &Path, opts: &RunOptions) -> Result<RunRecord, HarnessError> {
    let cfg = ExperimentConfig::load(config)?;
    let results = run_seeds(&cfg, opts)?;
    let rows: Vec<RunRow> = results.iter().map(|(s, r)| row(*s, r)).collect();
    let record = RunRecord {
        config_digest: cfg.digest(),
        summary: Summary::of(&rows),
        config: cfg,
        runs: rows,
    };
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    write_file(&out.join("runs.csv"), &runs_csv(&record.runs)?)?;
    write_file(&out.join("summary.json"), &super::pretty_json(&record))?;
    let per_seed: Vec<_> = results
        .iter()
        .map(|(seed, r)| serde_json::json!({ "seed": seed, "result": r }))
        .collect();
    write_file(&out.join("results.json"), &super::pretty_json(&per_seed))?;
    Ok(record)
}

/// `agent`: serves one MAV against a coordinator at `addr`, once per
/// configured seed (or only `seed`), reconnecting between experiments.
pub fn cmd_agent(
    config: &Path,
    mav: u32,
    addr: SocketAddr,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::load(config)?;
    if mav == 0 || mav as usize > cfg.n {
        return Err(HarnessError::Config {
            field: "mav".into(),
            reason: format!("MAV {mav} is outside 1..={}", cfg.n),
        });
    }
    let seeds = seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
    let plant = cfg.plants()[mav as usize - 1];
    for s in seeds {
        let deadline = Instant::now() + Duration::from_secs_f64(cfg.barrier_timeout_s);
        loop {
            let agent = MavAgent::new(mav, plant, cfg.gain_map, s);
            match serve_agent(addr, Box::new(agent)) {
                Ok(()) => break,
                Err(TransportError::Connection(e))
                    if e.kind() == ErrorKind::ConnectionRefused && Instant::now() < deadline =>
                {
                    thread::sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(e.into()),
            }
        }
        log::info!("MAV {mav}: experiment with seed {s} finished");
    }
    Ok(())
}
