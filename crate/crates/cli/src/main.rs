use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use swarmtune::harness::{self, RunOptions};

#[derive(Parser)]
#[command(
    name = "swarmtune",
    version,
    about = "Tune MAV altitude gains with a simulated swarm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Inproc,
    Tcp,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Inproc => "inproc",
            Mode::Tcp => "tcp",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tune once per configured seed; writes runs.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the config's transport.
        #[arg(long, value_enum)]
        transport: Option<Mode>,
        /// TCP listen address (implies --transport tcp).
        #[arg(long)]
        listen: Option<SocketAddr>,
        /// Wait for `agent` processes instead of spawning agents.
        #[arg(long, requires = "listen")]
        external_agents: bool,
    },
    /// Brute-force the gain grid; writes grid.csv and grid-meta.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Check a run's tuned gains against a sweep's grid oracle.
    Verify {
        /// Directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        /// Relative cost slack; accepts `inf`.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Fly as one MAV for a coordinator started with --external-agents.
    Agent {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        connect: SocketAddr,
        #[arg(long)]
        mav: u32,
        /// Serve only this seed instead of every configured one.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            out,
            transport,
            listen,
            external_agents,
        } => {
            let transport = match (transport, listen) {
                (Some(Mode::Inproc), Some(_)) => anyhow::bail!("--listen needs the tcp transport"),
                (None, Some(_)) => Some(Mode::Tcp),
                (t, _) => t,
            };
            let opts = RunOptions {
                transport: transport.map(|m| m.name().to_owned()),
                listen,
                external_agents,
            };
            let record = harness::cmd_run(&config, &out, &opts)
                .with_context(|| format!("run {}", config.display()))?;
            let s = &record.summary;
            let pm = |stat: &harness::Stat| match stat.std {
                Some(sd) => format!("{:.4} ± {:.4}", stat.mean, sd),
                None => format!("{:.4}", stat.mean),
            };
            println!(
                "{} runs: k_P = {}, k_D = {}, J = {}, duration {} s",
                s.runs,
                pm(&s.k_p),
                pm(&s.k_d),
                pm(&s.final_j),
                s.duration_s.mean
            );
            println!("wrote {}", out.display());
        }
        Command::Sweep {
            config,
            out,
            grid,
            reps,
        } => {
            let g = harness::cmd_sweep(&config, &out, grid, reps)
                .with_context(|| format!("sweep {}", config.display()))?;
            println!(
                "argmin k_p={} k_d={} mean J={}",
                g.argmin.k_p, g.argmin.k_d, g.argmin.mean_j
            );
            println!("wrote {}", out.join("grid.csv").display());
        }
        Command::Verify { run, grid, delta } => {
            let report = harness::cmd_verify(&run, &grid, delta).context("verify")?;
            print!("{}", report.render());
            if !report.all_pass() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Agent {
            config,
            connect,
            mav,
            seed,
        } => harness::cmd_agent(&config, mav, connect, seed).context("agent")?,
    }
    Ok(ExitCode::SUCCESS)
}
