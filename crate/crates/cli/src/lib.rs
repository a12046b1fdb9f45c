//! Command-line driver: data generation, predictor training, policy
//! simulation and comparison, and the accuracy-floor sweep.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use ehplan_core::sim::{parse_policies, Policy};

use commands::Predictions;
use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "ehplan", version, about = "Charging and energy-budget planning for harvesting wearables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Forecaster written by `train`; not needed with --ideal-predictions.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Plan with the actual harvest and activity instead of forecasts.
    #[arg(long)]
    pub ideal_predictions: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic irradiance, activity and harvest traces per user.
    GenData {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        users: Option<usize>,
        /// Defaults to training plus evaluation days.
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the harvest forecaster on the training days.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one policy over the evaluation days.
    Simulate {
        #[arg(long)]
        policy: Policy,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate several policies on identical traces and write metric tables.
    Compare {
        #[arg(long, default_value = "adaem,on-demand,energy-neutral,oracle")]
        policies: String,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Charging energy as a function of the minimum accuracy.
    SweepAmin {
        #[arg(long, default_value = "0.80,0.85,0.90,0.95")]
        values: String,
        #[arg(long, default_value = "adaem,oracle")]
        policies: String,
        #[command(flatten)]
        sim: SimArgs,
    },
}

fn settings(common: &Common) -> Result<Settings> {
    Settings::load(common.config.as_deref())
}

fn predictions(sim: &SimArgs, policies: &[Policy]) -> Result<Predictions> {
    if sim.ideal_predictions {
        return Ok(Predictions::Ideal);
    }
    match &sim.model {
        Some(m) => Ok(Predictions::Model(m.clone())),
        None if policies.contains(&Policy::AdaEm) => {
            bail!("--model is required for adaem unless --ideal-predictions is given")
        }
        None => Ok(Predictions::Ideal),
    }
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow::anyhow!("bad a_min value '{v}'")))
        .collect()
}

fn jobs(sim: &SimArgs) -> Result<usize> {
    if sim.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    Ok(sim.jobs)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            seed,
            users,
            days,
            out,
            common,
        } => {
            let mut s = settings(&common)?;
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = users {
                s.users = v;
            }
            let days = days.unwrap_or(s.train_days + s.eval_days);
            let traces = commands::gen_data(&s, days, &out)?;
            println!("wrote {} users x {days} days to {}", traces.len(), out.display());
        }
        Command::Train {
            data,
            out,
            trees,
            depth,
            common,
        } => {
            let mut s = settings(&common)?;
            if let Some(v) = trees {
                s.ensemble.trees = v;
            }
            if let Some(v) = depth {
                s.ensemble.max_depth = v;
            }
            let r = commands::train(&s, &data, &out)?;
            println!("held-out MAE {:.4} J", r.held_out_mae_j);
            println!("persistence MAE {:.4} J", r.persistence_mae_j);
        }
        Command::Simulate { policy, sim } => {
            let s = settings(&sim.common)?;
            let p = predictions(&sim, &[policy])?;
            let result = commands::simulate(&s, &sim.data, policy, &p, jobs(&sim)?, &sim.out)?;
            let days = result.runs.iter().map(|r| r.days.len()).sum::<usize>();
            println!("simulated {days} user-days, output in {}", sim.out.display());
        }
        Command::Compare { policies, sim } => {
            let s = settings(&sim.common)?;
            let list = parse_policies(&policies)?;
            let p = predictions(&sim, &list)?;
            commands::compare(&s, &sim.data, &list, &p, jobs(&sim)?, &sim.out)?;
            println!("metric tables in {}", sim.out.display());
        }
        Command::SweepAmin {
            values,
            policies,
            sim,
        } => {
            let s = settings(&sim.common)?;
            let list = parse_policies(&policies)?;
            let p = predictions(&sim, &list)?;
            let rows = commands::sweep_amin(&s, &sim.data, &parse_values(&values)?, &list, &p, jobs(&sim)?, &sim.out)?;
            for r in rows {
                println!("a_min {} {}: median charging {:.1} J", r.a_min, r.policy, r.charging_j[2]);
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run(Cli::try_parse_from(args)?)
}
