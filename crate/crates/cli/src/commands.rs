//! Subcommand implementations. Every command writes a `config_snapshot`
//! into its output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use ehplan_core::harvest::{
    load_irradiance_csv, read_activity_csv, read_harvest_csv, write_activity_csv,
    write_harvest_csv, write_irradiance_csv,
};
use ehplan_core::predictor::{persistence_mae, Forecaster};
use ehplan_core::sim::{
    compute_metrics, generate_users, quantiles, run_experiment, train_pooled, ExperimentResult,
    ExperimentSpec, MetricTables, Policy, PredictionSource, UserTrace,
};
use ehplan_core::Plan;

use crate::config::Settings;

const MANIFEST: &str = "dataset.txt";

/// How policies that need predictions get them.
#[derive(Debug, Clone)]
pub enum Predictions {
    Ideal,
    Model(PathBuf),
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn user_dir(root: &Path, user: usize) -> PathBuf {
    root.join(format!("user_{user}"))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Records the command, the resolved settings and hashes of every input.
pub fn write_snapshot(out: &Path, command: &str, settings: &Settings, inputs: &[PathBuf]) -> Result<()> {
    let mut w = create(&out.join("config_snapshot"))?;
    writeln!(w, "# command: {command}")?;
    write!(w, "{}", settings.snapshot())?;
    for p in inputs {
        writeln!(w, "# input {} sha256 {}", p.display(), sha256_file(p)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn gen_data(settings: &Settings, days: usize, out: &Path) -> Result<Vec<UserTrace>> {
    let spec = settings.data_spec(days)?;
    let users = generate_users(&spec).map_err(|e| anyhow!("{e}"))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut m = create(&out.join(MANIFEST))?;
    writeln!(m, "users = {}", users.len())?;
    writeln!(m, "days = {days}")?;
    writeln!(m, "start_date = {}", spec.start)?;
    writeln!(m, "interval_seconds = {}", settings.energy.interval_seconds)?;
    writeln!(m, "seed = {}", spec.seed)?;
    m.flush()?;
    for u in &users {
        let dir = user_dir(out, u.user);
        fs::create_dir_all(&dir)?;
        let mut w = create(&dir.join("irradiance.csv"))?;
        write_irradiance_csv(&u.irradiance, &mut w)?;
        w.flush()?;
        let mut w = create(&dir.join("activity.csv"))?;
        write_activity_csv(&u.schedule, &mut w)?;
        w.flush()?;
        let mut w = create(&dir.join("harvest.csv"))?;
        write_harvest_csv(&u.harvest, &mut w)?;
        w.flush()?;
    }
    write_snapshot(out, "gen-data", settings, &[])?;
    Ok(users)
}

/// Files making up a dataset, in a fixed order.
pub fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let users = manifest_value(dir, "users")?.parse::<usize>()?;
    let mut files = vec![dir.join(MANIFEST)];
    for u in 0..users {
        for f in ["irradiance.csv", "activity.csv", "harvest.csv"] {
            files.push(user_dir(dir, u).join(f));
        }
    }
    Ok(files)
}

fn manifest_value(dir: &Path, key: &str) -> Result<String> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
        .ok_or_else(|| anyhow!("{}: missing `{key}`", path.display()))
}

pub fn load_data(dir: &Path, settings: &Settings) -> Result<Vec<UserTrace>> {
    let users: usize = manifest_value(dir, "users")?.parse()?;
    let interval_seconds: f64 = manifest_value(dir, "interval_seconds")?.parse()?;
    if interval_seconds != settings.energy.interval_seconds {
        bail!(
            "config key `interval_seconds`: {} does not match the dataset's {interval_seconds}",
            settings.energy.interval_seconds
        );
    }
    let ipd = settings.intervals_per_day()?;
    (0..users)
        .map(|user| {
            let d = user_dir(dir, user);
            let irradiance = load_irradiance_csv(&d.join("irradiance.csv"), interval_seconds)?;
            let schedule = read_activity_csv(&d.join("activity.csv"), interval_seconds, ipd)?;
            let harvest = read_harvest_csv(&d.join("harvest.csv"), interval_seconds, schedule.start)?;
            if harvest.len() != schedule.len() {
                bail!("user {user}: harvest and activity lengths differ");
            }
            Ok(UserTrace {
                user,
                irradiance,
                harvest,
                schedule,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| anyhow!("loading {}: {e}", dir.display()))
}

/// First evaluation day and number of evaluation days.
fn eval_window(users: &[UserTrace], settings: &Settings) -> Result<(usize, usize)> {
    let total = users.iter().map(UserTrace::days).min().unwrap_or(0);
    if total <= settings.train_days {
        bail!(
            "dataset has {total} days, nothing left after {} training days",
            settings.train_days
        );
    }
    Ok((settings.train_days, settings.eval_days.min(total - settings.train_days)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub held_out_mae_j: f64,
    pub persistence_mae_j: f64,
}

pub fn train(settings: &Settings, data: &Path, out: &Path) -> Result<TrainReport> {
    let users = load_data(data, settings)?;
    let features = settings.features()?;
    let forecaster = train_pooled(&users, settings.train_days, &features, &settings.ensemble)
        .map_err(|e| anyhow!("{e}"))?;
    let mut w = create(out)?;
    forecaster.write_to(&mut w)?;
    w.flush()?;

    let (first, days) = eval_window(&users, settings)?;
    let ipd = features.intervals_per_day;
    let range = first * ipd..(first + days) * ipd;
    let (mut model, mut persistence) = (0.0, 0.0);
    for u in &users {
        model += forecaster
            .one_step_mae(&u.harvest.values_j, &u.schedule, range.clone())
            .map_err(|e| anyhow!("{e}"))?;
        persistence += persistence_mae(&u.harvest.values_j, range.clone(), ipd);
    }
    let n = users.len().max(1) as f64;
    let report = TrainReport {
        held_out_mae_j: model / n,
        persistence_mae_j: persistence / n,
    };
    let snapshot_dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut inputs = dataset_files(data)?;
    inputs.push(out.to_path_buf());
    write_snapshot(snapshot_dir, "train", settings, &inputs)?;
    Ok(report)
}

pub fn load_model(path: &Path) -> Result<Forecaster> {
    let f = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
    Forecaster::read_from(BufReader::new(f)).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Runs `policies` on the evaluation window of the dataset.
pub fn experiment(
    settings: &Settings,
    users: &[UserTrace],
    policies: &[Policy],
    predictions: &Predictions,
    jobs: usize,
) -> Result<ExperimentResult> {
    let params = settings.sim_params()?;
    let (first_day, days) = eval_window(users, settings)?;
    let forecaster = match predictions {
        Predictions::Model(p) => Some(load_model(p)?),
        Predictions::Ideal => None,
    };
    let source = match &forecaster {
        Some(f) => PredictionSource::Forecast {
            forecaster: f,
            k: settings.k,
        },
        None => PredictionSource::Ideal,
    };
    let spec = ExperimentSpec {
        policies: policies.to_vec(),
        first_day,
        days,
        params,
        source,
        jobs,
    };
    let result = run_experiment(users, &spec).map_err(|e| anyhow!("{e}"))?;
    if !result.traces_identical() {
        bail!("policies saw different traces");
    }
    Ok(result)
}

fn inputs_for(data: &Path, predictions: &Predictions) -> Result<Vec<PathBuf>> {
    let mut inputs = dataset_files(data)?;
    if let Predictions::Model(p) = predictions {
        inputs.push(p.clone());
    }
    Ok(inputs)
}

pub fn simulate(
    settings: &Settings,
    data: &Path,
    policy: Policy,
    predictions: &Predictions,
    jobs: usize,
    out: &Path,
) -> Result<ExperimentResult> {
    let users = load_data(data, settings)?;
    let result = experiment(settings, &users, &[policy], predictions, jobs)?;
    fs::create_dir_all(out.join("plans"))?;
    let tables = compute_metrics(&result);
    let mut w = create(&out.join("daily.csv"))?;
    tables.write_daily(&mut w)?;
    w.flush()?;
    for run in &result.runs {
        let horizon = settings.energy.horizon_intervals;
        let plan = Plan {
            charge_flags: run.days.iter().flat_map(|d| d.charge_flags.clone()).collect(),
            consumption_j: run.days.iter().flat_map(|d| d.consumption_j.clone()).collect(),
            projected_battery_j: run.days.iter().flat_map(|d| d.battery_j[1..].to_vec()).collect(),
            first_interval_index: settings.train_days * horizon,
        };
        let mut w = create(&out.join("plans").join(format!("{}_user{}.csv", policy, run.user)))?;
        plan.write_csv(&mut w)?;
        w.flush()?;
    }
    write_snapshot(out, &format!("simulate --policy {policy}"), settings, &inputs_for(data, predictions)?)?;
    Ok(result)
}

pub fn write_tables(tables: &MetricTables, out: &Path) -> Result<()> {
    let mut w = create(&out.join("metrics_monthly.csv"))?;
    tables.write_monthly(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("violations_hist.csv"))?;
    tables.write_hist(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("daily.csv"))?;
    tables.write_daily(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn compare(
    settings: &Settings,
    data: &Path,
    policies: &[Policy],
    predictions: &Predictions,
    jobs: usize,
    out: &Path,
) -> Result<MetricTables> {
    let users = load_data(data, settings)?;
    let result = experiment(settings, &users, policies, predictions, jobs)?;
    let tables = compute_metrics(&result);
    fs::create_dir_all(out)?;
    write_tables(&tables, out)?;
    let names: Vec<&str> = policies.iter().map(|p| p.as_str()).collect();
    write_snapshot(
        out,
        &format!("compare --policies {}", names.join(",")),
        settings,
        &inputs_for(data, predictions)?,
    )?;
    Ok(tables)
}

/// One row of the accuracy-floor sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a_min: f64,
    pub policy: Policy,
    /// Daily charging energy over all users and days.
    pub charging_j: [f64; 5],
}

pub fn sweep_amin(
    settings: &Settings,
    data: &Path,
    values: &[f64],
    policies: &[Policy],
    predictions: &Predictions,
    jobs: usize,
    out: &Path,
) -> Result<Vec<SweepRow>> {
    let users = load_data(data, settings)?;
    let mut rows = Vec::new();
    for &a in values {
        let mut s = settings.clone();
        s.a_min = a;
        let result = experiment(&s, &users, policies, predictions, jobs)?;
        for &p in policies {
            let charging: Vec<f64> = result.days_of(p).map(|d| d.charging_energy_j).collect();
            rows.push(SweepRow {
                a_min: a,
                policy: p,
                charging_j: quantiles(&charging),
            });
        }
    }
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("sweep_amin.csv"))?;
    writeln!(w, "a_min,policy,min,q1,median,q3,max")?;
    for r in &rows {
        let [a, b, c, d, e] = r.charging_j;
        writeln!(w, "{},{},{a:.6},{b:.6},{c:.6},{d:.6},{e:.6}", r.a_min, r.policy)?;
    }
    w.flush()?;
    let list: Vec<String> = values.iter().map(f64::to_string).collect();
    write_snapshot(
        out,
        &format!("sweep-amin --values {}", list.join(",")),
        settings,
        &inputs_for(data, predictions)?,
    )?;
    Ok(rows)
}
