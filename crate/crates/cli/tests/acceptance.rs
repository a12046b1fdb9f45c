//! End-to-end acceptance checks on the default synthetic scenario:
//! 5 users, 60 training days, one evaluation year, seed 0.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ehplan_cli::commands::{self, Predictions};
use ehplan_cli::config::Settings;
use ehplan_core::baselines::optimal_oracle;
use ehplan_core::predictor::persistence_mae;
use ehplan_core::sim::{
    compute_metrics, generate_users, train_pooled, DayResult, ExperimentResult, MetricTables, Policy,
};
use ehplan_core::{BatteryState, EnergyAccuracyProfile, EnergyConfig};

const JOBS: usize = 4;

// criterion 1
const IDEAL_MEDIAN_RATIO: f64 = 1.05;
const IDEAL_COUNT_SLACK: usize = 1;
const IDEAL_COUNT_SHARE: f64 = 0.95;
const IDEAL_RUNTIME: Duration = Duration::from_secs(300);
// criterion 2
const FORECAST_MEDIAN_RATIO: f64 = 1.10;
const SUMMER_MONTHS: [&str; 3] = ["2021-06", "2021-07", "2021-08"];
// criterion 3
const ORACLE_INSTANCES: usize = 500;
const ORACLE_MAX_T: usize = 12;
const ORACLE_RUNTIME: Duration = Duration::from_secs(120);
// criterion 5
const VIOLATION_GAP_FACTOR: usize = 10;
// criterion 6
const WINTER_MONTHS: [u32; 3] = [12, 1, 2];
const NEUTRAL_ACCURACY_SLACK: f64 = 0.02;
const ADAEM_ACCURACY_SHARE: f64 = 0.95;
// criterion 7
const SEASON_FACTOR: f64 = 2.0;
// criterion 9
const MAE_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const NONNEG_SAMPLES: usize = 10_000;
// criterion 10
const SWEEP: [f64; 4] = [0.80, 0.85, 0.90, 0.95];

struct Outcome {
    id: u8,
    pass: bool,
    text: String,
}

fn month(d: &DayResult) -> String {
    d.date.format("%Y-%m").to_string()
}

fn pooled_medians(tables: &MetricTables, policy: Policy, metric: &str) -> BTreeMap<String, f64> {
    tables
        .pooled(policy, metric)
        .into_iter()
        .map(|r| (r.month.clone(), r.stats[2]))
        .collect()
}

fn paired_days(r: &ExperimentResult, a: Policy, b: Policy) -> Vec<(&DayResult, &DayResult)> {
    let mut out = Vec::new();
    for run in r.runs.iter().filter(|x| x.policy == a) {
        let other = r.run(b, run.user).expect("paired run");
        out.extend(run.days.iter().zip(&other.days));
    }
    out
}

fn criterion_1(ideal: &ExperimentResult, tables: &MetricTables, elapsed: Duration) -> Outcome {
    let ours = pooled_medians(tables, Policy::AdaEm, "charging_j");
    let best = pooled_medians(tables, Policy::Oracle, "charging_j");
    let bad_months: Vec<String> = ours
        .iter()
        .filter(|(m, v)| **v > best[*m] * IDEAL_MEDIAN_RATIO)
        .map(|(m, v)| format!("{m} {v:.0}>{:.0}", best[m]))
        .collect();
    let pairs: Vec<_> = paired_days(ideal, Policy::AdaEm, Policy::Oracle)
        .into_iter()
        .filter(|(_, o)| o.feasible)
        .collect();
    let within = pairs
        .iter()
        .filter(|(a, o)| a.charging_intervals() <= o.charging_intervals() + IDEAL_COUNT_SLACK)
        .count();
    let share = within as f64 / pairs.len().max(1) as f64;
    Outcome {
        id: 1,
        pass: bad_months.is_empty() && share >= IDEAL_COUNT_SHARE && elapsed < IDEAL_RUNTIME,
        text: format!(
            "ideal predictions: monthly medians over {:.2}x oracle in {} months {:?}; count within +{IDEAL_COUNT_SLACK} on {within}/{} feasible days ({:.1}%); runtime {:.1}s",
            IDEAL_MEDIAN_RATIO,
            bad_months.len(),
            bad_months,
            pairs.len(),
            100.0 * share,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2(forecast: &ExperimentResult, tables: &MetricTables) -> Outcome {
    let ours = pooled_medians(tables, Policy::AdaEm, "charging_j");
    let best = pooled_medians(tables, Policy::Oracle, "charging_j");
    let bad_months: Vec<String> = ours
        .iter()
        .filter(|(m, v)| **v > best[*m] * FORECAST_MEDIAN_RATIO)
        .map(|(m, v)| format!("{m} {v:.0}>{:.0}", best[m]))
        .collect();
    let worst_ratio = ours
        .iter()
        .filter(|(m, _)| best[*m] > 0.0)
        .map(|(m, v)| v / best[m])
        .fold(0.0f64, f64::max);
    let spread = |p: Policy, m: &str| {
        let v: Vec<f64> = forecast
            .days_of(p)
            .filter(|d| month(d) == m)
            .map(|d| d.charging_energy_j)
            .collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let spreads: Vec<(String, f64, f64)> = SUMMER_MONTHS
        .iter()
        .map(|m| (m.to_string(), spread(Policy::AdaEm, m), spread(Policy::Oracle, m)))
        .collect();
    let spread_ok = spreads.iter().all(|(_, a, o)| a >= o);
    Outcome {
        id: 2,
        pass: bad_months.is_empty() && spread_ok,
        text: format!(
            "fitted predictor k=1: months over {:.2}x oracle median {:?}; largest monthly median ratio {:.3} (5% reported, not enforced); summer spread adaem vs oracle {:?}",
            FORECAST_MEDIAN_RATIO,
            bad_months,
            worst_ratio,
            spreads
                .iter()
                .map(|(m, a, o)| format!("{m}: {a:.0} vs {o:.0}"))
                .collect::<Vec<_>>()
        ),
    }
}

/// Smallest number of charging intervals over every assignment, by plain
/// enumeration; `None` when nothing is feasible.
fn brute_force_min_charges(h: &[f64], critical: &[bool], e0: f64, cfg: &EnergyConfig, min_c: f64) -> Option<usize> {
    let n = h.len();
    let mut best: Option<usize> = None;
    'outer: for bits in 0u32..(1 << n) {
        let mut e = e0;
        for i in 0..n {
            let on = bits >> i & 1 == 1;
            if on && critical[i] {
                continue 'outer;
            }
            let input = if on { cfg.e_charge_per_interval_j } else { 0.0 };
            e = (e + cfg.harvest_efficiency * h[i] + input - min_c).clamp(0.0, cfg.e_max_j);
            if e < cfg.e_min_j - 1e-9 {
                continue 'outer;
            }
        }
        if e >= cfg.e_target_j - 1e-9 {
            let k = bits.count_ones() as usize;
            best = Some(best.map_or(k, |b| b.min(k)));
        }
    }
    best
}

fn criterion_3() -> Outcome {
    let cfg = EnergyConfig::default();
    let prof = EnergyAccuracyProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let (mut tried, mut matched, mut mismatched) = (0usize, 0usize, Vec::new());
    while matched + mismatched.len() < ORACLE_INSTANCES {
        tried += 1;
        let n = rng.gen_range(1..=ORACLE_MAX_T);
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..8.0)).collect();
        let critical: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.25)).collect();
        let e0 = rng.gen_range(16.0..160.0);
        let a_min = [0.80, 0.85, 0.90, 0.95][rng.gen_range(0..4)];
        let min_c = prof.min_consumption_for(a_min).expect("profile covers a_min");
        let Some(k) = brute_force_min_charges(&h, &critical, e0, &cfg, min_c) else {
            continue;
        };
        let out = optimal_oracle(&h, BatteryState::new(e0), &cfg, &prof, a_min, &critical).expect("valid instance");
        if out.feasible && out.plan.charging_intervals() == k {
            matched += 1;
        } else {
            mismatched.push(tried);
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 3,
        pass: mismatched.is_empty() && elapsed < ORACLE_RUNTIME,
        text: format!(
            "oracle equals full enumeration on {matched}/{ORACLE_INSTANCES} feasible instances (T<={ORACLE_MAX_T}, {tried} drawn); runtime {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_4(ideal: &ExperimentResult) -> Outcome {
    let feasible: Vec<&DayResult> = ideal.days_of(Policy::AdaEm).filter(|d| d.feasible).collect();
    let violations: usize = feasible.iter().map(|d| d.violations()).sum();
    let skipped = ideal.days_of(Policy::AdaEm).count() - feasible.len();
    Outcome {
        id: 4,
        pass: violations == 0,
        text: format!(
            "ideal predictions: {violations} violations over {} feasible adaem days ({skipped} infeasible days excluded)",
            feasible.len()
        ),
    }
}

fn criterion_5(ideal: &ExperimentResult, forecast: &ExperimentResult) -> Outcome {
    let multi = |r: &ExperimentResult, p: Policy| r.days_of(p).filter(|d| d.violations() >= 2).count();
    let critical = |r: &ExperimentResult, p: Policy| -> usize {
        r.days_of(p).map(|d| d.report.critical_charging_violations).sum()
    };
    let (od, ad) = (multi(forecast, Policy::OnDemand), multi(forecast, Policy::AdaEm));
    let (odc, adc) = (critical(ideal, Policy::OnDemand), critical(ideal, Policy::AdaEm));
    let ideal_ad = multi(ideal, Policy::AdaEm);
    let energy_only = |r: &ExperimentResult, p: Policy| {
        r.days_of(p)
            .filter(|d| {
                let v = &d.report;
                v.energy_floor_violations + v.critical_charging_violations + usize::from(v.terminal_violation) >= 2
            })
            .count()
    };
    let (od_e, ad_e) = (energy_only(forecast, Policy::OnDemand), energy_only(forecast, Policy::AdaEm));
    Outcome {
        id: 5,
        pass: od > ad && od >= VIOLATION_GAP_FACTOR * ad && odc >= 1 && adc == 0,
        text: format!(
            "days with >=2 violations: on-demand {od}, adaem {ad} with fitted predictor ({ideal_ad} with ideal predictions), need {VIOLATION_GAP_FACTOR}x; counting energy constraints only: on-demand {od_e}, adaem {ad_e}; critical charging on-demand {odc}, adaem {adc} (ideal)"
        ),
    }
}

fn criterion_6(ideal: &ExperimentResult, forecast: &ExperimentResult, settings: &Settings) -> Outcome {
    use chrono::Datelike;
    let prof = &settings.profile;
    let limit = settings.energy.horizon_intervals as f64 * prof.min_consumption_for(settings.a_min).expect("a_min");
    let lean = |d: &DayResult| WINTER_MONTHS.contains(&d.date.month()) && d.harvest_j < limit;
    let neutral: Vec<f64> = forecast
        .days_of(Policy::EnergyNeutral)
        .filter(|d| lean(d))
        .map(DayResult::mean_accuracy)
        .collect();
    let neutral_mean = neutral.iter().sum::<f64>() / neutral.len().max(1) as f64;
    let ours: Vec<f64> = forecast
        .days_of(Policy::AdaEm)
        .filter(|d| lean(d))
        .map(DayResult::mean_accuracy)
        .collect();
    let ok_days = ours.iter().filter(|&&a| a >= settings.a_min - 1e-9).count();
    let share = ok_days as f64 / ours.len().max(1) as f64;
    let ideal_ok = ideal
        .days_of(Policy::AdaEm)
        .filter(|d| lean(d) && d.mean_accuracy() >= settings.a_min - 1e-9)
        .count();
    Outcome {
        id: 6,
        pass: !neutral.is_empty()
            && neutral_mean <= prof.floor_accuracy() + NEUTRAL_ACCURACY_SLACK
            && share >= ADAEM_ACCURACY_SHARE,
        text: format!(
            "{} lean winter days (harvest < {limit:.0} J): energy-neutral mean accuracy {neutral_mean:.4} (floor {:.2} + {NEUTRAL_ACCURACY_SLACK}); adaem meets a_min on {ok_days}/{} ({:.1}%) with the fitted predictor, {ideal_ok} with ideal predictions",
            neutral.len(),
            prof.floor_accuracy(),
            ours.len(),
            100.0 * share
        ),
    }
}

fn criterion_7(tables: &MetricTables) -> Outcome {
    let savings = pooled_medians(tables, Policy::AdaEm, "savings_j");
    let (peak_m, peak) = savings
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(m, v)| (m.clone(), *v))
        .unwrap_or_default();
    let (low_m, low) = savings
        .iter()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(m, v)| (m.clone(), *v))
        .unwrap_or_default();
    Outcome {
        id: 7,
        pass: peak >= SEASON_FACTOR * low,
        text: format!("median daily savings peak {peak_m} {peak:.1} J vs trough {low_m} {low:.1} J (ratio {:.2})", peak / low),
    }
}

fn criterion_8(forecast: &ExperimentResult, settings: &Settings) -> Outcome {
    let mut per_user: Vec<(usize, usize, usize)> = forecast
        .runs
        .iter()
        .filter(|r| r.policy == Policy::AdaEm)
        .map(|r| {
            let len = settings.exercise_lens[r.user % settings.exercise_lens.len()];
            let days = r.days.iter().filter(|d| d.report.accuracy_violations > 0).count();
            (len, r.user, days)
        })
        .collect();
    per_user.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let ok = per_user.windows(2).all(|w| w[1].2 <= w[0].2);
    Outcome {
        id: 8,
        pass: ok,
        text: format!(
            "adaem days with accuracy violations by exercise length (fitted predictor): {}",
            per_user
                .iter()
                .map(|(l, u, d)| format!("len {l} (user {u}): {d}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn criterion_9(settings: &Settings) -> Outcome {
    let features = settings.features().expect("features");
    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut negatives = 0;
    for seed in MAE_SEEDS {
        let mut s = settings.clone();
        s.seed = seed;
        s.ensemble.seed = seed;
        let users = generate_users(&s.data_spec(s.train_days + s.eval_days).expect("spec")).expect("users");
        let f = train_pooled(&users, s.train_days, &features, &s.ensemble).expect("train");
        let ipd = features.intervals_per_day;
        let held = s.train_days * ipd..(s.train_days + s.eval_days) * ipd;
        let (mut ours, mut naive) = (0.0, 0.0);
        for u in &users {
            ours += f.one_step_mae(&u.harvest.values_j, &u.schedule, held.clone()).expect("mae");
            naive += persistence_mae(&u.harvest.values_j, held.clone(), ipd);
        }
        all_ok &= ours <= naive;
        rows.push(format!("seed {seed}: {:.3} vs {:.3}", ours / users.len() as f64, naive / users.len() as f64));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = f.model.dim();
        for _ in 0..NONNEG_SAMPLES / MAE_SEEDS.len() {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let p = f.model.predict_values(&x).expect("predict");
            if !(p.mean_j >= 0.0 && p.variance_j2 >= 0.0) {
                negatives += 1;
            }
        }
    }
    Outcome {
        id: 9,
        pass: all_ok && negatives == 0,
        text: format!(
            "held-out MAE ensemble vs persistence (J): {}; negative predictions {negatives}/{NONNEG_SAMPLES}",
            rows.join(", ")
        ),
    }
}

fn criterion_10(settings: &Settings, data: &Path, model: &Path, out: &Path) -> Outcome {
    let rows = commands::sweep_amin(
        settings,
        data,
        &SWEEP,
        &[Policy::AdaEm, Policy::Oracle],
        &Predictions::Model(model.to_path_buf()),
        JOBS,
        out,
    )
    .expect("sweep");
    let mut text = Vec::new();
    let mut ok = true;
    for p in [Policy::AdaEm, Policy::Oracle] {
        let medians: Vec<f64> = rows.iter().filter(|r| r.policy == p).map(|r| r.charging_j[2]).collect();
        ok &= medians.windows(2).all(|w| w[1] >= w[0]);
        text.push(format!("{p} {:?}", medians));
    }
    Outcome {
        id: 10,
        pass: ok,
        text: format!("median daily charging (J) over a_min {:?}: {}", SWEEP, text.join("; ")),
    }
}

fn criterion_11(settings: &Settings, data: &Path, model: &Path, root: &Path) -> Outcome {
    let run = |name: &str| {
        let out = root.join(name);
        commands::compare(
            settings,
            data,
            &Policy::ALL,
            &Predictions::Model(model.to_path_buf()),
            JOBS,
            &out,
        )
        .expect("compare");
        out
    };
    let (a, b) = (run("cmp_a"), run("cmp_b"));
    let files = ["metrics_monthly.csv", "violations_hist.csv", "daily.csv"];
    let same: Vec<bool> = files
        .iter()
        .map(|f| std::fs::read(a.join(f)).expect("read") == std::fs::read(b.join(f)).expect("read"))
        .collect();
    Outcome {
        id: 11,
        pass: same.iter().all(|&s| s),
        text: format!("compare twice, byte-identical: {:?}", files.iter().zip(&same).collect::<Vec<_>>()),
    }
}

fn main() -> ExitCode {
    let settings = Settings::default();
    let root = tempfile::tempdir().expect("tempdir");
    let data = root.path().join("data");
    let model = root.path().join("model.txt");
    let days = settings.train_days + settings.eval_days;
    commands::gen_data(&settings, days, &data).expect("gen-data");
    commands::train(&settings, &data, &model).expect("train");
    let users = commands::load_data(&data, &settings).expect("load");

    let start = Instant::now();
    let ideal = commands::experiment(&settings, &users, &Policy::ALL, &Predictions::Ideal, JOBS).expect("ideal run");
    let ideal_elapsed = start.elapsed();
    let forecast = commands::experiment(&settings, &users, &Policy::ALL, &Predictions::Model(model.clone()), JOBS)
        .expect("forecast run");
    let ideal_tables = compute_metrics(&ideal);
    let forecast_tables = compute_metrics(&forecast);

    let outcomes = vec![
        criterion_1(&ideal, &ideal_tables, ideal_elapsed),
        criterion_2(&forecast, &forecast_tables),
        criterion_3(),
        criterion_4(&ideal),
        criterion_5(&ideal, &forecast),
        criterion_6(&ideal, &forecast, &settings),
        criterion_7(&forecast_tables),
        criterion_8(&forecast, &settings),
        criterion_9(&settings),
        criterion_10(&settings, &data, &model, &root.path().join("sweep")),
        criterion_11(&settings, &data, &model, root.path()),
    ];
    let mut failed = 0;
    for o in &outcomes {
        println!("{} criterion {:>2}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.text);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
