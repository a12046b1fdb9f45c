use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use ehplan_core::baselines::optimal_oracle;
use ehplan_core::planner::{plan_horizon, PlanningProblem};
use ehplan_core::predictor::EnsembleParams;
use ehplan_core::sim::{generate_user, train_pooled, DataSpec, UserTrace};
use ehplan_core::{ActivityLabel, BatteryState, EnergyAccuracyProfile, EnergyConfig};

struct Day {
    harvest: Vec<f64>,
    critical: Vec<bool>,
}

fn trace(days: usize) -> UserTrace {
    let spec = DataSpec {
        days,
        users: 1,
        ..DataSpec::default()
    };
    generate_user(&spec, 0).expect("synthetic trace")
}

// a winter day needs charging, a summer one usually does not
fn days(trace: &UserTrace) -> Vec<(&'static str, Day)> {
    let ipd = trace.intervals_per_day();
    [("winter", 40), ("summer", 220)]
        .into_iter()
        .map(|(name, d)| {
            let r = d * ipd..(d + 1) * ipd;
            let day = Day {
                harvest: trace.harvest.values_j[r.clone()].to_vec(),
                critical: trace.schedule.labels[r].iter().map(|&l| l == ActivityLabel::Exercise).collect(),
            };
            (name, day)
        })
        .collect()
}

fn bench_planning(c: &mut Criterion) {
    let config = EnergyConfig::default();
    let profile = EnergyAccuracyProfile::default();
    let t = trace(240);
    for (name, day) in days(&t) {
        for e0 in [40.0, 96.0] {
            let problem = PlanningProblem {
                predictions_j: &day.harvest,
                initial: BatteryState::new(e0),
                config: &config,
                profile: &profile,
                a_min: 0.9,
                critical: &day.critical,
            };
            c.bench_function(&format!("plan_horizon/{name}/e0={e0}"), |b| {
                b.iter(|| plan_horizon(black_box(&problem)).expect("plan"))
            });
            c.bench_function(&format!("oracle/{name}/e0={e0}"), |b| {
                b.iter(|| {
                    optimal_oracle(
                        black_box(&day.harvest),
                        BatteryState::new(e0),
                        &config,
                        &profile,
                        0.9,
                        &day.critical,
                    )
                    .expect("oracle")
                })
            });
        }
    }
}

fn bench_fit(c: &mut Criterion) {
    let users = vec![trace(70)];
    let features = Default::default();
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for trees in [5, 20] {
        let params = EnsembleParams {
            trees,
            ..EnsembleParams::default()
        };
        g.bench_function(format!("trees={trees}"), |b| {
            b.iter_batched(
                || users.clone(),
                |u| train_pooled(&u, 60, &features, &params).expect("fit"),
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, bench_planning, bench_fit);
criterion_main!(benches);
