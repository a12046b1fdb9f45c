//! The oracle against a separate full enumeration of charging vectors.

use ehplan_core::baselines::optimal_oracle;
use ehplan_core::{min_intercharge_gap, BatteryState, EnergyAccuracyProfile, EnergyConfig};
use proptest::prelude::*;

/// Every charging vector that avoids critical intervals and keeps the
/// battery legal when each interval spends `min_c`.
fn feasible_vectors(
    harvest: &[f64],
    e0: f64,
    cfg: &EnergyConfig,
    min_c: f64,
    critical: &[bool],
) -> Vec<Vec<bool>> {
    let n = harvest.len();
    let mut out = Vec::new();
    'mask: for bits in 0u32..(1 << n) {
        let flags: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        if flags.iter().zip(critical).any(|(&f, &c)| f && c) {
            continue;
        }
        let mut e = e0;
        for i in 0..n {
            let charge = if flags[i] { cfg.e_charge_per_interval_j } else { 0.0 };
            e = (e + cfg.harvest_efficiency * harvest[i] + charge - min_c).clamp(0.0, cfg.e_max_j);
            if e < cfg.e_min_j - 1e-9 {
                continue 'mask;
            }
        }
        if e >= cfg.e_target_j - 1e-9 {
            out.push(flags);
        }
    }
    out
}

fn count(flags: &[bool]) -> usize {
    flags.iter().filter(|&&b| b).count()
}

fn indices(flags: &[bool]) -> Vec<usize> {
    (0..flags.len()).filter(|&i| flags[i]).collect()
}

/// Fewest charges, then widest gap, then earliest index list.
fn best_of(vectors: &[Vec<bool>]) -> Option<&Vec<bool>> {
    let k = vectors.iter().map(|v| count(v)).min()?;
    let mut best: Option<&Vec<bool>> = None;
    for v in vectors.iter().filter(|v| count(v) == k) {
        best = match best {
            None => Some(v),
            Some(b) => {
                let (gv, gb) = (min_intercharge_gap(v), min_intercharge_gap(b));
                if gv > gb || (gv == gb && indices(v) < indices(b)) {
                    Some(v)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[test]
fn six_interval_zero_harvest_instance() {
    let cfg = EnergyConfig {
        e_target_j: 40.0,
        ..EnergyConfig::default()
    };
    let prof = EnergyAccuracyProfile::new(vec![(1.0, 0.80), (4.0, 0.95)]).unwrap();
    let harvest = [0.0; 6];
    let critical = [false; 6];
    let out = optimal_oracle(&harvest, BatteryState::new(40.0), &cfg, &prof, 0.80, &critical).unwrap();
    let all = feasible_vectors(&harvest, 40.0, &cfg, 1.0, &critical);
    let expected = best_of(&all).unwrap();
    assert!(out.feasible);
    assert_eq!(&out.plan.charge_flags, expected);
    assert_eq!(out.plan.charging_intervals(), 1);
    let report = ehplan_core::check_constraints(
        &out.plan,
        &[ehplan_core::ActivityLabel::Other; 6],
        &prof,
        0.80,
        &[ehplan_core::ActivityLabel::Exercise],
        &cfg,
    )
    .unwrap();
    assert!(report.is_clean());
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, f64, f64)> {
    (1usize..=12).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0f64..8.0, n),
            proptest::collection::vec(proptest::bool::weighted(0.25), n),
            16.0f64..160.0,
            prop_oneof![Just(0.80), Just(0.85), Just(0.90), Just(0.95)],
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn oracle_matches_full_enumeration((harvest, critical, e0, a_min) in instance()) {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let min_c = prof.min_consumption_for(a_min).unwrap();
        let all = feasible_vectors(&harvest, e0, &cfg, min_c, &critical);
        let out = optimal_oracle(&harvest, BatteryState::new(e0), &cfg, &prof, a_min, &critical).unwrap();
        match best_of(&all) {
            None => prop_assert!(!out.feasible),
            Some(best) => {
                prop_assert!(out.feasible);
                prop_assert_eq!(&out.plan.charge_flags, best);
                // the raised consumption must still be legal
                let mut e = e0;
                for i in 0..harvest.len() {
                    let c = out.plan.consumption_j[i];
                    prop_assert!(prof.accuracy_of(c) >= a_min - 1e-9);
                    let charge = if best[i] { 30.0 } else { 0.0 };
                    e = (e + harvest[i] + charge - c).clamp(0.0, cfg.e_max_j);
                    prop_assert!(e >= cfg.e_min_j - 1e-9);
                }
                prop_assert!(e >= cfg.e_target_j - 1e-9);
            }
        }
    }
}
