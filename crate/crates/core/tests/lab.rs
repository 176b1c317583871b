use bootstrap_lab::lab::{
    check_coupling, estimate_pc, growth_construction, no_empty_line_check, normalize,
    random_torus_set, sample_percolation, scaling_sweep, sweep_csv, wilson, GrowthConfig,
    RunManifest, TrialPlan,
};
use bootstrap_lab::{percolates, Error, UpdateFamily};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn plan(p: f64) -> TrialPlan {
    TrialPlan {
        family: UpdateFamily::by_name("duarte").unwrap(),
        n: 24,
        p,
        trials: 40,
        master_seed: 77,
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = pool(1).install(|| sample_percolation(&plan(0.2)).unwrap());
    let eight = pool(8).install(|| sample_percolation(&plan(0.2)).unwrap());
    assert_eq!(one.outcomes, eight.outcomes);
    let f = UpdateFamily::by_name("duarte").unwrap();
    let a = pool(1).install(|| estimate_pc(&f, 20, 30, 0.05, 5).unwrap());
    let b = pool(8).install(|| estimate_pc(&f, 20, 30, 0.05, 5).unwrap());
    assert_eq!(a, b);
}

#[test]
fn trial_outcomes_match_a_fresh_percolation_check() {
    let m = sample_percolation(&plan(0.25)).unwrap();
    let f = UpdateFamily::by_name("duarte").unwrap();
    for (t, &o) in m.outcomes.iter().enumerate() {
        let seeds = random_torus_set(24, 0.25, 77, t as u64);
        assert_eq!(percolates(&seeds, &f, 24).unwrap(), o, "trial {t}");
    }
    assert_eq!(
        m.successes,
        m.outcomes.iter().filter(|&&o| o).count() as u64
    );
    assert_eq!(
        (m.wilson_lo, m.wilson_hi),
        wilson(m.successes, m.plan.trials)
    );
}

#[test]
fn manifests_round_trip_and_replay() {
    let m = sample_percolation(&plan(0.3)).unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
    assert!(back.replays().unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn coupled_probes_are_monotone_per_trial() {
    let f = UpdateFamily::by_name("modified_duarte").unwrap();
    let e = estimate_pc(&f, 24, 40, 0.03, 8).unwrap();
    check_coupling(&e.probes).unwrap();
    assert!(e.hi - e.lo < 0.03 && e.lo <= e.p_hat && e.p_hat <= e.hi);
    let mut ps: Vec<f64> = e.probes.iter().map(|p| p.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    assert_eq!(ps.len(), e.probes.len());
}

#[test]
fn four_neighbour_threshold_sits_high() {
    let f = UpdateFamily::by_name("r4").unwrap();
    let e = estimate_pc(&f, 8, 20, 0.05, 1).unwrap();
    assert!(e.p_hat > 0.5, "{}", e.p_hat);
    assert!(matches!(
        estimate_pc(&f, 8, 20, 0.0, 1),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn sweep_rows_are_normalised() {
    let f = UpdateFamily::by_name("duarte").unwrap();
    let rows = scaling_sweep(&[f], &[16, 32], 20, 3, Some(0.1)).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let ln = (r.n as f64).ln();
        assert!((r.normalized - r.p_hat * ln / ln.ln().powi(2)).abs() < 1e-12);
        assert_eq!(r.normalized, normalize(r.p_hat, r.n));
    }
    let csv = sweep_csv(&rows);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("family,n,p_hat,lo,hi,normalized\n"));
}

#[test]
fn line_check_reports_its_bound() {
    let c = no_empty_line_check(300, 0.3, 9, 20).unwrap();
    assert_eq!(c.run_length, 38);
    let expect = 1.0 - 2.0 * 90_000.0 * 0.7f64.powf(1.0 / 0.027);
    assert!((c.bound - expect).abs() < 1e-9);
    assert!(c.frequency.fraction >= 0.0 && c.frequency.fraction <= 1.0);
    assert!(matches!(
        no_empty_line_check(10, 0.3, 9, 5),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn growth_guard_rejects_large_windows() {
    let mut cfg = GrowthConfig::new(0.25, 0.15, 1, 1);
    cfg.max_sites = 1000;
    assert!(growth_construction(&cfg).unwrap_err().is_budget());
}
