use fvml_conc::montecarlo::{
    mc_homogeneity_power, mc_null_size, preset, run, write_csv, Design, McConfig, NullScenario, TestId,
};
use fvml_conc::Error;

fn quick(mut cfg: McConfig, reps: usize) -> McConfig {
    cfg.replications = reps;
    cfg.grid = vec![0.0, 5.0, 10.0];
    cfg
}

#[test]
fn homogeneity_results_ignore_worker_count() {
    let base = quick(preset("fig3", 77).unwrap().remove(1), 150);
    let mut one = base.clone();
    one.workers = Some(1);
    let mut three = base;
    three.workers = Some(3);
    assert_eq!(
        mc_homogeneity_power(&one).unwrap().points,
        mc_homogeneity_power(&three).unwrap().points
    );
}

#[test]
fn rejection_counts_are_whole_numbers() {
    let curve = run(&quick(McConfig::new(3, Design::Rayleigh { n: 40 }, 5), 333)).unwrap();
    for p in &curve.points {
        let scaled = p.p_hat * p.replications as f64;
        assert!((scaled - scaled.round()).abs() < 1e-9);
        assert!((p.se - (p.p_hat * (1.0 - p.p_hat) / 333.0).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn different_seeds_give_different_curves() {
    let a = run(&quick(McConfig::new(2, Design::Rayleigh { n: 30 }, 1), 200)).unwrap();
    let b = run(&quick(McConfig::new(2, Design::Rayleigh { n: 30 }, 2), 200)).unwrap();
    assert_ne!(a.points, b.points);
}

#[test]
fn null_size_rejects_unknown_tests() {
    assert!(matches!("watson".parse::<TestId>(), Err(Error::UnknownTest(_))));
    let bad = NullScenario { test: TestId::Homogeneity, k: 2, kappa: 1.0, sizes: vec![50] };
    assert!(mc_null_size(&bad, 10, 0.05, 1, None).is_err());
}

#[test]
fn null_size_is_reproducible() {
    let s = NullScenario { test: TestId::OneSample, k: 3, kappa: 2.0, sizes: vec![60] };
    let a = mc_null_size(&s, 400, 0.05, 3, Some(1)).unwrap();
    let b = mc_null_size(&s, 400, 0.05, 3, Some(2)).unwrap();
    assert_eq!(a, b);
    assert!((0.0..=0.15).contains(&a));
}

#[test]
fn csv_has_one_row_per_grid_point() {
    let curves: Vec<_> = preset("fig2-caption", 4)
        .unwrap()
        .into_iter()
        .map(|c| run(&quick(c, 50)).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &curves).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("rayleigh,2,50,,,,0.0,50,0.05,"));
}
