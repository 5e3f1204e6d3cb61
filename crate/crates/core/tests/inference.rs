use fvml_conc::fvml::{sample_fvml, FvmlParams, SeededRng};
use fvml_conc::inference::{homogeneity_test, one_sample_test, rayleigh_test, MultiSampleDesign};
use fvml_conc::power::{noncentrality_homogeneity, power_one_sample, power_rayleigh};
use fvml_conc::sphere::{SphericalSample, UnitVector};
use fvml_conc::Error;
use proptest::prelude::*;

fn reflection(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut m = vec![0.0; k * k];
    for r in 0..k {
        for c in 0..k {
            m[r * k + c] = f64::from(u8::from(r == c)) - 2.0 * v[r] * v[c] / vv;
        }
    }
    m
}

fn draw(k: usize, kappa: f64, n: usize, seed: u64) -> SphericalSample {
    let mut theta = vec![0.0; k];
    theta[k - 1] = 1.0;
    let p = FvmlParams::new(kappa, UnitVector::new(theta).unwrap()).unwrap();
    sample_fvml(&p, n, &mut SeededRng::new(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn statistics_are_rotation_invariant(
        k in 2usize..6,
        seed in 0u64..1000,
        v in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        prop_assume!(v[..k].iter().map(|x| x * x).sum::<f64>() > 0.1);
        let h = reflection(&v[..k]);
        let s1 = draw(k, 1.5, 40, seed);
        let s2 = draw(k, 3.0, 55, seed + 1);

        let before = one_sample_test(&s1, 2.0, 0.05).unwrap().statistic;
        let after = one_sample_test(&s1.transform(&h).unwrap(), 2.0, 0.05).unwrap().statistic;
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));

        let before = rayleigh_test(&s1, 0.05).unwrap().statistic;
        let after = rayleigh_test(&s1.transform(&h).unwrap(), 0.05).unwrap().statistic;
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));

        // rotating one sample alone leaves the homogeneity statistic unchanged
        let d = MultiSampleDesign::new(vec![s1.clone(), s2.clone()]).unwrap();
        let d_rot = MultiSampleDesign::new(vec![s1.transform(&h).unwrap(), s2]).unwrap();
        let before = homogeneity_test(&d, 0.05).unwrap().statistic;
        let after = homogeneity_test(&d_rot, 0.05).unwrap().statistic;
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
    }

    #[test]
    fn powers_lie_between_alpha_and_one(
        k in 2usize..7,
        kappa in 0.05f64..30.0,
        c in 0.0f64..15.0,
        alpha in 0.01f64..0.2,
    ) {
        for p in [power_one_sample(k, kappa, c, alpha).unwrap(), power_rayleigh(k, c, alpha).unwrap()] {
            prop_assert!(p >= alpha - 1e-12 && p <= 1.0 + 1e-12, "power {p}");
        }
    }

    #[test]
    fn homogeneity_noncentrality_is_nonnegative(
        w in prop::collection::vec(0.05f64..1.0, 2..6),
        c in prop::collection::vec(-5.0f64..5.0, 6),
        kappa in 0.1f64..20.0,
    ) {
        let total: f64 = w.iter().sum();
        let r: Vec<f64> = w.iter().map(|x| x / total).collect();
        let lambda = noncentrality_homogeneity(3, kappa, &r, &c[..r.len()]).unwrap();
        prop_assert!(lambda >= -1e-12);
    }
}

#[test]
fn rayleigh_statistic_is_k_times_squared_norm_of_scaled_mean() {
    let s = draw(3, 0.8, 120, 11);
    let n = s.len() as f64;
    let t: Vec<f64> = s.mean_vector().iter().map(|m| n.sqrt() * m).collect();
    let q = 3.0 * t.iter().map(|x| x * x).sum::<f64>();
    let report = rayleigh_test(&s, 0.05).unwrap();
    assert!((report.statistic - q).abs() <= 1e-12 * q);
    assert_eq!(report.df, 3);
}

#[test]
fn decision_matches_p_value() {
    for seed in 0..20 {
        let r = one_sample_test(&draw(2, 1.0, 60, seed), 2.5, 0.05).unwrap();
        assert_eq!(r.reject, r.p_value < 0.05, "seed {seed}: {r:?}");
    }
}

#[test]
fn homogeneity_reports_the_degenerate_sample() {
    let a = draw(2, 2.0, 30, 1);
    let same = UnitVector::new(vec![0.0, 1.0]).unwrap();
    let b = SphericalSample::from_points(&vec![same; 10]).unwrap();
    let err = homogeneity_test(&MultiSampleDesign::new(vec![a, b]).unwrap(), 0.05).unwrap_err();
    assert!(err.to_string().contains("sample 2"), "{err}");
}

#[test]
fn designs_must_share_a_dimension() {
    let err = MultiSampleDesign::new(vec![draw(2, 1.0, 10, 1), draw(3, 1.0, 10, 2)]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn report_serializes_nuisance_keys() {
    let d = MultiSampleDesign::new(vec![draw(2, 2.0, 50, 1), draw(2, 4.0, 50, 2)]).unwrap();
    let json = serde_json::to_value(homogeneity_test(&d, 0.05).unwrap()).unwrap();
    for key in ["statistic", "df", "p_value", "reject", "nuisance.kappa_hat", "nuisance.theta_hat_2"] {
        assert!(json.get(key).is_some(), "missing {key} in {json}");
    }
}
