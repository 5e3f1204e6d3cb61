use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use fvml_conc::fvml::{sample_fvml, sample_uniform, FvmlParams, SeededRng};
use fvml_conc::inference::estimate_kappa;
use fvml_conc::specfun::bessel_ratio_a;
use fvml_conc::sphere::{SphericalSample, UnitVector};

fn params(kappa: f64, theta: Vec<f64>) -> FvmlParams {
    FvmlParams::new(kappa, UnitVector::normalize(theta).unwrap()).unwrap()
}

fn projections(sample: &SphericalSample, theta: &UnitVector) -> Vec<f64> {
    sample.rows().map(|x| theta.dot(x)).collect()
}

fn ks_distance(mut values: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn projection_mean_matches_ratio() {
    let p = params(2.0, vec![0.0, 0.0, 1.0]);
    let sample = sample_fvml(&p, 100_000, &mut SeededRng::new(1, 0)).unwrap();
    let mean: f64 = projections(&sample, p.theta()).iter().sum::<f64>() / sample.len() as f64;
    assert_abs_diff_eq!(mean, 0.537314, epsilon = 0.005);
}

#[test]
fn resultant_length_on_circle() {
    let p = params(5.0, vec![0.6, -0.8]);
    let sample = sample_fvml(&p, 100_000, &mut SeededRng::new(2, 0)).unwrap();
    let expected = bessel_ratio_a(2, 5.0).unwrap();
    assert_abs_diff_eq!(sample.resultant_length(), expected, epsilon = 0.005);
    assert_abs_diff_eq!(expected, 0.893383, epsilon = 1e-6);
}

#[test]
fn uniform_coordinates_are_centred() {
    let sample = sample_uniform(4, 100_000, &mut SeededRng::new(3, 0)).unwrap();
    for m in sample.mean_vector() {
        assert!(m.abs() < 0.006, "coordinate mean {m}");
    }
}

#[test]
fn rayleigh_statistic_has_mean_k_under_uniformity() {
    let (k, n, reps) = (2usize, 100usize, 1000u64);
    let total: f64 = (0..reps)
        .map(|rep| {
            let s = sample_uniform(k, n, &mut SeededRng::new(4, rep)).unwrap();
            let m = s.mean_vector();
            (k * n) as f64 * m.iter().map(|v| v * v).sum::<f64>()
        })
        .sum();
    let mean = total / reps as f64;
    // sd of the mean is 2/sqrt(1000) ~ 0.063
    assert!((mean - 2.0).abs() < 0.2, "mean statistic {mean}");
}

#[test]
fn projection_law_on_two_sphere() {
    let kappa = 2.0;
    let p = params(kappa, vec![1.0, 2.0, -2.0]);
    let sample = sample_fvml(&p, 10_000, &mut SeededRng::new(5, 0)).unwrap();
    let cdf = |u: f64| ((kappa * (u + 1.0)).exp() - 1.0) / ((2.0 * kappa).exp() - 1.0);
    let d = ks_distance(projections(&sample, p.theta()), cdf);
    assert!(d < 1.63 / 100.0, "KS distance {d}");
}

#[test]
fn projection_law_on_circle() {
    let kappa = 1.5;
    let p = params(kappa, vec![0.0, 1.0]);
    let sample = sample_fvml(&p, 10_000, &mut SeededRng::new(6, 0)).unwrap();
    // P(X'theta <= cos(phi)) = int_phi^pi e^{kappa cos s} ds / int_0^pi e^{kappa cos s} ds
    let m = 20_000;
    let h = PI / m as f64;
    let g = |s: f64| (kappa * s.cos()).exp();
    let mut tail = vec![0.0; m + 1];
    for i in (0..m).rev() {
        tail[i] = tail[i + 1] + 0.5 * h * (g(i as f64 * h) + g((i + 1) as f64 * h));
    }
    let cdf = |u: f64| {
        let pos = u.clamp(-1.0, 1.0).acos() / h;
        let i = (pos.floor() as usize).min(m - 1);
        let w = pos - i as f64;
        ((1.0 - w) * tail[i] + w * tail[i + 1]) / tail[0]
    };
    let d = ks_distance(projections(&sample, p.theta()), cdf);
    assert!(d < 1.63 / 100.0, "KS distance {d}");
}

#[test]
fn rotating_theta_rotates_the_sample() {
    // swapping the first two axes maps FvML(e1) draws onto FvML(e2) in law
    let kappa = 3.0;
    let a = sample_fvml(&params(kappa, vec![1.0, 0.0, 0.0]), 50_000, &mut SeededRng::new(7, 0)).unwrap();
    let b = sample_fvml(&params(kappa, vec![0.0, 1.0, 0.0]), 50_000, &mut SeededRng::new(7, 1)).unwrap();
    let swap = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let rotated = a.transform(&swap).unwrap().mean_vector();
    for (x, y) in rotated.iter().zip(b.mean_vector()) {
        assert!((x - y).abs() < 0.01, "{x} vs {y}");
    }
}

#[test]
fn concentration_estimate_is_consistent() {
    let p = params(2.0, vec![1.0, 1.0, 1.0]);
    let sample = sample_fvml(&p, 100_000, &mut SeededRng::new(8, 0)).unwrap();
    assert_abs_diff_eq!(estimate_kappa(&sample).unwrap(), 2.0, epsilon = 0.05);
}

#[test]
fn draws_are_reproducible_per_stream() {
    let p = params(0.7, vec![0.0, 0.0, 0.0, 1.0]);
    let a = sample_fvml(&p, 64, &mut SeededRng::new(9, 3)).unwrap();
    let b = sample_fvml(&p, 64, &mut SeededRng::new(9, 3)).unwrap();
    let c = sample_fvml(&p, 64, &mut SeededRng::new(9, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
