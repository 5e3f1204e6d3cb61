//! Estimators, the central sequence of the concentration-location model, and
//! the three concentration tests.

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::fvml::log_normalizer;
use crate::specfun::{a_inverse, a_prime, bessel_ratio_a, chi2_quantile, chi2_sf, j_k, ChiSqSpec};
use crate::sphere::{dot, same_dim, spherical_mean, SphericalSample, UnitVector};

/// Resultant lengths this close to 1 make the concentration estimate diverge.
pub const NEAR_DEGENERATE_TOL: f64 = 1e-12;

/// A nuisance estimate recorded in a [`TestReport`].
#[derive(Debug, Clone, PartialEq)]
pub enum Nuisance {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Serialize for Nuisance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Nuisance::Scalar(x) => x.serialize(s),
            Nuisance::Vector(v) => v.serialize(s),
        }
    }
}

/// Outcome of a chi-square calibrated test.
///
/// Serializes to one flat JSON object; nuisance estimates appear under
/// `nuisance.<name>` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub nuisance: BTreeMap<String, Nuisance>,
}

impl TestReport {
    /// Rejects when `statistic` strictly exceeds the upper-`alpha` quantile
    /// of `chi^2_df`; ties do not reject.
    pub fn from_statistic(statistic: f64, df: u32, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let critical = chi2_quantile(df, 1.0 - alpha)?;
        let p_value = chi2_sf(ChiSqSpec::central(df)?, statistic)?;
        Ok(TestReport {
            statistic,
            df,
            p_value,
            alpha,
            reject: statistic > critical,
            nuisance: BTreeMap::new(),
        })
    }

    fn with(mut self, name: &str, value: Nuisance) -> Self {
        self.nuisance.insert(name.to_string(), value);
        self
    }
}

impl Serialize for TestReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(5 + self.nuisance.len()))?;
        map.serialize_entry("statistic", &self.statistic)?;
        map.serialize_entry("df", &self.df)?;
        map.serialize_entry("p_value", &self.p_value)?;
        map.serialize_entry("alpha", &self.alpha)?;
        map.serialize_entry("reject", &self.reject)?;
        for (name, value) in &self.nuisance {
            map.serialize_entry(&format!("nuisance.{name}"), value)?;
        }
        map.end()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("level alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `m >= 2` independent samples on a common sphere.
#[derive(Debug, Clone)]
pub struct MultiSampleDesign {
    samples: Vec<SphericalSample>,
}

impl MultiSampleDesign {
    pub fn new(samples: Vec<SphericalSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain(format!(
                "a multi-sample design needs m >= 2 samples, got {}",
                samples.len()
            )));
        }
        let k = samples[0].dim();
        for s in &samples[1..] {
            same_dim(k, s.dim())?;
        }
        Ok(MultiSampleDesign { samples })
    }

    pub fn samples(&self) -> &[SphericalSample] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.len()).collect()
    }

    pub fn total(&self) -> usize {
        self.samples.iter().map(|s| s.len()).sum()
    }

    /// `r_i = n_i / n`.
    pub fn ratios(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.samples.iter().map(|s| s.len() as f64 / n).collect()
    }

    /// `(sqrt(r_1), ..., sqrt(r_m))`.
    pub fn upsilon(&self) -> Vec<f64> {
        self.ratios().into_iter().map(f64::sqrt).collect()
    }
}

/// Spherical mean direction; the location estimate used by every test.
pub fn estimate_theta(sample: &SphericalSample) -> Result<UnitVector> {
    spherical_mean(sample).map(|(dir, _)| dir)
}

/// `A_k^{-1}(||X_bar||)`.
pub fn estimate_kappa(sample: &SphericalSample) -> Result<f64> {
    kappa_from_resultant(sample.dim(), sample.resultant_length())
}

fn kappa_from_resultant(k: usize, r: f64) -> Result<f64> {
    if r >= 1.0 - NEAR_DEGENERATE_TOL {
        return Err(Error::NearDegenerateResultant {
            sample: None,
            length: r,
            tol: NEAR_DEGENERATE_TOL,
        });
    }
    a_inverse(k, r)
}

/// Central sequence and Fisher information of the concentration-location
/// model at `(kappa, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSequence {
    /// `n^{-1/2} sum (X_i'theta - A_k(kappa))`
    pub delta_i: f64,
    /// `kappa n^{-1/2} sum (1 - (X_i'theta)^2)^{1/2} S_theta(X_i)`
    pub delta_ii: Vec<f64>,
    /// `A_k'(kappa)`
    pub info_i: f64,
    /// `kappa^2 J_k(kappa) / (k-1) (I_k - theta theta')`, row-major.
    pub info_ii: Vec<f64>,
}

impl CentralSequence {
    pub fn dim(&self) -> usize {
        self.delta_ii.len()
    }

    /// `tau'Delta - tau'Gamma tau / 2` for `tau = (c, t)`.
    pub fn quadratic_expansion(&self, c: f64, t: &[f64]) -> f64 {
        let k = self.dim();
        let mut quad = c * c * self.info_i;
        for r in 0..k {
            quad += t[r] * dot(&self.info_ii[r * k..(r + 1) * k], t);
        }
        c * self.delta_i + dot(t, &self.delta_ii) - 0.5 * quad
    }
}

pub fn central_sequence(sample: &SphericalSample, kappa: f64, theta: &UnitVector) -> Result<CentralSequence> {
    let k = sample.dim();
    same_dim(k, theta.dim())?;
    let a = bessel_ratio_a(k, kappa)?;
    let info_i = a_prime(k, kappa)?;
    let j = j_k(k, kappa)?;
    let th = theta.as_slice();

    let mut sum_i = 0.0;
    let mut sum_ii = vec![0.0; k];
    for x in sample.rows() {
        let t = dot(x, th);
        sum_i += t - a;
        // (1 - t^2)^{1/2} S_theta(x) = x - t theta; zero for x = +-theta
        for ((s, xi), thi) in sum_ii.iter_mut().zip(x).zip(th) {
            *s += xi - t * thi;
        }
    }
    let root_n = (sample.len() as f64).sqrt();
    let scale = kappa * kappa * j / (k - 1) as f64;
    let mut info_ii = vec![0.0; k * k];
    for r in 0..k {
        for c in 0..k {
            let id = if r == c { 1.0 } else { 0.0 };
            info_ii[r * k + c] = scale * (id - th[r] * th[c]);
        }
    }
    Ok(CentralSequence {
        delta_i: sum_i / root_n,
        delta_ii: sum_ii.into_iter().map(|s| kappa * s / root_n).collect(),
        info_i,
        info_ii,
    })
}

/// Per-sample central sequences of a multi-sample design; sample `i` is
/// scaled by `n_i^{-1/2}`.
pub fn multi_sample_central_sequence(
    design: &MultiSampleDesign,
    kappas: &[f64],
    thetas: &[UnitVector],
) -> Result<Vec<CentralSequence>> {
    let m = design.samples().len();
    if kappas.len() != m || thetas.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: kappas.len().min(thetas.len()),
        });
    }
    design
        .samples()
        .iter()
        .zip(kappas)
        .zip(thetas)
        .map(|((s, &kappa), theta)| central_sequence(s, kappa, theta))
        .collect()
}

/// `T_theta = n^{-1/2} sum X_i'theta`.
pub fn projection_statistic(sample: &SphericalSample, theta: &UnitVector) -> Result<f64> {
    same_dim(sample.dim(), theta.dim())?;
    let th = theta.as_slice();
    let sum: f64 = sample.rows().map(|x| dot(x, th)).sum();
    Ok(sum / (sample.len() as f64).sqrt())
}

/// `sum_i [log f_{alt}(X_i) - log f_{base}(X_i)]`.
pub fn log_likelihood_ratio(
    sample: &SphericalSample,
    base: (f64, &UnitVector),
    alt: (f64, &UnitVector),
) -> Result<f64> {
    let k = sample.dim();
    same_dim(k, base.1.dim())?;
    same_dim(k, alt.1.dim())?;
    let n = sample.len() as f64;
    let norm_diff = log_normalizer(k, alt.0)? - log_normalizer(k, base.0)?;
    let (kb, tb) = (base.0, base.1.as_slice());
    let (ka, ta) = (alt.0, alt.1.as_slice());
    let linear: f64 = sample.rows().map(|x| ka * dot(x, ta) - kb * dot(x, tb)).sum();
    Ok(n * norm_diff + linear)
}

/// `Q_{kappa_0}(theta) = (sum_i X_i'theta - n A_k(kappa_0))^2 / (n A_k'(kappa_0))`
/// for a given location.
pub fn one_sample_statistic(sample: &SphericalSample, kappa0: f64, theta: &UnitVector) -> Result<f64> {
    let k = sample.dim();
    let n = sample.len() as f64;
    let a = bessel_ratio_a(k, kappa0)?;
    let d = a_prime(k, kappa0)?;
    let sum = projection_statistic(sample, theta)? * n.sqrt();
    let centred = sum - n * a;
    Ok(centred * centred / (n * d))
}

/// Score test of `kappa = kappa0` with the location estimated by the
/// spherical mean; `chi^2_1` calibration.
pub fn one_sample_test(sample: &SphericalSample, kappa0: f64, alpha: f64) -> Result<TestReport> {
    if sample.len() < 2 {
        return Err(Error::domain("the one-sample test needs n >= 2"));
    }
    if !(kappa0.is_finite() && kappa0 > 0.0) {
        return Err(Error::domain(format!("kappa0 must be > 0, got {kappa0}")));
    }
    let theta_hat = estimate_theta(sample)?;
    let q = one_sample_statistic(sample, kappa0, &theta_hat)?;
    Ok(TestReport::from_statistic(q, 1, alpha)?
        .with("theta_hat", Nuisance::Vector(theta_hat.into_vec()))
        .with("kappa0", Nuisance::Scalar(kappa0)))
}

/// Rayleigh test of uniformity, `Q = k n ||X_bar||^2` against `chi^2_k`.
pub fn rayleigh_test(sample: &SphericalSample, alpha: f64) -> Result<TestReport> {
    let k = sample.dim();
    let n = sample.len() as f64;
    let mean = sample.mean_vector();
    let q = k as f64 * n * dot(&mean, &mean);
    Ok(TestReport::from_statistic(q, k as u32, alpha)?
        .with("resultant_length", Nuisance::Scalar(dot(&mean, &mean).sqrt())))
}

/// Test of a common concentration across `m` samples with unspecified
/// locations; `chi^2_{m-1}` calibration.
///
/// Uses the intra-sample spherical means, for which `theta_i'X_bar_i` is
/// exactly `||X_bar_i||`, the pooled `kappa = sum r_i A_k^{-1}(||X_bar_i||)`
/// and `D_k = A_k'(kappa)`.
pub fn homogeneity_test(design: &MultiSampleDesign, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let k = design.dim();
    let ratios = design.ratios();
    let mut lengths = Vec::with_capacity(ratios.len());
    let mut report_thetas = Vec::with_capacity(ratios.len());
    let mut kappas = Vec::with_capacity(ratios.len());
    for (i, sample) in design.samples().iter().enumerate() {
        let (theta, r) = spherical_mean(sample).map_err(|e| e.in_sample(i + 1))?;
        let kappa = kappa_from_resultant(k, r).map_err(|e| e.in_sample(i + 1))?;
        lengths.push(r);
        report_thetas.push(theta);
        kappas.push(kappa);
    }
    let pooled: f64 = ratios.iter().zip(&kappas).map(|(r, kap)| r * kap).sum();
    let d_hat = a_prime(k, pooled)?;

    // sum n_i R_i^2 - (sum n_i R_i)^2 / n, written as a weighted sum of squares
    let n = design.total() as f64;
    let sizes = design.sizes();
    let weighted_mean: f64 = sizes.iter().zip(&lengths).map(|(&ni, r)| ni as f64 * r).sum::<f64>() / n;
    let spread: f64 = sizes
        .iter()
        .zip(&lengths)
        .map(|(&ni, r)| ni as f64 * (r - weighted_mean) * (r - weighted_mean))
        .sum();
    let q = spread / d_hat;

    let mut report = TestReport::from_statistic(q, (sizes.len() - 1) as u32, alpha)?
        .with("kappa_hat", Nuisance::Scalar(pooled))
        .with("d_hat", Nuisance::Scalar(d_hat));
    for (i, (theta, kappa)) in report_thetas.into_iter().zip(kappas).enumerate() {
        report = report
            .with(&format!("theta_hat_{}", i + 1), Nuisance::Vector(theta.into_vec()))
            .with(&format!("kappa_hat_{}", i + 1), Nuisance::Scalar(kappa));
    }
    Ok(report)
}
