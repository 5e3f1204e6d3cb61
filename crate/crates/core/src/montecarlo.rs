//! Reproducible Monte Carlo estimation of empirical sizes and power curves.
//!
//! Replication `i` at grid point `j` draws from its own [`SeededRng`] keyed by
//! `(seed, j)` and stream `i`, so results do not depend on how replications
//! are scheduled. With the `parallel` feature replications are spread over a
//! rayon pool; `workers = Some(1)` (or building without the feature) runs
//! them on the calling thread. Both paths give bit-identical output.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fvml::{SeededRng, SphereModel};
use crate::inference::{estimate_theta, homogeneity_test, one_sample_statistic, MultiSampleDesign};
use crate::power::{power_homogeneity_fixed_shift, power_rayleigh};
use crate::specfun::chi2_quantile;
use crate::sphere::{dot, SphericalSample, UnitVector};

pub const DEFAULT_REPLICATIONS: usize = 5000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// The `c = 0, 1, ..., 10` grid.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

/// Simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// `n` draws from FvML(`n^{-1/2} c / 2`, `e_1`); uniform at `c = 0`.
    Rayleigh { n: usize },
    /// Sample 1: `n1` draws from FvML(`kappa`, `e_1`); sample 2: `n2` draws
    /// from FvML(`kappa + c * shift_step`, `-e_1`).
    Homogeneity {
        kappa: f64,
        n1: usize,
        n2: usize,
        shift_step: f64,
    },
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::Rayleigh { .. } => "rayleigh",
            Design::Homogeneity { .. } => "homogeneity",
        }
    }
}

/// Configuration of one Monte Carlo power curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub k: usize,
    pub design: Design,
    /// Thread cap; `None` uses the global rayon pool. Does not affect results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(k: usize, design: Design, seed: u64) -> Self {
        McConfig {
            replications: DEFAULT_REPLICATIONS,
            seed,
            alpha: DEFAULT_ALPHA,
            grid: default_grid(),
            k,
            design,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.k < 2 {
            return bad(format!("dimension k must be >= 2, got {}", self.k));
        }
        if self.grid.is_empty() {
            return bad("the c grid is empty".into());
        }
        if self.grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("grid values must be finite and >= 0".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        match self.design {
            Design::Rayleigh { n: 0 } => bad("n must be >= 1".into()),
            Design::Homogeneity { kappa, n1, n2, shift_step } => {
                if !(kappa.is_finite() && kappa > 0.0) {
                    return bad(format!("kappa must be > 0, got {kappa}"));
                }
                if n1 < 2 || n2 < 2 {
                    return bad("homogeneity sample sizes must be >= 2".into());
                }
                if !(shift_step.is_finite() && shift_step >= 0.0) {
                    return bad(format!("shift step must be >= 0, got {shift_step}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Empirical power at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub c: f64,
    pub rejections: usize,
    pub replications: usize,
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p_hat (1 - p_hat) / N)`.
    pub se: f64,
    pub p_theory: Option<f64>,
}

impl PowerPoint {
    fn new(c: f64, rejections: usize, replications: usize, p_theory: Option<f64>) -> Self {
        let p_hat = rejections as f64 / replications as f64;
        PowerPoint {
            c,
            rejections,
            replications,
            p_hat,
            se: (p_hat * (1.0 - p_hat) / replications as f64).sqrt(),
            p_theory,
        }
    }
}

/// An empirical power curve with its optional theoretical overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub config: McConfig,
    pub points: Vec<PowerPoint>,
}

impl PowerCurve {
    pub fn p_hat(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_hat).collect()
    }

    /// `max_c |p_hat(c) - p_theory(c)|` over points with an overlay.
    pub fn max_deviation(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.p_theory.map(|t| (p.p_hat - t).abs()))
            .reduce(f64::max)
    }

    pub fn at(&self, c: f64) -> Option<&PowerPoint> {
        self.points.iter().find(|p| p.c == c)
    }
}

/// One CSV row: `design,k,n,n1,n2,kappa,c,N,alpha,p_hat,se,p_theory`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McRecord {
    pub design: String,
    pub k: usize,
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub kappa: Option<f64>,
    pub c: f64,
    #[serde(rename = "N")]
    pub replications: usize,
    pub alpha: f64,
    pub p_hat: f64,
    pub se: f64,
    pub p_theory: Option<f64>,
}

impl PowerCurve {
    pub fn records(&self) -> Vec<McRecord> {
        let cfg = &self.config;
        let (n, n1, n2, kappa) = match cfg.design {
            Design::Rayleigh { n } => (Some(n), None, None, None),
            Design::Homogeneity { kappa, n1, n2, .. } => (None, Some(n1), Some(n2), Some(kappa)),
        };
        self.points
            .iter()
            .map(|p| McRecord {
                design: cfg.design.name().to_string(),
                k: cfg.k,
                n,
                n1,
                n2,
                kappa,
                c: p.c,
                replications: p.replications,
                alpha: cfg.alpha,
                p_hat: p.p_hat,
                se: p.se,
                p_theory: p.p_theory,
            })
            .collect()
    }
}

pub fn write_csv<W: Write>(out: W, curves: &[PowerCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in curves.iter().flat_map(PowerCurve::records) {
        w.serialize(rec).map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Run manifest: everything needed to replay a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; informational, excluded from replay comparison.
    pub created: u64,
    pub preset: Option<String>,
    pub configs: Vec<McConfig>,
}

impl RunManifest {
    pub fn new(preset: Option<String>, configs: Vec<McConfig>) -> Self {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool: "fvml".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created,
            preset,
            configs,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for replication `rep` at grid point `grid_index`.
pub fn replication_rng(seed: u64, grid_index: u64, rep: u64) -> SeededRng {
    SeededRng::new(splitmix64(seed ^ splitmix64(grid_index)), rep)
}

/// Evaluates `f(0), ..., f(replications - 1)` and returns the results in
/// replication order.
pub fn map_replications<T, F>(replications: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers == Some(1) {
        return (0..replications as u64).map(f).collect();
    }
    run_parallel(replications, workers, f)
}

#[cfg(feature = "parallel")]
fn run_parallel<T, F>(replications: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let job = || (0..replications as u64).into_par_iter().map(&f).collect();
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<T, F>(replications: usize, _workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..replications as u64).map(f).collect()
}

fn count_rejections<F>(replications: usize, workers: Option<usize>, f: F) -> Result<usize>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    Ok(map_replications(replications, workers, f)?
        .into_iter()
        .filter(|&r| r)
        .count())
}

fn first_axis(k: usize, sign: f64) -> UnitVector {
    let mut v = vec![0.0; k];
    v[0] = sign;
    UnitVector::new(v).expect("signed basis vector is unit")
}

fn rayleigh_statistic(sample: &SphericalSample) -> f64 {
    let mean = sample.mean_vector();
    sample.dim() as f64 * sample.len() as f64 * dot(&mean, &mean)
}

/// Empirical power curve of the Rayleigh test along FvML(`n^{-1/2} c/2`, `e_1`).
pub fn mc_rayleigh_power(cfg: &McConfig) -> Result<PowerCurve> {
    cfg.validate()?;
    let Design::Rayleigh { n } = cfg.design else {
        return Err(Error::Config("mc_rayleigh_power needs a rayleigh design".into()));
    };
    let k = cfg.k;
    let critical = chi2_quantile(k as u32, 1.0 - cfg.alpha)?;
    let theta = first_axis(k, 1.0);
    let mut points = Vec::with_capacity(cfg.grid.len());
    for (j, &c) in cfg.grid.iter().enumerate() {
        let kappa = c / (2.0 * (n as f64).sqrt());
        let model = SphereModel::new(kappa, &theta)?;
        let hits = count_rejections(cfg.replications, cfg.workers, |rep| {
            let mut rng = replication_rng(cfg.seed, j as u64, rep);
            let sample = model.sample(n, &mut rng)?;
            Ok(rayleigh_statistic(&sample) > critical)
        })?;
        let theory = power_rayleigh(k, c / 2.0, cfg.alpha)?;
        points.push(PowerPoint::new(c, hits, cfg.replications, Some(theory)));
    }
    Ok(PowerCurve { config: cfg.clone(), points })
}

/// Empirical power curve of the homogeneity test with the second sample's
/// concentration shifted by `c * shift_step`. The overlay maps that fixed
/// shift to local shifts via [`power_homogeneity_fixed_shift`].
pub fn mc_homogeneity_power(cfg: &McConfig) -> Result<PowerCurve> {
    cfg.validate()?;
    let Design::Homogeneity { kappa, n1, n2, shift_step } = cfg.design else {
        return Err(Error::Config("mc_homogeneity_power needs a homogeneity design".into()));
    };
    let k = cfg.k;
    let theta1 = first_axis(k, 1.0);
    let theta2 = first_axis(k, -1.0);
    let first = SphereModel::new(kappa, &theta1)?;
    let mut points = Vec::with_capacity(cfg.grid.len());
    for (j, &c) in cfg.grid.iter().enumerate() {
        let delta = c * shift_step;
        let second = SphereModel::new(kappa + delta, &theta2)?;
        let hits = count_rejections(cfg.replications, cfg.workers, |rep| {
            let mut rng = replication_rng(cfg.seed, j as u64, rep);
            let s1 = first.sample(n1, &mut rng)?;
            let s2 = second.sample(n2, &mut rng)?;
            let design = MultiSampleDesign::new(vec![s1, s2])?;
            Ok(homogeneity_test(&design, cfg.alpha)?.reject)
        })?;
        let theory = power_homogeneity_fixed_shift(k, kappa, &[n1, n2], 1, delta, cfg.alpha)?;
        points.push(PowerPoint::new(c, hits, cfg.replications, Some(theory)));
    }
    Ok(PowerCurve { config: cfg.clone(), points })
}

/// Dispatches on the design.
pub fn run(cfg: &McConfig) -> Result<PowerCurve> {
    match cfg.design {
        Design::Rayleigh { .. } => mc_rayleigh_power(cfg),
        Design::Homogeneity { .. } => mc_homogeneity_power(cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestId {
    OneSample,
    Rayleigh,
    Homogeneity,
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-sample" => Ok(TestId::OneSample),
            "rayleigh" | "uniformity" => Ok(TestId::Rayleigh),
            "homogeneity" => Ok(TestId::Homogeneity),
            other => Err(Error::UnknownTest(other.to_string())),
        }
    }
}

/// A null hypothesis scenario for a size study.
#[derive(Debug, Clone, PartialEq)]
pub struct NullScenario {
    pub test: TestId,
    pub k: usize,
    /// `kappa_0` (one-sample) or the common `kappa` (homogeneity); unused for Rayleigh.
    pub kappa: f64,
    /// One size, or one per sample for homogeneity.
    pub sizes: Vec<usize>,
}

/// Empirical rejection frequency at level `alpha` under the scenario's null.
pub fn mc_null_size(
    scenario: &NullScenario,
    replications: usize,
    alpha: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<f64> {
    if replications == 0 {
        return Err(Error::Config("replications must be >= 1".into()));
    }
    let k = scenario.k;
    let theta = first_axis(k, 1.0);
    let need_sizes = |m: usize| -> Result<()> {
        if scenario.sizes.len() != m || scenario.sizes.iter().any(|&s| s < 2) {
            Err(Error::Config(format!(
                "expected {m} sample size(s) >= 2, got {:?}",
                scenario.sizes
            )))
        } else {
            Ok(())
        }
    };
    let hits = match scenario.test {
        TestId::Rayleigh => {
            need_sizes(1)?;
            let n = scenario.sizes[0];
            let critical = chi2_quantile(k as u32, 1.0 - alpha)?;
            let model = SphereModel::Uniform { dim: k };
            count_rejections(replications, workers, |rep| {
                let sample = model.sample(n, &mut replication_rng(seed, 0, rep))?;
                Ok(rayleigh_statistic(&sample) > critical)
            })?
        }
        TestId::OneSample => {
            need_sizes(1)?;
            let n = scenario.sizes[0];
            let critical = chi2_quantile(1, 1.0 - alpha)?;
            let model = SphereModel::new(scenario.kappa, &theta)?;
            count_rejections(replications, workers, |rep| {
                let sample = model.sample(n, &mut replication_rng(seed, 0, rep))?;
                let theta_hat = estimate_theta(&sample)?;
                Ok(one_sample_statistic(&sample, scenario.kappa, &theta_hat)? > critical)
            })?
        }
        TestId::Homogeneity => {
            if scenario.sizes.len() < 2 {
                return Err(Error::Config("homogeneity needs at least two sample sizes".into()));
            }
            let m = scenario.sizes.len();
            need_sizes(m)?;
            // sample i centred on a distinct axis direction, all with the same kappa
            let models = (0..m)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    SphereModel::new(scenario.kappa, &first_axis(k, sign))
                })
                .collect::<Result<Vec<_>>>()?;
            count_rejections(replications, workers, |rep| {
                let mut rng = replication_rng(seed, 0, rep);
                let samples = models
                    .iter()
                    .zip(&scenario.sizes)
                    .map(|(model, &n)| model.sample(n, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                Ok(homogeneity_test(&MultiSampleDesign::new(samples)?, alpha)?.reject)
            })?
        }
    };
    Ok(hits as f64 / replications as f64)
}

/// Named campaigns: `fig2` and `fig2-caption` are Rayleigh curves for
/// n = 50, 200, 500 and n = 50, 100, 200; `fig3` and `fig4` are homogeneity
/// curves with kappa = 1, 5, 10 at (n1, n2) = (100, 150) and (500, 500).
pub fn preset(name: &str, seed: u64) -> Result<Vec<McConfig>> {
    let rayleigh = |ns: &[usize]| {
        ns.iter()
            .map(|&n| McConfig::new(2, Design::Rayleigh { n }, seed))
            .collect::<Vec<_>>()
    };
    let homogeneity = |n1: usize, n2: usize| {
        [1.0, 5.0, 10.0]
            .iter()
            .map(|&kappa| {
                McConfig::new(
                    2,
                    Design::Homogeneity { kappa, n1, n2, shift_step: 0.1 },
                    seed,
                )
            })
            .collect::<Vec<_>>()
    };
    match name {
        "fig2" => Ok(rayleigh(&[50, 200, 500])),
        "fig2-caption" => Ok(rayleigh(&[50, 100, 200])),
        "fig3" => Ok(homogeneity(100, 150)),
        "fig4" => Ok(homogeneity(500, 500)),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected fig2, fig2-caption, fig3 or fig4)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_rayleigh(workers: Option<usize>) -> McConfig {
        let mut cfg = McConfig::new(2, Design::Rayleigh { n: 30 }, 42);
        cfg.replications = 200;
        cfg.grid = vec![0.0, 4.0, 10.0];
        cfg.workers = workers;
        cfg
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let seq = mc_rayleigh_power(&small_rayleigh(Some(1))).unwrap();
        let par = mc_rayleigh_power(&small_rayleigh(Some(4))).unwrap();
        let default = mc_rayleigh_power(&small_rayleigh(None)).unwrap();
        assert_eq!(seq.points, par.points);
        assert_eq!(seq.points, default.points);
    }

    #[test]
    fn counts_are_integral() {
        let curve = mc_rayleigh_power(&small_rayleigh(None)).unwrap();
        for p in &curve.points {
            assert_eq!(p.p_hat * p.replications as f64, p.rejections as f64);
            assert!((0.0..=1.0).contains(&p.p_hat));
            assert!(p.p_theory.is_some());
        }
    }

    #[test]
    fn map_preserves_order() {
        let out = map_replications(100, None, |i| Ok(i * 2)).unwrap();
        assert_eq!(out, (0..100).map(|i| i * 2).collect::<Vec<_>>());
        let err = map_replications(10, Some(1), |i| {
            if i == 5 {
                Err(Error::Config("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(err.is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_rayleigh(None);
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_rayleigh(None);
        cfg.grid = vec![-1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = small_rayleigh(None);
        cfg.workers = Some(0);
        assert!(cfg.validate().is_err());
        let cfg = McConfig::new(2, Design::Homogeneity { kappa: 0.0, n1: 10, n2: 10, shift_step: 0.1 }, 1);
        assert!(cfg.validate().is_err());
        let cfg = McConfig::new(2, Design::Rayleigh { n: 10 }, 1);
        assert!(mc_homogeneity_power(&cfg).is_err());
    }

    #[test]
    fn unknown_test_id() {
        assert!(matches!("kuiper".parse::<TestId>(), Err(Error::UnknownTest(_))));
        assert_eq!("one-sample".parse::<TestId>().unwrap(), TestId::OneSample);
    }

    #[test]
    fn presets_cover_designs() {
        assert_eq!(preset("fig2", 1).unwrap().len(), 3);
        let fig3 = preset("fig3", 1).unwrap();
        assert!(fig3.iter().all(|c| matches!(c.design, Design::Homogeneity { n1: 100, n2: 150, .. })));
        assert!(preset("fig9", 1).is_err());
    }

    #[test]
    fn csv_columns() {
        let curve = mc_rayleigh_power(&small_rayleigh(None)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[curve]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "design,k,n,n1,n2,kappa,c,N,alpha,p_hat,se,p_theory"
        );
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = preset("fig4", 9).unwrap().remove(0);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<McConfig>(&json).unwrap(), cfg);
    }
}
