//! Asymptotic powers of the concentration tests under local alternatives.
//!
//! Each test statistic is asymptotically `chi^2_df(lambda)` along its local
//! alternatives, so the power is `1 - F_{chi^2_df(lambda)}(chi^2_{df;1-alpha})`.
//! Nothing here simulates; see [`crate::montecarlo`] for that.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{a_prime, chi2_quantile, chi2_sf, check_dim, ChiSqSpec};

/// Tolerance on `sum r_i = 1`.
pub const RATIO_SUM_TOL: f64 = 1e-9;

/// A local alternative `n^{-1/2}`-away from the null of one of the tests.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalAlternative {
    /// `kappa = kappa0 + n^{-1/2} c`.
    OneSample { k: usize, kappa0: f64, c: f64 },
    /// FvML with `kappa = n^{-1/2} c` against uniformity.
    Rayleigh { k: usize, c: f64 },
    /// `kappa_i = kappa + n_i^{-1/2} c_i` with sample ratios `r`.
    Homogeneity {
        k: usize,
        kappa: f64,
        ratios: Vec<f64>,
        c: Vec<f64>,
    },
}

impl LocalAlternative {
    pub fn df(&self) -> u32 {
        match self {
            LocalAlternative::OneSample { .. } => 1,
            LocalAlternative::Rayleigh { k, .. } => *k as u32,
            LocalAlternative::Homogeneity { ratios, .. } => ratios.len().saturating_sub(1) as u32,
        }
    }

    pub fn noncentrality(&self) -> Result<f64> {
        match self {
            LocalAlternative::OneSample { k, kappa0, c } => {
                check_c(*c)?;
                Ok(a_prime(*k, *kappa0)? * c * c)
            }
            LocalAlternative::Rayleigh { k, c } => {
                check_dim(*k)?;
                check_c(*c)?;
                Ok(c * c / *k as f64)
            }
            LocalAlternative::Homogeneity { k, kappa, ratios, c } => {
                noncentrality_homogeneity(*k, *kappa, ratios, c)
            }
        }
    }

    pub fn power(&self, alpha: f64) -> Result<f64> {
        if let LocalAlternative::Homogeneity { ratios, .. } = self {
            if ratios.len() < 2 {
                return Err(Error::domain("homogeneity alternatives need m >= 2 samples"));
            }
        }
        chi2_power(self.df(), self.noncentrality()?, alpha)
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("local shift must be finite, got {c}")))
    }
}

/// `1 - F_{chi^2_df(lambda)}(chi^2_{df;1-alpha})`.
pub fn chi2_power(df: u32, noncentrality: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("level alpha must lie in (0, 1), got {alpha}")));
    }
    let critical = chi2_quantile(df, 1.0 - alpha)?;
    chi2_sf(ChiSqSpec::new(df, noncentrality)?, critical)
}

pub fn power_one_sample(k: usize, kappa0: f64, c: f64, alpha: f64) -> Result<f64> {
    LocalAlternative::OneSample { k, kappa0, c }.power(alpha)
}

pub fn power_rayleigh(k: usize, c: f64, alpha: f64) -> Result<f64> {
    LocalAlternative::Rayleigh { k, c }.power(alpha)
}

/// `D_k [sum c_i^2 - (sum sqrt(r_i) c_i)^2]` with `D_k = A_k'(kappa)`; zero
/// exactly when `c` is proportional to `(sqrt(r_1), ..., sqrt(r_m))`.
pub fn noncentrality_homogeneity(k: usize, kappa: f64, ratios: &[f64], c: &[f64]) -> Result<f64> {
    check_ratios(ratios)?;
    if c.len() != ratios.len() {
        return Err(Error::DimensionMismatch { expected: ratios.len(), actual: c.len() });
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("local shifts must be finite"));
    }
    let d = a_prime(k, kappa)?;
    // sum c_i^2 - (u'c)^2 with |u| = 1 is |c - (u'c) u|^2, which keeps it >= 0
    let norm = ratios.iter().sum::<f64>().sqrt();
    let u: Vec<f64> = ratios.iter().map(|r| r.sqrt() / norm).collect();
    let along: f64 = u.iter().zip(c).map(|(ui, ci)| ui * ci).sum();
    let residual: f64 = u
        .iter()
        .zip(c)
        .map(|(ui, ci)| (ci - along * ui).powi(2))
        .sum();
    Ok(d * residual)
}

pub fn power_homogeneity(k: usize, kappa: f64, ratios: &[f64], c: &[f64], alpha: f64) -> Result<f64> {
    LocalAlternative::Homogeneity {
        k,
        kappa,
        ratios: ratios.to_vec(),
        c: c.to_vec(),
    }
    .power(alpha)
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::domain("ratio vector is empty"));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::domain("sample ratios must all be > 0"));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > RATIO_SUM_TOL {
        return Err(Error::domain(format!(
            "sample ratios must sum to 1 (within {RATIO_SUM_TOL:e}), got {sum}"
        )));
    }
    Ok(())
}

/// Local shifts reproducing a fixed concentration shift `delta` on sample
/// `shifted` at finite sizes: `c_i = sqrt(n_i) delta` there and 0 elsewhere,
/// since the perturbation of `kappa_i` is `n_i^{-1/2} c_i`.
pub fn fixed_shift_local_c(sizes: &[usize], shifted: usize, delta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if shifted >= sizes.len() {
        return Err(Error::domain(format!(
            "shifted sample {shifted} out of range for {} samples",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::domain("sample sizes must be >= 1"));
    }
    let n: usize = sizes.iter().sum();
    let ratios = sizes.iter().map(|&s| s as f64 / n as f64).collect();
    let mut c = vec![0.0; sizes.len()];
    c[shifted] = (sizes[shifted] as f64).sqrt() * delta;
    Ok((ratios, c))
}

/// Asymptotic power of the homogeneity test when sample `shifted` has
/// concentration `kappa + delta` and the others `kappa`.
pub fn power_homogeneity_fixed_shift(
    k: usize,
    kappa: f64,
    sizes: &[usize],
    shifted: usize,
    delta: f64,
    alpha: f64,
) -> Result<f64> {
    let (ratios, c) = fixed_shift_local_c(sizes, shifted, delta)?;
    power_homogeneity(k, kappa, &ratios, &c, alpha)
}

/// One point of a theoretical power curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub c: f64,
    pub power: f64,
    pub label: String,
}

/// A labelled theoretical power curve over a grid of local shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalCurve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl TheoreticalCurve {
    /// Evaluates `power(c)` over `grid`.
    pub fn tabulate<F>(label: impl Into<String>, grid: &[f64], mut power: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let points = grid
            .iter()
            .map(|&c| power(c).map(|p| (c, p)))
            .collect::<Result<_>>()?;
        Ok(TheoreticalCurve { label: label.into(), points })
    }
}

/// Rayleigh power curves against `FvML(n^{-1/2} scale c, theta)` for each
/// dimension; `scale = 0.5` gives the usual `c/2` parameterization.
pub fn rayleigh_curves(dims: &[usize], grid: &[f64], scale: f64, alpha: f64) -> Result<Vec<TheoreticalCurve>> {
    dims.iter()
        .map(|&k| {
            TheoreticalCurve::tabulate(format!("k={k}"), grid, |c| power_rayleigh(k, scale * c, alpha))
        })
        .collect()
}

/// Writes curves as CSV with columns `c,power,label`.
pub fn write_curves_csv<W: Write>(out: W, curves: &[TheoreticalCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for curve in curves {
        for &(c, power) in &curve.points {
            w.serialize(CurvePoint { c, power, label: curve.label.clone() })
                .map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}
