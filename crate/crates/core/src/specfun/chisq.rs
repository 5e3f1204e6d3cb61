//! Central and non-central chi-square distribution functions.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Degrees of freedom and non-centrality of a chi-square law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSqSpec {
    df: u32,
    noncentrality: f64,
}

impl ChiSqSpec {
    pub fn new(df: u32, noncentrality: f64) -> Result<Self> {
        if df == 0 {
            return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
        }
        if !(noncentrality.is_finite() && noncentrality >= 0.0) {
            return Err(Error::domain(format!(
                "non-centrality must be >= 0, got {noncentrality}"
            )));
        }
        Ok(ChiSqSpec { df, noncentrality })
    }

    pub fn central(df: u32) -> Result<Self> {
        Self::new(df, 0.0)
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }
}

/// Stop extending the Poisson mixture once this much weight is left out.
const MIXTURE_TAIL: f64 = 1e-12;

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (sum.ln() + log_prefactor(a, x)).exp()
}

/// Lentz evaluation of the continued fraction for `Q(a, x)`, valid for `x >= a + 1`.
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (log_prefactor(a, x) + h.ln()).exp()
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::domain(format!("chi-square argument must be >= 0, got {x}")))
    } else {
        Ok(())
    }
}

/// Distribution function of `chi^2_df(lambda)` at `x`.
///
/// The non-central law is the Poisson(`lambda/2`) mixture of central laws
/// with `df + 2j` degrees of freedom. Summation starts at the modal index and
/// grows outward, always towards the heavier neighbour, until the weight left
/// out is below `1e-12`.
pub fn chi2_cdf(spec: ChiSqSpec, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(mixture(spec, x, gamma_p))
}

/// Upper tail `1 - F(x)`, summed directly so small tail probabilities keep
/// their relative accuracy.
pub fn chi2_sf(spec: ChiSqSpec, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(mixture(spec, x, gamma_q))
}

fn mixture(spec: ChiSqSpec, x: f64, component: fn(f64, f64) -> f64) -> f64 {
    let half_df = 0.5 * spec.df as f64;
    let half_x = 0.5 * x;
    let mu = 0.5 * spec.noncentrality;
    if mu == 0.0 {
        return component(half_df, half_x).clamp(0.0, 1.0);
    }

    let mode = mu.floor();
    let w_mode = (-mu + mode * mu.ln() - ln_gamma(mode + 1.0)).exp();
    let mut total_weight = w_mode;
    let mut acc = w_mode * component(half_df + mode, half_x);

    let (mut up_j, mut up_w) = (mode, w_mode);
    let (mut down_j, mut down_w) = (mode, w_mode);
    let next_up = |j: f64, w: f64| w * mu / (j + 1.0);
    let next_down = |j: f64, w: f64| if j > 0.0 { w * j / mu } else { 0.0 };

    while total_weight < 1.0 - MIXTURE_TAIL {
        let cand_up = next_up(up_j, up_w);
        let cand_down = next_down(down_j, down_w);
        if cand_up == 0.0 && cand_down == 0.0 {
            break;
        }
        if cand_up >= cand_down {
            up_j += 1.0;
            up_w = cand_up;
            total_weight += up_w;
            acc += up_w * component(half_df + up_j, half_x);
        } else {
            down_j -= 1.0;
            down_w = cand_down;
            total_weight += down_w;
            acc += down_w * component(half_df + down_j, half_x);
        }
    }
    acc.clamp(0.0, 1.0)
}

/// Central chi-square density.
fn chi2_pdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df as f64;
    ((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
}

/// Quantile of the central chi-square law with `df` degrees of freedom:
/// the `x` with `F(x) = p`, by safeguarded Newton iteration on the CDF.
pub fn chi2_quantile(df: u32, p: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0, 1), got {p}")));
    }
    let a = 0.5 * df as f64;
    // Work on whichever tail is smaller so the residual stays well resolved.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let resid = |x: f64| {
        if upper {
            target - gamma_q(a, 0.5 * x)
        } else {
            gamma_p(a, 0.5 * x) - target
        }
    };

    let mut lo = 0.0;
    let mut hi = df as f64 + 10.0 * (2.0 * df as f64).sqrt() + 10.0;
    while resid(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = df as f64;
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..300 {
        let r = resid(x);
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = chi2_pdf(df, x);
        let mut next = if dens > 0.0 { x - r / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 2.0 * f64::EPSILON * x || hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn central(df: u32) -> ChiSqSpec {
        ChiSqSpec::central(df).unwrap()
    }

    #[test]
    fn incomplete_gamma_reference() {
        assert_relative_eq!(gamma_p(2.5, 3.7), 0.807_449_566_920_604_3, max_relative = 1e-13);
        assert_relative_eq!(gamma_p(0.5, 0.01), 0.112_462_916_018_284_89, max_relative = 1e-13);
        assert_relative_eq!(gamma_p(10.0, 30.0), 0.999_992_878_249_137_2, max_relative = 1e-13);
        assert_relative_eq!(gamma_q(10.0, 30.0), 1.0 - 0.999_992_878_249_137_18, max_relative = 1e-8);
    }

    #[test]
    fn central_cdf_examples() {
        assert_eq!(chi2_cdf(central(1), 0.0).unwrap(), 0.0);
        assert!((chi2_cdf(central(1), 3.841_459).unwrap() - 0.95).abs() < 1e-6);
        // df = 2 is exponential with mean 2
        for x in [0.1, 1.0, 5.991_465, 20.0] {
            assert_relative_eq!(chi2_cdf(central(2), x).unwrap(), 1.0 - (-0.5 * x).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn noncentral_reference() {
        let spec = ChiSqSpec::new(2, 12.5).unwrap();
        assert_relative_eq!(chi2_cdf(spec, 5.991_465).unwrap(), 0.103_757_174_715_377_997, max_relative = 1e-11);
    }

    #[test]
    fn cdf_and_sf_complement() {
        for (df, lam) in [(1, 0.0), (3, 0.7), (5, 40.0), (2, 900.0)] {
            let spec = ChiSqSpec::new(df, lam).unwrap();
            for x in [0.5, 3.0, 10.0, 50.0, 1000.0] {
                let s = chi2_cdf(spec, x).unwrap() + chi2_sf(spec, x).unwrap();
                assert!((s - 1.0).abs() < 1e-11, "df={df} lam={lam} x={x} sum={s}");
            }
        }
    }

    #[test]
    fn quantile_examples() {
        assert_relative_eq!(chi2_quantile(1, 0.95).unwrap(), 3.841_458_820_694_125_9, max_relative = 1e-12);
        assert_relative_eq!(chi2_quantile(2, 0.95).unwrap(), -2.0 * 0.05f64.ln(), max_relative = 1e-12);
        for k in 1..12 {
            let q = chi2_quantile(k, 0.9).unwrap();
            assert!((chi2_cdf(central(k), q).unwrap() - 0.9).abs() < 1e-10);
        }
    }

    #[test]
    fn quantile_extreme_probabilities() {
        for df in [1, 2, 7] {
            for p in [1e-12, 1e-4, 0.5, 1.0 - 1e-9] {
                let q = chi2_quantile(df, p).unwrap();
                assert!((chi2_cdf(central(df), q).unwrap() - p).abs() <= 1e-10, "df={df} p={p}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_quantile(1, 0.0).is_err());
        assert!(chi2_quantile(1, 1.0).is_err());
        assert!(chi2_quantile(0, 0.5).is_err());
        assert!(ChiSqSpec::new(0, 1.0).is_err());
        assert!(ChiSqSpec::new(1, -1.0).is_err());
        assert!(chi2_cdf(central(1), -1.0).is_err());
    }
}
