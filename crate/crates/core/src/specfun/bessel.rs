//! Modified Bessel functions of the first kind and the ratio
//! `A_k(kappa) = I_{k/2}(kappa) / I_{k/2-1}(kappa)` with its derivative and inverse.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Order of a modified Bessel function, `nu >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::domain(format!("Bessel order must be >= 0, got {nu}")))
        }
    }

    /// The order `k/2 - 1` attached to the sphere `S^{k-1}`.
    pub fn for_dimension(k: usize) -> Result<Self> {
        check_dim(k)?;
        Ok(BesselOrder(k as f64 / 2.0 - 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_dim(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::domain(format!("dimension k must be >= 2, got {k}")))
    } else {
        Ok(())
    }
}

/// Below this argument the plain power series is summed in linear scale.
const SERIES_MAX_X: f64 = 50.0;
/// The Hankel expansion is used once `x` exceeds both this and `nu^2`.
const ASYMPTOTIC_MIN_X: f64 = 50.0;

/// `I_nu(x)`.
///
/// Overflows to `inf` past `x ~ 713`; use [`log_bessel_i`] or
/// [`bessel_i_scaled`] there.
pub fn bessel_i(nu: BesselOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    let nu = nu.0;
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x <= SERIES_MAX_X {
        let (sum, _) = series_sum(nu, x);
        return Ok((nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp() * sum);
    }
    Ok(log_bessel_i_positive(nu, x).exp())
}

/// `ln I_nu(x)`; finite for every `x > 0`, `-inf` at `x = 0` when `nu > 0`.
pub fn log_bessel_i(nu: BesselOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    if x == 0.0 {
        return Ok(if nu.0 == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(log_bessel_i_positive(nu.0, x))
}

/// Exponentially scaled `e^{-x} I_nu(x)`.
pub fn bessel_i_scaled(nu: BesselOrder, x: f64) -> Result<f64> {
    Ok((log_bessel_i(nu, x)? - x).exp())
}

fn check_arg(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::domain(format!(
            "Bessel argument must be >= 0, got {x}"
        )))
    } else {
        Ok(())
    }
}

fn log_bessel_i_positive(nu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX_X {
        let (sum, _) = series_sum(nu, x);
        return nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln();
    }
    if x >= ASYMPTOTIC_MIN_X.max(nu * nu) {
        if let Some(s) = hankel_sum(nu, x) {
            return x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + s.ln();
        }
    }
    log_series_centered(nu, x)
}

/// `sum_m (x/2)^{2m} Gamma(nu+1) / (m! Gamma(m+nu+1))`; all terms positive.
fn series_sum(nu: f64, x: f64) -> (f64, usize) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0usize;
    loop {
        m += 1;
        let mf = m as f64;
        term *= q / (mf * (mf + nu));
        sum += term;
        if term < sum * 1e-17 {
            return (sum, m);
        }
    }
}

/// Log of the power series, summed relative to its largest term so that
/// nothing overflows for large `x`.
fn log_series_centered(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let peak = (0.5 * (-nu + (nu * nu + x * x).sqrt())).floor().max(0.0);
    let log_half_x = (0.5 * x).ln();
    let log_peak = (2.0 * peak + nu) * log_half_x - ln_gamma(peak + 1.0) - ln_gamma(peak + nu + 1.0);

    let mut sum = 1.0;
    let mut term = 1.0;
    let mut m = peak;
    loop {
        m += 1.0;
        term *= q / (m * (m + nu));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    let mut term = 1.0;
    let mut m = peak;
    while m > 0.0 {
        term *= m * (m + nu) / q;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        m -= 1.0;
    }
    log_peak + sum.ln()
}

/// Hankel expansion `sqrt(2 pi x) e^{-x} I_nu(x) ~ sum_j (-1)^j a_j(nu) / x^j`.
/// Returns `None` when the terms stop decreasing before reaching full precision.
fn hankel_sum(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        let odd = (2 * j - 1) as f64;
        let next = -term * (mu - odd * odd) / (j as f64 * 8.0 * x);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            return Some(sum);
        }
    }
    None
}

/// Above this argument `A_k` is taken from the ratio of Hankel expansions
/// instead of the continued fraction, whose cost grows linearly in `kappa`.
const RATIO_ASYMPTOTIC_MIN_X: f64 = 2000.0;
const CF_MAX_ITER: usize = 1_000_000;

/// `A_k(kappa) = I_{k/2}(kappa) / I_{k/2-1}(kappa)`, the mean of `X'theta`
/// under FvML(kappa, theta) on `S^{k-1}`.
///
/// Evaluated from the continued fraction of `I_{nu+1}/I_nu`, never as a
/// quotient of two Bessel values, so it stays finite for any `kappa`.
pub fn bessel_ratio_a(k: usize, kappa: f64) -> Result<f64> {
    check_dim(k)?;
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::domain(format!("kappa must be >= 0, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    if kappa.is_infinite() {
        return Ok(1.0);
    }
    let nu = k as f64 / 2.0 - 1.0;
    Ok(ratio(nu, kappa))
}

fn ratio(nu: f64, x: f64) -> f64 {
    if x >= RATIO_ASYMPTOTIC_MIN_X.max(4.0 * (nu + 1.0) * (nu + 1.0)) {
        if let (Some(num), Some(den)) = (hankel_sum(nu + 1.0, x), hankel_sum(nu, x)) {
            return num / den;
        }
    }
    ratio_continued_fraction(nu, x)
}

/// `I_{nu+1}(x)/I_nu(x) = 1 / (b_1 + 1 / (b_2 + ...))` with `b_j = 2(nu+j)/x`,
/// evaluated by the modified Lentz algorithm.
fn ratio_continued_fraction(nu: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let b = |j: usize| 2.0 * (nu + j as f64) / x;
    let mut f = b(1);
    let mut c = f;
    let mut d = 0.0;
    for j in 2..CF_MAX_ITER {
        let bj = b(j);
        d += bj;
        if d.abs() < TINY {
            d = TINY;
        }
        c = bj + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Beyond this concentration the literal variance formula loses all its
/// digits to cancellation and the large-`kappa` expansion takes over.
const A_PRIME_ASYMPTOTIC_MIN_KAPPA: f64 = 1e6;

/// `A_k'(kappa) = 1 - (k-1) A_k(kappa) / kappa - A_k(kappa)^2`, which is also
/// the variance of `X'theta` under FvML(kappa, theta).
///
/// The formula is 0/0 at `kappa = 0`, which is rejected here; the limit is
/// available as [`a_prime_limit_at_zero`].
pub fn a_prime(k: usize, kappa: f64) -> Result<f64> {
    check_dim(k)?;
    check_positive_kappa(kappa)?;
    let km1 = (k - 1) as f64;
    if kappa > A_PRIME_ASYMPTOTIC_MIN_KAPPA {
        // A_k = 1 - (k-1)/(2 kappa) - (k-1)(k-3)/(8 kappa^2) + O(kappa^-3)
        let k3 = k as f64 - 3.0;
        return Ok(km1 / (2.0 * kappa * kappa) * (1.0 + k3 / (2.0 * kappa)));
    }
    let a = ratio(k as f64 / 2.0 - 1.0, kappa);
    Ok(1.0 - km1 * a / kappa - a * a)
}

/// `lim_{kappa -> 0} A_k'(kappa) = 1/k`, the variance of one coordinate of a
/// uniform point on `S^{k-1}`.
pub fn a_prime_limit_at_zero(k: usize) -> f64 {
    1.0 / k as f64
}

/// `J_k(kappa) = E[1 - (X'theta)^2]`, through the identity
/// `J_k(kappa) = (k-1) A_k(kappa) / kappa`.
pub fn j_k(k: usize, kappa: f64) -> Result<f64> {
    check_dim(k)?;
    check_positive_kappa(kappa)?;
    let a = ratio(k as f64 / 2.0 - 1.0, kappa);
    Ok((k - 1) as f64 * a / kappa)
}

/// `lim_{kappa -> 0} J_k(kappa) = (k-1)/k`.
pub fn j_k_limit_at_zero(k: usize) -> f64 {
    (k - 1) as f64 / k as f64
}

fn check_positive_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("kappa must be > 0, got {kappa}")))
    }
}

/// Solves `A_k(kappa) = r` for `kappa`: the concentration whose mean
/// resultant length is `r`.
///
/// Newton steps on `A_k` with derivative [`a_prime`], started from
/// `r (k - r^2) / (1 - r^2)` and kept inside a bisection bracket
/// `[0, kappa_max]`, where `kappa_max` doubles until `A_k(kappa_max) > r`.
pub fn a_inverse(k: usize, r: f64) -> Result<f64> {
    check_dim(k)?;
    if r.is_nan() || !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!(
            "resultant length must satisfy 0 <= r < 1, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    let nu = kf / 2.0 - 1.0;
    let f = |kappa: f64| ratio(nu, kappa) - r;

    let mut lo = 0.0;
    let mut hi = 1.0f64;
    let mut kappa = r * (kf - r * r) / (1.0 - r * r);
    if kappa.is_finite() && kappa > hi {
        hi = kappa;
    }
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain(format!(
                "resultant length {r} too close to 1 to invert"
            )));
        }
    }
    if !(kappa > lo && kappa < hi) {
        kappa = 0.5 * (lo + hi);
    }

    for _ in 0..500 {
        let fk = f(kappa);
        if fk == 0.0 {
            return Ok(kappa);
        }
        if fk < 0.0 {
            lo = kappa;
        } else {
            hi = kappa;
        }
        let slope = a_prime(k, kappa)?;
        let mut next = kappa - fk / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - kappa).abs();
        kappa = next;
        if step <= 4.0 * f64::EPSILON * kappa.max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(kappa)
}
