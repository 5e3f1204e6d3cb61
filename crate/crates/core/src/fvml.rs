//! The FvML model `f(x) = c_{k,kappa} exp(kappa x'theta)` and exact samplers.
//!
//! Densities are taken with respect to the uniform *probability* measure on
//! `S^{k-1}` (total mass one). Under that base measure
//! `c_{k,kappa} = (kappa/2)^{k/2-1} / (Gamma(k/2) I_{k/2-1}(kappa))` is exact
//! and tends to 1 as `kappa -> 0`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::specfun::{self, BesselOrder};
use crate::sphere::{same_dim, SphericalSample, UnitVector};

/// Concentration `kappa > 0` and mean direction `theta` of an FvML law.
#[derive(Debug, Clone, PartialEq)]
pub struct FvmlParams {
    kappa: f64,
    theta: UnitVector,
}

impl FvmlParams {
    pub fn new(kappa: f64, theta: UnitVector) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::domain(format!(
                "FvML concentration must be > 0, got {kappa} (use the uniform model for 0)"
            )));
        }
        Ok(FvmlParams { kappa, theta })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> &UnitVector {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }
}

/// `ln c_{k,kappa}` with respect to the uniform probability measure.
pub fn log_normalizer(k: usize, kappa: f64) -> Result<f64> {
    let order = BesselOrder::for_dimension(k)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
    }
    let nu = order.value();
    Ok(nu * (0.5 * kappa).ln() - ln_gamma(nu + 1.0) - specfun::log_bessel_i(order, kappa)?)
}

pub fn log_density(params: &FvmlParams, x: &UnitVector) -> Result<f64> {
    same_dim(params.dim(), x.dim())?;
    Ok(log_normalizer(params.dim(), params.kappa)? + params.kappa * x.dot(params.theta.as_slice()))
}

/// Deterministic random stream keyed by `(seed, stream)`.
///
/// ChaCha8 keyed by `seed`, with `stream` selecting the ChaCha stream
/// counter: two different `(seed, stream)` pairs never overlap, and a given
/// pair yields the same draws whatever else runs concurrently.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Householder reflection `H = I - 2 v v' / v'v` with `v = e_k - theta`,
/// which maps the last basis vector onto `theta`.
#[derive(Debug, Clone)]
pub struct Householder {
    v: Vec<f64>,
    scale: f64,
}

impl Householder {
    pub fn to_direction(theta: &UnitVector) -> Self {
        let k = theta.dim();
        let mut v: Vec<f64> = theta.as_slice().iter().map(|t| -t).collect();
        v[k - 1] += 1.0;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let scale = if vv < 1e-300 { 0.0 } else { 2.0 / vv };
        Householder { v, scale }
    }

    pub fn apply(&self, y: &mut [f64]) {
        if self.scale == 0.0 {
            return;
        }
        let proj: f64 = self.v.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>() * self.scale;
        y.iter_mut().zip(&self.v).for_each(|(yi, vi)| *yi -= proj * vi);
    }
}

/// Wood's envelope-rejection sampler for `t = X'theta`, whose density is
/// proportional to `exp(kappa t) (1 - t^2)^{(k-3)/2}` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct TangentComponentSampler {
    kappa: f64,
    km1: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
}

impl TangentComponentSampler {
    pub fn new(k: usize, kappa: f64) -> Result<Self> {
        specfun::check_dim(k)?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
        }
        let km1 = (k - 1) as f64;
        // (-2 kappa + sqrt(4 kappa^2 + (k-1)^2)) / (k-1), without the cancellation
        let b = km1 / (2.0 * kappa + (4.0 * kappa * kappa + km1 * km1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + km1 * (1.0 - x0 * x0).ln();
        let beta = Beta::new(0.5 * km1, 0.5 * km1)
            .map_err(|e| Error::domain(format!("beta proposal: {e}")))?;
        Ok(TangentComponentSampler { kappa, km1, b, x0, c, beta })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z = self.beta.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = 1.0 - rng.random::<f64>();
            if self.kappa * w + self.km1 * (1.0 - self.x0 * w).ln() - self.c >= u.ln() {
                return w.clamp(-1.0, 1.0);
            }
        }
    }
}

/// A reusable FvML sampler for fixed parameters.
#[derive(Debug, Clone)]
pub struct FvmlSampler {
    dim: usize,
    tangent: TangentComponentSampler,
    rotation: Householder,
}

impl FvmlSampler {
    pub fn new(params: &FvmlParams) -> Result<Self> {
        Ok(FvmlSampler {
            dim: params.dim(),
            tangent: TangentComponentSampler::new(params.dim(), params.kappa)?,
            rotation: Householder::to_direction(&params.theta),
        })
    }

    /// Writes one draw into `out` (length `k`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let k = self.dim;
        let t = self.tangent.sample(rng);
        let radial = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
        let tangent = &mut out[..k - 1];
        fill_unit_gaussian_direction(rng, tangent);
        tangent.iter_mut().for_each(|x| *x *= radial);
        out[k - 1] = t;
        self.rotation.apply(out);
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SphericalSample> {
        check_n(n)?;
        let mut data = vec![0.0; n * self.dim];
        for row in data.chunks_exact_mut(self.dim) {
            self.sample_into(rng, row);
        }
        Ok(SphericalSample::from_rows_unchecked(self.dim, data))
    }
}

fn fill_unit_gaussian_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut ss = 0.0;
        for x in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *x = g;
            ss += g * g;
        }
        if ss > 1e-300 {
            let inv = 1.0 / ss.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("sample size must be >= 1"))
    } else {
        Ok(())
    }
}

/// `n` i.i.d. FvML draws by the tangent-normal decomposition
/// `X = t theta + sqrt(1 - t^2) xi`.
pub fn sample_fvml<R: Rng + ?Sized>(params: &FvmlParams, n: usize, rng: &mut R) -> Result<SphericalSample> {
    FvmlSampler::new(params)?.sample(n, rng)
}

/// `n` i.i.d. uniform draws on `S^{k-1}` (normalized Gaussian vectors).
pub fn sample_uniform<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<SphericalSample> {
    specfun::check_dim(k)?;
    check_n(n)?;
    let mut data = vec![0.0; n * k];
    for row in data.chunks_exact_mut(k) {
        fill_unit_gaussian_direction(rng, row);
    }
    Ok(SphericalSample::from_rows_unchecked(k, data))
}

/// Either the uniform law (`kappa = 0`) or an FvML law.
#[derive(Debug, Clone)]
pub enum SphereModel {
    Uniform { dim: usize },
    Fvml(FvmlSampler),
}

impl SphereModel {
    /// `kappa = 0` selects the uniform law; `theta` is then ignored.
    pub fn new(kappa: f64, theta: &UnitVector) -> Result<Self> {
        if kappa == 0.0 {
            Ok(SphereModel::Uniform { dim: theta.dim() })
        } else {
            Ok(SphereModel::Fvml(FvmlSampler::new(&FvmlParams::new(kappa, theta.clone())?)?))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SphericalSample> {
        match self {
            SphereModel::Uniform { dim } => sample_uniform(*dim, n, rng),
            SphereModel::Fvml(s) => s.sample(n, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(k: usize, i: usize) -> UnitVector {
        UnitVector::basis(k, i).unwrap()
    }

    #[test]
    fn normalizer_tends_to_one() {
        for k in 2..7 {
            assert!(log_normalizer(k, 1e-10).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn circle_density_integrates_to_one() {
        // normalized arc measure d phi / (2 pi), trapezoid is spectrally exact here
        let params = FvmlParams::new(1.0, UnitVector::normalize(vec![0.3, -0.7]).unwrap()).unwrap();
        let m = 2000;
        let mut total = 0.0;
        for i in 0..m {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let x = UnitVector::normalize(vec![phi.cos(), phi.sin()]).unwrap();
            total += log_density(&params, &x).unwrap().exp();
        }
        assert_relative_eq!(total / m as f64, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn density_peaks_at_mean_direction() {
        let theta = UnitVector::normalize(vec![1.0, 2.0, -0.5]).unwrap();
        let params = FvmlParams::new(3.0, theta.clone()).unwrap();
        let top = log_density(&params, &theta).unwrap();
        assert_relative_eq!(top, log_normalizer(3, 3.0).unwrap() + 3.0, max_relative = 1e-14);
        for i in 0..3 {
            assert!(log_density(&params, &e(3, i)).unwrap() < top);
        }
        assert!(log_density(&params, &e(2, 0)).is_err());
    }

    #[test]
    fn params_reject_zero_kappa() {
        assert!(FvmlParams::new(0.0, e(3, 0)).is_err());
        assert!(FvmlParams::new(-1.0, e(3, 0)).is_err());
    }

    #[test]
    fn householder_maps_pole_to_theta() {
        for theta in [
            UnitVector::normalize(vec![0.2, 0.4, -0.1, 0.9]).unwrap(),
            e(4, 3),
            UnitVector::normalize(vec![0.0, 0.0, 0.0, -1.0]).unwrap(),
        ] {
            let h = Householder::to_direction(&theta);
            let mut y = vec![0.0, 0.0, 0.0, 1.0];
            h.apply(&mut y);
            for j in 0..4 {
                assert!((y[j] - theta.as_slice()[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn same_stream_is_bitwise_reproducible() {
        let params = FvmlParams::new(2.0, e(3, 0)).unwrap();
        let a = sample_fvml(&params, 50, &mut SeededRng::new(7, 3)).unwrap();
        let b = sample_fvml(&params, 50, &mut SeededRng::new(7, 3)).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        let c = sample_fvml(&params, 50, &mut SeededRng::new(7, 4)).unwrap();
        assert_ne!(a.as_flat(), c.as_flat());
        let u1 = sample_uniform(3, 20, &mut SeededRng::new(1, 0)).unwrap();
        let u2 = sample_uniform(3, 20, &mut SeededRng::new(1, 0)).unwrap();
        assert_eq!(u1, u2);
    }

    #[test]
    fn every_draw_is_unit() {
        for (k, kappa) in [(2, 0.01), (3, 2.0), (5, 50.0), (2, 1e4)] {
            let params = FvmlParams::new(kappa, UnitVector::normalize(vec![1.0; k]).unwrap()).unwrap();
            let s = sample_fvml(&params, 500, &mut SeededRng::new(11, 0)).unwrap();
            assert!(SphericalSample::from_rows(k, s.as_flat().to_vec()).is_ok());
        }
    }

    #[test]
    fn zero_sample_size_rejected() {
        let params = FvmlParams::new(1.0, e(2, 0)).unwrap();
        assert!(sample_fvml(&params, 0, &mut SeededRng::new(0, 0)).is_err());
        assert!(sample_uniform(1, 5, &mut SeededRng::new(0, 0)).is_err());
    }
}
