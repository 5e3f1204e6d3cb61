//! Points and samples on the unit sphere `S^{k-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of `||x||` from 1 for a [`UnitVector`].
pub const UNIT_TOL: f64 = 1e-9;

/// Resultant lengths below this are treated as exact cancellation.
pub const DEGENERATE_RESULTANT: f64 = 1e-12;

/// Tangent components shorter than this leave the tangent sign undefined.
pub const COLINEAR_TOL: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point of `S^{k-1}`, `k >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Validates that `coords` already has unit norm (within [`UNIT_TOL`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_len(coords.len())?;
        let n = norm(&coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm: n, tol: UNIT_TOL });
        }
        Ok(UnitVector { coords })
    }

    /// Rescales any nonzero vector onto the sphere.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        check_len(coords.len())?;
        let n = norm(&coords);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(UnitVector { coords })
    }

    /// The `i`-th canonical basis vector (0-based) of `R^k`.
    pub fn basis(k: usize, i: usize) -> Result<Self> {
        check_len(k)?;
        if i >= k {
            return Err(Error::domain(format!("basis index {i} out of range for k = {k}")));
        }
        let mut coords = vec![0.0; k];
        coords[i] = 1.0;
        Ok(UnitVector { coords })
    }

    pub(crate) fn from_normalized_unchecked(coords: Vec<f64>) -> Self {
        UnitVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.coords, other)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        UnitVector::new(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.coords
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

fn check_len(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::domain(format!("unit vectors need dimension k >= 2, got {k}")))
    } else {
        Ok(())
    }
}

/// `n >= 1` points of a common `S^{k-1}`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSample {
    dim: usize,
    data: Vec<f64>,
}

impl SphericalSample {
    pub fn from_points(points: &[UnitVector]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::domain("a sample needs at least one point"))?;
        let dim = first.dim();
        let mut data = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: p.dim() });
            }
            data.extend_from_slice(p.as_slice());
        }
        Ok(SphericalSample { dim, data })
    }

    /// Builds a sample from row-major coordinates, validating every row.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim)?;
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} coordinates do not form whole rows of dimension {dim}",
                data.len()
            )));
        }
        for row in data.chunks_exact(dim) {
            let n = norm(row);
            if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::NotUnit { norm: n, tol: UNIT_TOL });
            }
        }
        Ok(SphericalSample { dim, data })
    }

    pub(crate) fn from_rows_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(dim >= 2 && !data.is_empty() && data.len().is_multiple_of(dim));
        SphericalSample { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false: a sample holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_points(&self) -> Vec<UnitVector> {
        self.rows()
            .map(|r| UnitVector::from_normalized_unchecked(r.to_vec()))
            .collect()
    }

    /// Coordinate-wise mean `n^{-1} sum X_i`.
    pub fn mean_vector(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        for row in self.rows() {
            sum.iter_mut().zip(row).for_each(|(s, x)| *s += x);
        }
        let n = self.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        sum
    }

    /// `||X_bar||`, legal for any sample including fully cancelling ones.
    pub fn resultant_length(&self) -> f64 {
        norm(&self.mean_vector())
    }

    /// Applies a `k x k` row-major matrix to every point.
    pub fn transform(&self, matrix: &[f64]) -> Result<Self> {
        let k = self.dim;
        if matrix.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, actual: matrix.len() });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            for r in 0..k {
                data.push(dot(&matrix[r * k..(r + 1) * k], row));
            }
        }
        SphericalSample::from_rows(k, data)
    }
}

/// Spherical mean `X_bar / ||X_bar||` together with the resultant length `||X_bar||`.
pub fn spherical_mean(sample: &SphericalSample) -> Result<(UnitVector, f64)> {
    let mean = sample.mean_vector();
    let length = norm(&mean);
    if !(length >= DEGENERATE_RESULTANT) {
        return Err(Error::DegenerateResultant {
            sample: None,
            length,
            tol: DEGENERATE_RESULTANT,
        });
    }
    let direction = mean.into_iter().map(|c| c / length).collect();
    Ok((UnitVector::from_normalized_unchecked(direction), length))
}

/// `S_theta(x) = (x - (x'theta) theta) / ||x - (x'theta) theta||`, the unit
/// direction of `x` within the tangent space at `theta`.
pub fn tangent_sign(x: &UnitVector, theta: &UnitVector) -> Result<UnitVector> {
    same_dim(x.dim(), theta.dim())?;
    let t = x.dot(theta.as_slice());
    let resid: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(theta.as_slice())
        .map(|(xi, th)| xi - t * th)
        .collect();
    let len = norm(&resid);
    if len <= COLINEAR_TOL {
        return Err(Error::UndefinedSign);
    }
    Ok(UnitVector::from_normalized_unchecked(
        resid.into_iter().map(|r| r / len).collect(),
    ))
}

/// Moves `theta` by `n^{-1/2} (I - theta theta') t` and renormalizes onto the
/// sphere: the admissible local perturbation of a location parameter.
///
/// Only the tangent part of `t` acts, so `t = 0` and `t` parallel to `theta`
/// both return `theta`.
pub fn perturb_on_sphere(theta: &UnitVector, t: &[f64], n: usize) -> Result<UnitVector> {
    same_dim(theta.dim(), t.len())?;
    if n == 0 {
        return Err(Error::domain("perturbation rate needs n >= 1"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let along = theta.dot(t);
    let tangent: Vec<f64> = theta
        .as_slice()
        .iter()
        .zip(t)
        .map(|(th, ti)| ti - along * th)
        .collect();
    if tangent.iter().all(|&x| x == 0.0) {
        return Ok(theta.clone());
    }
    let moved = theta
        .as_slice()
        .iter()
        .zip(&tangent)
        .map(|(th, d)| th + scale * d)
        .collect();
    UnitVector::normalize(moved)
}

pub(crate) fn same_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
