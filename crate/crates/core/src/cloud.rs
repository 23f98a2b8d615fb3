//! Dense point clouds: one row per sample, one column per coordinate.

use crate::error::{Error, Result};

/// Smallest cloud any operation accepts: each point needs two neighbors.
pub const MIN_POINTS: usize = 3;

/// An `N × D` row-major matrix of finite coordinates.
///
/// Coordinates are held in `f64`. Clouds loaded from an IDT1 file carry
/// values that are exactly representable in `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    n_points: usize,
    dim: usize,
}

impl PointCloud {
    pub fn new(data: Vec<f64>, n_points: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidCloud(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        let expected = n_points
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidCloud("shape overflows".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidCloud(format!(
                "buffer holds {} values, shape {n_points}x{dim} needs {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            data,
            n_points,
            dim,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(Error::InvalidCloud("rows have unequal lengths".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(data, rows.len(), dim)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New cloud made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_points {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} points",
                    self.n_points
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.dim)
    }

    /// Applies `f` to every coordinate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.data.iter().map(|&v| f(v)).collect(),
            self.n_points,
            self.dim,
        )
    }
}
