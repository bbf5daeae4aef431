//! Uniform periodic grids on the flat torus `[0, 2π)^n`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QlabError, Result};

/// Largest supported dimension. Per-node algebra uses fixed `4x4` scratch.
pub const MAX_DIM: usize = 4;

/// Tensor-product grid with `points_per_axis` nodes along each of `dim` axes.
///
/// Nodes are stored in row-major order: axis 0 varies slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    points_per_axis: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(QlabError::InvalidGrid(format!(
                "dimension must be 2, 3 or 4 (got {dim})"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_multiple_of(2) {
            return Err(QlabError::InvalidGrid(format!(
                "points_per_axis must be even and at least 8 (got {points_per_axis})"
            )));
        }
        Ok(Self { dim, points_per_axis })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    #[inline]
    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period() / self.points_per_axis as f64
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Coordinate volume `spacing^dim` carried by each node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate volume of the whole torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        self.period().powi(self.dim as i32)
    }

    /// Stride between consecutive nodes along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    /// Integer index of `node` along `axis`.
    #[inline]
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.points_per_axis
    }

    /// Coordinates of a node; unused trailing entries are zero.
    pub fn coordinates(&self, node: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        let h = self.spacing();
        let mut rest = node;
        for axis in (0..self.dim).rev() {
            x[axis] = (rest % self.points_per_axis) as f64 * h;
            rest /= self.points_per_axis;
        }
        x
    }

    /// Signed integer wavenumber of FFT bin `index`, in `{-N/2+1, ..., N/2}`.
    #[inline]
    pub fn wavenumber(&self, index: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = index as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber used by differentiation: the Nyquist bin is zeroed.
    #[inline]
    pub fn derivative_wavenumber(&self, index: usize) -> f64 {
        if index == self.points_per_axis / 2 {
            0.0
        } else {
            self.wavenumber(index) as f64
        }
    }

    /// Whether an integer mode is representable strictly below the Nyquist limit.
    pub fn resolves_mode(&self, mode: &[i64]) -> bool {
        let half = (self.points_per_axis / 2) as i64;
        mode.len() <= self.dim && mode.iter().all(|k| k.abs() < half)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(QlabError::AxisOutOfRange { axis, dim: self.dim })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicGrid::new(1, 16).is_err());
        assert!(PeriodicGrid::new(5, 16).is_err());
        assert!(PeriodicGrid::new(3, 6).is_err());
        assert!(PeriodicGrid::new(3, 15).is_err());
        assert!(PeriodicGrid::new(3, 8).is_ok());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
    }

    #[test]
    fn coordinates_follow_row_major_layout() {
        let g = PeriodicGrid::new(3, 8).unwrap();
        let node = 2 * 64 + 5 * 8 + 7;
        let x = g.coordinates(node);
        let h = g.spacing();
        assert_eq!(x[0], 2.0 * h);
        assert_eq!(x[1], 5.0 * h);
        assert_eq!(x[2], 7.0 * h);
        assert_eq!(g.axis_index(node, 1), 5);
    }
}
