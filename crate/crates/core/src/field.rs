//! Grid-sampled scalars, one-forms, symmetric 2-tensors and curvature-type 4-tensors.
//!
//! Every multi-component field is stored component-major (one `Vec<f64>` per
//! independent component) so that spectral transforms act on contiguous data.

use crate::error::{QlabError, Result};
use crate::grid::{PeriodicGrid, MAX_DIM};

/// Small dense matrix used for per-node algebra; only the leading `n x n` block is meaningful.
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO_MAT: Mat = [[0.0; MAX_DIM]; MAX_DIM];

/// Number of independent components of a symmetric `n x n` tensor.
#[inline]
pub const fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Storage slot of the `(i, j)` entry of a symmetric tensor (upper triangle, row-major).
#[inline]
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - (i * i - i) / 2 + (j - i)
}

/// Number of index pairs `i < j`.
#[inline]
pub const fn pair_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Storage slot of the antisymmetric pair `(i, j)`, `i < j`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// The pairs `(i, j)` with `i < j` in storage order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_len(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QlabError::NonFinite(what))
    }
}

/// A real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(QlabError::ComponentMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        check_finite(&values, "scalar field")?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64; MAX_DIM]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|node| f(&grid.coordinates(node))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_vec(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Coordinate (flat) mean over the nodes.
    pub fn coordinate_mean(&self) -> f64 {
        crate::reduce::pairwise_sum(&self.values) / self.values.len() as f64
    }
}

/// Common storage for fields with several component arrays.
macro_rules! component_ops {
    ($t:ty) => {
        impl $t {
            #[inline]
            pub fn grid(&self) -> PeriodicGrid {
                self.grid
            }

            pub fn components(&self) -> &[Vec<f64>] {
                &self.comps
            }

            pub fn is_finite(&self) -> bool {
                self.comps.iter().flatten().all(|v| v.is_finite())
            }

            pub fn scaled(&self, c: f64) -> Self {
                let mut out = self.clone();
                out.comps.iter_mut().flatten().for_each(|v| *v *= c);
                out
            }

            /// Multiplies every component by a scalar field.
            pub fn scaled_by(&self, s: &ScalarField) -> Self {
                assert_eq!(self.grid, s.grid(), "grid mismatch");
                let mut out = self.clone();
                for comp in out.comps.iter_mut() {
                    for (v, w) in comp.iter_mut().zip(s.values()) {
                        *v *= w;
                    }
                }
                out
            }

            /// `self += c * other`
            pub fn axpy(&mut self, c: f64, other: &Self) {
                assert_eq!(self.grid, other.grid, "grid mismatch");
                for (a, b) in self.comps.iter_mut().zip(&other.comps) {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += c * y;
                    }
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                let mut out = self.clone();
                out.axpy(1.0, other);
                out
            }

            pub fn sub(&self, other: &Self) -> Self {
                let mut out = self.clone();
                out.axpy(-1.0, other);
                out
            }

            pub fn sup_norm(&self) -> f64 {
                self.comps.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    };
}

/// A covariant vector per node.
#[derive(Clone, Debug, PartialEq)]
pub struct OneFormField {
    grid: PeriodicGrid,
    comps: Vec<Vec<f64>>,
}

component_ops!(OneFormField);

impl OneFormField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.node_count()]; grid.dim()],
        }
    }

    pub fn from_components(grid: PeriodicGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(QlabError::ComponentMismatch {
                expected: grid.dim(),
                found: comps.len(),
            });
        }
        if comps.iter().any(|c| c.len() != grid.node_count()) {
            return Err(QlabError::GridMismatch);
        }
        for c in &comps {
            check_finite(c, "one-form field")?;
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_vecs(grid: PeriodicGrid, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), grid.dim());
        Self { grid, comps }
    }

    #[inline]
    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    #[inline]
    pub fn get(&self, node: usize, i: usize) -> f64 {
        self.comps[i][node]
    }

    pub fn at(&self, node: usize) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        for (i, c) in self.comps.iter().enumerate() {
            v[i] = c[node];
        }
        v
    }
}

/// A symmetric covariant 2-tensor per node; only the upper triangle is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor2Field {
    grid: PeriodicGrid,
    comps: Vec<Vec<f64>>,
}

component_ops!(SymTensor2Field);

impl SymTensor2Field {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.node_count()]; sym_len(grid.dim())],
        }
    }

    /// `s · δ_ij`
    pub fn scalar_identity(s: &ScalarField) -> Self {
        let grid = s.grid();
        let n = grid.dim();
        let mut out = Self::zeros(grid);
        for i in 0..n {
            out.comps[sym_index(n, i, i)].copy_from_slice(s.values());
        }
        out
    }

    pub fn identity(grid: PeriodicGrid) -> Self {
        Self::scalar_identity(&ScalarField::constant(grid, 1.0))
    }

    /// Builds the field from `f(x, i, j)`, evaluated for `i <= j`.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64; MAX_DIM], usize, usize) -> f64) -> Self {
        let n = grid.dim();
        let mut out = Self::zeros(grid);
        for node in 0..grid.node_count() {
            let x = grid.coordinates(node);
            for i in 0..n {
                for j in i..n {
                    out.comps[sym_index(n, i, j)][node] = f(&x, i, j);
                }
            }
        }
        out
    }

    /// Builds the field node by node from a full matrix (upper triangle is read).
    pub fn from_node_fn(grid: PeriodicGrid, f: impl Fn(usize) -> Mat) -> Self {
        let n = grid.dim();
        let mut out = Self::zeros(grid);
        for node in 0..grid.node_count() {
            let m = f(node);
            for i in 0..n {
                for j in i..n {
                    out.comps[sym_index(n, i, j)][node] = m[i][j];
                }
            }
        }
        out
    }

    pub fn from_components(grid: PeriodicGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let expected = sym_len(grid.dim());
        if comps.len() != expected {
            return Err(QlabError::ComponentMismatch {
                expected,
                found: comps.len(),
            });
        }
        if comps.iter().any(|c| c.len() != grid.node_count()) {
            return Err(QlabError::GridMismatch);
        }
        for c in &comps {
            check_finite(c, "symmetric tensor field")?;
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_vecs(grid: PeriodicGrid, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), sym_len(grid.dim()));
        Self { grid, comps }
    }

    #[inline]
    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(self.grid.dim(), i, j)]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let n = self.grid.dim();
        &mut self.comps[sym_index(n, i, j)]
    }

    #[inline]
    pub fn get(&self, node: usize, i: usize, j: usize) -> f64 {
        self.comps[sym_index(self.grid.dim(), i, j)][node]
    }

    /// Full matrix at `node`.
    #[inline]
    pub fn at(&self, node: usize) -> Mat {
        let n = self.grid.dim();
        let mut m = ZERO_MAT;
        let mut s = 0;
        for i in 0..n {
            for j in i..n {
                let v = self.comps[s][node];
                m[i][j] = v;
                m[j][i] = v;
                s += 1;
            }
        }
        m
    }

    #[inline]
    pub fn set_at(&mut self, node: usize, m: &Mat) {
        let n = self.grid.dim();
        let mut s = 0;
        for i in 0..n {
            for j in i..n {
                self.comps[s][node] = m[i][j];
                s += 1;
            }
        }
    }

    /// Coordinate trace `Σ_i T_ii` (not metric-contracted).
    pub fn coordinate_trace(&self) -> ScalarField {
        let n = self.grid.dim();
        let mut out = vec![0.0; self.grid.node_count()];
        for i in 0..n {
            for (o, v) in out.iter_mut().zip(self.component(i, i)) {
                *o += v;
            }
        }
        ScalarField::from_vec(self.grid, out)
    }
}

/// A curvature-type covariant 4-tensor per node.
///
/// Stored in bivector form: entry `(P, Q)` holds `T_{ijkl}` for the pairs
/// `P = (i<j)` and `Q = (k<l)`, so antisymmetry within each pair holds exactly.
/// Pair symmetry `T_{ijkl} = T_{klij}` is not forced by storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4Field {
    grid: PeriodicGrid,
    comps: Vec<Vec<f64>>,
}

component_ops!(Tensor4Field);

impl Tensor4Field {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        let p = pair_len(grid.dim());
        Self {
            grid,
            comps: vec![vec![0.0; grid.node_count()]; p * p],
        }
    }

    #[inline]
    pub fn pair_count(&self) -> usize {
        pair_len(self.grid.dim())
    }

    #[inline]
    pub fn block(&self, p: usize, q: usize) -> &[f64] {
        &self.comps[p * self.pair_count() + q]
    }

    #[inline]
    pub fn block_mut(&mut self, p: usize, q: usize) -> &mut [f64] {
        let pc = self.pair_count();
        &mut self.comps[p * pc + q]
    }

    /// `T_{ijkl}` at `node` with the antisymmetries applied.
    pub fn get(&self, node: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let n = self.grid.dim();
        let (p, s1) = if i < j {
            (pair_index(n, i, j), 1.0)
        } else {
            (pair_index(n, j, i), -1.0)
        };
        let (q, s2) = if k < l {
            (pair_index(n, k, l), 1.0)
        } else {
            (pair_index(n, l, k), -1.0)
        };
        s1 * s2 * self.block(p, q)[node]
    }

    /// Pair-pair matrix at `node` (row-major, `pair_count^2` entries).
    pub fn pair_matrix(&self, node: usize) -> [[f64; 6]; 6] {
        let pc = self.pair_count();
        let mut m = [[0.0; 6]; 6];
        for (p, row) in m.iter_mut().enumerate().take(pc) {
            for (q, e) in row.iter_mut().enumerate().take(pc) {
                *e = self.comps[p * pc + q][node];
            }
        }
        m
    }

    pub fn set_pair_matrix(&mut self, node: usize, m: &[[f64; 6]; 6]) {
        let pc = self.pair_count();
        for (p, row) in m.iter().enumerate().take(pc) {
            for (q, e) in row.iter().enumerate().take(pc) {
                self.comps[p * pc + q][node] = *e;
            }
        }
    }

    /// Largest violation of `T_{ijkl} = T_{klij}` over all nodes.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let pc = self.pair_count();
        let mut worst = 0.0f64;
        for p in 0..pc {
            for q in p + 1..pc {
                for (a, b) in self.block(p, q).iter().zip(self.block(q, p)) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_index_is_a_bijection_onto_upper_triangle() {
        for n in 2..=4 {
            let mut seen = vec![false; sym_len(n)];
            for i in 0..n {
                for j in i..n {
                    let s = sym_index(n, i, j);
                    assert_eq!(s, sym_index(n, j, i));
                    assert!(!seen[s]);
                    seen[s] = true;
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
        assert_eq!(sym_index(4, 3, 3), 9);
        assert_eq!(sym_index(4, 1, 2), 5);
    }

    #[test]
    fn pair_index_matches_pair_list() {
        for n in 2..=4 {
            for (s, (i, j)) in pairs(n).into_iter().enumerate() {
                assert_eq!(pair_index(n, i, j), s);
            }
        }
    }

    #[test]
    fn tensor4_get_applies_antisymmetry() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let mut t = Tensor4Field::zeros(grid);
        t.block_mut(pair_index(3, 0, 1), pair_index(3, 1, 2))[0] = 2.5;
        assert_eq!(t.get(0, 0, 1, 1, 2), 2.5);
        assert_eq!(t.get(0, 1, 0, 1, 2), -2.5);
        assert_eq!(t.get(0, 1, 0, 2, 1), 2.5);
        assert_eq!(t.get(0, 0, 0, 1, 2), 0.0);
    }

    #[test]
    fn scalar_field_rejects_non_finite() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert_eq!(ScalarField::new(grid, v), Err(QlabError::NonFinite("scalar field")));
    }
}
