//! Riemannian metrics on the discretized torus and their cached first-order geometry.

use std::sync::Arc;

use crate::error::{QlabError, Result};
use crate::field::{sym_index, sym_len, Mat, ScalarField, SymTensor2Field, ZERO_MAT};
use crate::grid::{PeriodicGrid, MAX_DIM};
use crate::linalg;
use crate::spectral::Spectrum;

/// Every eigenvalue of a metric must exceed this at every node.
pub const SPD_FLOOR: f64 = 1e-10;

/// How a metric was built. Conformal metrics keep their log-factor `φ` with `g = e^{2φ} δ`.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricPreset {
    Flat,
    Conformal(ScalarField),
    General,
}

/// A symmetric positive-definite 2-tensor field.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    components: SymTensor2Field,
    preset: MetricPreset,
}

impl MetricField {
    pub fn flat(grid: PeriodicGrid) -> Self {
        Self {
            components: SymTensor2Field::identity(grid),
            preset: MetricPreset::Flat,
        }
    }

    /// `g = e^{2φ} δ`
    pub fn conformal(phi: &ScalarField) -> Self {
        let factor = phi.map(|p| (2.0 * p).exp());
        Self {
            components: SymTensor2Field::scalar_identity(&factor),
            preset: MetricPreset::Conformal(phi.clone()),
        }
    }

    /// Arbitrary components; rejected unless positive definite above [`SPD_FLOOR`] everywhere.
    pub fn general(components: SymTensor2Field) -> Result<Self> {
        if !components.is_finite() {
            return Err(QlabError::NonFinite("metric components"));
        }
        let metric = Self {
            components,
            preset: MetricPreset::General,
        };
        metric.check_spd()?;
        Ok(metric)
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.components.grid()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    #[inline]
    pub fn components(&self) -> &SymTensor2Field {
        &self.components
    }

    #[inline]
    pub fn preset(&self) -> &MetricPreset {
        &self.preset
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.preset, MetricPreset::Flat)
    }

    /// Conformal factor `φ` if the metric is `e^{2φ} δ` (zero for flat).
    pub fn conformal_factor(&self) -> Option<ScalarField> {
        match &self.preset {
            MetricPreset::Flat => Some(ScalarField::zeros(self.grid())),
            MetricPreset::Conformal(phi) => Some(phi.clone()),
            MetricPreset::General => None,
        }
    }

    /// `e^{2φ} g`, keeping the preset tag when the result is still conformally flat by construction.
    pub fn conformal_rescale(&self, phi: &ScalarField) -> Result<Self> {
        if phi.grid() != self.grid() {
            return Err(QlabError::GridMismatch);
        }
        match &self.preset {
            MetricPreset::Flat => Ok(Self::conformal(phi)),
            MetricPreset::Conformal(psi) => Ok(Self::conformal(&psi.add(phi))),
            MetricPreset::General => {
                let factor = phi.map(|p| (2.0 * p).exp());
                Self::general(self.components.scaled_by(&factor))
            }
        }
    }

    /// Metric matrix at `node`.
    #[inline]
    pub fn at(&self, node: usize) -> Mat {
        self.components.at(node)
    }

    pub fn check_spd(&self) -> Result<()> {
        let n = self.dim();
        for node in 0..self.grid().node_count() {
            if !linalg::eigenvalues_above(n, &self.at(node), SPD_FLOOR) {
                return Err(QlabError::NotPositiveDefinite { node, floor: SPD_FLOOR });
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        (0..self.grid().node_count())
            .map(|node| linalg::min_eigenvalue(n, &self.at(node)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Volume density `√det g` at every node.
    pub fn volume_density(&self) -> Result<ScalarField> {
        let n = self.dim();
        let mut out = Vec::with_capacity(self.grid().node_count());
        for node in 0..self.grid().node_count() {
            let (_, det) = linalg::spd_inverse(n, &self.at(node))
                .ok_or(QlabError::NotPositiveDefinite { node, floor: SPD_FLOOR })?;
            out.push(det.sqrt());
        }
        Ok(ScalarField::from_vec(self.grid(), out))
    }
}

/// Christoffel symbols of the second kind, `Γ^k_{ij}`, symmetric in `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    grid: PeriodicGrid,
    data: Vec<Vec<f64>>,
}

/// Per-node Christoffel array `[k][i][j]`.
pub type ChristoffelAt = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];

impl Christoffel {
    fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.dim();
        Self {
            grid,
            data: vec![vec![0.0; grid.node_count()]; n * sym_len(n)],
        }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn get(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.grid.dim();
        self.data[k * sym_len(n) + sym_index(n, i, j)][node]
    }

    pub fn at(&self, node: usize) -> ChristoffelAt {
        let n = self.grid.dim();
        let mut out = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for (k, gk) in out.iter_mut().enumerate().take(n) {
            for i in 0..n {
                for j in i..n {
                    let v = self.data[k * sym_len(n) + sym_index(n, i, j)][node];
                    gk[i][j] = v;
                    gk[j][i] = v;
                }
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A metric together with the first-order data every covariant operator needs:
/// inverse, volume density, first partials and Christoffel symbols.
#[derive(Clone, Debug)]
pub struct Geometry {
    metric: MetricField,
    inverse: SymTensor2Field,
    sqrt_det: Vec<f64>,
    /// `∂_a g_c` indexed `[c][a]` with `c` a symmetric slot.
    dmetric: Vec<Vec<Vec<f64>>>,
    christoffel: Arc<Christoffel>,
    /// `Γ^k = g^{ij} Γ^k_{ij}`
    contracted: Vec<Vec<f64>>,
}

impl Geometry {
    pub fn new(metric: &MetricField) -> Result<Self> {
        let grid = metric.grid();
        let n = grid.dim();
        let nodes = grid.node_count();

        if metric.is_flat() {
            return Ok(Self {
                metric: metric.clone(),
                inverse: SymTensor2Field::identity(grid),
                sqrt_det: vec![1.0; nodes],
                dmetric: vec![vec![vec![0.0; nodes]; n]; sym_len(n)],
                christoffel: Arc::new(Christoffel::zeros(grid)),
                contracted: vec![vec![0.0; nodes]; n],
            });
        }

        let mut inverse = SymTensor2Field::zeros(grid);
        let mut sqrt_det = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let g = metric.at(node);
            if !linalg::eigenvalues_above(n, &g, SPD_FLOOR) {
                return Err(QlabError::NotPositiveDefinite { node, floor: SPD_FLOOR });
            }
            let (inv, det) =
                linalg::spd_inverse(n, &g).ok_or(QlabError::NotPositiveDefinite { node, floor: SPD_FLOOR })?;
            inverse.set_at(node, &inv);
            sqrt_det.push(det.sqrt());
        }

        let dmetric: Vec<Vec<Vec<f64>>> = metric
            .components()
            .components()
            .iter()
            .map(|c| Spectrum::forward(grid, c).gradient())
            .collect();

        let mut christoffel = Christoffel::zeros(grid);
        let mut contracted = vec![vec![0.0; nodes]; n];
        let sl = sym_len(n);
        for node in 0..nodes {
            let ginv = inverse.at(node);
            // dg[c][a] -> partial_a g_{ij}
            let mut dg = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
            for i in 0..n {
                for j in i..n {
                    let c = sym_index(n, i, j);
                    for a in 0..n {
                        let v = dmetric[c][a][node];
                        dg[a][i][j] = v;
                        dg[a][j][i] = v;
                    }
                }
            }
            // first kind: Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let mut first = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
            for (l, fl) in first.iter_mut().enumerate().take(n) {
                for i in 0..n {
                    for j in i..n {
                        let v = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                        fl[i][j] = v;
                        fl[j][i] = v;
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += ginv[k][l] * first[l][i][j];
                        }
                        christoffel.data[k * sl + sym_index(n, i, j)][node] = s;
                        let w = if i == j { 1.0 } else { 2.0 };
                        contracted[k][node] += w * ginv[i][j] * s;
                    }
                }
            }
        }

        Ok(Self {
            metric: metric.clone(),
            inverse,
            sqrt_det,
            dmetric,
            christoffel: Arc::new(christoffel),
            contracted,
        })
    }

    #[inline]
    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.metric.grid()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    #[inline]
    pub fn inverse(&self) -> &SymTensor2Field {
        &self.inverse
    }

    #[inline]
    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.christoffel
    }

    pub(crate) fn christoffel_arc(&self) -> Arc<Christoffel> {
        Arc::clone(&self.christoffel)
    }

    /// `g^{ij} Γ^k_{ij}` for each `k`.
    pub fn contracted_christoffel(&self) -> &[Vec<f64>] {
        &self.contracted
    }

    /// `∂_a g_{ij}` at `node`, as `[a][i][j]`.
    pub fn dmetric_at(&self, node: usize) -> ChristoffelAt {
        let n = self.dim();
        let mut dg = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in i..n {
                let c = sym_index(n, i, j);
                for (a, dga) in dg.iter_mut().enumerate().take(n) {
                    let v = self.dmetric[c][a][node];
                    dga[i][j] = v;
                    dga[j][i] = v;
                }
            }
        }
        dg
    }

    #[inline]
    pub fn inverse_at(&self, node: usize) -> Mat {
        if self.metric.is_flat() {
            let mut m = ZERO_MAT;
            for (i, row) in m.iter_mut().enumerate().take(self.dim()) {
                row[i] = 1.0;
            }
            m
        } else {
            self.inverse.at(node)
        }
    }

    pub fn is_flat(&self) -> bool {
        self.metric.is_flat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_geometry_has_exactly_zero_christoffel() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let geom = Geometry::new(&MetricField::flat(grid)).unwrap();
        assert_eq!(geom.christoffel().sup_norm(), 0.0);
    }

    #[test]
    fn conformal_christoffel_matches_closed_form() {
        let grid = PeriodicGrid::new(4, 32).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let geom = Geometry::new(&MetricField::conformal(&phi)).unwrap();
        let mut worst = 0.0f64;
        for node in 0..grid.node_count() {
            let x = grid.coordinates(node);
            let dphi = [0.1 * x[0].cos(), 0.0, 0.0, 0.0];
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let exact = d(k, i) * dphi[j] + d(k, j) * dphi[i] - d(i, j) * dphi[k];
                        worst = worst.max((geom.christoffel().get(node, k, i, j) - exact).abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-8, "conformal Christoffel error {worst:e}");
    }

    #[test]
    fn diagonal_stretch_christoffel() {
        // g = diag(e^{2a(x1)}, 1, 1): Γ^1_{11} = a'(x1)
        let grid = PeriodicGrid::new(3, 32).unwrap();
        let a = |x: f64| 0.2 * x.cos();
        let da = |x: f64| -0.2 * x.sin();
        let comps = SymTensor2Field::from_fn(grid, |x, i, j| match (i, j) {
            (0, 0) => (2.0 * a(x[0])).exp(),
            (i, j) if i == j => 1.0,
            _ => 0.0,
        });
        let geom = Geometry::new(&MetricField::general(comps).unwrap()).unwrap();
        let worst = (0..grid.node_count())
            .map(|node| {
                let x = grid.coordinates(node);
                (geom.christoffel().get(node, 0, 0, 0) - da(x[0])).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-10);
    }

    #[test]
    fn non_spd_metric_is_rejected() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let comps = SymTensor2Field::from_fn(grid, |x, i, j| {
            if i == j {
                if i == 0 {
                    x[0].cos()
                } else {
                    1.0
                }
            } else {
                0.0
            }
        });
        assert!(matches!(
            MetricField::general(comps),
            Err(QlabError::NotPositiveDefinite { .. })
        ));
    }
}
