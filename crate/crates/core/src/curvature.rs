//! Riemann, Ricci, scalar and Weyl curvature of a metric.
//!
//! Sign convention: `R_{ijkl} = g_{lm} R^m_{ijk}` with
//! `R^m_{ijk} = ∂_i Γ^m_{jk} − ∂_j Γ^m_{ik} + Γ^m_{ip} Γ^p_{jk} − Γ^m_{jp} Γ^p_{ik}`,
//! so that `R_{jk} = g^{il} R_{ijkl}` and a round sphere of curvature `K` has
//! `R_{ijkl} = K (g_{il} g_{jk} − g_{ik} g_{jl})`, `Ric = (n−1) K g`.
//!
//! With this sign the Kulkarni–Nomizu decomposition reads
//! `Riem = −(R / (2n(n−1))) g⊙g − (1/(n−2)) E⊙g − W` with `E = Ric − (R/n) g`,
//! i.e. every block enters with the opposite sign of the first-Bianchi-positive
//! convention, and the Weyl tensor is recovered as
//! `W = Riem + (R / (2n(n−1))) g⊙g + (1/(n−2)) E⊙g`.

use std::sync::Arc;

use crate::error::{QlabError, Result};
use crate::field::{
    pair_index, pair_len, pairs, sym_index, Mat, OneFormField, ScalarField, SymTensor2Field, Tensor4Field,
};
use crate::grid::{PeriodicGrid, MAX_DIM};
use crate::linalg;
use crate::metric::{Christoffel, Geometry, MetricField};
use crate::spectral::{second_derivative_sum, Spectrum};

/// Full per-node 4-tensor `[i][j][k][l]`.
pub type Riem4 = [[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];

/// Expands a bivector pair matrix into a full 4-index array.
pub fn expand_pairs(n: usize, pm: &[[f64; 6]; 6]) -> Riem4 {
    let mut r = [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for (p, &(i, j)) in pairs(n).iter().enumerate() {
        for (q, &(k, l)) in pairs(n).iter().enumerate() {
            let v = pm[p][q];
            r[i][j][k][l] = v;
            r[j][i][k][l] = -v;
            r[i][j][l][k] = -v;
            r[j][i][l][k] = v;
        }
    }
    r
}

/// Curvature data of one metric. Immutable after construction.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    christoffel: Arc<Christoffel>,
    riemann: Tensor4Field,
    ricci: SymTensor2Field,
    scalar: ScalarField,
    weyl: Tensor4Field,
}

impl CurvatureBundle {
    pub fn from_geometry(geom: &Geometry) -> Self {
        let grid = geom.grid();
        let n = grid.dim();
        let nodes = grid.node_count();
        if geom.is_flat() {
            return Self {
                christoffel: geom.christoffel_arc(),
                riemann: Tensor4Field::zeros(grid),
                ricci: SymTensor2Field::zeros(grid),
                scalar: ScalarField::zeros(grid),
                weyl: Tensor4Field::zeros(grid),
            };
        }

        let riemann = riemann_tensor(geom);
        let mut ricci = SymTensor2Field::zeros(grid);
        let mut scalar = vec![0.0; nodes];
        let mut weyl = Tensor4Field::zeros(grid);
        let prs = pairs(n);
        for node in 0..nodes {
            let ginv = geom.inverse_at(node);
            let g = geom.metric().at(node);
            let r = expand_pairs(n, &riemann.pair_matrix(node));
            let mut ric: Mat = [[0.0; MAX_DIM]; MAX_DIM];
            for j in 0..n {
                for k in j..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        for l in 0..n {
                            s += ginv[i][l] * r[i][j][k][l];
                        }
                    }
                    ric[j][k] = s;
                    ric[k][j] = s;
                }
            }
            let rs = linalg::frobenius(n, &ginv, &ric);
            ricci.set_at(node, &ric);
            scalar[node] = rs;

            if n >= 4 {
                let nf = n as f64;
                let c1 = rs / (2.0 * nf * (nf - 1.0));
                let c2 = 1.0 / (nf - 2.0);
                let mut e = ric;
                for i in 0..n {
                    for j in 0..n {
                        e[i][j] -= rs / nf * g[i][j];
                    }
                }
                let mut w = [[0.0; 6]; 6];
                for (p, &(i, j)) in prs.iter().enumerate() {
                    for (q, &(k, l)) in prs.iter().enumerate() {
                        w[p][q] = r[i][j][k][l] + c1 * kn_entry(&g, &g, i, j, k, l) + c2 * kn_entry(&e, &g, i, j, k, l);
                    }
                }
                weyl.set_pair_matrix(node, &w);
            }
        }

        Self {
            christoffel: geom.christoffel_arc(),
            riemann,
            ricci,
            scalar: ScalarField::from_vec(grid, scalar),
            weyl,
        }
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.christoffel
    }

    pub fn riemann(&self) -> &Tensor4Field {
        &self.riemann
    }

    pub fn ricci(&self) -> &SymTensor2Field {
        &self.ricci
    }

    pub fn scalar(&self) -> &ScalarField {
        &self.scalar
    }

    /// Zero in dimension `< 4`.
    pub fn weyl(&self) -> &Tensor4Field {
        &self.weyl
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.scalar.grid()
    }
}

/// Computes the curvature bundle of `g`.
pub fn curvature_bundle(g: &MetricField) -> Result<CurvatureBundle> {
    Ok(CurvatureBundle::from_geometry(&Geometry::new(g)?))
}

/// `R_{ijkl} = ½(∂_i∂_k g_jl + ∂_j∂_l g_ik − ∂_i∂_l g_jk − ∂_j∂_k g_il)
///           + Γ_{p,jl} Γ^p_{ik} − Γ_{p,il} Γ^p_{jk}`, with `Γ_{p,ab} = g_{pm} Γ^m_{ab}`.
fn riemann_tensor(geom: &Geometry) -> Tensor4Field {
    let grid = geom.grid();
    let n = grid.dim();
    let nodes = grid.node_count();
    let spectra: Vec<Spectrum> = geom
        .metric()
        .components()
        .components()
        .iter()
        .map(|c| Spectrum::forward(grid, c))
        .collect();
    let s = |a: usize, b: usize| &spectra[sym_index(n, a, b)];

    let prs = pairs(n);
    let pc = pair_len(n);
    let mut out = Tensor4Field::zeros(grid);
    for p in 0..pc {
        let (i, j) = prs[p];
        for q in p..pc {
            let (k, l) = prs[q];
            let block = second_derivative_sum(
                grid,
                &[
                    (0.5, s(j, l), i, k),
                    (0.5, s(i, k), j, l),
                    (-0.5, s(j, k), i, l),
                    (-0.5, s(i, l), j, k),
                ],
            );
            out.block_mut(p, q).copy_from_slice(&block);
        }
    }
    drop(spectra);

    let chr = geom.christoffel();
    for node in 0..nodes {
        let gam = chr.at(node);
        let g = geom.metric().at(node);
        // lowered[p][a][b] = g_{pm} Γ^m_{ab}
        let mut lowered = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for (pp, lp) in lowered.iter_mut().enumerate().take(n) {
            for a in 0..n {
                for b in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += g[pp][m] * gam[m][a][b];
                    }
                    lp[a][b] = v;
                }
            }
        }
        for p in 0..pc {
            let (i, j) = prs[p];
            for q in p..pc {
                let (k, l) = prs[q];
                let mut v = 0.0;
                for m in 0..n {
                    v += lowered[m][j][l] * gam[m][i][k] - lowered[m][i][l] * gam[m][j][k];
                }
                out.block_mut(p, q)[node] += v;
            }
        }
    }
    for p in 0..pc {
        for q in p + 1..pc {
            let upper = out.block(p, q).to_vec();
            out.block_mut(q, p).copy_from_slice(&upper);
        }
    }
    out
}

#[inline]
fn kn_entry(a: &Mat, b: &Mat, i: usize, j: usize, k: usize, l: usize) -> f64 {
    a[i][k] * b[j][l] + a[j][l] * b[i][k] - a[i][l] * b[j][k] - a[j][k] * b[i][l]
}

/// Kulkarni–Nomizu product
/// `(A⊙B)_{ijkl} = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il`.
pub fn kulkarni_nomizu(a: &SymTensor2Field, b: &SymTensor2Field) -> Result<Tensor4Field> {
    if a.grid() != b.grid() {
        return Err(QlabError::GridMismatch);
    }
    let grid = a.grid();
    let n = grid.dim();
    let prs = pairs(n);
    let mut out = Tensor4Field::zeros(grid);
    for node in 0..grid.node_count() {
        let (am, bm) = (a.at(node), b.at(node));
        let mut w = [[0.0; 6]; 6];
        for (p, &(i, j)) in prs.iter().enumerate() {
            for (q, &(k, l)) in prs.iter().enumerate() {
                w[p][q] = kn_entry(&am, &bm, i, j, k, l);
            }
        }
        out.set_pair_matrix(node, &w);
    }
    Ok(out)
}

/// Metric on bivectors: `G_{PQ} = 2(g^{ia} g^{jb} − g^{ib} g^{ja})` for `P=(i<j)`, `Q=(a<b)`.
fn pair_metric(n: usize, ginv: &Mat) -> [[f64; 6]; 6] {
    let prs = pairs(n);
    let mut gm = [[0.0; 6]; 6];
    for (p, &(i, j)) in prs.iter().enumerate() {
        for (q, &(a, b)) in prs.iter().enumerate() {
            gm[p][q] = 2.0 * (ginv[i][a] * ginv[j][b] - ginv[i][b] * ginv[j][a]);
        }
    }
    gm
}

/// Tensors whose squared metric norm can be taken.
pub trait MetricNorm {
    /// Pointwise `|T|²_g`, contracting every index pair with `g⁻¹`.
    fn norm2(&self, geom: &Geometry) -> ScalarField;
}

impl MetricNorm for ScalarField {
    fn norm2(&self, _geom: &Geometry) -> ScalarField {
        self.map(|v| v * v)
    }
}

impl MetricNorm for OneFormField {
    fn norm2(&self, geom: &Geometry) -> ScalarField {
        crate::covariant::contract_one_forms(self, self, geom)
    }
}

impl MetricNorm for SymTensor2Field {
    fn norm2(&self, geom: &Geometry) -> ScalarField {
        crate::covariant::contract(self, self, geom)
    }
}

impl MetricNorm for Tensor4Field {
    fn norm2(&self, geom: &Geometry) -> ScalarField {
        let grid = self.grid();
        let n = grid.dim();
        let pc = pair_len(n);
        let values = (0..grid.node_count())
            .map(|node| {
                let gm = pair_metric(n, &geom.inverse_at(node));
                let t = self.pair_matrix(node);
                // |T|² = tr(G T G Tᵀ)
                let mut gt = [[0.0; 6]; 6];
                for p in 0..pc {
                    for q in 0..pc {
                        let mut s = 0.0;
                        for r in 0..pc {
                            s += gm[p][r] * t[r][q];
                        }
                        gt[p][q] = s;
                    }
                }
                let mut total = 0.0;
                for p in 0..pc {
                    for q in 0..pc {
                        let mut s = 0.0;
                        for r in 0..pc {
                            s += gt[p][r] * gm[r][q];
                        }
                        total += s * t[p][q];
                    }
                }
                total
            })
            .collect();
        ScalarField::from_vec(grid, values)
    }
}

/// Squared norm `|T|²_g` of any supported tensor field.
pub fn tensor_norm2<T: MetricNorm>(t: &T, g: &MetricField) -> Result<ScalarField> {
    Ok(t.norm2(&Geometry::new(g)?))
}

/// `(R̊m · h)_{jk} = R_{ijkl} h^{il}`.
pub fn riemann_action(bundle: &CurvatureBundle, h: &SymTensor2Field, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    if geom.is_flat() {
        return SymTensor2Field::zeros(grid);
    }
    SymTensor2Field::from_node_fn(grid, |node| {
        let ginv = geom.inverse_at(node);
        let hup = linalg::congruence(n, &ginv, &h.at(node));
        let r = expand_pairs(n, &bundle.riemann().pair_matrix(node));
        let mut out: Mat = [[0.0; MAX_DIM]; MAX_DIM];
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for l in 0..n {
                        s += r[i][j][k][l] * hup[i][l];
                    }
                }
                out[j][k] = s;
            }
        }
        out
    })
}

/// Lichnerowicz Laplacian `Δ_L h = Δh + 2 R̊m·h − Ric∘h − h∘Ric`,
/// with `(Ric∘h)_{jk} = R_{ji} h^i_k`.
pub fn lichnerowicz(h: &SymTensor2Field, geom: &Geometry, bundle: &CurvatureBundle) -> Result<SymTensor2Field> {
    if bundle.grid() != geom.grid() || h.grid() != geom.grid() {
        return Err(QlabError::GridMismatch);
    }
    let mut out = crate::covariant::rough_laplacian(h, geom);
    if geom.is_flat() {
        return Ok(out);
    }
    let rm = riemann_action(bundle, h, geom);
    out.axpy(2.0, &rm);
    let rh = crate::covariant::metric_product(bundle.ricci(), h, geom);
    out.axpy(-2.0, &rh);
    Ok(out)
}

/// Index of the pair `(i, j)` in either order, with the sign of the permutation.
pub fn signed_pair(n: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    use std::cmp::Ordering::*;
    match i.cmp(&j) {
        Less => Some((pair_index(n, i, j), 1.0)),
        Greater => Some((pair_index(n, j, i), -1.0)),
        Equal => None,
    }
}
