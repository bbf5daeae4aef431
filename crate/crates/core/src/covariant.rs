//! Covariant differential operators on scalars, one-forms and symmetric 2-tensors.
//!
//! Conventions:
//! - `Δ = g^{ij} ∇_i ∇_j` (non-positive on the torus);
//! - `(δh)_i = −∇^j h_{ij}` and `δω = −∇^i ω_i`, so `δ²h = ∇^i ∇^j h_{ij}`;
//! - divergences are evaluated in the conservative form `|g|^{-1/2} ∂_a(|g|^{1/2} g^{ab} ·)`.

use crate::field::{sym_index, sym_len, Mat, OneFormField, ScalarField, SymTensor2Field, ZERO_MAT};
use crate::grid::MAX_DIM;
use crate::linalg;
use crate::metric::Geometry;
use crate::spectral::{coordinate_divergence, k_squared, Spectrum};

/// Coordinate gradient `∂_i u`.
pub fn gradient(u: &ScalarField) -> OneFormField {
    OneFormField::from_vecs(u.grid(), Spectrum::of(u).gradient())
}

/// `|g|^{-1/2} ∂_a(|g|^{1/2} g^{ab} ω_b)` for covariant components `ω_b`.
fn conservative_divergence(geom: &Geometry, omega: &[Vec<f64>]) -> Vec<f64> {
    let grid = geom.grid();
    let n = grid.dim();
    let nodes = grid.node_count();
    let sd = geom.sqrt_det();
    let mut flux = vec![vec![0.0; nodes]; n];
    for node in 0..nodes {
        let ginv = geom.inverse_at(node);
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += ginv[a][b] * omega[b][node];
            }
            flux[a][node] = sd[node] * s;
        }
    }
    let mut div = coordinate_divergence(grid, &flux);
    for (d, s) in div.iter_mut().zip(sd) {
        *d /= s;
    }
    div
}

/// `∇_i ∇_j u = ∂_i ∂_j u − Γ^k_{ij} ∂_k u`.
pub fn covariant_hessian(u: &ScalarField, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    let spec = Spectrum::of(u);
    let mut comps = Vec::with_capacity(sym_len(n));
    for i in 0..n {
        for j in i..n {
            comps.push(spec.second_derivative(i, j));
        }
    }
    if !geom.is_flat() {
        let du = spec.gradient();
        let chr = geom.christoffel();
        for i in 0..n {
            for j in i..n {
                let c = &mut comps[sym_index(n, i, j)];
                for (node, v) in c.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (k, duk) in du.iter().enumerate() {
                        s += chr.get(node, k, i, j) * duk[node];
                    }
                    *v -= s;
                }
            }
        }
    }
    SymTensor2Field::from_vecs(grid, comps)
}

/// Laplace–Beltrami operator `Δ_g u = g^{ij} ∇_i ∇_j u`.
pub fn laplace_beltrami(u: &ScalarField, geom: &Geometry) -> ScalarField {
    if geom.is_flat() {
        return ScalarField::from_vec(u.grid(), Spectrum::of(u).apply_real(|k| -k_squared(k)));
    }
    let du = Spectrum::of(u).gradient();
    ScalarField::from_vec(u.grid(), conservative_divergence(geom, &du))
}

/// `div ω = ∇^i ω_i`.
pub fn divergence_one_form(omega: &OneFormField, geom: &Geometry) -> ScalarField {
    ScalarField::from_vec(omega.grid(), conservative_divergence(geom, omega.components()))
}

/// `δω = −∇^i ω_i`.
pub fn codifferential(omega: &OneFormField, geom: &Geometry) -> ScalarField {
    divergence_one_form(omega, geom).scaled(-1.0)
}

/// `(δh)_j = −∇^a h_{aj}`.
pub fn divergence_tensor(h: &SymTensor2Field, geom: &Geometry) -> OneFormField {
    let grid = geom.grid();
    let n = grid.dim();
    let nodes = grid.node_count();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let column: Vec<Vec<f64>> = (0..n).map(|b| h.component(b, j).to_vec()).collect();
        out.push(conservative_divergence(geom, &column));
    }
    if !geom.is_flat() {
        // ∇^a h_{aj} = |g|^{-1/2}∂_a(|g|^{1/2} h^a_j) − g^{ab} Γ^p_{aj} h_{bp}
        let chr = geom.christoffel();
        for node in 0..nodes {
            let ginv = geom.inverse_at(node);
            let hm = h.at(node);
            let gam = chr.at(node);
            // mixed[a][p] = g^{ab} h_{bp}
            let mixed = linalg::mat_mul(n, &ginv, &hm);
            for (j, oj) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..n {
                    for p in 0..n {
                        s += gam[p][a][j] * mixed[a][p];
                    }
                }
                oj[node] -= s;
            }
        }
    }
    for comp in out.iter_mut() {
        comp.iter_mut().for_each(|v| *v = -*v);
    }
    OneFormField::from_vecs(grid, out)
}

/// `δ²h = δ(δh) = ∇^i ∇^j h_{ij}`.
pub fn double_divergence(h: &SymTensor2Field, geom: &Geometry) -> ScalarField {
    codifferential(&divergence_tensor(h, geom), geom)
}

/// Symmetrized covariant derivative `½(∇_i ω_j + ∇_j ω_i)`.
pub fn sym_covariant_derivative(omega: &OneFormField, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    let grads: Vec<Vec<Vec<f64>>> = omega
        .components()
        .iter()
        .map(|c| Spectrum::forward(grid, c).gradient())
        .collect();
    let mut out = SymTensor2Field::zeros(grid);
    let flat = geom.is_flat();
    let chr = geom.christoffel();
    for i in 0..n {
        for j in i..n {
            let c = out.component_mut(i, j);
            for (node, v) in c.iter_mut().enumerate() {
                let mut s = 0.5 * (grads[j][i][node] + grads[i][j][node]);
                if !flat {
                    for k in 0..n {
                        s -= chr.get(node, k, i, j) * omega.get(node, k);
                    }
                }
                *v = s;
            }
        }
    }
    out
}

/// Rough Laplacian `(Δh)_{cd} = g^{ab} ∇_a ∇_b h_{cd}` on symmetric 2-tensors.
pub fn rough_laplacian(h: &SymTensor2Field, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    let nodes = grid.node_count();
    if geom.is_flat() {
        let comps = h
            .components()
            .iter()
            .map(|c| Spectrum::forward(grid, c).apply_real(|k| -k_squared(k)))
            .collect();
        return SymTensor2Field::from_vecs(grid, comps);
    }
    let chr = geom.christoffel();
    let sl = sym_len(n);

    // T[b][cd] = ∇_b h_{cd}
    let dh: Vec<Vec<Vec<f64>>> = h
        .components()
        .iter()
        .map(|c| Spectrum::forward(grid, c).gradient())
        .collect();
    let mut t = vec![vec![vec![0.0; nodes]; sl]; n];
    for node in 0..nodes {
        let gam = chr.at(node);
        let hm = h.at(node);
        for (b, tb) in t.iter_mut().enumerate() {
            for c in 0..n {
                for d in c..n {
                    let s = sym_index(n, c, d);
                    let mut v = dh[s][b][node];
                    for p in 0..n {
                        v -= gam[p][b][c] * hm[p][d] + gam[p][b][d] * hm[c][p];
                    }
                    tb[s][node] = v;
                }
            }
        }
    }

    // g^{ab}(∂_a T_{bcd} − Γ^p_{ab} T_{pcd}) in conservative form, then the remaining
    // connection terms −g^{ab}(Γ^p_{ac} T_{bpd} + Γ^p_{ad} T_{bcp}).
    let mut out = Vec::with_capacity(sl);
    for c in 0..n {
        for d in c..n {
            let s = sym_index(n, c, d);
            let column: Vec<Vec<f64>> = (0..n).map(|b| t[b][s].clone()).collect();
            out.push(conservative_divergence(geom, &column));
        }
    }
    for node in 0..nodes {
        let ginv = geom.inverse_at(node);
        let gam = chr.at(node);
        let mut tn = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for (b, tb) in t.iter().enumerate() {
            for c in 0..n {
                for d in c..n {
                    let v = tb[sym_index(n, c, d)][node];
                    tn[b][c][d] = v;
                    tn[b][d][c] = v;
                }
            }
        }
        for c in 0..n {
            for d in c..n {
                let mut corr = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let gab = ginv[a][b];
                        if gab == 0.0 {
                            continue;
                        }
                        let mut inner = 0.0;
                        for p in 0..n {
                            inner += gam[p][a][c] * tn[b][p][d] + gam[p][a][d] * tn[b][c][p];
                        }
                        corr += gab * inner;
                    }
                }
                out[sym_index(n, c, d)][node] -= corr;
            }
        }
    }
    SymTensor2Field::from_vecs(grid, out)
}

/// Metric trace `g^{ij} h_{ij}`.
pub fn trace(h: &SymTensor2Field, geom: &Geometry) -> ScalarField {
    let grid = geom.grid();
    let n = grid.dim();
    let values = (0..grid.node_count())
        .map(|node| linalg::frobenius(n, &geom.inverse_at(node), &h.at(node)))
        .collect();
    ScalarField::from_vec(grid, values)
}

/// Full contraction `g^{ia} g^{jb} A_{ij} B_{ab}`.
pub fn contract(a: &SymTensor2Field, b: &SymTensor2Field, geom: &Geometry) -> ScalarField {
    let grid = geom.grid();
    let n = grid.dim();
    let values = (0..grid.node_count())
        .map(|node| {
            let ginv = geom.inverse_at(node);
            let up = linalg::congruence(n, &ginv, &a.at(node));
            linalg::frobenius(n, &up, &b.at(node))
        })
        .collect();
    ScalarField::from_vec(grid, values)
}

/// `g^{ij} ω_i η_j`.
pub fn contract_one_forms(a: &OneFormField, b: &OneFormField, geom: &Geometry) -> ScalarField {
    let grid = geom.grid();
    let n = grid.dim();
    let values = (0..grid.node_count())
        .map(|node| {
            let ginv = geom.inverse_at(node);
            let (x, y) = (a.at(node), b.at(node));
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += ginv[i][j] * x[i] * y[j];
                }
            }
            s
        })
        .collect();
    ScalarField::from_vec(grid, values)
}

/// Raises both indices: `A^{ij} = g^{ia} g^{jb} A_{ab}`.
pub fn raise(a: &SymTensor2Field, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    SymTensor2Field::from_node_fn(grid, |node| linalg::congruence(n, &geom.inverse_at(node), &a.at(node)))
}

/// `(A × B)_{ij} = g^{lm} A_{li} B_{mj}`, symmetrized.
pub fn metric_product(a: &SymTensor2Field, b: &SymTensor2Field, geom: &Geometry) -> SymTensor2Field {
    let grid = geom.grid();
    let n = grid.dim();
    SymTensor2Field::from_node_fn(grid, |node| {
        let ginv = geom.inverse_at(node);
        let p = linalg::mat_mul(n, &linalg::mat_mul(n, &a.at(node), &ginv), &b.at(node));
        let mut s: Mat = ZERO_MAT;
        for i in 0..n {
            for j in 0..n {
                s[i][j] = 0.5 * (p[i][j] + p[j][i]);
            }
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::metric::MetricField;

    fn conformal(n: usize, dim: usize) -> (MetricField, ScalarField) {
        let grid = PeriodicGrid::new(dim, n).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin() + 0.05 * (x[1] + x[2]).cos());
        (MetricField::conformal(&phi), phi)
    }

    #[test]
    fn flat_hessian_of_cosine() {
        let grid = PeriodicGrid::new(3, 16).unwrap();
        let geom = Geometry::new(&MetricField::flat(grid)).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0].cos());
        let h = covariant_hessian(&u, &geom);
        let exact = SymTensor2Field::from_fn(grid, |x, i, j| if i == 0 && j == 0 { -x[0].cos() } else { 0.0 });
        assert!(h.sub(&exact).sup_norm() <= 1e-12);
    }

    #[test]
    fn hessian_trace_is_laplace_beltrami() {
        let (g, _) = conformal(24, 3);
        let geom = Geometry::new(&g).unwrap();
        let u = ScalarField::from_fn(g.grid(), |x| (x[0] + x[2]).sin() + 0.3 * x[1].cos());
        let tr = trace(&covariant_hessian(&u, &geom), &geom);
        let lb = laplace_beltrami(&u, &geom);
        assert!(tr.sub(&lb).sup_norm() <= 1e-10, "{:e}", tr.sub(&lb).sup_norm());
    }

    #[test]
    fn constant_has_zero_hessian() {
        let (g, _) = conformal(16, 3);
        let geom = Geometry::new(&g).unwrap();
        let u = ScalarField::constant(g.grid(), 3.0);
        assert!(covariant_hessian(&u, &geom).sup_norm() <= 1e-12);
        assert!(laplace_beltrami(&u, &geom).sup_norm() <= 1e-12);
    }

    #[test]
    fn conformal_laplacian_identity() {
        // Δ_{e^{2φ}δ} u = e^{−2φ}(Δu + (n−2) ⟨∇φ, ∇u⟩)
        let (g, phi) = conformal(24, 4);
        let grid = g.grid();
        let geom = Geometry::new(&g).unwrap();
        let flat = Geometry::new(&MetricField::flat(grid)).unwrap();
        let u = ScalarField::from_fn(grid, |x| (x[0] + x[3]).sin() * 0.5 + (2.0 * x[1]).cos());
        let lhs = laplace_beltrami(&u, &geom);
        let dphi = gradient(&phi);
        let du = gradient(&u);
        let rhs = laplace_beltrami(&u, &flat)
            .add(&contract_one_forms(&dphi, &du, &flat).scaled(2.0))
            .mul(&phi.map(|p| (-2.0 * p).exp()));
        assert!(lhs.sub(&rhs).sup_norm() <= 1e-8);
    }

    #[test]
    fn divergence_examples_on_flat_metric() {
        let grid = PeriodicGrid::new(3, 16).unwrap();
        let geom = Geometry::new(&MetricField::flat(grid)).unwrap();
        let psi = ScalarField::from_fn(grid, |x| x[0].sin());
        let h = SymTensor2Field::scalar_identity(&psi);
        let dh = divergence_tensor(&h, &geom);
        for node in 0..grid.node_count() {
            let x = grid.coordinates(node);
            assert!((dh.get(node, 0) + x[0].cos()).abs() < 1e-12);
            assert!(dh.get(node, 1).abs() < 1e-12 && dh.get(node, 2).abs() < 1e-12);
        }
        let psi = ScalarField::from_fn(grid, |x| (x[0] + 2.0 * x[1]).cos() + x[2].sin());
        let dd = double_divergence(&SymTensor2Field::scalar_identity(&psi), &geom);
        let lap = laplace_beltrami(&psi, &geom);
        assert!(dd.sub(&lap).sup_norm() <= 1e-11);
        assert_eq!(divergence_tensor(&SymTensor2Field::zeros(grid), &geom).sup_norm(), 0.0);
    }

    #[test]
    fn rough_laplacian_of_metric_vanishes() {
        let (g, _) = conformal(24, 4);
        let geom = Geometry::new(&g).unwrap();
        let lap = rough_laplacian(g.components(), &geom);
        assert!(lap.sup_norm() <= 1e-9, "{:e}", lap.sup_norm());
    }

    #[test]
    fn rough_laplacian_of_conformal_scalar_multiple() {
        // Δ(ψ g) = (Δψ) g by metric compatibility.
        let (g, _) = conformal(24, 3);
        let geom = Geometry::new(&g).unwrap();
        let psi = ScalarField::from_fn(g.grid(), |x| (x[0] - x[1]).sin());
        let lhs = rough_laplacian(&g.components().scaled_by(&psi), &geom);
        let rhs = g.components().scaled_by(&laplace_beltrami(&psi, &geom));
        assert!(lhs.sub(&rhs).sup_norm() <= 1e-9, "{:e}", lhs.sub(&rhs).sup_norm());
    }

    #[test]
    fn divergence_of_metric_multiple_is_gradient() {
        // δ(ψ g) = −dψ
        let (g, _) = conformal(24, 3);
        let geom = Geometry::new(&g).unwrap();
        let psi = ScalarField::from_fn(g.grid(), |x| (x[2] + x[1]).cos());
        let lhs = divergence_tensor(&g.components().scaled_by(&psi), &geom);
        let rhs = gradient(&psi).scaled(-1.0);
        assert!(lhs.sub(&rhs).sup_norm() <= 1e-10);
    }
}
