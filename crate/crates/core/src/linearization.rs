//! The linearized Q-curvature operator `L_g`, its formal adjoint `L_g*`,
//! the principal symbol of `L_g*` and the trace identity.
//!
//! Contractions such as `Ric·h` are full metric contractions
//! `g^{ia} g^{jb} R_{ij} h_{ab}`; `(Ric×Ric)_{ij} = g^{lm} R_{li} R_{mj}`;
//! `(R̊m·h)_{jk} = R_{ijkl} h^{il}`.

use serde::{Deserialize, Serialize};

use crate::covariant::{
    codifferential, contract, contract_one_forms, covariant_hessian, divergence_tensor, double_divergence, gradient,
    laplace_beltrami, metric_product, rough_laplacian, sym_covariant_derivative, trace,
};
use crate::curvature::{lichnerowicz, riemann_action};
use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::metric::MetricField;
use crate::q_operators::{dimension_constants, Background};

/// A background prepared for repeated applications of `L` and `L*`.
#[derive(Clone, Debug)]
pub struct LinearizedQ {
    bg: Background,
    curved: Option<CurvedTerms>,
}

#[derive(Clone, Debug)]
struct CurvedTerms {
    d_r: crate::field::OneFormField,
    hess_r: SymTensor2Field,
    /// `R̊m·Ric`
    rm_ric: SymTensor2Field,
    /// `Ric × Ric`
    ric_ric: SymTensor2Field,
}

impl LinearizedQ {
    pub fn new(g: &MetricField) -> Result<Self> {
        Ok(Self::from_background(Background::new(g)?))
    }

    pub fn from_background(bg: Background) -> Self {
        let curved = if bg.is_flat() {
            None
        } else {
            let geom = bg.geometry();
            let b = bg.curvature();
            Some(CurvedTerms {
                d_r: gradient(b.scalar()),
                hess_r: covariant_hessian(b.scalar(), geom),
                rm_ric: riemann_action(b, b.ricci(), geom),
                ric_ric: metric_product(b.ricci(), b.ricci(), geom),
            })
        };
        Self { bg, curved }
    }

    pub fn background(&self) -> &Background {
        &self.bg
    }

    pub fn into_background(self) -> Background {
        self.bg
    }

    /// `L_g h`.
    pub fn apply(&self, h: &SymTensor2Field) -> Result<ScalarField> {
        let geom = self.bg.geometry();
        if h.grid() != geom.grid() {
            return Err(QlabError::GridMismatch);
        }
        let k = self.bg.constants();
        let tr = trace(h, geom);
        let lap_tr = laplace_beltrami(&tr, geom);
        let dh = divergence_tensor(h, geom);
        let dd = codifferential(&dh, geom);

        let Some(ct) = &self.curved else {
            // a Δ(−Δ tr h + δ²h)
            return Ok(laplace_beltrami(&dd.sub(&lap_tr), geom).scaled(k.a));
        };

        let b = self.bg.curvature();
        let ric = b.ricci();
        let r = b.scalar();

        // R' = −Δ tr h + δ²h − Ric·h
        let rdot = dd.sub(&lap_tr).sub(&contract(ric, h, geom));

        let mut dtr_2dh = gradient(&tr);
        dtr_2dh.axpy(2.0, &dh);
        let mut out = laplace_beltrami(&rdot, geom);
        out.axpy(0.5, &contract_one_forms(&ct.d_r, &dtr_2dh, geom));
        out.axpy(-1.0, &contract(&ct.hess_r, h, geom));
        let mut out = out.scaled(k.a);

        let mut inner = lichnerowicz(h, geom, b)?;
        inner.axpy(1.0, &covariant_hessian(&tr, geom));
        inner.axpy(2.0, &sym_covariant_derivative(&dh, geom));
        let mut b_block = contract(ric, &inner, geom);
        b_block.axpy(2.0, &contract(&ct.ric_ric, h, geom));
        out.axpy(-k.b, &b_block);

        out.axpy(2.0 * k.c, &r.mul(&rdot));
        Ok(out)
    }

    /// `L_g* f`.
    pub fn adjoint(&self, f: &ScalarField) -> Result<SymTensor2Field> {
        let geom = self.bg.geometry();
        if f.grid() != geom.grid() {
            return Err(QlabError::GridMismatch);
        }
        let k = self.bg.constants();
        let grid = geom.grid();
        let lap_f = laplace_beltrami(f, geom);
        let lap2_f = laplace_beltrami(&lap_f, geom);

        let Some(ct) = &self.curved else {
            // a(−g Δ²f + ∇²Δf)
            let mut out = covariant_hessian(&lap_f, geom);
            out.axpy(-1.0, &SymTensor2Field::scalar_identity(&lap2_f));
            return Ok(out.scaled(k.a));
        };

        let b = self.bg.curvature();
        let ric = b.ricci();
        let r = b.scalar();
        let f_ric = ric.scaled_by(f);
        let f_r = f.mul(r);
        let mut f_dr = ct.d_r.scaled_by(f);
        let delta_f_ric = divergence_tensor(&f_ric, geom);

        // g-proportional part
        let mut s = lap2_f.scaled(-k.a);
        s.axpy(0.5 * k.a, &codifferential(&f_dr, geom));
        s.axpy(-k.b, &double_divergence(&f_ric, geom));
        s.axpy(-2.0 * k.c, &laplace_beltrami(&f_r, geom));
        let mut out = SymTensor2Field::from_node_fn(grid, |node| {
            let g = geom.metric().at(node);
            let mut m = g;
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= s.values()[node];
                }
            }
            m
        });

        // Hessians: a∇²Δf + 2c∇²(fR)
        let mut pot = lap_f.scaled(k.a);
        pot.axpy(2.0 * k.c, &f_r);
        out.axpy(1.0, &covariant_hessian(&pot, geom));

        // symmetrized derivatives: a∇(f dR) − 2b∇δ(f Ric)
        f_dr = f_dr.scaled(k.a);
        f_dr.axpy(-2.0 * k.b, &delta_f_ric);
        out.axpy(1.0, &sym_covariant_derivative(&f_dr, geom));

        out.axpy(-k.b, &rough_laplacian(&f_ric, geom));

        // pointwise curvature terms
        let mut c_ric = lap_f.scaled(-k.a);
        c_ric.axpy(-2.0 * k.c, &f_r);
        out.axpy(1.0, &ric.scaled_by(&c_ric));
        out.axpy(-k.a, &ct.hess_r.scaled_by(f));
        out.axpy(-2.0 * k.b, &ct.rm_ric.scaled_by(f));
        Ok(out)
    }

    /// `∫ u v dvol_g`
    pub fn pair_scalars(&self, u: &ScalarField, v: &ScalarField) -> f64 {
        self.bg.integrate(&u.mul(v))
    }

    /// `∫ g^{ia} g^{jb} h_{ij} k_{ab} dvol_g`
    pub fn pair_tensors(&self, h: &SymTensor2Field, k: &SymTensor2Field) -> f64 {
        self.bg.integrate(&contract(h, k, self.bg.geometry()))
    }

    /// `(∫ |h|² dvol / Vol)^{1/2}`
    pub fn tensor_rms(&self, h: &SymTensor2Field) -> f64 {
        (self.pair_tensors(h, h) / self.bg.volume()).max(0.0).sqrt()
    }

    /// `f ↦ L(L* f)`
    pub fn normal_operator(&self, f: &ScalarField) -> Result<ScalarField> {
        self.apply(&self.adjoint(f)?)
    }
}

/// `L_g h`
pub fn linearize_q(g: &MetricField, h: &SymTensor2Field) -> Result<ScalarField> {
    LinearizedQ::new(g)?.apply(h)
}

/// `L_g* f`
pub fn adjoint_q(g: &MetricField, f: &ScalarField) -> Result<SymTensor2Field> {
    LinearizedQ::new(g)?.adjoint(f)
}

/// `σ_ξ(L*) = −a_n (δ|ξ|² − ξ⊗ξ) |ξ|²` on the flat metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolMatrix {
    pub n: usize,
    pub xi: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl SymbolMatrix {
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.matrix[i][i]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|&v| v == 0.0)
    }
}

pub fn principal_symbol_adjoint(n: usize, xi: &[f64]) -> Result<SymbolMatrix> {
    let k = dimension_constants(n)?;
    if xi.len() != n {
        return Err(QlabError::ComponentMismatch {
            expected: n,
            found: xi.len(),
        });
    }
    let x2: f64 = xi.iter().map(|v| v * v).sum();
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = if i == j { x2 } else { 0.0 };
                    -k.a * (d - xi[i] * xi[j]) * x2
                })
                .collect()
        })
        .collect();
    Ok(SymbolMatrix {
        n,
        xi: xi.to_vec(),
        matrix,
    })
}

/// Relative RMS size of `tr_g L*f − ½(P f − 4 Q f)` (dimension 4).
pub fn trace_identity_residual(g: &MetricField, f: &ScalarField) -> Result<f64> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    trace_identity_residual_with(&LinearizedQ::new(g)?, f)
}

pub fn trace_identity_residual_with(lin: &LinearizedQ, f: &ScalarField) -> Result<f64> {
    let bg = lin.background();
    let lhs = trace(&lin.adjoint(f)?, bg.geometry());
    let mut rhs = bg.paneitz(f)?;
    rhs.axpy(-4.0, &bg.q().mul(f));
    let rhs = rhs.scaled(0.5);
    let num = bg.rms(&lhs.sub(&rhs));
    let den = bg.rms(&lhs).max(bg.rms(&rhs));
    Ok(if den == 0.0 { num } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::q_operators::relative_l2;
    use crate::spectral::flat_bilaplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band_limited(grid: PeriodicGrid, rng: &mut ChaCha8Rng, modes: i64) -> ScalarField {
        let n = grid.dim();
        let mut terms = Vec::new();
        for _ in 0..6 {
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-modes..=modes) as f64).collect();
            terms.push((k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)));
        }
        ScalarField::from_fn(grid, |x| {
            terms
                .iter()
                .map(|(k, c, p)| c * ((0..n).map(|i| k[i] * x[i]).sum::<f64>() + p).cos())
                .sum()
        })
    }

    fn random_tensor(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> SymTensor2Field {
        let n = grid.dim();
        let mut comps = Vec::new();
        for _ in 0..n * (n + 1) / 2 {
            comps.push(band_limited(grid, rng, 2).into_values());
        }
        SymTensor2Field::from_components(grid, comps).unwrap()
    }

    #[test]
    fn zero_tensor_maps_to_zero() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let l = linearize_q(&MetricField::conformal(&phi), &SymTensor2Field::zeros(grid)).unwrap();
        assert_eq!(l.sup_norm(), 0.0);
    }

    #[test]
    fn flat_conformal_direction() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let psi = ScalarField::from_fn(grid, |x| (x[0] + 2.0 * x[3]).sin() + 0.5 * x[1].cos());
        let h = SymTensor2Field::scalar_identity(&psi);
        let l = linearize_q(&MetricField::flat(grid), &h).unwrap();
        let expect = flat_bilaplacian(&psi).scaled(0.5);
        assert!(l.sub(&expect).sup_norm() <= 1e-10 * expect.sup_norm());
    }

    #[test]
    fn flat_adjoint_of_cosine() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[0].cos());
        let a = adjoint_q(&MetricField::flat(grid), &f).unwrap();
        for i in 0..4 {
            for j in i..4 {
                let expect = if i == j && i > 0 { 1.0 / 6.0 } else { 0.0 };
                for (node, v) in a.component(i, j).iter().enumerate() {
                    assert!((v - expect * f.values()[node]).abs() <= 1e-12);
                }
            }
        }
        let c = adjoint_q(&MetricField::flat(grid), &ScalarField::constant(grid, 3.0)).unwrap();
        assert!(c.sup_norm() <= 1e-12);
    }

    #[test]
    fn adjointness_on_flat_and_conformal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        for (g, tol) in [(MetricField::flat(grid), 1e-8), (MetricField::conformal(&phi), 1e-6)] {
            let lin = LinearizedQ::new(&g).unwrap();
            for _ in 0..2 {
                let h = random_tensor(grid, &mut rng);
                let f = band_limited(grid, &mut rng, 2);
                let lhs = lin.pair_scalars(&lin.apply(&h).unwrap(), &f);
                let rhs = lin.pair_tensors(&h, &lin.adjoint(&f).unwrap());
                let scale = lin.tensor_rms(&h) * lin.background().rms(&f) * lin.background().volume();
                assert!((lhs - rhs).abs() <= tol * scale, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn symbol_examples() {
        let s = principal_symbol_adjoint(4, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j && i > 0 { 1.0 / 6.0 } else { 0.0 };
                assert!((s.matrix[i][j] - e).abs() <= 1e-16);
            }
        }
        assert!(principal_symbol_adjoint(4, &[0.0; 4]).unwrap().is_zero());
        let xi = [0.3, -1.2, 0.7];
        let s = principal_symbol_adjoint(3, &xi).unwrap();
        let x2: f64 = xi.iter().map(|v| v * v).sum();
        assert!((s.trace() - 0.25 * 2.0 * x2 * x2).abs() <= 1e-14);
        assert!(principal_symbol_adjoint(4, &xi).is_err());
    }

    #[test]
    fn trace_identity_flat_and_conformal() {
        let grid = PeriodicGrid::new(4, 16).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[0].cos());
        assert!(trace_identity_residual(&MetricField::flat(grid), &f).unwrap() <= 1e-10);
        assert_eq!(
            trace_identity_residual(&MetricField::flat(grid), &ScalarField::zeros(grid)).unwrap(),
            0.0
        );
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = band_limited(grid, &mut rng, 2);
        let r = trace_identity_residual(&MetricField::conformal(&phi), &f).unwrap();
        assert!(r <= 1e-6, "{r:e}");
    }

    #[test]
    fn finite_difference_on_conformal_background() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin() + 0.05 * (x[1] + x[2]).cos());
        let g = MetricField::conformal(&phi);
        let h = SymTensor2Field::from_fn(grid, |x, i, j| {
            0.3 * ((i + 1) as f64 * x[j] + x[(i + 2) % 4]).cos() + if i == j { 0.2 * x[3].sin() } else { 0.0 }
        });
        let lin = linearize_q(&g, &h).unwrap();
        let t = 1e-3;
        let plus = MetricField::general(g.components().add(&h.scaled(t))).unwrap();
        let minus = MetricField::general(g.components().sub(&h.scaled(t))).unwrap();
        let fd = crate::q_operators::q_curvature(&plus)
            .unwrap()
            .sub(&crate::q_operators::q_curvature(&minus).unwrap())
            .scaled(0.5 / t);
        assert!(relative_l2(&fd, &lin) <= 1e-4, "{:e}", relative_l2(&fd, &lin));
    }
}
