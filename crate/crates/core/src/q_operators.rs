//! Q-curvature, the Paneitz operator, conformal laws and Gauss–Bonnet–Chern accounting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariant::{contract, divergence_one_form, gradient, laplace_beltrami};
use crate::curvature::{CurvatureBundle, MetricNorm};
use crate::error::{QlabError, Result};
use crate::field::{OneFormField, ScalarField};
use crate::metric::{Geometry, MetricField};
use crate::reduce::pairwise_sum_by;
use crate::spectral::flat_bilaplacian;

/// The coefficients of `Q = a ΔR + b |Ric|² + c R²` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn dimension_constants(n: usize) -> Result<DimensionConstants> {
    if n < 3 {
        return Err(QlabError::DimensionTooSmall(n));
    }
    let nf = n as f64;
    Ok(DimensionConstants {
        n,
        a: -1.0 / (2.0 * (nf - 1.0)),
        b: -2.0 / ((nf - 2.0) * (nf - 2.0)),
        c: (nf * nf * (nf - 4.0) + 16.0 * (nf - 1.0)) / (8.0 * (nf - 1.0).powi(2) * (nf - 2.0).powi(2)),
    })
}

/// Q of the `n`-dimensional space form of sectional curvature `k`.
pub fn q_spaceform(n: usize, k: f64) -> Result<f64> {
    let dc = dimension_constants(n)?;
    let nf = n as f64;
    let ric2 = nf * (nf - 1.0).powi(2) * k * k;
    let r = nf * (nf - 1.0) * k;
    Ok(dc.b * ric2 + dc.c * r * r)
}

/// `∫ u dvol_g` as a pairwise sum of nodal values times the cell volume.
pub fn integrate(u: &ScalarField, g: &MetricField) -> Result<f64> {
    if u.grid() != g.grid() {
        return Err(QlabError::GridMismatch);
    }
    if g.is_flat() {
        return Ok(integrate_density(u, None));
    }
    let vd = g.volume_density()?;
    Ok(integrate_density(u, Some(vd.values())))
}

/// `∫ u dvol` using the volume density cached in `geom`.
pub fn integrate_with(u: &ScalarField, geom: &Geometry) -> f64 {
    if geom.is_flat() {
        integrate_density(u, None)
    } else {
        integrate_density(u, Some(geom.sqrt_det()))
    }
}

fn integrate_density(u: &ScalarField, density: Option<&[f64]>) -> f64 {
    let v = u.values();
    let sum = match density {
        None => pairwise_sum_by(v.len(), &|i| v[i]),
        Some(d) => pairwise_sum_by(v.len(), &|i| v[i] * d[i]),
    };
    sum * u.grid().cell_volume()
}

/// Riemannian volume `∫ 1 dvol`.
pub fn volume_with(geom: &Geometry) -> f64 {
    if geom.is_flat() {
        return geom.grid().volume();
    }
    let d = geom.sqrt_det();
    pairwise_sum_by(d.len(), &|i| d[i]) * geom.grid().cell_volume()
}

/// Mean with respect to `dvol`.
pub fn mean_with(u: &ScalarField, geom: &Geometry) -> f64 {
    integrate_with(u, geom) / volume_with(geom)
}

/// RMS norm `(∫ u² dvol / Vol)^{1/2}`.
pub fn rms_with(u: &ScalarField, geom: &Geometry) -> f64 {
    let sq = u.map(|v| v * v);
    (integrate_with(&sq, geom) / volume_with(geom)).max(0.0).sqrt()
}

/// Relative RMS distance `‖a − b‖ / ‖b‖` in the coordinate measure; `0` when both vanish.
pub fn relative_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let d = a.sub(b);
    let num = crate::reduce::dot(d.values(), d.values()).sqrt();
    let den = crate::reduce::dot(b.values(), b.values()).sqrt();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Geometry, curvature and Q of one metric, cached for repeated operator use.
#[derive(Clone, Debug)]
pub struct Background {
    geom: Geometry,
    bundle: CurvatureBundle,
    consts: DimensionConstants,
    lap_r: ScalarField,
    q: ScalarField,
}

impl Background {
    pub fn new(g: &MetricField) -> Result<Self> {
        let geom = Geometry::new(g)?;
        let consts = dimension_constants(geom.dim())?;
        let bundle = CurvatureBundle::from_geometry(&geom);
        let grid = geom.grid();
        let (lap_r, q) = if geom.is_flat() {
            (ScalarField::zeros(grid), ScalarField::zeros(grid))
        } else {
            let r = bundle.scalar();
            let lap_r = laplace_beltrami(r, &geom);
            let ric2 = contract(bundle.ricci(), bundle.ricci(), &geom);
            let mut q = lap_r.scaled(consts.a);
            q.axpy(consts.b, &ric2);
            q.axpy(consts.c, &r.mul(r));
            (lap_r, q)
        };
        Ok(Self {
            geom,
            bundle,
            consts,
            lap_r,
            q,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn metric(&self) -> &MetricField {
        self.geom.metric()
    }

    pub fn curvature(&self) -> &CurvatureBundle {
        &self.bundle
    }

    pub fn constants(&self) -> DimensionConstants {
        self.consts
    }

    pub fn q(&self) -> &ScalarField {
        &self.q
    }

    /// `Δ_g R_g`
    pub fn laplacian_scalar(&self) -> &ScalarField {
        &self.lap_r
    }

    pub fn is_flat(&self) -> bool {
        self.geom.is_flat()
    }

    pub fn dim(&self) -> usize {
        self.geom.dim()
    }

    pub fn volume(&self) -> f64 {
        volume_with(&self.geom)
    }

    pub fn integrate(&self, u: &ScalarField) -> f64 {
        integrate_with(u, &self.geom)
    }

    pub fn mean(&self, u: &ScalarField) -> f64 {
        mean_with(u, &self.geom)
    }

    pub fn rms(&self, u: &ScalarField) -> f64 {
        rms_with(u, &self.geom)
    }

    /// `u − mean(u)`, the `L²(dvol)` projection onto functions orthogonal to constants.
    pub fn project_mean_zero(&self, u: &ScalarField) -> ScalarField {
        let m = self.mean(u);
        u.map(|v| v - m)
    }

    fn require_dim4(&self) -> Result<()> {
        if self.dim() != 4 {
            return Err(QlabError::DimensionRequired {
                required: 4,
                actual: self.dim(),
            });
        }
        Ok(())
    }

    /// `P u = Δ²u + δ(((2/3) R g − 2 Ric)(du, ·))` with `δ = −div`.
    pub fn paneitz(&self, u: &ScalarField) -> Result<ScalarField> {
        self.require_dim4()?;
        if u.grid() != self.geom.grid() {
            return Err(QlabError::GridMismatch);
        }
        if self.is_flat() {
            return Ok(flat_bilaplacian(u));
        }
        let geom = &self.geom;
        let n = 4;
        let lap = laplace_beltrami(u, geom);
        let mut out = laplace_beltrami(&lap, geom);
        let du = gradient(u);
        let r = self.bundle.scalar().values();
        let ric = self.bundle.ricci();
        let grid = geom.grid();
        let mut v = vec![vec![0.0; grid.node_count()]; n];
        for node in 0..grid.node_count() {
            let ginv = geom.inverse_at(node);
            let rc = ric.at(node);
            let d = du.at(node);
            // raised gradient ∂^k u
            let mut up = [0.0; 4];
            for (k, upk) in up.iter_mut().enumerate() {
                for (j, dj) in d.iter().enumerate().take(n) {
                    *upk += ginv[k][j] * dj;
                }
            }
            for (i, vi) in v.iter_mut().enumerate() {
                let mut s = 0.0;
                for (k, upk) in up.iter().enumerate() {
                    s += rc[i][k] * upk;
                }
                vi[node] = (2.0 / 3.0) * r[node] * d[i] - 2.0 * s;
            }
        }
        let div = divergence_one_form(&OneFormField::from_vecs(grid, v), geom);
        out.axpy(-1.0, &div);
        Ok(out)
    }

    /// `Q + ¼|W|²` relative to `dvol_g`.
    pub fn curvature_form_density(&self) -> Result<ScalarField> {
        self.require_dim4()?;
        let w2 = self.bundle.weyl().norm2(&self.geom);
        Ok(self.q.add(&w2.scaled(0.25)))
    }

    /// `16Q + 4|W|² − (8/3)ΔR` relative to `dvol_g`.
    pub fn pfaffian_density(&self) -> Result<ScalarField> {
        self.require_dim4()?;
        let w2 = self.bundle.weyl().norm2(&self.geom);
        let mut out = self.q.scaled(16.0);
        out.axpy(4.0, &w2);
        out.axpy(-8.0 / 3.0, &self.lap_r);
        Ok(out)
    }

    pub fn gauss_bonnet(&self) -> Result<GaussBonnetReport> {
        self.require_dim4()?;
        let w2 = self.bundle.weyl().norm2(&self.geom);
        let total_q = self.integrate(&self.q);
        let weyl_term = self.integrate(&w2);
        Ok(GaussBonnetReport {
            total_q,
            weyl_term,
            euler_estimate: (4.0 * total_q + weyl_term) / (32.0 * PI * PI),
        })
    }
}

/// `Q_g = a ΔR + b |Ric|² + c R²`.
pub fn q_curvature(g: &MetricField) -> Result<ScalarField> {
    Ok(Background::new(g)?.q.clone())
}

/// Paneitz operator of a 4-dimensional metric.
pub fn paneitz_apply(g: &MetricField, u: &ScalarField) -> Result<ScalarField> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    Background::new(g)?.paneitz(u)
}

/// `Q` of `e^{2φ} g` from the conformal law `e^{−4φ}(P_g φ + Q_g)`.
pub fn conformal_q(g: &MetricField, phi: &ScalarField) -> Result<ScalarField> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    let bg = Background::new(g)?;
    conformal_q_with(&bg, phi)
}

pub fn conformal_q_with(bg: &Background, phi: &ScalarField) -> Result<ScalarField> {
    let p = bg.paneitz(phi)?;
    Ok(p.add(bg.q()).zip_with(phi, |v, f| v * (-4.0 * f).exp()))
}

/// A 4-form stored as a density against the volume form of a reference metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Form4Density {
    density: ScalarField,
    reference: MetricField,
}

impl Form4Density {
    pub fn new(density: ScalarField, reference: MetricField) -> Result<Self> {
        if density.grid() != reference.grid() {
            return Err(QlabError::GridMismatch);
        }
        if !density.is_finite() {
            return Err(QlabError::NonFinite("form density"));
        }
        Ok(Self { density, reference })
    }

    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    pub fn reference(&self) -> &MetricField {
        &self.reference
    }

    pub fn integral(&self) -> Result<f64> {
        integrate(&self.density, &self.reference)
    }

    /// The same form expressed against `dvol` of `other`.
    pub fn rebased(&self, other: &MetricField) -> Result<Self> {
        if other.grid() != self.reference.grid() {
            return Err(QlabError::GridMismatch);
        }
        let from = self.reference.volume_density()?;
        let to = other.volume_density()?;
        let density = self.density.mul(&from).zip_with(&to, |v, t| v / t);
        Self::new(density, other.clone())
    }
}

/// `Ω_g = (Q + ¼|W|²) dvol_g`.
pub fn curvature_form(g: &MetricField) -> Result<Form4Density> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    let bg = Background::new(g)?;
    Form4Density::new(bg.curvature_form_density()?, g.clone())
}

/// `Pfaff_g = (16Q + 4|W|² − (8/3)ΔR) dvol_g`.
pub fn pfaffian_form(g: &MetricField) -> Result<Form4Density> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    let bg = Background::new(g)?;
    Form4Density::new(bg.pfaffian_density()?, g.clone())
}

/// Totals behind the Gauss–Bonnet–Chern identity `32π²χ = ∫(4Q + |W|²) dvol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    /// `κ_P = ∫ Q dvol`
    pub total_q: f64,
    /// `∫ |W|² dvol`
    pub weyl_term: f64,
    pub euler_estimate: f64,
}

pub fn gauss_bonnet_report(g: &MetricField) -> Result<GaussBonnetReport> {
    if g.dim() != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: g.dim(),
        });
    }
    Background::new(g)?.gauss_bonnet()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::tensor_norm2;
    use crate::field::SymTensor2Field;
    use crate::grid::PeriodicGrid;

    fn conformal_phi(grid: PeriodicGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x| 0.1 * x[0].sin())
    }

    fn perturbed(grid: PeriodicGrid) -> MetricField {
        MetricField::general(SymTensor2Field::from_fn(grid, |x, i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            d + 0.06 * (x[(i + 1) % 4] + x[j]).cos() * if i == j { 1.0 } else { 0.4 }
        }))
        .unwrap()
    }

    #[test]
    fn constants_match_closed_forms() {
        let c4 = dimension_constants(4).unwrap();
        assert!((c4.a + 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(c4.b, -0.5);
        assert!((c4.c - 1.0 / 6.0).abs() < 1e-16);
        let c3 = dimension_constants(3).unwrap();
        assert_eq!((c3.a, c3.b, c3.c), (-0.25, -2.0, 23.0 / 32.0));
        let c5 = dimension_constants(5).unwrap();
        assert_eq!(c5.a, -0.125);
        assert!((c5.b + 2.0 / 9.0).abs() < 1e-16);
        assert!((c5.c - 89.0 / 1152.0).abs() < 1e-16);
        assert!(dimension_constants(2).is_err());
        for n in 3..12 {
            let c = dimension_constants(n).unwrap();
            assert!(c.a < 0.0 && c.b < 0.0);
        }
    }

    #[test]
    fn spaceform_values() {
        assert!((q_spaceform(4, 1.0).unwrap() - 6.0).abs() <= 1e-14);
        assert!((q_spaceform(3, 1.0).unwrap() - 15.0 / 8.0).abs() <= 1e-14);
        assert_eq!(q_spaceform(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn flat_q_is_exactly_zero() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let q = q_curvature(&MetricField::flat(grid)).unwrap();
        assert_eq!(q.sup_norm(), 0.0);
    }

    #[test]
    fn flat_paneitz_is_bilaplacian() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let u = ScalarField::from_fn(grid, |x| (x[0] + x[1]).sin());
        let p = paneitz_apply(&MetricField::flat(grid), &u).unwrap();
        assert!(p.sub(&u.scaled(4.0)).sup_norm() <= 1e-12);
        let three = PeriodicGrid::new(3, 8).unwrap();
        assert!(matches!(
            paneitz_apply(&MetricField::flat(three), &ScalarField::zeros(three)),
            Err(QlabError::DimensionRequired { required: 4, actual: 3 })
        ));
    }

    #[test]
    fn paneitz_kills_constants() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let g = perturbed(grid);
        let p = paneitz_apply(&g, &ScalarField::constant(grid, 2.5)).unwrap();
        assert!(p.sup_norm() <= 1e-12);
    }

    #[test]
    fn conformal_law_matches_tensor_pipeline() {
        let grid = PeriodicGrid::new(4, 16).unwrap();
        let phi = conformal_phi(grid);
        let full = q_curvature(&MetricField::conformal(&phi)).unwrap();
        let law = conformal_q(&MetricField::flat(grid), &phi).unwrap();
        assert!(relative_l2(&full, &law) <= 1e-7, "{:e}", relative_l2(&full, &law));
    }

    #[test]
    fn conformal_law_on_curved_background() {
        let grid = PeriodicGrid::new(4, 24).unwrap();
        let g = perturbed(grid);
        let phi = ScalarField::from_fn(grid, |x| 0.05 * (x[1] - x[3]).cos());
        let law = conformal_q(&g, &phi).unwrap();
        let full = q_curvature(&g.conformal_rescale(&phi).unwrap()).unwrap();
        assert!(relative_l2(&full, &law) <= 1e-6, "{:e}", relative_l2(&full, &law));
    }

    #[test]
    fn conformal_q_trivial_cases() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let g = perturbed(grid);
        let bg = Background::new(&g).unwrap();
        let same = conformal_q_with(&bg, &ScalarField::zeros(grid)).unwrap();
        assert!(same.sub(bg.q()).sup_norm() <= 1e-15);
        let c = 0.3;
        let shifted = conformal_q_with(&bg, &ScalarField::constant(grid, c)).unwrap();
        let expect = bg.q().scaled((-4.0 * c).exp());
        assert!(shifted.sub(&expect).sup_norm() <= 1e-12 * (1.0 + bg.q().sup_norm()));
    }

    #[test]
    fn pointwise_gauss_bonnet_integrand_identity() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let g = perturbed(grid);
        let bg = Background::new(&g).unwrap();
        let geom = bg.geometry();
        let b = bg.curvature();
        let lhs = bg.q().scaled(4.0).add(&b.weyl().norm2(geom));
        let rm2 = tensor_norm2(b.riemann(), &g).unwrap();
        let ric2 = b.ricci().norm2(geom);
        let r = b.scalar();
        let mut rhs = rm2;
        rhs.axpy(-4.0, &ric2);
        rhs.axpy(1.0, &r.mul(r));
        rhs.axpy(-2.0 / 3.0, bg.laplacian_scalar());
        assert!(relative_l2(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn total_q_and_euler_vanish_on_conformal_torus() {
        let grid = PeriodicGrid::new(4, 16).unwrap();
        let g = MetricField::conformal(&conformal_phi(grid));
        let gb = gauss_bonnet_report(&g).unwrap();
        assert!(gb.total_q.abs() <= 1e-8 * grid.volume());
        assert!(gb.euler_estimate.abs() <= 1e-6);
        assert!(gb.weyl_term.abs() <= 1e-12);
        let omega = curvature_form(&g).unwrap();
        assert!(omega.integral().unwrap().abs() <= 1e-6 * grid.volume());
    }

    #[test]
    fn pfaffian_integral_is_four_times_gauss_bonnet_integrand() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let g = perturbed(grid);
        let pf = pfaffian_form(&g).unwrap().integral().unwrap();
        let gb = gauss_bonnet_report(&g).unwrap();
        let four = 4.0 * (4.0 * gb.total_q + gb.weyl_term);
        assert!(gb.weyl_term > 1e-6);
        assert!((pf - four).abs() <= 1e-6 * four.abs().max(1e-300) + 1e-12);
    }

    #[test]
    fn integrate_uses_volume_density() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let phi = ScalarField::constant(grid, 0.5_f64.ln());
        let g = MetricField::conformal(&phi);
        let vol = integrate(&ScalarField::constant(grid, 1.0), &g).unwrap();
        assert!((vol - grid.volume() / 16.0).abs() <= 1e-12 * vol);
    }

    #[test]
    fn rebased_form_keeps_its_integral() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[2].cos());
        let g = MetricField::conformal(&phi);
        let form = Form4Density::new(
            ScalarField::from_fn(grid, |x| 1.0 + x[0].sin()),
            MetricField::flat(grid),
        )
        .unwrap();
        let moved = form.rebased(&g).unwrap();
        assert!((form.integral().unwrap() - moved.integral().unwrap()).abs() <= 1e-12 * grid.volume());
    }
}
