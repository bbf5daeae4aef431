//! Linear Paneitz solves, prescribed curvature 4-forms, the conformal Newton
//! iteration and the implicit-function scheme `Q(g₀ + L*u) = f`.
//!
//! Analytic obstructions are reported in [`SolverReport::obstruction`] with
//! `converged = false`; `Err` is reserved for invalid input.

use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::kernel::{constants_in_kernel, kernel_threshold, normal_symbol_inverse};
use crate::krylov::{gmres, GmresOptions};
use crate::linearization::LinearizedQ;
use crate::metric::MetricField;
use crate::q_operators::{curvature_form, Background, Form4Density};
use crate::spectral::{flat_inverse_laplacian_power, k_squared, Spectrum};

/// Relative size of `∫ρ dvol` (against `‖ρ‖ Vol`) above which a Paneitz right-hand side is rejected.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    None,
    Backtracking,
}

/// Jacobian used by [`newton_ift`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IftJacobian {
    /// `v ↦ L_{g₀}(L*_{g₀} v)`, fixed for the whole run.
    Frozen,
    /// Central differences of `u ↦ Q(g₀ + L*u)` at the current iterate.
    FiniteDifference,
}

/// Starting point of [`newton_conformal`].
///
/// From any constant `φ` on a `Q ≡ 0` background the exact Newton step is the
/// constant `−¼`, so a zero start drifts to `φ → −∞`. The linearized start
/// solves `P_g φ₀ = (f − Q_g) − mean(f − Q_g)` first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStart {
    Zero,
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub damping: Damping,
    pub linear_solver_tolerance: f64,
    pub linear_max_iterations: usize,
    pub spd_guard: bool,
    /// Largest `‖f − Q_{g₀}‖ / max(‖Q_{g₀}‖, 1)` accepted by [`newton_ift`].
    pub neighbourhood_radius: f64,
    pub ift_jacobian: IftJacobian,
    pub newton_start: NewtonStart,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            residual_tolerance: 1e-10,
            damping: Damping::Backtracking,
            linear_solver_tolerance: 1e-12,
            linear_max_iterations: 400,
            spd_guard: true,
            neighbourhood_radius: 1e-2,
            ift_jacobian: IftJacobian::Frozen,
            newton_start: NewtonStart::Linearized,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(QlabError::InvalidOption(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.residual_tolerance, "residual_tolerance")?;
        positive(self.linear_solver_tolerance, "linear_solver_tolerance")?;
        positive(self.neighbourhood_radius, "neighbourhood_radius")?;
        if self.max_iterations == 0 {
            return Err(QlabError::InvalidOption("max_iterations must be at least 1".into()));
        }
        if self.linear_max_iterations == 0 {
            return Err(QlabError::InvalidOption(
                "linear_max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn gmres(&self, tolerance: f64) -> GmresOptions {
        GmresOptions {
            tolerance,
            restart: 40,
            max_iterations: self.linear_max_iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionKind {
    /// `∫ρ dvol ≠ 0` for a Paneitz right-hand side (Gauss–Bonnet on tori).
    Compatibility,
    /// `f` cannot balance `κ_P = ∫Q dvol` by sign.
    Sign,
    /// The target has a component in `ker L*`.
    Kernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub kind: ObstructionKind,
    /// The offending integral.
    pub mean_incompatibility: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub obstruction: Option<Obstruction>,
    /// Residual recomputed after the solve through an independent code path.
    pub verification_residual: Option<f64>,
    pub linear_iterations: usize,
    /// Mean of the residual along `ker L*` that the projected scheme leaves untouched.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_component: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolverReport {
    fn obstructed(o: Obstruction) -> Self {
        Self {
            message: Some(o.detail.clone()),
            obstruction: Some(o),
            ..Self::default()
        }
    }

    /// Residual history as CSV columns `iteration,residual`.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, r));
        }
        out
    }

    /// Whether some consecutive residual ratio drops to a tenth of the previous ratio.
    pub fn superlinear_witness(&self) -> bool {
        let h = &self.residual_history;
        let ratios: Vec<f64> = h.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
        ratios.windows(2).any(|r| r[1] <= 0.1 * r[0])
    }
}

fn require_dim4(dim: usize) -> Result<()> {
    if dim != 4 {
        return Err(QlabError::DimensionRequired {
            required: 4,
            actual: dim,
        });
    }
    Ok(())
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solves `P_g φ = ρ` for the `dvol_g`-mean-zero `φ`.
pub fn solve_paneitz(g: &MetricField, rho: &ScalarField, opts: &SolverOptions) -> Result<(ScalarField, SolverReport)> {
    require_dim4(g.dim())?;
    solve_paneitz_with(&Background::new(g)?, rho, opts)
}

pub fn solve_paneitz_with(
    bg: &Background,
    rho: &ScalarField,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolverReport)> {
    opts.validate()?;
    require_dim4(bg.dim())?;
    let grid = bg.geometry().grid();
    if rho.grid() != grid {
        return Err(QlabError::GridMismatch);
    }
    if !rho.is_finite() {
        return Err(QlabError::NonFinite("paneitz right-hand side"));
    }
    let rn = bg.rms(rho);
    let integral = bg.integrate(rho);
    if integral.abs() > COMPATIBILITY_TOLERANCE * rn * bg.volume() {
        return Ok((
            ScalarField::zeros(grid),
            SolverReport::obstructed(Obstruction {
                kind: ObstructionKind::Compatibility,
                mean_incompatibility: integral,
                detail: format!(
                    "right-hand side integrates to {integral:e}; P_g annihilates constants, so solvability needs zero integral"
                ),
            }),
        ));
    }
    if rn == 0.0 {
        return Ok((
            ScalarField::zeros(grid),
            SolverReport {
                converged: true,
                iterations: 0,
                residual_history: vec![0.0],
                verification_residual: Some(0.0),
                ..SolverReport::default()
            },
        ));
    }

    let (phi, linear_iterations) = if bg.is_flat() {
        (flat_inverse_laplacian_power(rho, 2, 1.0), 1)
    } else {
        let out = gmres(
            |v| Ok(bg.paneitz(&ScalarField::from_vec(grid, v.to_vec()))?.into_values()),
            |r| flat_inverse_laplacian_power(&ScalarField::from_vec(grid, r.to_vec()), 2, 1.0).into_values(),
            rho.values(),
            None,
            opts.gmres(0.5 * opts.residual_tolerance.min(opts.linear_solver_tolerance.max(1e-14))),
        )?;
        (ScalarField::from_vec(grid, out.solution), out.iterations)
    };
    let phi = bg.project_mean_zero(&phi);
    let residual = relative(bg.rms(&bg.paneitz(&phi)?.sub(rho)), rn);
    Ok((
        phi,
        SolverReport {
            converged: residual <= opts.residual_tolerance,
            iterations: 1,
            residual_history: vec![residual],
            verification_residual: Some(residual),
            linear_iterations,
            ..SolverReport::default()
        },
    ))
}

/// Result of [`prescribe_form`].
#[derive(Clone, Debug)]
pub struct PrescribedForm {
    /// `g̃ = e^{2φ} g`
    pub metric: MetricField,
    pub phi: ScalarField,
    pub report: SolverReport,
}

/// Finds `g̃ = e^{2φ} g` with `Ω_{g̃} = ω` by solving `P_g φ dvol_g = ω − Ω_g`.
pub fn prescribe_form(g: &MetricField, omega: &Form4Density, opts: &SolverOptions) -> Result<PrescribedForm> {
    require_dim4(g.dim())?;
    let bg = Background::new(g)?;
    let omega = if omega.reference() == g {
        omega.clone()
    } else {
        omega.rebased(g)?
    };
    let rho = omega.density().sub(&bg.curvature_form_density()?);
    let (phi, mut report) = solve_paneitz_with(&bg, &rho, opts)?;
    if report.obstruction.is_some() {
        return Ok(PrescribedForm {
            metric: g.clone(),
            phi,
            report,
        });
    }
    let metric = g.conformal_rescale(&phi)?;
    // independent check: full tensor pipeline on g̃, compared against dvol_g
    let recomputed = curvature_form(&metric)?.rebased(g)?;
    let diff = bg.rms(&recomputed.density().sub(omega.density()));
    report.verification_residual = Some(relative(diff, bg.rms(omega.density())));
    Ok(PrescribedForm { metric, phi, report })
}

/// Solves `P_g φ + Q_g = f e^{4φ}` by damped Newton iteration from `φ = 0`.
pub fn newton_conformal(g: &MetricField, f: &ScalarField, opts: &SolverOptions) -> Result<(ScalarField, SolverReport)> {
    require_dim4(g.dim())?;
    newton_conformal_with(&Background::new(g)?, f, None, opts)
}

pub fn newton_conformal_with(
    bg: &Background,
    f: &ScalarField,
    initial: Option<&ScalarField>,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolverReport)> {
    opts.validate()?;
    require_dim4(bg.dim())?;
    let grid = bg.geometry().grid();
    if f.grid() != grid || initial.is_some_and(|p| p.grid() != grid) {
        return Err(QlabError::GridMismatch);
    }
    if !f.is_finite() {
        return Err(QlabError::NonFinite("prescribed function"));
    }
    let q = bg.q();

    // ∫P φ dvol = 0, so ∫ f e^{4φ} dvol must equal κ_P.
    let kappa = bg.integrate(q);
    let kappa_tol = 1e-8 * bg.volume() * bg.rms(q).max(1.0);
    let (fmin, fmax) = (f.min(), f.max());
    let blocked = if kappa.abs() <= kappa_tol {
        fmin > 0.0 || fmax < 0.0
    } else if kappa > 0.0 {
        fmax <= 0.0
    } else {
        fmin >= 0.0
    };
    if blocked {
        let fint = bg.integrate(f);
        return Ok((
            initial.cloned().unwrap_or_else(|| ScalarField::zeros(grid)),
            SolverReport::obstructed(Obstruction {
                kind: ObstructionKind::Sign,
                mean_incompatibility: fint,
                detail: format!(
                    "sign obstruction: total Q-curvature is {kappa:e} but f ranges over [{fmin:e}, {fmax:e}], so ∫ f e^(4φ) dvol cannot match it"
                ),
            }),
        ));
    }

    let scale = {
        let s = bg.rms(f).max(bg.rms(q));
        if s == 0.0 {
            1.0
        } else {
            s
        }
    };
    let residual = |phi: &ScalarField| -> Result<ScalarField> {
        let mut out = bg.paneitz(phi)?;
        out.axpy(1.0, q);
        Ok(out.sub(&f.zip_with(phi, |fv, p| fv * (4.0 * p).exp())))
    };

    let mut report = SolverReport::default();
    let mut phi = match (initial, opts.newton_start) {
        (Some(p), _) => p.clone(),
        (None, NewtonStart::Zero) => ScalarField::zeros(grid),
        (None, NewtonStart::Linearized) => {
            let d = bg.project_mean_zero(&f.sub(q));
            let (p0, rep) = solve_paneitz_with(bg, &d, opts)?;
            report.linear_iterations += rep.linear_iterations;
            p0
        }
    };
    let mut big_f = residual(&phi)?;
    for k in 1..=opts.max_iterations {
        let rn = bg.rms(&big_f);
        report.residual_history.push(rn / scale);
        report.iterations = k;
        if rn / scale <= opts.residual_tolerance {
            report.converged = true;
            break;
        }
        if k == opts.max_iterations {
            report.message = Some("iteration budget exhausted".into());
            break;
        }

        let sigma = f.zip_with(&phi, |fv, p| -4.0 * fv * (4.0 * p).exp());
        let smax = sigma.sup_norm();
        let smean = bg.mean(&sigma);
        let zero_mode = if smean.abs() > 1e-3 * smax {
            smean
        } else {
            smax.max(1.0)
        };
        let step = gmres(
            |v| {
                let v = ScalarField::from_vec(grid, v.to_vec());
                Ok(bg.paneitz(&v)?.add(&sigma.mul(&v)).into_values())
            },
            |r| {
                Spectrum::forward(grid, r).apply_real(|kv| {
                    let k2 = k_squared(kv);
                    if k2 == 0.0 {
                        1.0 / zero_mode
                    } else {
                        1.0 / (k2 * k2)
                    }
                })
            },
            &big_f.scaled(-1.0).into_values(),
            None,
            opts.gmres(opts.linear_solver_tolerance),
        )?;
        report.linear_iterations += step.iterations;
        if !step.relative_residual.is_finite() || step.relative_residual > 1e-2 {
            report.message = Some(format!(
                "Newton step singular to tolerance: linear residual {:e}",
                step.relative_residual
            ));
            break;
        }
        let delta = ScalarField::from_vec(grid, step.solution);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let mut cand = phi.clone();
            cand.axpy(t, &delta);
            let fc = residual(&cand)?;
            if opts.damping == Damping::None || bg.rms(&fc) < rn {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((p, fc)) => {
                phi = p;
                big_f = fc;
            }
            None => {
                report.message = Some("line search failed to reduce the residual".into());
                break;
            }
        }
    }
    // Newton converges superlinearly at a nondegenerate root. A long, purely
    // geometric decay means the iterates slide off to φ → −∞, where both sides
    // of the equation vanish, rather than approach a solution.
    if report.converged && report.iterations >= 4 && !report.superlinear_witness() {
        report.converged = false;
        report.message = Some(format!(
            "residual decayed only geometrically over {} iterations while mean φ drifted to {:e}; no finite solution was approached",
            report.iterations,
            bg.mean(&phi)
        ));
    }
    if report.converged {
        // independent path: conformal law evaluated afresh
        let law = crate::q_operators::conformal_q_with(bg, &phi)?;
        report.verification_residual = Some(bg.rms(&law.sub(f).mul(&phi.map(|p| (4.0 * p).exp()))) / scale);
    }
    Ok((phi, report))
}

/// Result of [`newton_ift`].
#[derive(Clone, Debug)]
pub struct IftSolution {
    pub u: ScalarField,
    /// `g₀ + L*_{g₀} u`
    pub metric: MetricField,
    pub report: SolverReport,
}

/// Largest grid accepted by [`newton_ift`] per dimension.
pub fn ift_size_limit(dim: usize) -> Option<usize> {
    match dim {
        3 => Some(16),
        4 => Some(12),
        _ => None,
    }
}

/// Solves `Q(g₀ + L*_{g₀} u) = f` by Newton iteration on the scalar potential `u`.
///
/// When constants lie in `ker L*_{g₀}` the residual is projected onto
/// `dvol_{g₀}`-mean-zero functions and the constant part of `f − Q_{g₀}` must vanish.
pub fn newton_ift(g0: &MetricField, f: &ScalarField, opts: &SolverOptions) -> Result<IftSolution> {
    opts.validate()?;
    let grid = g0.grid();
    let Some(limit) = ift_size_limit(grid.dim()) else {
        return Err(QlabError::InvalidOption(format!(
            "newton_ift supports dimensions 3 and 4, got {}",
            grid.dim()
        )));
    };
    if grid.points_per_axis() > limit {
        return Err(QlabError::InvalidOption(format!(
            "newton_ift runs at desk scale: N ≤ {limit} in dimension {}, got {}",
            grid.dim(),
            grid.points_per_axis()
        )));
    }
    if f.grid() != grid {
        return Err(QlabError::GridMismatch);
    }
    if !f.is_finite() {
        return Err(QlabError::NonFinite("prescribed function"));
    }

    let lin = LinearizedQ::new(g0)?;
    let bg = lin.background();
    let q0 = bg.q().clone();
    let d = f.sub(&q0);
    let distance = bg.rms(&d) / bg.rms(&q0).max(1.0);
    if distance > opts.neighbourhood_radius {
        return Err(QlabError::OutsideNeighbourhood {
            distance,
            radius: opts.neighbourhood_radius,
        });
    }
    let fscale = bg.rms(f).max(1.0);

    let threshold = kernel_threshold(&lin)?;
    let (in_kernel, constant_ray) = constants_in_kernel(&lin, threshold)?;
    if in_kernel {
        let m = bg.mean(&d);
        if m.abs() > 1e-8 * bg.rms(&d) {
            let integral = bg.integrate(&d);
            return Ok(IftSolution {
                u: ScalarField::zeros(grid),
                metric: g0.clone(),
                report: SolverReport::obstructed(Obstruction {
                    kind: ObstructionKind::Kernel,
                    mean_incompatibility: integral,
                    detail: format!(
                        "kernel obstruction: constants span ker L* here and f − Q has mean {m:e}, which no L*u can reach"
                    ),
                }),
            });
        }
    }
    let project = |r: ScalarField| if in_kernel { bg.project_mean_zero(&r) } else { r };

    let zero_mode = if in_kernel { 0.0 } else { constant_ray * constant_ray };
    let precond = |r: &[f64]| -> Vec<f64> {
        let r = ScalarField::from_vec(grid, r.to_vec());
        let mut out = normal_symbol_inverse(&lin, &r);
        if zero_mode > 0.0 {
            let m = r.coordinate_mean() / zero_mode;
            out.values_mut().iter_mut().for_each(|v| *v += m);
        }
        out.into_values()
    };
    let q_of = |h: &SymTensor2Field| -> Result<ScalarField> {
        let g = MetricField::general(g0.components().add(h))?;
        Ok(Background::new(&g)?.q().clone())
    };

    let mut u = ScalarField::zeros(grid);
    let mut lu = SymTensor2Field::zeros(grid);
    let mut r = project(d.clone());
    let mut report = SolverReport::default();
    for k in 1..=opts.max_iterations {
        let rn = bg.rms(&r);
        report.residual_history.push(rn / fscale);
        report.iterations = k;
        if rn / fscale <= opts.residual_tolerance {
            report.converged = true;
            break;
        }
        if k == opts.max_iterations {
            report.message = Some("iteration budget exhausted".into());
            break;
        }

        let step = match opts.ift_jacobian {
            IftJacobian::Frozen => gmres(
                |v| {
                    let v = ScalarField::from_vec(grid, v.to_vec());
                    Ok(project(lin.normal_operator(&v)?).into_values())
                },
                precond,
                r.values(),
                None,
                opts.gmres(opts.linear_solver_tolerance.max(1e-13)),
            )?,
            IftJacobian::FiniteDifference => gmres(
                |v| {
                    let v = ScalarField::from_vec(grid, v.to_vec());
                    let vn = bg.rms(&v);
                    if vn == 0.0 {
                        return Ok(vec![0.0; grid.node_count()]);
                    }
                    let eps = 1e-4 / vn;
                    let lv = lin.adjoint(&v)?;
                    let mut hp = lu.clone();
                    hp.axpy(eps, &lv);
                    let mut hm = lu.clone();
                    hm.axpy(-eps, &lv);
                    let jv = q_of(&hp)?.sub(&q_of(&hm)?).scaled(0.5 / eps);
                    Ok(project(jv).into_values())
                },
                precond,
                r.values(),
                None,
                opts.gmres(1e-8),
            )?,
        };
        report.linear_iterations += step.iterations;
        let v = project(ScalarField::from_vec(grid, step.solution));
        let lv = lin.adjoint(&v)?;

        let mut t = 1.0;
        let mut accepted = None;
        let mut spd_failures = 0;
        for _ in 0..=20 {
            let mut h = lu.clone();
            h.axpy(t, &lv);
            let candidate = MetricField::general(g0.components().add(&h));
            match candidate {
                Err(QlabError::NotPositiveDefinite { .. }) if opts.spd_guard => {
                    spd_failures += 1;
                    t *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
                Ok(g) => {
                    let rc = project(f.sub(Background::new(&g)?.q()));
                    if opts.damping == Damping::None || bg.rms(&rc) < rn {
                        accepted = Some((h, rc));
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        match accepted {
            Some((h, rc)) => {
                u.axpy(t, &v);
                lu = h;
                r = rc;
            }
            None => {
                report.message = Some(if spd_failures > 0 {
                    "SPD guard exhausted step shrinkage".into()
                } else {
                    "line search failed to reduce the residual".into()
                });
                break;
            }
        }
    }

    let metric = MetricField::general(g0.components().add(&lu))?;
    // independent recomputation on the returned metric
    let q = crate::q_operators::q_curvature(&metric)?;
    let raw = q.sub(f);
    if in_kernel {
        report.kernel_component = Some(bg.mean(&raw));
    }
    report.verification_residual = Some(bg.rms(&project(raw)) / fscale);
    Ok(IftSolution { u, metric, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::q_operators::relative_l2;

    #[test]
    fn flat_paneitz_solve_recovers_sine() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let exact = ScalarField::from_fn(grid, |x| (x[0] + x[1]).sin());
        let (phi, rep) =
            solve_paneitz(&MetricField::flat(grid), &exact.scaled(4.0), &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(phi.sub(&exact).sup_norm() <= 1e-12);
    }

    #[test]
    fn zero_and_constant_right_hand_sides() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let g = MetricField::flat(grid);
        let (phi, rep) = solve_paneitz(&g, &ScalarField::zeros(grid), &SolverOptions::default()).unwrap();
        assert!(rep.converged && phi.sup_norm() == 0.0);
        let (_, rep) = solve_paneitz(&g, &ScalarField::constant(grid, 1.0), &SolverOptions::default()).unwrap();
        let o = rep.obstruction.unwrap();
        assert_eq!(o.kind, ObstructionKind::Compatibility);
        assert!((o.mean_incompatibility - grid.volume()).abs() <= 1e-9 * grid.volume());
        assert!(!rep.converged);
    }

    #[test]
    fn curved_paneitz_solve_is_mean_zero_and_accurate() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let psi = ScalarField::from_fn(grid, |x| 0.1 * x[1].cos());
        let g = MetricField::conformal(&psi);
        let bg = Background::new(&g).unwrap();
        let target = ScalarField::from_fn(grid, |x| (x[0] - x[2]).sin() + 0.3 * x[3].cos());
        let rho = bg.paneitz(&target).unwrap();
        let (phi, rep) = solve_paneitz_with(&bg, &rho, &SolverOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(bg.mean(&phi).abs() <= 1e-12);
        let expect = bg.project_mean_zero(&target);
        assert!(relative_l2(&phi, &expect) <= 1e-8);
    }

    #[test]
    fn prescribing_the_current_form_is_trivial() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.05 * x[2].sin());
        let g = MetricField::conformal(&phi);
        let omega = curvature_form(&g).unwrap();
        let out = prescribe_form(&g, &omega, &SolverOptions::default()).unwrap();
        assert!(out.phi.sup_norm() <= 1e-12);
        assert!(out.report.converged);
    }

    #[test]
    fn newton_fixed_point_takes_one_iteration() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let psi = ScalarField::from_fn(grid, |x| 0.05 * x[0].sin());
        let bg = Background::new(&MetricField::conformal(&psi)).unwrap();
        let (phi, rep) = newton_conformal_with(&bg, &bg.q().clone(), None, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(phi.sup_norm(), 0.0);
    }

    #[test]
    fn newton_rejects_positive_f_on_flat_torus() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let (_, rep) = newton_conformal(
            &MetricField::flat(grid),
            &ScalarField::constant(grid, 1.0),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.obstruction.unwrap().kind, ObstructionKind::Sign);
        assert!(!rep.converged);
    }

    #[test]
    fn newton_manufactured_solution() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let star = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let f = crate::spectral::flat_bilaplacian(&star).zip_with(&star, |v, p| v * (-4.0 * p).exp());
        let (phi, rep) = newton_conformal(&MetricField::flat(grid), &f, &SolverOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(
            relative_l2(&phi, &star) <= 1e-6,
            "{} {:?}",
            relative_l2(&phi, &star),
            rep
        );
        assert!(rep.superlinear_witness(), "{:?}", rep.residual_history);
        assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn drift_towards_minus_infinity_is_not_convergence() {
        // ∫f = 0 on a Q ≡ 0 background: ∫ f e^{4φ} > 0 near any small solution of the
        // linearized problem, so the mean of φ runs off instead of settling.
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let g = MetricField::flat(grid);
        let f = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let opts = SolverOptions {
            residual_tolerance: 1e-6,
            ..SolverOptions::default()
        };
        let (phi, rep) = newton_conformal(&g, &f, &opts).unwrap();
        assert!(!rep.converged, "{:?}", rep.residual_history);
        assert!(phi.coordinate_mean() < -1.0);
        assert!(rep.message.unwrap().contains("geometrically"));
    }

    #[test]
    fn options_are_validated() {
        let bad = SolverOptions {
            max_iterations: 0,
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            residual_tolerance: -1.0,
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ift_on_flat_three_torus() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let f = ScalarField::from_fn(grid, |x| 1e-3 * x[0].sin());
        let out = newton_ift(&MetricField::flat(grid), &f, &SolverOptions::default()).unwrap();
        assert!(out.report.converged, "{:?}", out.report);
        assert!(out.metric.min_eigenvalue() >= 0.9);
        let c = ScalarField::constant(grid, 1e-3);
        let out = newton_ift(&MetricField::flat(grid), &c, &SolverOptions::default()).unwrap();
        assert_eq!(out.report.obstruction.unwrap().kind, ObstructionKind::Kernel);
        let same = newton_ift(
            &MetricField::flat(grid),
            &ScalarField::zeros(grid),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(same.report.converged && same.u.sup_norm() == 0.0 && same.report.iterations == 1);
    }

    #[test]
    fn ift_rejects_far_targets_and_large_grids() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let f = ScalarField::from_fn(grid, |x| 0.5 * x[0].sin());
        assert!(matches!(
            newton_ift(&MetricField::flat(grid), &f, &SolverOptions::default()),
            Err(QlabError::OutsideNeighbourhood { .. })
        ));
        let big = PeriodicGrid::new(4, 16).unwrap();
        assert!(newton_ift(
            &MetricField::flat(big),
            &ScalarField::zeros(big),
            &SolverOptions::default()
        )
        .is_err());
    }
}
