//! Q-singularity probes: how close `L_g*` comes to having a kernel.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::grid::PeriodicGrid;
use crate::linearization::LinearizedQ;
use crate::metric::MetricField;
use crate::spectral::{k_squared, Spectrum};

/// Seed of the random probes, fixed so that verdicts are reproducible.
pub const PROBE_SEED: u64 = 0x51_4c_41_42;

/// Number of random probes behind the characteristic operator scale.
pub const SCALE_PROBES: usize = 5;

/// LOBPCG stops when `‖L L* x − λx‖ ≤ tol · λ`; the Rayleigh quotient error is then `O(tol²)`.
const RESIDUAL_TOLERANCE: f64 = 1e-3;

/// Relative change of the Rayleigh quotient per step below which the estimate counts as settled.
/// Clustered eigenvalues and the quadrature-level non-adjointness of discrete `L` and `L*`
/// keep the residual from falling much below `10⁻²λ`, while `λ` itself settles quickly.
const RAYLEIGH_STAGNATION: f64 = 1e-7;

/// Relative factor between the characteristic scale and the kernel threshold.
pub const KERNEL_RELATIVE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVerdict {
    QSingularSuspected,
    NonSingular,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProbeReport {
    /// Estimated `min ‖L*f‖/‖f‖` over constants and the probed mean-zero subspace.
    pub smallest_ray: f64,
    /// `‖L*1‖`
    pub constant_residual: f64,
    /// Minimum Rayleigh ray found on mean-zero functions.
    pub mean_zero_ray: f64,
    pub kernel_threshold: f64,
    pub iterations: usize,
    pub converged: bool,
    pub verdict: KernelVerdict,
}

/// A smooth random field: Gaussian-filtered white noise without Nyquist content.
pub fn random_smooth_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> ScalarField {
    let noise: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let half = (grid.points_per_axis() / 2) as i64;
    let spec = Spectrum::forward(grid, &noise);
    let v = spec.apply_integer(|k| {
        if k.contains(&half) {
            0.0
        } else {
            let k2: i64 = k.iter().map(|v| v * v).sum();
            (-(k2 as f64) / 2.0).exp()
        }
    });
    let u = ScalarField::from_vec(grid, v);
    let s = u.sup_norm();
    if s > 0.0 {
        u.scaled(1.0 / s)
    } else {
        u
    }
}

/// Resolved mean-zero part: Nyquist bins dropped, then the `dvol`-mean removed.
fn project(lin: &LinearizedQ, u: &ScalarField) -> ScalarField {
    lin.background().project_mean_zero(&crate::spectral::nyquist_free(u))
}

fn norm(lin: &LinearizedQ, u: &ScalarField) -> f64 {
    lin.background().rms(u)
}

fn ray(lin: &LinearizedQ, f: &ScalarField, lf: &SymTensor2Field) -> f64 {
    let d = norm(lin, f);
    if d == 0.0 {
        0.0
    } else {
        lin.tensor_rms(lf) / d
    }
}

/// `10⁻⁶ ×` the mean ray `‖L*f‖/‖f‖` over [`SCALE_PROBES`] random mean-zero probes.
pub fn kernel_threshold(lin: &LinearizedQ) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED ^ 0xA5A5);
    let grid = lin.background().geometry().grid();
    let mut total = 0.0;
    for _ in 0..SCALE_PROBES {
        let f = project(lin, &random_smooth_field(grid, &mut rng));
        total += ray(lin, &f, &lin.adjoint(&f)?);
    }
    Ok(KERNEL_RELATIVE_THRESHOLD * total / SCALE_PROBES as f64)
}

/// Whether constants lie in `ker L*` to within the kernel threshold.
pub fn constants_in_kernel(lin: &LinearizedQ, threshold: f64) -> Result<(bool, f64)> {
    let grid = lin.background().geometry().grid();
    let one = ScalarField::constant(grid, 1.0);
    let c = lin.tensor_rms(&lin.adjoint(&one)?);
    Ok((c < threshold, c))
}

/// Inverse of the flat symbol of `L L*`, `a²(n−1)|k|⁸`, zero on the zero mode.
pub fn normal_symbol_inverse(lin: &LinearizedQ, u: &ScalarField) -> ScalarField {
    let k = lin.background().constants();
    let scale = k.a * k.a * (k.n as f64 - 1.0);
    ScalarField::from_vec(
        u.grid(),
        Spectrum::of(u).apply_real(|w| {
            let k2 = k_squared(w);
            if k2 == 0.0 {
                0.0
            } else {
                1.0 / (scale * k2.powi(4))
            }
        }),
    )
}

struct Lobpcg {
    ray: f64,
    iterations: usize,
    converged: bool,
}

/// Preconditioned single-vector LOBPCG for the smallest eigenvalue of `L L*` on the
/// resolved mean-zero subspace, Rayleigh–Ritz done on `‖L* ·‖²` directly.
fn lobpcg(lin: &LinearizedQ, start: ScalarField, iterations: usize, tol: f64) -> Result<Lobpcg> {
    let bg = lin.background();
    let mut x = project(lin, &start);
    let nx = norm(lin, &x);
    if nx == 0.0 {
        return Err(QlabError::InvalidOption("degenerate kernel probe start".into()));
    }
    x = x.scaled(1.0 / nx);
    let mut lx = lin.adjoint(&x)?;
    let mut lambda = lin.pair_tensors(&lx, &lx) / bg.volume();
    let mut p: Option<(ScalarField, SymTensor2Field)> = None;

    for it in 0..iterations {
        let llx = lin.apply(&lx)?;
        let mut r = llx.clone();
        r.axpy(-lambda, &x);
        let r = project(lin, &r);
        let rn = norm(lin, &r);
        if rn <= tol * lambda.max(f64::MIN_POSITIVE) || lambda == 0.0 {
            return Ok(Lobpcg {
                ray: lambda.max(0.0).sqrt(),
                iterations: it,
                converged: true,
            });
        }

        // orthonormal basis [x, w, p] in the dvol inner product
        let mut basis: Vec<(ScalarField, SymTensor2Field)> = vec![(x.clone(), lx.clone())];
        let push = |v: ScalarField,
                    lv: Option<SymTensor2Field>,
                    basis: &mut Vec<(ScalarField, SymTensor2Field)>|
         -> Result<()> {
            let mut v = v;
            let mut lv = lv;
            for (b, lb) in basis.iter() {
                let c = bg.integrate(&v.mul(b)) / bg.volume();
                v.axpy(-c, b);
                if let Some(l) = lv.as_mut() {
                    l.axpy(-c, lb);
                }
            }
            let n = norm(lin, &v);
            if n <= 1e-10 {
                return Ok(());
            }
            let v = v.scaled(1.0 / n);
            let lv = match lv {
                Some(l) => l.scaled(1.0 / n),
                None => lin.adjoint(&v)?,
            };
            basis.push((v, lv));
            Ok(())
        };
        let w = project(lin, &normal_symbol_inverse(lin, &r));
        push(w, None, &mut basis)?;
        if let Some((pv, lp)) = p.take() {
            push(pv, Some(lp), &mut basis)?;
        }

        let m = basis.len();
        let vol = bg.volume();
        let a = DMatrix::from_fn(m, m, |i, j| lin.pair_tensors(&basis[i].1, &basis[j].1) / vol);
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty basis");
        let c = eig.eigenvectors.column(imin);

        let grid = x.grid();
        let mut nx = ScalarField::zeros(grid);
        let mut nlx = SymTensor2Field::zeros(grid);
        let mut np = ScalarField::zeros(grid);
        let mut nlp = SymTensor2Field::zeros(grid);
        for (i, (b, lb)) in basis.iter().enumerate() {
            nx.axpy(c[i], b);
            nlx.axpy(c[i], lb);
            if i > 0 {
                np.axpy(c[i], b);
                nlp.axpy(c[i], lb);
            }
        }
        let s = norm(lin, &nx);
        x = nx.scaled(1.0 / s);
        lx = nlx.scaled(1.0 / s);
        let previous = lambda;
        lambda = lmin.max(0.0) / (s * s);
        if (previous - lambda).abs() <= RAYLEIGH_STAGNATION * previous {
            return Ok(Lobpcg {
                ray: lambda.sqrt(),
                iterations: it + 1,
                converged: true,
            });
        }
        if m > 1 {
            p = Some((np, nlp));
        }
    }
    Ok(Lobpcg {
        ray: lambda.max(0.0).sqrt(),
        iterations,
        converged: false,
    })
}

/// Probes `ker L_g*` with `probes` random LOBPCG starts of at most `iterations` steps each.
pub fn kernel_probe(g: &MetricField, probes: usize, iterations: usize) -> Result<KernelProbeReport> {
    kernel_probe_with(&LinearizedQ::new(g)?, probes, iterations)
}

pub fn kernel_probe_with(lin: &LinearizedQ, probes: usize, iterations: usize) -> Result<KernelProbeReport> {
    if probes == 0 {
        return Err(QlabError::InvalidOption("kernel_probe needs at least one probe".into()));
    }
    let threshold = kernel_threshold(lin)?;
    let (_, constant_residual) = constants_in_kernel(lin, threshold)?;
    let grid = lin.background().geometry().grid();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut best = f64::INFINITY;
    let mut converged = true;
    let mut total_iterations = 0;
    for _ in 0..probes {
        let start = random_smooth_field(grid, &mut rng);
        let out = lobpcg(lin, start, iterations, RESIDUAL_TOLERANCE)?;
        best = best.min(out.ray);
        converged &= out.converged;
        total_iterations += out.iterations;
    }
    let smallest_ray = constant_residual.min(best);
    let verdict = if smallest_ray < threshold {
        KernelVerdict::QSingularSuspected
    } else if converged {
        KernelVerdict::NonSingular
    } else {
        KernelVerdict::Inconclusive
    };
    Ok(KernelProbeReport {
        smallest_ray,
        constant_residual,
        mean_zero_ray: best,
        kernel_threshold: threshold,
        iterations: total_iterations,
        converged,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_torus_is_q_singular_with_constant_kernel() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let rep = kernel_probe(&MetricField::flat(grid), 1, 30).unwrap();
        assert!(rep.constant_residual <= 1e-10);
        assert_eq!(rep.verdict, KernelVerdict::QSingularSuspected);
        // smallest mean-zero ray is |a₄|√3 at |k| = 1
        assert!(
            (rep.mean_zero_ray - 3f64.sqrt() / 6.0).abs() <= 1e-6,
            "{}",
            rep.mean_zero_ray
        );
    }

    #[test]
    fn cosine_is_not_in_the_flat_kernel() {
        let grid = PeriodicGrid::new(4, 8).unwrap();
        let lin = LinearizedQ::new(&MetricField::flat(grid)).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[0].cos());
        assert!(lin.tensor_rms(&lin.adjoint(&f).unwrap()) > 0.1);
    }

    #[test]
    fn non_constant_q_background_is_non_singular() {
        let grid = PeriodicGrid::new(4, 12).unwrap();
        let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let rep = kernel_probe(&MetricField::conformal(&phi), 1, 40).unwrap();
        assert_eq!(rep.verdict, KernelVerdict::NonSingular, "{rep:?}");
        assert!(rep.constant_residual > rep.kernel_threshold);
    }

    #[test]
    fn random_fields_are_reproducible_and_smooth() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let a = random_smooth_field(grid, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_smooth_field(grid, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.sup_norm(), 1.0);
    }
}
