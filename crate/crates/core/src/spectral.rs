//! Fourier pseudospectral differentiation on [`PeriodicGrid`]s.
//!
//! Every derivative is a pure Fourier multiplier `i k` per axis, with the
//! Nyquist bin's wavenumber set to zero. Forward transforms are cached in a
//! [`Spectrum`] so that several derivatives of one field share a single FFT.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Result;
use crate::field::ScalarField;
use crate::grid::{PeriodicGrid, MAX_DIM};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// In-place unnormalized 1D transforms along `axis` of a row-major grid array.
fn transform_axis(grid: PeriodicGrid, data: &mut [Complex64], axis: usize, inverse: bool) {
    let n = grid.points_per_axis();
    let stride = grid.stride(axis);
    let fft = plan(n, inverse);
    if stride == 1 {
        // Contiguous lines: rustfft batches consecutive length-n transforms.
        data.par_chunks_mut(n * 64).for_each(|chunk| fft.process(chunk));
        return;
    }
    let block = n * stride;
    data.par_chunks_mut(block).for_each_init(
        || vec![Complex64::new(0.0, 0.0); block],
        |scratch, chunk| {
            for j in 0..n {
                for i in 0..stride {
                    scratch[i * n + j] = chunk[j * stride + i];
                }
            }
            fft.process(scratch);
            for j in 0..n {
                for i in 0..stride {
                    chunk[j * stride + i] = scratch[i * n + j];
                }
            }
        },
    );
}

/// Per-axis derivative wavenumbers of each node's mode index.
fn mode_wavenumbers(grid: PeriodicGrid, mode: usize) -> [f64; MAX_DIM] {
    let mut k = [0.0; MAX_DIM];
    let n = grid.points_per_axis();
    let mut rest = mode;
    for axis in (0..grid.dim()).rev() {
        k[axis] = grid.derivative_wavenumber(rest % n);
        rest /= n;
    }
    k
}

/// Discrete Fourier coefficients of a real grid field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: PeriodicGrid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(grid: PeriodicGrid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.node_count(), "field size mismatch");
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for axis in 0..grid.dim() {
            transform_axis(grid, &mut data, axis, false);
        }
        Self { grid, data }
    }

    pub fn of(u: &ScalarField) -> Self {
        Self::forward(u.grid(), u.values())
    }

    fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.node_count()],
        }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// Inverse transform, keeping the real part.
    pub fn into_real(mut self) -> Vec<f64> {
        for axis in 0..self.grid.dim() {
            transform_axis(self.grid, &mut self.data, axis, true);
        }
        let scale = 1.0 / self.grid.node_count() as f64;
        self.data.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a complex multiplier `m(k)` and transforms back.
    pub fn apply(&self, m: impl Fn(&[f64; MAX_DIM]) -> Complex64 + Sync) -> Vec<f64> {
        let grid = self.grid;
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(mode, c)| c * m(&mode_wavenumbers(grid, mode)))
            .collect();
        Spectrum { grid, data }.into_real()
    }

    /// Applies a real multiplier `m(k)` and transforms back.
    pub fn apply_real(&self, m: impl Fn(&[f64; MAX_DIM]) -> f64 + Sync) -> Vec<f64> {
        self.apply(|k| Complex64::new(m(k), 0.0))
    }

    /// Applies a real multiplier indexed by the signed integer wavenumbers of each bin
    /// (the Nyquist bin reports `N/2`) and transforms back.
    pub fn apply_integer(&self, m: impl Fn(&[i64; MAX_DIM]) -> f64 + Sync) -> Vec<f64> {
        let grid = self.grid;
        let n = grid.points_per_axis();
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(mode, c)| {
                let mut k = [0i64; MAX_DIM];
                let mut rest = mode;
                for axis in (0..grid.dim()).rev() {
                    k[axis] = grid.wavenumber(rest % n);
                    rest /= n;
                }
                c * m(&k)
            })
            .collect();
        Spectrum { grid, data }.into_real()
    }

    /// `∂_axis`
    pub fn derivative(&self, axis: usize) -> Vec<f64> {
        self.apply(|k| Complex64::new(0.0, k[axis]))
    }

    /// `∂_a ∂_b`
    pub fn second_derivative(&self, a: usize, b: usize) -> Vec<f64> {
        self.apply_real(|k| -k[a] * k[b])
    }

    /// All first partials.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        (0..self.grid.dim()).map(|a| self.derivative(a)).collect()
    }

    /// Coefficient of the zero mode divided by the node count (the coordinate mean).
    pub fn mean(&self) -> f64 {
        self.data[0].re / self.grid.node_count() as f64
    }
}

/// `Σ_a ∂_a V^a` for a list of `dim` component arrays, using one inverse transform.
pub fn coordinate_divergence(grid: PeriodicGrid, comps: &[Vec<f64>]) -> Vec<f64> {
    debug_assert_eq!(comps.len(), grid.dim());
    let mut acc = Spectrum::zeros(grid);
    for (axis, comp) in comps.iter().enumerate() {
        let s = Spectrum::forward(grid, comp);
        acc.data
            .par_iter_mut()
            .zip(s.data.par_iter())
            .enumerate()
            .for_each(|(mode, (a, c))| {
                let k = mode_wavenumbers(grid, mode)[axis];
                *a += c * Complex64::new(0.0, k);
            });
    }
    acc.into_real()
}

/// `Σ_t c_t ∂_{a_t} ∂_{b_t} u_t` for terms `(c, spectrum of u, a, b)`, using one inverse transform.
pub fn second_derivative_sum(grid: PeriodicGrid, terms: &[(f64, &Spectrum, usize, usize)]) -> Vec<f64> {
    let mut acc = Spectrum::zeros(grid);
    acc.data.par_iter_mut().enumerate().for_each(|(mode, out)| {
        let k = mode_wavenumbers(grid, mode);
        for &(c, s, a, b) in terms {
            *out -= s.data[mode] * (c * k[a] * k[b]);
        }
    });
    acc.into_real()
}

/// Squared derivative wavenumber `|k|²` of each mode.
#[inline]
pub fn k_squared(k: &[f64; MAX_DIM]) -> f64 {
    k.iter().map(|v| v * v).sum()
}

/// Spectral derivative of `u` along `axis`.
pub fn spectral_derivative(u: &ScalarField, axis: usize) -> Result<ScalarField> {
    u.grid().check_axis(axis)?;
    if !u.is_finite() {
        return Err(crate::error::QlabError::NonFinite("spectral_derivative input"));
    }
    Ok(ScalarField::from_vec(u.grid(), Spectrum::of(u).derivative(axis)))
}

/// Flat Laplacian: multiplier `-|k|²`.
pub fn flat_laplacian(u: &ScalarField) -> Result<ScalarField> {
    if !u.is_finite() {
        return Err(crate::error::QlabError::NonFinite("flat_laplacian input"));
    }
    Ok(ScalarField::from_vec(
        u.grid(),
        Spectrum::of(u).apply_real(|k| -k_squared(k)),
    ))
}

/// Flat bi-Laplacian: multiplier `|k|⁴`.
pub fn flat_bilaplacian(u: &ScalarField) -> ScalarField {
    ScalarField::from_vec(u.grid(), Spectrum::of(u).apply_real(|k| k_squared(k).powi(2)))
}

/// Solves `Δ^power v = u` on the mean-zero subspace; zero-wavenumber modes map to zero.
pub fn flat_inverse_laplacian_power(u: &ScalarField, power: i32, sign: f64) -> ScalarField {
    ScalarField::from_vec(
        u.grid(),
        Spectrum::of(u).apply_real(|k| {
            let k2 = k_squared(k);
            if k2 == 0.0 {
                0.0
            } else {
                1.0 / (sign * k2.powi(power))
            }
        }),
    )
}

/// Removes every Fourier bin that touches the Nyquist frequency on some axis.
pub fn nyquist_free(u: &ScalarField) -> ScalarField {
    let half = (u.grid().points_per_axis() / 2) as i64;
    ScalarField::from_vec(
        u.grid(),
        Spectrum::of(u).apply_integer(|k| if k.contains(&half) { 0.0 } else { 1.0 }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dim: usize, n: usize) -> PeriodicGrid {
        PeriodicGrid::new(dim, n).unwrap()
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid(2, 16);
        let u = ScalarField::from_fn(g, |x| x[0].sin());
        let du = spectral_derivative(&u, 0).unwrap();
        let exact = ScalarField::from_fn(g, |x| x[0].cos());
        assert!(du.sub(&exact).sup_norm() <= 1e-12);
    }

    #[test]
    fn derivative_matches_fourier_multiplier_on_third_mode() {
        let g = grid(3, 16);
        let u = ScalarField::from_fn(g, |x| (3.0 * x[1]).sin());
        let du = spectral_derivative(&u, 1).unwrap();
        let exact = ScalarField::from_fn(g, |x| 3.0 * (3.0 * x[1]).cos());
        assert!(du.sub(&exact).sup_norm() <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(4, 8);
        let u = ScalarField::constant(g, 2.75);
        for axis in 0..4 {
            assert!(spectral_derivative(&u, axis).unwrap().sup_norm() <= 1e-13);
        }
    }

    #[test]
    fn axis_out_of_range_is_rejected() {
        let g = grid(2, 8);
        let u = ScalarField::zeros(g);
        assert!(spectral_derivative(&u, 2).is_err());
    }

    #[test]
    fn flat_laplacian_examples() {
        let g = grid(4, 8);
        let u = ScalarField::from_fn(g, |x| (x[0] + x[1]).sin());
        let lap = flat_laplacian(&u).unwrap();
        assert!(lap.add(&u.scaled(2.0)).sup_norm() <= 1e-12);

        let v = ScalarField::from_fn(g, |x| (2.0 * x[0]).cos());
        let lap = flat_laplacian(&v).unwrap();
        assert!(lap.add(&v.scaled(4.0)).sup_norm() <= 1e-12);

        let c = ScalarField::constant(g, -1.0);
        assert!(flat_laplacian(&c).unwrap().sup_norm() <= 1e-13);
    }

    #[test]
    fn nyquist_free_removes_only_nyquist_bins() {
        let g = grid(2, 8);
        let keep = ScalarField::from_fn(g, |x| (3.0 * x[0] - x[1]).cos());
        let nyq = ScalarField::from_fn(g, |x| (4.0 * x[1]).cos() * x[0].sin());
        let out = nyquist_free(&keep.add(&nyq));
        assert!(out.sub(&keep).sup_norm() <= 1e-13);
    }

    #[test]
    fn nyquist_mode_has_zero_derivative() {
        let g = grid(2, 8);
        let u = ScalarField::from_fn(g, |x| (4.0 * x[0]).cos());
        assert!(spectral_derivative(&u, 0).unwrap().sup_norm() <= 1e-13);
    }

    #[test]
    fn divergence_matches_sum_of_derivatives() {
        let g = grid(3, 8);
        let a = ScalarField::from_fn(g, |x| (x[0] + 2.0 * x[2]).sin());
        let b = ScalarField::from_fn(g, |x| (x[1]).cos() * x[0].sin());
        let c = ScalarField::from_fn(g, |x| (x[2] - x[1]).cos());
        let div = coordinate_divergence(g, &[a.values().to_vec(), b.values().to_vec(), c.values().to_vec()]);
        let sum = spectral_derivative(&a, 0)
            .unwrap()
            .add(&spectral_derivative(&b, 1).unwrap())
            .add(&spectral_derivative(&c, 2).unwrap());
        let div = ScalarField::new(g, div).unwrap();
        assert!(div.sub(&sum).sup_norm() <= 1e-12);
    }
}
