//! Per-node dense algebra on the leading `n x n` block of a [`Mat`].

use crate::field::{Mat, ZERO_MAT};

/// Cholesky factor `L` with `A = L Lᵀ`, or `None` if `A` is not positive definite.
pub fn cholesky(n: usize, a: &Mat) -> Option<Mat> {
    let mut l = ZERO_MAT;
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Some(l)
}

/// Inverse and determinant of an SPD matrix via Cholesky.
pub fn spd_inverse(n: usize, a: &Mat) -> Option<(Mat, f64)> {
    let l = cholesky(n, a)?;
    let mut det = 1.0;
    for i in 0..n {
        det *= l[i][i];
    }
    det *= det;
    // Invert L by forward substitution, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = ZERO_MAT;
    for i in 0..n {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i][k] * linv[k][j];
            }
            linv[i][j] = s / l[i][i];
        }
    }
    let mut inv = ZERO_MAT;
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += linv[k][i] * linv[k][j];
            }
            inv[i][j] = s;
            inv[j][i] = s;
        }
    }
    Some((inv, det))
}

/// Whether every eigenvalue of the symmetric matrix exceeds `floor`.
pub fn eigenvalues_above(n: usize, a: &Mat, floor: f64) -> bool {
    let mut shifted = *a;
    for (i, row) in shifted.iter_mut().enumerate().take(n) {
        row[i] -= floor;
    }
    cholesky(n, &shifted).is_some()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(n: usize, a: &Mat) -> f64 {
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.symmetric_eigenvalues().min()
}

pub fn mat_mul(n: usize, a: &Mat, b: &Mat) -> Mat {
    let mut c = ZERO_MAT;
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `G A G` with `G` symmetric: raises both indices of `A` when `G` is the inverse metric.
pub fn congruence(n: usize, g: &Mat, a: &Mat) -> Mat {
    mat_mul(n, &mat_mul(n, g, a), g)
}

/// Frobenius pairing `Σ_ij A_ij B_ij`.
pub fn frobenius(n: usize, a: &Mat, b: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat {
        let mut a = ZERO_MAT;
        let rows = [
            [4.0, 1.0, 0.5, 0.2],
            [1.0, 3.0, 0.3, 0.1],
            [0.5, 0.3, 2.0, 0.4],
            [0.2, 0.1, 0.4, 1.5],
        ];
        for i in 0..4 {
            a[i][..4].copy_from_slice(&rows[i]);
        }
        a
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = sample();
        let (inv, det) = spd_inverse(4, &a).unwrap();
        let p = mat_mul(4, &a, &inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-13);
            }
        }
        let nd = nalgebra::DMatrix::from_fn(4, 4, |i, j| a[i][j]).determinant();
        assert!((det - nd).abs() < 1e-12 * nd.abs());
    }

    #[test]
    fn indefinite_matrix_has_no_cholesky() {
        let mut a = ZERO_MAT;
        a[0][0] = 1.0;
        a[1][1] = -1.0;
        assert!(cholesky(2, &a).is_none());
        assert!(!eigenvalues_above(2, &a, 1e-10));
    }

    #[test]
    fn eigen_floor_check_agrees_with_min_eigenvalue() {
        let a = sample();
        let lam = min_eigenvalue(4, &a);
        assert!(eigenvalues_above(4, &a, lam - 1e-9));
        assert!(!eigenvalues_above(4, &a, lam + 1e-9));
    }
}
