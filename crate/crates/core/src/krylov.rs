//! Restarted right-preconditioned GMRES for matrix-free operators on grid vectors.

use crate::error::Result;
use crate::reduce::dot;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    /// Stop when `‖b − A x‖ ≤ tolerance · ‖b‖`.
    pub tolerance: f64,
    pub restart: usize,
    /// Total Arnoldi steps across restarts.
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            restart: 40,
            max_iterations: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// True residual `‖b − A x‖ / ‖b‖` recomputed at the end.
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves `A x = b` with right preconditioner `M⁻¹`: GMRES on `A M⁻¹ y = b − A x₀`, `x = x₀ + M⁻¹ y`.
pub fn gmres<A, M>(
    mut apply: A,
    mut precond: M,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: GmresOptions,
) -> Result<GmresOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    M: FnMut(&[f64]) -> Vec<f64>,
{
    let len = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            solution: vec![0.0; len],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; len]);
    let m = opts.restart.max(1);
    let mut total = 0usize;
    let mut rel;
    loop {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= opts.tolerance || total >= opts.max_iterations {
            break;
        }

        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut gvec = vec![0.0; m + 1];
        gvec[0] = beta;
        let mut k_used = 0;

        for j in 0..m {
            if total >= opts.max_iterations {
                break;
            }
            total += 1;
            let zj = precond(&v[j]);
            let mut w = apply(&zj)?;
            z.push(zj);
            // modified Gram–Schmidt
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            gvec[j + 1] = -sn[j] * gvec[j];
            gvec[j] *= cs[j];
            k_used = j + 1;
            if gvec[j + 1].abs() / bnorm <= opts.tolerance || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wk| wk / hn).collect());
        }

        // back substitution for y, then x += Z y
        let k = k_used;
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = gvec[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                s -= h[i][l] * yl;
            }
            y[i] = s / h[i][i];
        }
        for (zi, yi) in z.iter().zip(&y) {
            x.iter_mut().zip(zi).for_each(|(xk, zk)| *xk += yi * zk);
        }
        if k == 0 {
            let ax = apply(&x)?;
            rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
            break;
        }
    }

    Ok(GmresOutcome {
        solution: x,
        iterations: total,
        relative_residual: rel,
        converged: rel <= opts.tolerance,
    })
}
