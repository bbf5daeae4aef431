//! Trigonometric polynomials with integer modes, sampled exactly on the grid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::grid::PeriodicGrid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    #[default]
    Cos,
    Sin,
}

/// `coefficient · cos(m·x)` or `coefficient · sin(m·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub coefficient: f64,
    pub mode: Vec<i64>,
    #[serde(default)]
    pub kind: TrigKind,
}

impl TrigTerm {
    pub fn new(coefficient: f64, mode: &[i64], kind: TrigKind) -> Self {
        Self {
            coefficient,
            mode: mode.to_vec(),
            kind,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let arg: f64 = self.mode.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum();
        self.coefficient
            * match self.kind {
                TrigKind::Cos => arg.cos(),
                TrigKind::Sin => arg.sin(),
            }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPolynomial {
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    /// Modes must have one entry per axis and lie strictly below the Nyquist index.
    pub fn validate(&self, grid: PeriodicGrid) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            if t.mode.len() != grid.dim() {
                return Err(QlabError::InvalidOption(format!(
                    "term {i}: mode {:?} has {} entries, grid dimension is {}",
                    t.mode,
                    t.mode.len(),
                    grid.dim()
                )));
            }
            if !grid.resolves_mode(&t.mode) {
                return Err(QlabError::InvalidOption(format!(
                    "term {i}: mode {:?} is not below the Nyquist index {} of the grid",
                    t.mode,
                    grid.points_per_axis() / 2
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(QlabError::InvalidOption(format!("term {i}: coefficient is not finite")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: PeriodicGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.terms.iter().map(|t| t.eval(&x[..grid.dim()])).sum())
    }

    /// `Σ |coefficient|`, an upper bound for the sup norm.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Random terms with modes in `[-max_mode, max_mode]^dim`; the draw does not depend on the grid size.
    pub fn random(dim: usize, terms: usize, max_mode: i64, rng: &mut impl Rng) -> Self {
        let terms = (0..terms)
            .map(|_| TrigTerm {
                coefficient: rng.gen_range(-1.0..1.0),
                mode: (0..dim).map(|_| rng.gen_range(-max_mode..=max_mode)).collect(),
                kind: if rng.gen_bool(0.5) {
                    TrigKind::Cos
                } else {
                    TrigKind::Sin
                },
            })
            .collect();
        Self { terms }
    }
}

/// Random symmetric 2-tensor with one [`TrigPolynomial::random`] per component.
pub fn random_sym_tensor(grid: PeriodicGrid, max_mode: i64, rng: &mut impl Rng) -> SymTensor2Field {
    let n = grid.dim();
    let comps = (0..n * (n + 1) / 2)
        .map(|_| TrigPolynomial::random(n, 4, max_mode, rng).sample(grid).into_values())
        .collect();
    SymTensor2Field::from_components(grid, comps).expect("component count matches dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampling_and_validation() {
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let p = TrigPolynomial::new(vec![
            TrigTerm::new(2.0, &[1, 0], TrigKind::Sin),
            TrigTerm::new(0.5, &[0, 3], TrigKind::Cos),
        ]);
        p.validate(grid).unwrap();
        let u = p.sample(grid);
        let x = grid.coordinates(9);
        assert!((u.values()[9] - (2.0 * x[0].sin() + 0.5 * (3.0 * x[1]).cos())).abs() < 1e-15);
        assert_eq!(p.amplitude_bound(), 2.5);

        let nyq = TrigPolynomial::new(vec![TrigTerm::new(1.0, &[4, 0], TrigKind::Cos)]);
        assert!(nyq.validate(grid).is_err());
        let short = TrigPolynomial::new(vec![TrigTerm::new(1.0, &[1], TrigKind::Cos)]);
        assert!(short.validate(grid).is_err());
    }

    #[test]
    fn random_draw_is_grid_independent() {
        let a = TrigPolynomial::random(4, 5, 2, &mut ChaCha8Rng::seed_from_u64(3));
        let b = TrigPolynomial::random(4, 5, 2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.terms.iter().all(|t| t.mode.iter().all(|m| m.abs() <= 2)));
    }
}
