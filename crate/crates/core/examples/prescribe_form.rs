// Prescribing the curvature 4-form inside a conformal class, verified by
// recomputing `Ω` of the returned metric from scratch.
//
// ```text
// cargo run --release --example prescribe_form
// ```

use std::error::Error;

use qlab::q_operators::{relative_l2, Form4Density};
use qlab::solvers::{prescribe_form, SolverOptions};
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(4, 16)?;
    let g = MetricField::flat(grid);
    let opts = SolverOptions::default();

    // Δ² sin(x₁ + x₂) = 4 sin(x₁ + x₂), so φ = 0.1 sin(x₁ + x₂)
    let omega = Form4Density::new(ScalarField::from_fn(grid, |x| 0.4 * (x[0] + x[1]).sin()), g.clone())?;
    let out = prescribe_form(&g, &omega, &opts)?;
    let exact = ScalarField::from_fn(grid, |x| 0.1 * (x[0] + x[1]).sin());
    println!(
        "converged = {}, |φ − φ*| = {:.2e}, verification residual = {:.2e}",
        out.report.converged,
        relative_l2(&out.phi, &exact),
        out.report.verification_residual.unwrap_or(f64::NAN)
    );

    let constant = Form4Density::new(ScalarField::constant(grid, 1.0), g.clone())?;
    let rejected = prescribe_form(&g, &constant, &opts)?;
    if let Some(o) = rejected.report.obstruction {
        println!("constant ω: {:?}, ∫ mismatch {:.4e}", o.kind, o.mean_incompatibility);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
