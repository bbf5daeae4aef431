// The Paneitz operator: conformal covariance and the linear solve `P φ = ρ`.
//
// ```text
// cargo run --release --example paneitz
// ```

use std::error::Error;

use qlab::checks::{covariance_factor, paneitz_covariance_defect};
use qlab::q_operators::{relative_l2, Background};
use qlab::solvers::{solve_paneitz, SolverOptions};
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(4, 12)?;
    let phi = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
    let g = MetricField::conformal(&phi);
    let bg = Background::new(&g)?;

    let us: Vec<ScalarField> = (1..=3)
        .map(|k| ScalarField::from_fn(grid, move |x| (k as f64 * x[1] + x[3]).cos() + 0.5 * x[2].sin()))
        .collect();
    let defect = paneitz_covariance_defect(&bg, &covariance_factor(grid), &us)?;
    println!("P(e^(2ψ)g) u vs e^(-4ψ) P(g) u: {defect:.2e}");

    // manufacture a right-hand side from a known mean-zero solution
    let exact = bg.project_mean_zero(&ScalarField::from_fn(grid, |x| (x[0] - x[2]).sin() + 0.2 * x[3].cos()));
    let rho = bg.paneitz(&exact)?;
    let (sol, report) = solve_paneitz(&g, &rho, &SolverOptions::default())?;
    println!(
        "solve: converged = {}, GMRES iterations = {}, error = {:.2e}",
        report.converged,
        report.linear_iterations,
        relative_l2(&sol, &exact)
    );

    let (_, rejected) = solve_paneitz(&g, &ScalarField::constant(grid, 1.0), &SolverOptions::default())?;
    if let Some(o) = rejected.obstruction {
        println!("ρ = 1: {}", o.detail);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
