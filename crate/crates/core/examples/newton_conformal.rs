// Newton iteration for `P φ + Q = f e^{4φ}`: a manufactured solution, the sign
// obstruction, and a target for which the iterates drift off to `φ → −∞`.
//
// ```text
// cargo run --release --example newton_conformal
// ```

use std::error::Error;

use qlab::q_operators::relative_l2;
use qlab::solvers::{newton_conformal, SolverOptions};
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(4, 8)?;
    let g = MetricField::flat(grid);
    let opts = SolverOptions::default();

    // φ* = 0.1 sin x₁ on flat T⁴: Δ²φ* = φ*, hence f = e^{−4φ*} φ*
    let exact = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
    let f = exact.map(|p| (-4.0 * p).exp() * p);
    let (phi, report) = newton_conformal(&g, &f, &opts)?;
    println!(
        "manufactured: converged = {}, error = {:.2e}",
        report.converged,
        relative_l2(&phi, &exact)
    );
    for (k, r) in report.residual_history.iter().enumerate() {
        println!("  iteration {}: residual {r:.3e}", k + 1);
    }

    let (_, blocked) = newton_conformal(&g, &ScalarField::constant(grid, 1.0), &opts)?;
    if let Some(o) = blocked.obstruction {
        println!("f = 1: {}", o.detail);
    }

    let (_, drift) = newton_conformal(&g, &ScalarField::from_fn(grid, |x| 0.1 * x[0].sin()), &opts)?;
    println!(
        "f = 0.1 sin x₁: converged = {}, {}",
        drift.converged,
        drift.message.unwrap_or_default()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
