// Implicit-function Newton scheme: find `u` with `Q(g₀ + L*u) = f` near `Q(g₀)`.
//
// ```text
// cargo run --release --example newton_ift
// ```

use std::error::Error;

use qlab::solvers::{newton_ift, SolverOptions};
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(3, 12)?;
    let g0 = MetricField::flat(grid);
    let opts = SolverOptions {
        residual_tolerance: 1e-8,
        ..SolverOptions::default()
    };

    let f = ScalarField::from_fn(grid, |x| 1e-3 * x[0].sin());
    let sol = newton_ift(&g0, &f, &opts)?;
    println!(
        "converged = {} after {} iterations, residuals {:?}",
        sol.report.converged, sol.report.iterations, sol.report.residual_history
    );
    println!(
        "verification residual {:.2e}, min eigenvalue of g {:.6}, unreachable mean {:.2e}",
        sol.report.verification_residual.unwrap_or(f64::NAN),
        sol.metric.min_eigenvalue(),
        sol.report.kernel_component.unwrap_or(0.0)
    );

    let sol = newton_ift(&g0, &ScalarField::constant(grid, 1e-3), &opts)?;
    if let Some(o) = sol.report.obstruction {
        println!("constant f: {}", o.detail);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
