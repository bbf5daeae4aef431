// The linearization `L_g` of Q and its formal adjoint `L*_g`, checked against
// finite differences, the L² pairing, the trace identity and the principal symbol.
//
// ```text
// cargo run --release --example linearization
// ```

use std::error::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qlab::checks::{
    adjointness_defect, finite_difference_study, reference_conformal_factor, reference_direction, symbol_defect,
    trace_identity_defect, FD_STEPS,
};
use qlab::linearization::LinearizedQ;
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = PeriodicGrid::new(4, 12)?;
    let lin = LinearizedQ::new(&MetricField::conformal(&reference_conformal_factor(grid)))?;

    println!(
        "adjointness defect over 3 pairs: {:.2e}",
        adjointness_defect(&lin, 3, &mut rng)?
    );

    let fs = [ScalarField::from_fn(grid, |x| x[0].cos() + 0.3 * (x[1] - x[3]).sin())];
    println!("trace identity residual: {:.2e}", trace_identity_defect(&lin, &fs)?);

    let (worst, nonzero) = symbol_defect(4, 100, &mut rng)?;
    println!("symbol trace defect {worst:.1e}, nonzero for every ξ: {nonzero}");

    // finite differences need a finer grid before the O(t²) regime shows
    let grid = PeriodicGrid::new(3, 16)?;
    let lin = LinearizedQ::new(&MetricField::conformal(&reference_conformal_factor(grid)))?;
    let study = finite_difference_study(&lin, &reference_direction(grid), &FD_STEPS)?;
    for (t, e) in study.steps.iter().zip(&study.errors) {
        println!("  t = {t:.2e}: error {e:.3e}");
    }
    println!("observed order {:.3}", study.min_order());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
