// Q-singularity probe: is `ker L*_g` nontrivial? On flat tori the constants
// lie in it; a generic conformal metric has trivial kernel.
//
// ```text
// cargo run --release --example kernel_probe
// ```

use std::error::Error;

use qlab::checks::reference_conformal_factor;
use qlab::kernel::kernel_probe;
use qlab::{MetricField, PeriodicGrid};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(3, 8)?;
    let candidates = [
        ("flat T³", MetricField::flat(grid)),
        (
            "conformal T³",
            MetricField::conformal(&reference_conformal_factor(grid)),
        ),
    ];
    for (name, g) in &candidates {
        let r = kernel_probe(g, 1, 100)?;
        println!(
            "{name:>12}: ‖L*1‖ = {:.2e}, min ray on mean-zero = {:.3e}, threshold {:.1e} → {:?}",
            r.constant_residual, r.mean_zero_ray, r.kernel_threshold, r.verdict
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
