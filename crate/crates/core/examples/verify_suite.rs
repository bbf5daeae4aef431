// The resolution-doubling identity battery, as run by `qlab verify`.
//
// ```text
// cargo run --release --example verify_suite
// ```

use std::error::Error;

use qlab::run::{verify_suite, SuiteOptions};

pub fn run() -> Result<(), Box<dyn Error>> {
    let outcome = verify_suite(&SuiteOptions {
        dim: 3,
        sizes: vec![8, 16],
        pairs: 2,
        seed: 11,
    });
    let report = outcome.report.ok_or("suite produced no report")?;
    for c in &report.checks {
        let measured = c.measured.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        let bound = c.bound.map(|v| format!("{v:.1e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<5} {:<48} {measured:>10} ≤ {bound:<6} {}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.note.as_deref().unwrap_or("")
        );
    }
    println!("exit status {}", outcome.status.code());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
