// Scenarios from TOML, executed in-process and rendered as JSON and CSV.
// `qlab run <file>` does the same from the command line.
//
// ```text
// cargo run --release --example scenario_report
// ```

use std::error::Error;

use qlab::report::ReportFormat;
use qlab::run::{execute, render};
use qlab::scenario::Scenario;

const QCURV: &str = r#"
schema_version = 1
name = "qcurv_example"
task = "qcurv"

[grid]
dim = 4
points_per_axis = 16

[metric]
preset = "conformal"
terms = [{ amplitude = 0.1, mode = [1, 0, 0, 0], kind = "sin" }]

# per-check overrides of the default bounds
[tolerances]
conformal_q_law = 1e-8
"#;

pub fn run() -> Result<(), Box<dyn Error>> {
    let scenario = Scenario::parse(QCURV)?;
    let outcome = execute(&scenario);
    println!("exit status {:?} ({})", outcome.status, outcome.status.code());
    if let Some(csv) = render(&outcome, ReportFormat::Csv)? {
        print!("{csv}");
    }
    if let Some(json) = render(&outcome, ReportFormat::Json)? {
        println!("{} bytes of JSON", json.len());
    }

    match Scenario::parse(&QCURV.replace("conformal", "spherical")) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
