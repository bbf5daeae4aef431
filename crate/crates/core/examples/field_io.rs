// Dumping and reloading fields in the binary and text formats.
//
// ```text
// cargo run --release --example field_io
// ```

use std::error::Error;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use qlab::io::{FieldDump, FieldFormat};
use qlab::q_operators::q_curvature;
use qlab::{MetricField, PeriodicGrid, ScalarField};

pub fn run() -> Result<(), Box<dyn Error>> {
    let grid = PeriodicGrid::new(4, 8)?;
    let g = MetricField::conformal(&ScalarField::from_fn(grid, |x| 0.1 * x[0].sin()));
    let q = q_curvature(&g)?;
    let dir = std::env::temp_dir().join(format!("qlab-field-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let metric_path = dir.join("metric.bin");
    FieldDump::from_sym_tensor(g.components())
        .write(&mut BufWriter::new(File::create(&metric_path)?), FieldFormat::Binary)?;
    let back = FieldDump::read_binary(&mut BufReader::new(File::open(&metric_path)?))?.into_sym_tensor()?;
    println!(
        "metric: {} bytes, exact round trip = {}",
        std::fs::metadata(&metric_path)?.len(),
        &back == g.components()
    );

    let q_path = dir.join("q.txt");
    FieldDump::from_scalar(&q).write(&mut BufWriter::new(File::create(&q_path)?), FieldFormat::Text)?;
    let back = FieldDump::read_text(&mut BufReader::new(File::open(&q_path)?))?.into_scalar()?;
    println!(
        "Q: {} bytes, exact round trip = {}",
        std::fs::metadata(&q_path)?.len(),
        back == q
    );

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
