use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlab::io::FieldDump;
use qlab::report::RunReport;

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(args)
        .env("QLAB_THREADS", "1")
        .output()
        .expect("spawn qlab")
}

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn version_names_tool_and_schema() {
    let out = qlab(&["version"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        format!("qlab {} (report schema 1)", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn bundled_scenarios_reach_every_exit_code() {
    let cases = [
        ("gauss_bonnet_t4.toml", 0, ""),
        ("gauss_bonnet_wrong_chi.toml", 2, "gauss_bonnet"),
        ("newton_budget.toml", 3, "did not converge"),
        ("unknown_preset.toml", 4, "spherical"),
        ("obstruction_positive_f.toml", 5, "sign"),
        ("prescribe_form_constant.toml", 5, "compatibility"),
        ("kernel_obstruction_t3.toml", 5, "kernel"),
    ];
    for (file, expected, needle) in cases {
        let out = qlab(&["run", &scenario(file)]);
        assert_eq!(code(&out), expected, "{file}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{file}: {}", stderr(&out));
        if expected != 4 {
            let report: RunReport = serde_json::from_slice(&out.stdout).unwrap();
            assert_eq!(report.exit_code, expected);
            assert_eq!(report.pass, expected == 0);
        }
    }
}

#[test]
fn usage_errors_are_config_errors() {
    assert_eq!(code(&qlab(&["frobnicate"])), 4);
    assert_eq!(code(&qlab(&["verify", "--sizes", "twelve"])), 4);
    assert_eq!(code(&qlab(&["run", "/nonexistent/scenario.toml"])), 4);
    assert_eq!(code(&qlab(&["verify", "--dim", "3", "--sizes", "7"])), 4);
    assert_eq!(code(&qlab(&["--help"])), 0);
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .arg("version")
        .env("QLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("QLAB_THREADS"));
}

#[test]
fn verify_is_deterministic_and_writes_csv() {
    let args = ["verify", "--dim", "3", "--sizes", "8", "--pairs", "1"];
    let a = qlab(&args);
    let b = qlab(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: RunReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.task, "verify_suite");
    assert!(report.checks.iter().any(|c| c.name == "flat_adjointness@N=8"));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("suite.csv");
    let out = qlab(&[
        "verify",
        "--dim",
        "3",
        "--sizes",
        "8",
        "--pairs",
        "1",
        "--format",
        "csv",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("name,measured,bound,pass,note\n"), "{text}");
}

fn write_scenario(dir: &Path, body: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn scenario_output_and_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let field_path = dir.path().join("q.txt");
    let body = format!(
        r#"
schema_version = 1
name = "qcurv_tmp"
task = "qcurv"

[grid]
dim = 3
points_per_axis = 8

[metric]
preset = "conformal"
terms = [{{ amplitude = 0.05, mode = [0, 1, 0], kind = "cos" }}]

[output]
path = {report:?}
field_path = {field:?}
field_format = "text"
"#,
        report = report_path.to_str().unwrap(),
        field = field_path.to_str().unwrap(),
    );
    let file = write_scenario(dir.path(), &body);
    let out = qlab(&["run", &file]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());

    let first = std::fs::read(&report_path).unwrap();
    let report: RunReport = serde_json::from_slice(&first).unwrap();
    assert!(report.pass);
    assert!(report.duration_seconds.is_none());

    let q = FieldDump::read_text(&mut std::io::BufReader::new(std::fs::File::open(&field_path).unwrap()))
        .unwrap()
        .into_scalar()
        .unwrap();
    assert_eq!(q.grid().dim(), 3);
    assert!(q.is_finite());

    assert_eq!(code(&qlab(&["run", &file])), 0);
    assert_eq!(std::fs::read(&report_path).unwrap(), first);
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_scenario(
        dir.path(),
        r#"
schema_version = 1
name = "timed"
task = "gauss_bonnet"

[grid]
dim = 4
points_per_axis = 8

[metric]
preset = "flat"

[task_parameters]
euler_characteristic = 0

[output]
include_timing = true
"#,
    );
    let out = qlab(&["run", &file]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.duration_seconds.is_some_and(|t| t >= 0.0));
}

#[test]
fn malformed_scenarios_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("schema_version = 1\nname = \"x\"\ntask = \"qcurv\"\n[grid]\ndim = 5\npoints_per_axis = 8\n[metric]\npreset = \"flat\"\n", "dim"),
        ("schema_version = 1\nname = \"x\"\ntask = \"qcurv\"\n[grid]\ndim = 4\npoints_per_axis = 9\n[metric]\npreset = \"flat\"\n", "9"),
        ("schema_version = 1\nname = \"x\"\ntask = \"qcurv\"\ncolour = 3\n", "colour"),
    ];
    for (body, needle) in cases {
        let out = qlab(&["run", &write_scenario(dir.path(), body)]);
        assert_eq!(code(&out), 4);
        assert!(stderr(&out).contains(needle), "{needle}: {}", stderr(&out));
    }
}
