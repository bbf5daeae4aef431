//! Scenario execution, the resolution-doubling verification suite and exit codes.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::checks::*;
use crate::error::{QlabError, Result};
use crate::field::ScalarField;
use crate::grid::PeriodicGrid;
use crate::io::{FieldDump, FieldFormat};
use crate::kernel::{kernel_probe_with, KernelVerdict};
use crate::linearization::LinearizedQ;
use crate::metric::{MetricField, SPD_FLOOR};
use crate::q_operators::{conformal_q_with, relative_l2, Background, Form4Density};
use crate::report::{ReportFormat, RunReport, SeriesPoint};
use crate::scenario::{grid_within_budget, Scenario, TaskKind};
use crate::solvers::{newton_conformal_with, newton_ift, prescribe_form, SolverReport};
use crate::trig::TrigPolynomial;

/// Process exit codes of the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 2,
    NotConverged = 3,
    ConfigError = 4,
    Obstruction = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Finest size at which the spectral-accuracy bounds apply.
pub const SPECTRAL_BOUND_SIZE: usize = 24;

/// Smallest grid at which the finite-difference order is meaningful (coarser grids hit the aliasing floor).
pub const FD_MIN_SIZE: usize = 16;

/// Largest node count at which the verification suite runs the iterative kernel probe.
pub const PROBE_MAX_NODES: usize = 20_736;

/// LOBPCG budget of the suite's probe; conformal backgrounds need about 50 steps.
pub const PROBE_ITERATIONS: usize = 100;

/// Required improvement of spectral-accuracy errors when the resolution doubles.
pub const DOUBLING_RATIO: f64 = 1e-3;

/// Errors below this are treated as converged when forming doubling ratios.
pub const RATIO_NOISE_FLOOR: f64 = 1e-8;

/// Configures the global thread pool from `QLAB_THREADS`; returns the thread count in use.
pub fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var("QLAB_THREADS") {
        let n: usize =
            v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                QlabError::InvalidOption(format!("QLAB_THREADS must be a positive integer, got {v:?}"))
            })?;
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Report plus the status it maps to. `report` is absent only for configuration errors.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Option<RunReport>,
    pub status: ExitStatus,
    pub diagnostic: Option<String>,
}

impl RunOutcome {
    fn config(e: QlabError) -> Self {
        Self {
            report: None,
            status: ExitStatus::ConfigError,
            diagnostic: Some(e.to_string()),
        }
    }
}

fn finish(mut report: RunReport, solver_status: Option<ExitStatus>) -> RunOutcome {
    let checks_pass = report.all_checks_pass();
    let status = match solver_status {
        Some(s) if s != ExitStatus::Pass => s,
        _ if !checks_pass => ExitStatus::CheckFailed,
        _ => ExitStatus::Pass,
    };
    report.pass = status == ExitStatus::Pass;
    report.exit_code = status.code();
    let diagnostic = match status {
        ExitStatus::Pass => None,
        ExitStatus::CheckFailed => Some(format!(
            "failed checks: {}",
            report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )),
        _ => report.diagnostics.first().cloned(),
    };
    RunOutcome {
        report: Some(report),
        status,
        diagnostic,
    }
}

/// Loads, executes and writes the report of a scenario file.
pub fn run_scenario(path: &Path) -> RunOutcome {
    match Scenario::load(path) {
        Ok(s) => {
            let out = execute(&s);
            write_outputs(&s, out)
        }
        Err(e) => RunOutcome::config(e),
    }
}

fn write_outputs(s: &Scenario, out: RunOutcome) -> RunOutcome {
    let Some(report) = &out.report else { return out };
    if let Some(path) = &s.output.path {
        let written = report
            .render(s.output.format)
            .and_then(|text| fs::write(path, text).map_err(|e| QlabError::Io(format!("{}: {e}", path.display()))));
        if let Err(e) = written {
            return RunOutcome::config(e);
        }
    }
    out
}

/// Runs a parsed scenario without touching the report destination.
pub fn execute(s: &Scenario) -> RunOutcome {
    let start = Instant::now();
    let input = serde_json::to_value(s).unwrap_or_default();
    let mut report = RunReport::new(s.task.name(), input);
    let result = match s.task {
        TaskKind::Verify => verify_task(s, &mut report),
        TaskKind::Qcurv => qcurv_task(s, &mut report),
        TaskKind::GaussBonnet => gauss_bonnet_task(s, &mut report),
        TaskKind::PrescribeForm => prescribe_form_task(s, &mut report),
        TaskKind::PrescribeConformal => prescribe_conformal_task(s, &mut report),
        TaskKind::PrescribeFull => prescribe_full_task(s, &mut report),
    };
    let status = match result {
        Ok(status) => status,
        Err(e) => return RunOutcome::config(e),
    };
    if s.output.include_timing {
        report.duration_seconds = Some(start.elapsed().as_secs_f64());
    }
    finish(report, status)
}

fn dump_field(s: &Scenario, u: &ScalarField) -> Result<()> {
    if let Some(path) = &s.output.field_path {
        let mut file = fs::File::create(path).map_err(|e| QlabError::Io(format!("{}: {e}", path.display())))?;
        FieldDump::from_scalar(u).write(&mut file, s.output.field_format.unwrap_or(FieldFormat::Binary))?;
    }
    Ok(())
}

fn solver_status(report: &mut RunReport, solver: &SolverReport) -> ExitStatus {
    let status = if let Some(o) = &solver.obstruction {
        report
            .diagnostics
            .push(format!("obstruction ({:?}): {}", o.kind, o.detail).to_lowercase());
        ExitStatus::Obstruction
    } else if !solver.converged {
        report.diagnostics.push(format!(
            "solver did not converge after {} iterations: {}",
            solver.iterations,
            solver.message.as_deref().unwrap_or("residual above tolerance")
        ));
        ExitStatus::NotConverged
    } else {
        ExitStatus::Pass
    };
    report.solver = Some(solver.clone());
    status
}

fn verify_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g = s.build_metric()?;
    let grid = g.grid();
    let flat = g.is_flat();
    let params = &s.task_parameters;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    report.push(CheckRecord::at_most(
        "space_form_constants",
        space_form_defect()?,
        s.tolerance("space_form_constants", 1e-14),
    ));
    let (sym, nonzero) = symbol_defect(grid.dim(), 100, &mut rng)?;
    report.push(CheckRecord::at_most(
        "symbol_trace",
        sym,
        s.tolerance("symbol_trace", 1e-14),
    ));
    report.push(CheckRecord::holds(
        "symbol_nonzero",
        nonzero,
        "σ_ξ(L*) ≠ 0 for every sampled ξ ≠ 0",
    ));

    let lin = LinearizedQ::new(&g)?;
    let adj = adjointness_defect(&lin, params.pairs, &mut rng)?;
    report.push(CheckRecord::at_most(
        "adjointness",
        adj,
        s.tolerance("adjointness", if flat { 1e-8 } else { 1e-6 }),
    ));

    let probe = kernel_probe_with(&lin, params.probes, params.iterations)?;
    if flat {
        report.push(CheckRecord::at_most(
            "kernel_constant_residual",
            probe.constant_residual,
            s.tolerance("kernel_constant_residual", 1e-10),
        ));
    } else {
        report.push(CheckRecord::holds(
            "kernel_probe",
            probe.verdict != KernelVerdict::Inconclusive,
            format!("verdict {:?}", probe.verdict).to_lowercase(),
        ));
    }
    report.result("kernel_probe", &probe);

    if grid.points_per_axis() >= FD_MIN_SIZE {
        let study = finite_difference_study(&lin, &reference_direction(grid), &FD_STEPS)?;
        report.push(CheckRecord::at_least(
            "finite_difference_order",
            study.min_order(),
            s.tolerance("finite_difference_order", 1.9),
        ));
        report.result("finite_difference", &study);
    } else {
        report.push(CheckRecord::skipped(
            "finite_difference_order",
            format!("N<{FD_MIN_SIZE}"),
        ));
    }

    let bg = lin.background();
    let dim4_checks = [
        "trace_identity",
        "gauss_bonnet",
        "pfaffian_consistency",
        "conformal_q_law",
        "paneitz_covariance",
    ];
    if grid.dim() != 4 {
        for name in dim4_checks {
            report.push(CheckRecord::skipped(name, "dim≠4"));
        }
        return Ok(None);
    }
    let fs: Vec<ScalarField> = (0..2)
        .map(|_| TrigPolynomial::random(4, 4, 2, &mut rng).sample(grid))
        .collect();
    report.push(CheckRecord::at_most(
        "trace_identity",
        trace_identity_defect(&lin, &fs)?,
        s.tolerance("trace_identity", if flat { 1e-10 } else { 1e-6 }),
    ));
    let chi = params.euler_characteristic.unwrap_or(0) as f64;
    report.push(CheckRecord::at_most(
        "gauss_bonnet",
        gauss_bonnet_defect(bg, chi)?,
        s.tolerance("gauss_bonnet", 1e-6),
    ));
    report.push(CheckRecord::at_most(
        "pfaffian_consistency",
        pfaffian_defect(bg)?,
        s.tolerance("pfaffian_consistency", 1e-6),
    ));
    report.push(CheckRecord::at_most(
        "conformal_q_law",
        conformal_law_defect(bg, &reference_conformal_factor(grid))?,
        s.tolerance("conformal_q_law", 1e-7),
    ));
    report.push(CheckRecord::at_most(
        "paneitz_covariance",
        paneitz_covariance_defect(bg, &covariance_factor(grid), &fs)?,
        s.tolerance("paneitz_covariance", 1e-6),
    ));
    report.result("gauss_bonnet", bg.gauss_bonnet()?);
    Ok(None)
}

fn field_stats(bg: &Background, u: &ScalarField) -> serde_json::Value {
    json!({
        "min": u.min(),
        "max": u.max(),
        "mean": bg.mean(u),
        "integral": bg.integrate(u),
        "rms": bg.rms(u),
    })
}

fn qcurv_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g = s.build_metric()?;
    let bg = Background::new(&g)?;
    let q = bg.q();
    report.result("q", field_stats(&bg, q));
    report.result("volume", bg.volume());
    report.push(CheckRecord::holds("q_finite", q.is_finite(), "Q finite at every node"));
    if g.is_flat() {
        report.push(CheckRecord::at_most(
            "flat_q_zero",
            q.sup_norm(),
            s.tolerance("flat_q_zero", 1e-12),
        ));
    } else if let (Some(phi), 4) = (s.conformal_factor(g.grid()), g.dim()) {
        let flat = Background::new(&MetricField::flat(g.grid()))?;
        let law = conformal_q_with(&flat, &phi)?;
        report.push(CheckRecord::at_most(
            "conformal_q_law",
            relative_l2(q, &law),
            s.tolerance("conformal_q_law", 1e-7),
        ));
    }
    dump_field(s, q)?;
    Ok(None)
}

fn gauss_bonnet_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g = s.build_metric()?;
    let bg = Background::new(&g)?;
    let chi = s.task_parameters.euler_characteristic.expect("validated") as f64;
    let gb = bg.gauss_bonnet()?;
    report.result("gauss_bonnet", gb);
    report.result("declared_euler_characteristic", chi);
    report.push(
        CheckRecord::at_most(
            "gauss_bonnet",
            gauss_bonnet_defect(&bg, chi)?,
            s.tolerance("gauss_bonnet", 1e-6),
        )
        .with_note("|∫(Q + |W|²/4) dvol − 8π²χ| / (2π)⁴"),
    );
    report.push(CheckRecord::at_most(
        "pfaffian_consistency",
        pfaffian_defect(&bg)?,
        s.tolerance("pfaffian_consistency", 1e-6),
    ));
    dump_field(s, &bg.curvature_form_density()?)?;
    Ok(None)
}

fn prescribe_form_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g = s.build_metric()?;
    let omega = Form4Density::new(s.target_polynomial().sample(g.grid()), g.clone())?;
    let out = prescribe_form(&g, &omega, &s.solver)?;
    let status = solver_status(report, &out.report);
    if status == ExitStatus::Pass {
        let v = out.report.verification_residual.unwrap_or(f64::NAN);
        report.push(CheckRecord::at_most(
            "verification_residual",
            v,
            s.tolerance("verification_residual", 1e-5),
        ));
        report.result("phi", field_stats(&Background::new(&g)?, &out.phi));
        dump_field(s, &out.phi)?;
    }
    Ok(Some(status))
}

fn prescribe_conformal_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g = s.build_metric()?;
    let bg = Background::new(&g)?;
    let f = s.target_polynomial().sample(g.grid());
    let (phi, solver) = newton_conformal_with(&bg, &f, None, &s.solver)?;
    let status = solver_status(report, &solver);
    if status == ExitStatus::Pass {
        let v = solver.verification_residual.unwrap_or(f64::NAN);
        report.push(CheckRecord::at_most(
            "verification_residual",
            v,
            s.tolerance("verification_residual", 1e-8),
        ));
        report.push(CheckRecord::holds(
            "monotone_residuals",
            solver.residual_history.windows(2).all(|w| w[1] <= w[0]),
            "residual history non-increasing",
        ));
        report.push(if solver.residual_history.len() >= 4 {
            CheckRecord::holds(
                "superlinear_witness",
                solver.superlinear_witness(),
                "some residual ratio at most 0.1 of the previous ratio",
            )
        } else {
            CheckRecord::skipped("superlinear_witness", "fewer than four residuals")
        });
        report.result("phi", field_stats(&bg, &phi));
        dump_field(s, &phi)?;
    }
    Ok(Some(status))
}

fn prescribe_full_task(s: &Scenario, report: &mut RunReport) -> Result<Option<ExitStatus>> {
    let g0 = s.build_metric()?;
    let q0 = Background::new(&g0)?.q().clone();
    let f = q0.add(&s.target_polynomial().sample(g0.grid()));
    let out = newton_ift(&g0, &f, &s.solver)?;
    let status = solver_status(report, &out.report);
    if status == ExitStatus::Pass {
        let v = out.report.verification_residual.unwrap_or(f64::NAN);
        report.push(CheckRecord::at_most(
            "verification_residual",
            v,
            s.tolerance("verification_residual", 1e-8),
        ));
        let min_eig = out.metric.min_eigenvalue();
        report.push(CheckRecord::at_least(
            "metric_min_eigenvalue",
            min_eig,
            s.tolerance("metric_min_eigenvalue", SPD_FLOOR),
        ));
        report.result(
            "u",
            json!({ "min": out.u.min(), "max": out.u.max(), "sup": out.u.sup_norm() }),
        );
        dump_field(s, &out.u)?;
    }
    Ok(Some(status))
}

/// Options of [`verify_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub dim: usize,
    pub sizes: Vec<usize>,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            dim: 4,
            sizes: vec![12, 24],
            pairs: 2,
            seed: 7,
        }
    }
}

/// Spectral-accuracy quantities: bounded at [`SPECTRAL_BOUND_SIZE`] and above, compared across doublings.
const SPECTRAL: [(&str, f64); 4] = [
    ("conformal_q_law", 1e-7),
    ("paneitz_covariance", 1e-6),
    ("conformal_trace_identity", 1e-6),
    ("conformal_adjointness", 1e-6),
];

/// The identity battery at every size on the flat torus and on the reference
/// conformal metric, with error ratios between consecutive sizes.
pub fn verify_suite(opts: &SuiteOptions) -> RunOutcome {
    match verify_suite_report(opts) {
        Ok(r) => finish(r, None),
        Err(e) => RunOutcome::config(e),
    }
}

fn verify_suite_report(opts: &SuiteOptions) -> Result<RunReport> {
    if opts.sizes.is_empty() {
        return Err(QlabError::InvalidOption("verify needs at least one grid size".into()));
    }
    let grids: Vec<PeriodicGrid> = opts
        .sizes
        .iter()
        .map(|&n| grid_within_budget(opts.dim, n))
        .collect::<Result<_>>()?;
    let mut report = RunReport::new(
        "verify_suite",
        json!({ "dim": opts.dim, "sizes": opts.sizes, "pairs": opts.pairs, "seed": opts.seed }),
    );
    let dim = opts.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    report.push(CheckRecord::at_most(
        "space_form_constants",
        space_form_defect()?,
        1e-14,
    ));
    let (sym, nonzero) = symbol_defect(dim, 100, &mut rng)?;
    report.push(CheckRecord::at_most("symbol_trace", sym, 1e-14));
    report.push(CheckRecord::holds(
        "symbol_nonzero",
        nonzero,
        "σ_ξ(L*) ≠ 0 for every sampled ξ ≠ 0",
    ));

    // test functions drawn once so every size sees the same continuum data
    let polys: Vec<TrigPolynomial> = (0..3).map(|_| TrigPolynomial::random(dim, 4, 2, &mut rng)).collect();

    for &grid in &grids {
        let n = grid.points_per_axis();
        let tag = |name: &str| format!("{name}@N={n}");
        let mut pair_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xad10);
        let flat = LinearizedQ::new(&MetricField::flat(grid))?;
        let conf = LinearizedQ::new(&MetricField::conformal(&reference_conformal_factor(grid)))?;

        let v = adjointness_defect(&flat, opts.pairs, &mut pair_rng)?;
        let v = series(&mut report, "flat_adjointness", n, v);
        report.push(CheckRecord::at_most(tag("flat_adjointness"), v, 1e-8));
        let v = adjointness_defect(&conf, opts.pairs, &mut pair_rng)?;
        let v = series(&mut report, "conformal_adjointness", n, v);
        report.push(spectral_record(tag("conformal_adjointness"), v, 1e-6, n));

        let one = ScalarField::constant(grid, 1.0);
        let c = flat.tensor_rms(&flat.adjoint(&one)?);
        report.push(CheckRecord::at_most(tag("flat_kernel_constant_residual"), c, 1e-10));
        if grid.node_count() <= PROBE_MAX_NODES {
            let probe = kernel_probe_with(&conf, 1, PROBE_ITERATIONS)?;
            report.push(CheckRecord::holds(
                tag("conformal_kernel_verdict"),
                probe.verdict == KernelVerdict::NonSingular,
                format!("verdict {:?}", probe.verdict).to_lowercase(),
            ));
        } else {
            report.push(CheckRecord::skipped(
                tag("conformal_kernel_verdict"),
                format!("more than {PROBE_MAX_NODES} nodes"),
            ));
        }

        if n >= FD_MIN_SIZE {
            let study = finite_difference_study(&conf, &reference_direction(grid), &FD_STEPS)?;
            report.push(CheckRecord::at_least(
                tag("finite_difference_order"),
                study.min_order(),
                1.9,
            ));
        } else {
            report.push(CheckRecord::skipped(
                tag("finite_difference_order"),
                format!("N<{FD_MIN_SIZE}"),
            ));
        }

        let paneitz_names = [
            "flat_trace_identity",
            "conformal_trace_identity",
            "gauss_bonnet",
            "pfaffian_consistency",
            "conformal_q_law",
            "paneitz_covariance",
        ];
        if dim != 4 {
            for name in paneitz_names {
                report.push(CheckRecord::skipped(tag(name), "dim≠4"));
            }
            continue;
        }
        let fs: Vec<ScalarField> = polys.iter().map(|p| p.sample(grid)).collect();
        report.push(CheckRecord::at_most(
            tag("flat_trace_identity"),
            trace_identity_defect(&flat, &fs[..1])?,
            1e-10,
        ));
        let v = trace_identity_defect(&conf, &fs[..1])?;
        let v = series(&mut report, "conformal_trace_identity", n, v);
        report.push(spectral_record(tag("conformal_trace_identity"), v, 1e-6, n));

        let cb = conf.background();
        report.push(CheckRecord::at_most(
            tag("gauss_bonnet"),
            gauss_bonnet_defect(cb, 0.0)?,
            1e-6,
        ));
        report.push(CheckRecord::at_most(
            tag("pfaffian_consistency"),
            pfaffian_defect(cb)?,
            1e-6,
        ));
        let fb = flat.background();
        let v = conformal_law_defect(fb, &reference_conformal_factor(grid))?;
        let v = series(&mut report, "conformal_q_law", n, v);
        report.push(spectral_record(tag("conformal_q_law"), v, 1e-7, n));
        let v = paneitz_covariance_defect(fb, &covariance_factor(grid), &fs)?;
        let v = series(&mut report, "paneitz_covariance", n, v);
        report.push(spectral_record(tag("paneitz_covariance"), v, 1e-6, n));
    }

    for w in opts.sizes.windows(2) {
        let (n1, n2) = (w[0], w[1]);
        for (name, _) in SPECTRAL {
            let at = |n: usize| {
                report
                    .series
                    .iter()
                    .find(|p| p.name == name && p.points_per_axis == n)
                    .map(|p| p.value)
            };
            let (Some(e1), Some(e2)) = (at(n1), at(n2)) else {
                continue;
            };
            let ratio = e2 / e1.max(RATIO_NOISE_FLOOR);
            let label = format!("{name}_ratio@N={n1}->{n2}");
            let record = if n2 >= 2 * n1 {
                CheckRecord::at_most(label, ratio, DOUBLING_RATIO)
            } else {
                CheckRecord {
                    name: label,
                    measured: Some(ratio),
                    bound: None,
                    pass: true,
                    note: Some("sizes do not double; ratio recorded only".into()),
                }
            };
            report.push(record);
        }
    }
    Ok(report)
}

fn series(report: &mut RunReport, name: &str, n: usize, value: f64) -> f64 {
    report.series.push(SeriesPoint {
        name: name.into(),
        points_per_axis: n,
        value,
    });
    value
}

fn spectral_record(name: String, value: f64, bound: f64, n: usize) -> CheckRecord {
    if n >= SPECTRAL_BOUND_SIZE {
        CheckRecord::at_most(name, value, bound)
    } else {
        CheckRecord {
            name,
            measured: Some(value),
            bound: None,
            pass: true,
            note: Some(format!("resolution series; bounded at N≥{SPECTRAL_BOUND_SIZE}")),
        }
    }
}

/// Renders an outcome's report, if any.
pub fn render(outcome: &RunOutcome, format: ReportFormat) -> Result<Option<String>> {
    outcome.report.as_ref().map(|r| r.render(format)).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_oversized_suites_are_config_errors() {
        let out = verify_suite(&SuiteOptions {
            sizes: vec![],
            ..SuiteOptions::default()
        });
        assert_eq!(out.status, ExitStatus::ConfigError);
        let out = verify_suite(&SuiteOptions {
            sizes: vec![40],
            ..SuiteOptions::default()
        });
        assert_eq!(out.status, ExitStatus::ConfigError);
    }

    #[test]
    fn small_three_dimensional_suite() {
        let out = verify_suite(&SuiteOptions {
            dim: 3,
            sizes: vec![8],
            ..SuiteOptions::default()
        });
        let r = out.report.unwrap();
        assert!(r.checks.iter().any(|c| c.note.as_deref() == Some("skipped: dim≠4")));
        assert_eq!(out.status, ExitStatus::Pass, "{:?}", r.checks);
    }

    #[test]
    fn obstruction_and_check_failure_statuses() {
        let text = r#"
schema_version = 1
task = "prescribe_conformal"
[grid]
dim = 4
points_per_axis = 8
[metric]
preset = "flat"
[task_parameters]
target = [{ coefficient = 1.0, mode = [0, 0, 0, 0] }]
"#;
        let out = execute(&Scenario::parse(text).unwrap());
        assert_eq!(out.status, ExitStatus::Obstruction);
        assert!(out.diagnostic.unwrap().contains("sign"));

        let text = r#"
schema_version = 1
task = "gauss_bonnet"
[grid]
dim = 4
points_per_axis = 8
[metric]
preset = "flat"
[task_parameters]
euler_characteristic = 2
"#;
        let out = execute(&Scenario::parse(text).unwrap());
        assert_eq!(out.status, ExitStatus::CheckFailed);
        assert!(!out.report.unwrap().pass);
    }
}
