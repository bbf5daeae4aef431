//! Machine-readable run reports. JSON is canonical, with every float written
//! to 17 significant digits so that identical runs give identical bytes.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::checks::CheckRecord;
use crate::error::{QlabError, Result};
use crate::solvers::SolverReport;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// One point of a resolution series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub name: String,
    pub points_per_axis: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub report_schema: u32,
    pub task: String,
    /// The parsed scenario, or the suite parameters.
    pub input: Value,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
    /// Task-specific results (statistics, Gauss–Bonnet totals, probe reports).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub pass: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(task: impl Into<String>, input: Value) -> Self {
        Self {
            tool: "qlab".into(),
            version: tool_version().into(),
            report_schema: REPORT_SCHEMA_VERSION,
            task: task.into(),
            input,
            checks: Vec::new(),
            series: Vec::new(),
            results: BTreeMap::new(),
            solver: None,
            diagnostics: Vec::new(),
            pass: true,
            exit_code: 0,
            duration_seconds: None,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.into(), v);
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    /// Flattened check rows: `name,measured,bound,pass,note`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| QlabError::Io(e.to_string());
        w.write_record(["name", "measured", "bound", "pass", "note"])
            .map_err(err)?;
        let num = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                num(c.measured),
                num(c.bound),
                c.pass.to_string(),
                c.note.clone().unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| QlabError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| QlabError::Io(e.to_string()))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON whose floats are printed by [`format_float`]. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats::default());
    value.serialize(&mut ser).map_err(|e| QlabError::Io(e.to_string()))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| QlabError::Io(e.to_string()))
}

#[derive(Default)]
struct FixedFloats {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_float(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_fixed_width_and_round_trip() {
        let s = to_json_string(&vec![0.1, -2.5e-300, 3.0]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.0000000000000000e0"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5e-300, 3.0]);
        assert_eq!(to_json_string(&f64::NAN).unwrap().trim(), "null");
    }

    #[test]
    fn report_json_and_csv() {
        let mut r = RunReport::new("verify", Value::Null);
        r.push(CheckRecord::at_most("x", 1e-9, 1e-8));
        r.push(CheckRecord::skipped("y", "dim≠4, n/a"));
        r.result("total", 1.5);
        let json = r.to_json().unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.to_json().unwrap(), json);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("name,measured,bound,pass,note\n"));
        assert!(csv.contains("\"skipped: dim≠4, n/a\""));
    }
}
