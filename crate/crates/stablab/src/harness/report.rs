//! Experiment reports and their on-disk form.
//!
//! Layout of an output directory:
//!
//! ```text
//! summary.json          full report minus the series values
//! series/<name>.csv     one file per series: a `# config_hash=…` line,
//!                       then `t,value,stderr` rows
//! plot.gp               gnuplot script over the series files
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixlemmas::Counterexample;
use crate::stability::SlopeFit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub config_hash: String,
    pub rows: Vec<SeriesRow>,
}

impl Series {
    pub fn new(name: impl Into<String>, config_hash: &str, values: &[f64], stderr: Option<&[f64]>) -> Self {
        let rows = values
            .iter()
            .enumerate()
            .map(|(t, &value)| SeriesRow { t: t as u64, value, stderr: stderr.map_or(0.0, |s| s[t]) })
            .collect();
        Series { name: name.into(), config_hash: config_hash.to_string(), rows }
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub series: String,
    pub fit: SlopeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub method: String,
    pub tabulated: Option<f64>,
    pub fitted: f64,
}

/// Perturbation used by one repeat, for audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub method: String,
    pub repeat: usize,
    pub index: usize,
    pub pool_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub generator: String,
    pub config: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub provenance: Option<Provenance>,
    #[serde(skip)]
    pub series: Vec<Series>,
    pub series_names: Vec<String>,
    pub fits: Vec<NamedFit>,
    pub checks: Vec<Check>,
    pub exponents: Vec<ExponentRow>,
    pub constants: BTreeMap<String, f64>,
    pub perturbations: Vec<PerturbationRecord>,
    pub counterexamples: Vec<Counterexample>,
    /// Whether the stability curves should be drawn on log-log axes.
    pub loglog: bool,
}

impl Report {
    pub fn config_hash(&self) -> &str {
        self.provenance.as_ref().map_or("", |p| p.config_hash.as_str())
    }

    pub fn push_series(&mut self, series: Series) {
        self.series_names.push(series.name.clone());
        self.series.push(series);
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn fit(&self, series: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.series == series).map(|f| &f.fit)
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    PlotScript,
    Json,
    All,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "csv" => Format::Csv,
            "plot-script" => Format::PlotScript,
            "json" => Format::Json,
            "all" => Format::All,
            other => return Err(Error::Config(format!("unknown format '{other}'"))),
        })
    }
}

fn series_file(name: &str) -> String {
    format!("{name}.csv")
}

/// Serialize one series in the `t,value,stderr` format.
pub fn series_to_csv(series: &Series) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "value", "stderr"])?;
    for r in &series.rows {
        w.write_record([r.t.to_string(), r.value.to_string(), r.stderr.to_string()])?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("csv output is ASCII");
    Ok(format!("# config_hash={}\n{body}", series.config_hash))
}

/// Parse a series file; `expected_hash` must match the embedded hash when
/// given.
pub fn series_from_csv(name: &str, text: &str, expected_hash: Option<&str>) -> Result<Series> {
    let first = text.lines().next().unwrap_or("");
    let hash = first
        .strip_prefix("# config_hash=")
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing config hash line".into() })?
        .trim()
        .to_string();
    if let Some(expected) = expected_hash {
        if expected != hash {
            return Err(Error::HashMismatch { expected: expected.into(), found: hash });
        }
    }
    let body = &text[first.len()..];
    let mut rdr = csv::Reader::from_reader(body.trim_start_matches('\n').as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "value", "stderr"] {
        return Err(Error::Parse { line: 2, msg: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::Parse { line: i + 3, msg: "short row".into() })
        };
        let bad = |what: &str| Error::Parse { line: i + 3, msg: format!("invalid {what}") };
        rows.push(SeriesRow {
            t: field(0)?.parse().map_err(|_| bad("t"))?,
            value: field(1)?.parse().map_err(|_| bad("value"))?,
            stderr: field(2)?.parse().map_err(|_| bad("stderr"))?,
        });
    }
    Ok(Series { name: name.to_string(), config_hash: hash, rows })
}

/// Read series files for re-aggregation. All files must carry the same
/// config hash.
pub fn load_series(paths: &[PathBuf]) -> Result<Vec<Series>> {
    let mut out: Vec<Series> = Vec::with_capacity(paths.len());
    for p in paths {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("series").to_string();
        let expected = out.first().map(|s| s.config_hash.clone());
        out.push(series_from_csv(&name, &fs::read_to_string(p)?, expected.as_deref())?);
    }
    Ok(out)
}

/// gnuplot script drawing every series from `series/`.
pub fn plot_script(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config_hash={}", report.config_hash());
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key left top");
    let _ = writeln!(s, "set xlabel 't'");
    if report.loglog {
        let _ = writeln!(s, "set logscale x");
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(s, "set title '{}'", report.experiment);
    let plots: Vec<String> = report
        .series_names
        .iter()
        .map(|n| format!("'series/{}' every ::1 using 1:2 with lines title '{}'", series_file(n), n))
        .collect();
    if !plots.is_empty() {
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}

/// Write the report to `dir` in the requested format.
pub fn emit_plot_data(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::All | Format::PlotScript) {
        let series_dir = dir.join("series");
        fs::create_dir_all(&series_dir)?;
        for s in &report.series {
            let path = series_dir.join(series_file(&s.name));
            fs::write(&path, series_to_csv(s)?)?;
            written.push(path);
        }
    }
    if matches!(format, Format::PlotScript | Format::All) {
        let path = dir.join("plot.gp");
        fs::write(&path, plot_script(report))?;
        written.push(path);
    }
    if matches!(format, Format::Json | Format::All) {
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
        written.push(path);
    }
    Ok(written)
}
