//! CSV curve documents, JSON summaries and the envelope/profile readers.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use serde_json::{Map, Value};
use sfslab_core::{Complex64, OriginSample, PulseEnvelope, TimeGrid};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nine significant digits, the precision of every emitted number.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

fn round9(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

/// Columns of numbers with a unit row and a provenance header.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDocument {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Extra `# key: value` lines after the config echo.
    pub notes: Vec<(String, String)>,
}

impl CurveDocument {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(mut self, key: &str, value: impl Into<String>) -> Self {
        self.notes.push((key.to_string(), value.into()));
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        let mut head = provenance(cfg);
        for (k, v) in &self.notes {
            head.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        w.write_record(&self.units).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_num(*x)))
                .expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output");
        head + &body
    }

    pub fn write(&self, path: &Path, cfg: &RunConfig) -> CliResult<()> {
        std::fs::write(path, self.render(cfg)).map_err(|e| CliError::io(path.display(), e))
    }
}

fn provenance(cfg: &RunConfig) -> String {
    let mut s = format!(
        "# sfslab {VERSION}\n# command: {}\n# config_sha256: {}\n",
        cfg.command,
        cfg.sha256()
    );
    for (k, v) in cfg.entries() {
        s.push_str(&format!("# config: {k} = {v}\n"));
    }
    s
}

/// Envelope columns `t, re, im, intensity`, optionally in units of T₂.
pub fn envelope_document(pulse: &PulseEnvelope, t2_scale: Option<f64>) -> CurveDocument {
    let (ts, fs, units) = match t2_scale {
        Some(t2) => (1.0 / t2, t2.sqrt(), ["T2", "T2^-1/2", "T2^-1/2", "T2^-1"]),
        None => (1.0, 1.0, ["s", "s^-1/2", "s^-1/2", "s^-1"]),
    };
    let mut doc = CurveDocument::new(&[
        ("t", units[0]),
        ("re", units[1]),
        ("im", units[2]),
        ("intensity", units[3]),
    ]);
    for (t, z) in pulse.grid().times().zip(pulse.samples()) {
        let z = z * fs;
        doc.push(vec![t * ts, z.re, z.im, z.norm_sqr()]);
    }
    doc.note("origin", origin_name(pulse.meta.origin))
}

fn origin_name(o: OriginSample) -> &'static str {
    match o {
        OriginSample::Sampled => "sampled",
        OriginSample::LeftLimit => "left_limit",
        OriginSample::RightLimit => "right_limit",
    }
}

struct Table {
    notes: Vec<(String, String)>,
    header: Vec<String>,
    units: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let notes = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let bad = |msg: String| CliError::config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut units = None;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => units = Some(rec.iter().map(str::to_string).collect()),
            Err(_) => return Err(bad(format!("non-numeric data in row {}", i + 1))),
        }
    }
    Ok(Table {
        notes,
        header,
        units,
        rows,
    })
}

fn column_index(t: &Table, name: &str, path: &Path) -> CliResult<usize> {
    t.header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::config(format!("{}: missing column `{name}`", path.display())))
}

/// Step of a uniform column, or an error naming the first irregular row.
fn uniform_step(values: &[f64], path: &Path) -> CliResult<f64> {
    if values.len() < 4 {
        return Err(CliError::config(format!("{}: need at least 4 rows", path.display())));
    }
    let n = values.len();
    let step = (values[n - 1] - values[0]) / (n - 1) as f64;
    if step.is_nan() || step <= 0.0 {
        return Err(CliError::config(format!(
            "{}: first column must increase",
            path.display()
        )));
    }
    // Nine-digit values carry rounding proportional to their magnitude.
    for (i, v) in values.iter().enumerate() {
        if (v - (values[0] + i as f64 * step)).abs() > 1e-6 * step + 1e-8 * v.abs() {
            return Err(CliError::config(format!(
                "{}: grid not uniform at data row {}",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(step)
}

/// Reads an envelope written by [`envelope_document`] (SI units) or any CSV
/// with `t, re, im` columns on a uniform grid.
pub fn read_envelope(path: &Path) -> CliResult<PulseEnvelope> {
    let table = read_table(path)?;
    let (it, ir, ii) = (
        column_index(&table, "t", path)?,
        column_index(&table, "re", path)?,
        column_index(&table, "im", path)?,
    );
    if let Some(units) = &table.units {
        if units[it] != "s" {
            return Err(CliError::config(format!(
                "{}: time column must be in seconds, found unit `{}`",
                path.display(),
                units[it]
            )));
        }
    }
    let ts: Vec<f64> = table.rows.iter().map(|r| r[it]).collect();
    let dt = uniform_step(&ts, path)?;
    // Snap to an origin-anchored grid when a row sits at t = 0.
    let t_start = match ts.iter().position(|t| t.abs() < 1e-6 * dt) {
        Some(k) => -(k as f64) * dt,
        None => ts[0],
    };
    let grid = TimeGrid::new(t_start, dt, ts.len())?;
    let samples = table.rows.iter().map(|r| Complex64::new(r[ir], r[ii])).collect();
    let mut pulse = PulseEnvelope::new(grid, samples)?;
    pulse.meta.origin = match table.notes.iter().find(|(k, _)| k == "origin").map(|(_, v)| v.as_str()) {
        Some("left_limit") => OriginSample::LeftLimit,
        Some("right_limit") => OriginSample::RightLimit,
        _ => OriginSample::Sampled,
    };
    Ok(pulse)
}

/// Two-column absorption table `frequency_hz, alpha_l`.
pub fn read_profile(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let table = read_table(path)?;
    let iv = column_index(&table, "frequency_hz", path)?;
    let ia = column_index(&table, "alpha_l", path)?;
    let nu: Vec<f64> = table.rows.iter().map(|r| r[iv]).collect();
    uniform_step(&nu, path)?;
    Ok((nu, table.rows.iter().map(|r| r[ia]).collect()))
}

/// JSON summary whose numbers are rounded to nine significant digits.
#[derive(Debug, Clone)]
pub struct Summary {
    map: Map<String, Value>,
}

impl Summary {
    pub fn new(cfg: &RunConfig) -> Self {
        let mut map = Map::new();
        map.insert("version".into(), Value::from(VERSION));
        map.insert("command".into(), Value::from(cfg.command));
        map.insert("config_sha256".into(), Value::from(cfg.sha256()));
        Self { map }
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        let v = if x.is_finite() {
            Value::from(round9(x))
        } else {
            Value::Null
        };
        self.map.insert(key.into(), v);
        self
    }

    pub fn opt_num(self, key: &str, x: Option<f64>) -> Self {
        match x {
            Some(x) => self.num(key, x),
            None => self.value(key, Value::Null),
        }
    }

    pub fn flag(self, key: &str, b: bool) -> Self {
        self.value(key, Value::Bool(b))
    }

    pub fn text(self, key: &str, s: &str) -> Self {
        self.value(key, Value::from(s))
    }

    pub fn value(mut self, key: &str, v: Value) -> Self {
        self.map.insert(key.into(), v);
        self
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.map).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path.display(), e))
    }
}
