//! Deterministic text output: JSON records, CSV tables and grid checkpoints.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips bit-exactly. Non-finite values become the strings `"inf"`,
//! `"-inf"` and `"nan"`; not-applicable fields are `null` in JSON and `nan`
//! in CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{CircumferenceWidth, EmbeddedSurface};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::flow::{DiagnosticReport, RmaxSeries, Scheme};
use crate::geometry::InvariantReport;
use crate::grid::{Chart, ConformalGrid, GridLayout};
use crate::rescaling::{RescalingPick, TypeReport};

/// Bare (unquoted) decimal form; non-finite values are spelled out.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn json_f64(x: f64) -> String {
    if x.is_finite() {
        format_f64(x)
    } else {
        format!("\"{}\"", format_f64(x))
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Flat JSON object with fields kept in insertion order.
#[derive(Debug, Clone, Default)]
pub struct JsonRecord {
    fields: Vec<(String, String)>,
}

impl JsonRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        self.fields.push((key.into(), json_f64(x)));
        self
    }

    pub fn opt(mut self, key: &str, x: Option<f64>) -> Self {
        self.fields.push((key.into(), x.map_or_else(|| "null".into(), json_f64)));
        self
    }

    pub fn int(mut self, key: &str, x: i64) -> Self {
        self.fields.push((key.into(), x.to_string()));
        self
    }

    pub fn boolean(mut self, key: &str, x: bool) -> Self {
        self.fields.push((key.into(), x.to_string()));
        self
    }

    pub fn text(mut self, key: &str, s: &str) -> Self {
        self.fields.push((key.into(), json_str(s)));
        self
    }

    pub fn nums(mut self, key: &str, xs: &[f64]) -> Self {
        let items: Vec<String> = xs.iter().map(|&x| json_f64(x)).collect();
        self.fields.push((key.into(), format!("[{}]", items.join(", "))));
        self
    }

    pub fn texts(mut self, key: &str, xs: &[String]) -> Self {
        let items: Vec<String> = xs.iter().map(|s| json_str(s)).collect();
        self.fields.push((key.into(), format!("[{}]", items.join(", "))));
        self
    }

    /// Nests an already rendered JSON value.
    pub fn raw(mut self, key: &str, rendered: String) -> Self {
        self.fields.push((key.into(), rendered));
        self
    }

    pub fn render(&self) -> String {
        self.render_indented(0)
    }

    /// Renders as if nested `depth` levels deep.
    pub fn render_indented(&self, depth: usize) -> String {
        if self.fields.is_empty() {
            return "{}".into();
        }
        let pad = "  ".repeat(depth + 1);
        let mut out = String::from("{\n");
        for (k, (key, value)) in self.fields.iter().enumerate() {
            let sep = if k + 1 < self.fields.len() { "," } else { "" };
            let _ = writeln!(out, "{pad}{}: {value}{sep}", json_str(key));
        }
        out.push_str(&"  ".repeat(depth));
        out.push('}');
        out
    }
}

/// Top-level JSON array of records, one per element, newline-terminated.
pub fn render_array(records: &[JsonRecord]) -> String {
    if records.is_empty() {
        return "[]\n".into();
    }
    let items: Vec<String> = records.iter().map(|r| format!("  {}", r.render_indented(1))).collect();
    format!("[\n{}\n]\n", items.join(",\n"))
}

/// Comma-separated table with a fixed header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable { header: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.header
    }

    /// Appends a row; `None` is written as `nan`.
    pub fn push(&mut self, row: &[Option<f64>]) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        let cells: Vec<String> = row.iter().map(|x| format_f64(x.unwrap_or(f64::NAN))).collect();
        self.rows.push(cells.join(","));
    }

    pub fn push_values(&mut self, row: &[f64]) {
        let row: Vec<Option<f64>> = row.iter().map(|&x| Some(x)).collect();
        self.push(&row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Parses one CSV cell written by [`CsvTable`].
pub fn parse_cell(cell: &str) -> Result<f64> {
    match cell.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        s => s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}"))),
    }
}

/// Writes `contents` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Column order of invariant rows.
pub const INVARIANT_COLUMNS: [&str; 8] =
    ["t", "tau", "aperture", "circumference", "avr", "r_max", "hartman_defect_length", "hartman_defect_area"];

fn invariant_values(r: &InvariantReport) -> [Option<f64>; 8] {
    [
        Some(r.t),
        Some(r.tau),
        r.aperture,
        r.circumference,
        r.avr,
        Some(r.r_max),
        r.hartman_defect_length,
        r.hartman_defect_area,
    ]
}

pub fn invariant_record(r: &InvariantReport) -> JsonRecord {
    INVARIANT_COLUMNS
        .iter()
        .zip(invariant_values(r))
        .fold(JsonRecord::new(), |rec, (key, v)| rec.opt(key, v))
}

pub fn invariant_table(reports: &[InvariantReport]) -> CsvTable {
    let mut table = CsvTable::new(&INVARIANT_COLUMNS);
    for r in reports {
        table.push(&invariant_values(r));
    }
    table
}

/// Pick record; `profile_distance` is `null` when the profile was not compared.
pub fn pick_record(pick: &RescalingPick, profile_distance: Option<f64>) -> JsonRecord {
    JsonRecord::new()
        .int("j", pick.j as i64)
        .num("T_j", pick.t_window)
        .num("gamma_j", pick.gamma)
        .num("t_j", pick.t_j)
        .num("x_j", pick.x_j)
        .num("M_j", pick.m_j)
        .num("alpha_j", pick.alpha)
        .num("omega_j", pick.omega)
        .opt("profile_distance", profile_distance)
}

pub const RMAX_COLUMNS: [&str; 2] = ["t", "r_max"];

pub fn rmax_table(series: &RmaxSeries) -> CsvTable {
    let mut table = CsvTable::new(&RMAX_COLUMNS);
    for &(t, r) in &series.points {
        table.push_values(&[t, r]);
    }
    table
}

pub fn diagnostics_record(d: &DiagnosticReport) -> JsonRecord {
    JsonRecord::new()
        .num("f_defect", d.f_defect)
        .num("harnack_defect", d.harnack_defect)
        .num("harnack_origin", d.harnack_origin)
        .num("length_evolution_defect", d.length_evolution_defect)
        .nums("m_of_t_times", &d.m_of_t.iter().map(|p| p.0).collect::<Vec<_>>())
        .nums("m_of_t_values", &d.m_of_t.iter().map(|p| p.1).collect::<Vec<_>>())
}

pub const TYPE_COLUMNS: [&str; 3] = ["T", "S", "growth"];

/// `S(T)` per window; the growth column is `nan` for the first window.
pub fn type_table(report: &TypeReport) -> CsvTable {
    let mut table = CsvTable::new(&TYPE_COLUMNS);
    for (k, &(t, s)) in report.samples.iter().enumerate() {
        let growth = k.checked_sub(1).and_then(|i| report.growth.get(i)).copied();
        table.push(&[Some(t), Some(s), growth]);
    }
    table
}

pub fn type_record(report: &TypeReport) -> JsonRecord {
    let verdict = serde_json::to_value(report.verdict).expect("verdict serializes");
    JsonRecord::new()
        .text("verdict", verdict.as_str().unwrap_or_default())
        .text("label", &report.label)
        .nums("growth", &report.growth)
}

pub const SURFACE_COLUMNS: [&str; 3] = ["s", "r", "z"];

pub fn surface_table(surface: &EmbeddedSurface) -> CsvTable {
    let mut table = CsvTable::new(&SURFACE_COLUMNS);
    for k in 0..surface.s.len() {
        table.push_values(&[surface.s[k], surface.r[k], surface.z[k]]);
    }
    table
}

pub fn width_record(cw: &CircumferenceWidth) -> JsonRecord {
    JsonRecord::new()
        .num("circumference", cw.circumference)
        .num("width", cw.width)
        .num("raw", cw.raw)
        .num("decay_rate", cw.decay_rate)
        .num("tail_slope", cw.tail_slope)
        .boolean("rotationally_symmetric", cw.rotationally_symmetric)
}

/// On-disk form of a grid: a header plus the node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub chart: Chart,
    pub n: usize,
    pub x0: f64,
    pub h: f64,
    pub t: f64,
    pub scheme: Option<Scheme>,
    pub provenance: Option<ExactSolution>,
    pub u: Vec<f64>,
}

impl Checkpoint {
    pub fn from_grid(grid: &ConformalGrid, scheme: Option<Scheme>) -> Self {
        let l = grid.layout;
        Checkpoint { chart: l.chart, n: l.n, x0: l.x0, h: l.h, t: grid.t, scheme, provenance: grid.provenance, u: grid.u.clone() }
    }

    pub fn to_grid(&self) -> Result<ConformalGrid> {
        let layout = GridLayout { chart: self.chart, x0: self.x0, h: self.h, n: self.n };
        ConformalGrid::new(layout, self.u.clone(), self.t, self.provenance)
    }

    pub fn render(&self) -> String {
        JsonRecord::new()
            .raw("chart", to_json(&self.chart))
            .int("n", self.n as i64)
            .num("x0", self.x0)
            .num("h", self.h)
            .num("t", self.t)
            .raw("scheme", to_json(&self.scheme))
            .raw("provenance", to_json(&self.provenance))
            .nums("u", &self.u)
            .render()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if c.u.len() != c.n {
            return Err(Error::Parse(format!("header says {} nodes, found {}", c.n, c.u.len())));
        }
        Ok(c)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("header fields serialize")
}

pub fn write_checkpoint(path: &Path, grid: &ConformalGrid, scheme: Option<Scheme>) -> Result<()> {
    write_atomic(path, &(Checkpoint::from_grid(grid, scheme).render() + "\n"))
}

pub fn read_checkpoint(path: &Path) -> Result<ConformalGrid> {
    Checkpoint::parse(&std::fs::read_to_string(path)?)?.to_grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rosenau_layout, sample_grid};

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_f64(f64::INFINITY), "inf");
        assert!(parse_cell("nan").unwrap().is_nan());
        assert_eq!(json_f64(f64::NEG_INFINITY), "\"-inf\"");
    }

    #[test]
    fn checkpoint_is_bit_exact() {
        let g = sample_grid(&ExactSolution::Rosenau, rosenau_layout(20.0, 101).unwrap(), -1.7).unwrap();
        let text = Checkpoint::from_grid(&g, Some(Scheme::SemiImplicit)).render();
        let back = Checkpoint::parse(&text).unwrap().to_grid().unwrap();
        assert_eq!(back.layout, g.layout);
        assert_eq!(back.t.to_bits(), g.t.to_bits());
        assert!(back.u.iter().zip(&g.u).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.provenance, g.provenance);
    }

    #[test]
    fn csv_marks_missing_values() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(&[Some(1.0), None]);
        assert_eq!(t.render(), "a,b\n1.0000000000000000e0,nan\n");
    }
}
