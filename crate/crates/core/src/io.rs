//! File formats: POVM and ensemble files, characterization reports, Wigner
//! grids and herald scan tables.
//!
//! Structured files are JSON. Every float is written in scientific notation
//! with 17 significant digits, so a load followed by a save reproduces the
//! original bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::detector::{validate_matrices, Povm, PovmElement};
use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::herald::LimitScan;
use crate::phase_space::{NonClassicalityReport, PhaseSpaceGrid, WignerGrid, CONVENTION};
use crate::retrodiction::{EstimatorReport, ProbeEnsemble, ProbeEntry, Thresholds};
use crate::tol::Tolerances;

pub const FORMAT_VERSION: &str = "1";

/// Containers nested deeper than this are written on a single line.
const PRETTY_DEPTH: usize = 4;

/// Pretty JSON with full-precision floats and compact inner arrays.
struct PreciseFormatter {
    depth: usize,
    has_value: Vec<bool>,
}

impl PreciseFormatter {
    fn new() -> Self {
        PreciseFormatter {
            depth: 0,
            has_value: Vec::new(),
        }
    }

    fn pretty(&self) -> bool {
        self.depth <= PRETTY_DEPTH
    }

    fn open<W: ?Sized + io::Write>(&mut self, w: &mut W, bracket: &[u8]) -> io::Result<()> {
        self.depth += 1;
        self.has_value.push(false);
        w.write_all(bracket)
    }

    fn close<W: ?Sized + io::Write>(&mut self, w: &mut W, bracket: &[u8]) -> io::Result<()> {
        let had = self.has_value.pop().unwrap_or(false);
        let pretty = self.pretty();
        self.depth -= 1;
        if had && pretty {
            w.write_all(b"\n")?;
            self.indent(w)?;
        }
        w.write_all(bracket)
    }

    fn separator<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if self.pretty() {
            w.write_all(if first { b"\n" } else { b",\n" })?;
            self.indent(w)
        } else if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn indent<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        for _ in 0..self.depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn mark(&mut self) {
        if let Some(v) = self.has_value.last_mut() {
            *v = true;
        }
    }
}

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(w, b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.separator(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.mark();
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(w, b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.separator(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.mark();
        Ok(())
    }
}

/// Scientific notation with 17 significant digits, e.g. `5.0000000000000000e-1`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` as JSON in the crate's canonical layout, with a
/// trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::new());
    value.serialize(&mut ser).map_err(|e| Error::Parse {
        context: "serialization".into(),
        message: e.to_string(),
    })?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })
}

fn parse_error(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn check_version(version: &str, source: &str) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(parse_error(
            format!("{source}: format_version"),
            format!("unsupported version `{version}`, expected `{FORMAT_VERSION}`"),
        ));
    }
    Ok(())
}

/// `dim × dim` rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn rows_to_matrix(rows: &MatrixRows, dim: usize, context: &str) -> Result<CMatrix> {
    if rows.len() != dim {
        return Err(parse_error(
            context,
            format!("expected {dim} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(parse_error(
                format!("{context}[{i}]"),
                format!("expected {dim} entries, found {}", row.len()),
            ));
        }
        if let Some(j) = row
            .iter()
            .position(|z| !z[0].is_finite() || !z[1].is_finite())
        {
            return Err(parse_error(
                format!("{context}[{i}][{j}]"),
                "non-finite entry",
            ));
        }
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub label: String,
    pub matrix: MatrixRows,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub format_version: String,
    pub dim: usize,
    pub guard_levels: usize,
    pub outcomes: Vec<OutcomeRecord>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl PovmFile {
    pub fn from_povm(p: &Povm) -> Self {
        PovmFile {
            format_version: FORMAT_VERSION.into(),
            dim: p.dim().get(),
            guard_levels: p.guard_levels(),
            outcomes: p
                .elements()
                .iter()
                .map(|e| OutcomeRecord {
                    label: e.label().to_string(),
                    matrix: matrix_to_rows(e.operator().matrix()),
                })
                .collect(),
            metadata: p.metadata().clone(),
        }
    }

    /// Checks structure, then validates the POVM; a failed validation is
    /// returned as [`Error::InvalidPovm`] carrying the full report.
    pub fn into_povm(self, tol: &Tolerances, source: &str) -> Result<Povm> {
        check_version(&self.format_version, source)?;
        if self.outcomes.is_empty() {
            return Err(parse_error(format!("{source}: outcomes"), "no outcomes"));
        }
        let labeled = self
            .outcomes
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let m = rows_to_matrix(
                    &o.matrix,
                    self.dim,
                    &format!("{source}: outcomes[{k}].matrix"),
                )?;
                Ok((o.label.clone(), m))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.guard_levels >= self.dim {
            return Err(parse_error(
                format!("{source}: guard_levels"),
                format!("{} must be below dim {}", self.guard_levels, self.dim),
            ));
        }
        let report = validate_matrices(&labeled, self.guard_levels, tol.completeness_tol)?;
        if !report.pass {
            return Err(Error::InvalidPovm(Box::new(report)));
        }
        let elements = labeled
            .into_iter()
            .map(|(label, m)| Ok(PovmElement::new(label, HermitianOperator::new(m)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut p = Povm::new(elements, self.guard_levels)?;
        p.set_metadata(self.metadata);
        Ok(p)
    }
}

pub fn povm_to_string(p: &Povm) -> Result<String> {
    to_canonical_json(&PovmFile::from_povm(p))
}

pub fn povm_from_str(text: &str, tol: &Tolerances, source: &str) -> Result<Povm> {
    parse_json::<PovmFile>(text, source)?.into_povm(tol, source)
}

pub fn save_povm(p: &Povm, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &povm_to_string(p)?)
}

pub fn load_povm(path: impl AsRef<Path>) -> Result<Povm> {
    load_povm_with(path, &Tolerances::default())
}

pub fn load_povm_with(path: impl AsRef<Path>, tol: &Tolerances) -> Result<Povm> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    povm_from_str(&text, tol, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub label: String,
    pub prior: f64,
    pub matrix: MatrixRows,
}

/// Probe ensemble file: a [`PovmFile`] whose entries are density matrices
/// with priors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub format_version: String,
    pub dim: usize,
    pub entries: Vec<EnsembleRecord>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl EnsembleFile {
    pub fn from_ensemble(e: &ProbeEnsemble) -> Self {
        EnsembleFile {
            format_version: FORMAT_VERSION.into(),
            dim: e.dim().get(),
            entries: e
                .entries()
                .iter()
                .map(|x| EnsembleRecord {
                    label: x.label.clone(),
                    prior: x.prior,
                    matrix: matrix_to_rows(x.state.matrix()),
                })
                .collect(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn into_ensemble(self, source: &str) -> Result<ProbeEnsemble> {
        check_version(&self.format_version, source)?;
        let entries = self
            .entries
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                let context = format!("{source}: entries[{k}]");
                let m = rows_to_matrix(&r.matrix, self.dim, &format!("{context}.matrix"))?;
                let state =
                    DensityMatrix::new(m).map_err(|e| parse_error(&context, e.to_string()))?;
                Ok(ProbeEntry {
                    prior: r.prior,
                    state,
                    label: r.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProbeEnsemble::new(entries)
    }
}

pub fn save_ensemble(e: &ProbeEnsemble, path: impl AsRef<Path>) -> Result<()> {
    write_text(
        path.as_ref(),
        &to_canonical_json(&EnsembleFile::from_ensemble(e))?,
    )
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<ProbeEnsemble> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let text = fs::read_to_string(path)?;
    parse_json::<EnsembleFile>(&text, &source)?.into_ensemble(&source)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullOutcomeRecord {
    pub label: String,
    pub trace: f64,
}

/// Output of a characterization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: String,
    pub tool: String,
    pub tool_version: String,
    /// Hex SHA-256 of the input POVM file bytes.
    pub input_digest: String,
    pub dim: usize,
    pub thresholds: Thresholds,
    pub rows: Vec<EstimatorReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub null_outcomes: Vec<NullOutcomeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonclassicality: Option<Vec<NonClassicalityReport>>,
}

/// An estimator identity that does not hold in a persisted report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityViolation {
    pub outcome_label: String,
    pub identity: &'static str,
    pub residual: f64,
}

impl ReportFile {
    /// Rechecks `ζ = π·Tr{Π}` and `κ·π = ζ·F` on every row as stored.
    pub fn verify(&self, tol: f64) -> Vec<IdentityViolation> {
        let mut out = Vec::new();
        for r in &self.rows {
            let a = r.ideality_residual();
            if a.is_nan() || a > tol {
                out.push(IdentityViolation {
                    outcome_label: r.outcome_label.clone(),
                    identity: "ideality = projectivity * trace",
                    residual: a,
                });
            }
            let b = r.estimator_identity_residual();
            if b.is_nan() || b > tol {
                out.push(IdentityViolation {
                    outcome_label: r.outcome_label.clone(),
                    identity: "detectivity * projectivity = ideality * fidelity",
                    residual: b,
                });
            }
        }
        out
    }
}

pub fn save_report(r: &ReportFile, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &to_canonical_json(r)?)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let r: ReportFile = parse_json(&text, &path.display().to_string())?;
    check_version(&r.format_version, &path.display().to_string())?;
    Ok(r)
}

/// Writes `#` header lines followed by `x,p,W` rows, `x` varying slowest.
pub fn write_wigner_dsv<W: Write>(mut out: W, w: &WignerGrid, outcome_label: &str) -> Result<()> {
    let g = &w.grid;
    writeln!(out, "# wigner function of the retrodicted state")?;
    writeln!(out, "# outcome: {outcome_label}")?;
    writeln!(out, "# convention: {CONVENTION}")?;
    writeln!(
        out,
        "# x: {} {} {}",
        format_float(g.x_min),
        format_float(g.x_max),
        g.nx
    )?;
    writeln!(
        out,
        "# p: {} {} {}",
        format_float(g.p_min),
        format_float(g.p_max),
        g.np
    )?;
    writeln!(out, "x,p,W")?;
    for i in 0..g.nx {
        for j in 0..g.np {
            writeln!(
                out,
                "{},{},{}",
                format_float(g.x(i)),
                format_float(g.p(j)),
                format_float(w.values[(i, j)])
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_float(s: &str, context: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| parse_error(context, format!("`{s}`: {e}")))
}

fn parse_axis(rest: &str, line: usize) -> Result<(f64, f64, usize)> {
    let context = format!("line {line}");
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(parse_error(context, "axis header needs `min max n`"));
    }
    let n = parts[2]
        .parse::<usize>()
        .map_err(|e| parse_error(&context, e.to_string()))?;
    Ok((
        parse_float(parts[0], &context)?,
        parse_float(parts[1], &context)?,
        n,
    ))
}

/// Reads a grid written by [`write_wigner_dsv`].
pub fn read_wigner_dsv<R: BufRead>(input: R) -> Result<WignerGrid> {
    let mut x_axis = None;
    let mut p_axis = None;
    let mut samples = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let n = k + 1;
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if let Some(rest) = h.strip_prefix("x:") {
                x_axis = Some(parse_axis(rest, n)?);
            } else if let Some(rest) = h.strip_prefix("p:") {
                p_axis = Some(parse_axis(rest, n)?);
            }
            continue;
        }
        if line.trim().is_empty() || line.starts_with('x') {
            continue;
        }
        let context = format!("line {n}");
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_error(context, "expected 3 fields"));
        }
        samples.push(parse_float(fields[2], &context)?);
    }
    let (x_min, x_max, nx) = x_axis.ok_or_else(|| parse_error("header", "missing x axis"))?;
    let (p_min, p_max, np) = p_axis.ok_or_else(|| parse_error("header", "missing p axis"))?;
    if samples.len() != nx * np {
        return Err(parse_error(
            "body",
            format!("expected {} rows, found {}", nx * np, samples.len()),
        ));
    }
    let grid = PhaseSpaceGrid::new(x_min, x_max, p_min, p_max, nx, np)?;
    Ok(WignerGrid {
        grid,
        values: DMatrix::from_fn(nx, np, |i, j| samples[i * np + j]),
    })
}

/// Writes a herald scan as `lambda,fidelity,success_probability` rows.
pub fn write_scan_table<W: Write>(mut out: W, scan: &LimitScan) -> Result<()> {
    writeln!(
        out,
        "# heralded-state fidelity to the conjugate retrodicted state"
    )?;
    writeln!(out, "# outcome: {}", scan.outcome_label)?;
    writeln!(out, "# dim: {}", scan.dim)?;
    writeln!(
        out,
        "# monotone_nondecreasing: {}",
        scan.monotone_nondecreasing
    )?;
    writeln!(out, "# strictly_increasing: {}", scan.strictly_increasing)?;
    writeln!(out, "lambda,fidelity,success_probability")?;
    for p in &scan.points {
        writeln!(
            out,
            "{},{},{}",
            format_float(p.lambda),
            format_float(p.fidelity),
            format_float(p.success_probability)
        )?;
    }
    out.flush()?;
    Ok(())
}
