//! Per-iteration metrics and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "iter,comm_rounds,gradient_evals,stationarity,consensus,feasibility,dist_solution,fval,surrogate_norm,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub comm_rounds: usize,
    pub gradient_evals: usize,
    /// `‖grad f(polar(x̄))‖_F`.
    pub stationarity: f64,
    /// `‖𝐗 − 𝐗̄‖_F`.
    pub consensus: f64,
    /// `‖x̄ᵀx̄ − I‖_F`.
    pub feasibility: f64,
    /// Procrustes distance from `polar(x̄)` to the reference, when one exists.
    pub dist_solution: Option<f64>,
    /// `f(polar(x̄))`.
    pub fval: f64,
    /// `‖H(x̄)‖_F`.
    pub surrogate_norm: f64,
    pub wall_ms: f64,
}

/// 17 significant digits: enough for every `f64` to round-trip exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(rec: &TraceRecord) -> String {
    let dist = rec.dist_solution.map(format_float).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        rec.iter,
        rec.comm_rounds,
        rec.gradient_evals,
        format_float(rec.stationarity),
        format_float(rec.consensus),
        format_float(rec.feasibility),
        dist,
        format_float(rec.fval),
        format_float(rec.surrogate_norm),
        format_float(rec.wall_ms),
    )
}

pub fn write_csv<W: Write>(trace: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for rec in trace {
        writeln!(out, "{}", row(rec))?;
    }
    out.flush()
}

pub fn emit_csv(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(trace, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Format(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |field: &str| Error::Format(format!("{}: row {}: bad {field}", path.display(), line + 1));
        let int = |i: usize, name: &str| rec[i].parse::<usize>().map_err(|_| bad(name));
        let float = |i: usize, name: &str| rec[i].parse::<f64>().map_err(|_| bad(name));
        out.push(TraceRecord {
            iter: int(0, "iter")?,
            comm_rounds: int(1, "comm_rounds")?,
            gradient_evals: int(2, "gradient_evals")?,
            stationarity: float(3, "stationarity")?,
            consensus: float(4, "consensus")?,
            feasibility: float(5, "feasibility")?,
            dist_solution: if rec[6].is_empty() {
                None
            } else {
                Some(float(6, "dist_solution")?)
            },
            fval: float(7, "fval")?,
            surrogate_norm: float(8, "surrogate_norm")?,
            wall_ms: float(9, "wall_ms")?,
        });
    }
    Ok(out)
}
