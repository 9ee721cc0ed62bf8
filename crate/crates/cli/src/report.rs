//! Solve reports in text, JSON and CSV form.

use std::fmt::Write as _;

use amg_core::hierarchy::{format_summary, LevelInfo};
use amg_core::AmgError;
use serde::{Deserialize, Serialize};

pub use crate::config::ReportFormat;

/// Bumped whenever a JSON field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    pub n: usize,
    pub nnz: usize,
    /// Empty on the finest level.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub problem: String,
    pub n: usize,
    pub nnz: usize,
    pub solver: String,
    pub converged: bool,
    pub iterations: usize,
    pub rel_residual: f64,
    pub c_gd: f64,
    pub c_op: f64,
    /// Seconds, millisecond resolution.
    pub setup_time: f64,
    pub solve_time: f64,
    pub total_time: f64,
    pub orphans: usize,
    pub levels: Vec<LevelRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

pub fn level_rows(levels: &[LevelInfo]) -> Vec<LevelRow> {
    levels
        .iter()
        .enumerate()
        .map(|(k, l)| LevelRow {
            level: k,
            n: l.n,
            nnz: l.nnz,
            ratio: l.ratio,
        })
        .collect()
}

pub fn millis(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

impl SolveReport {
    /// Copy with all wall times zeroed, for comparing runs.
    pub fn without_times(&self) -> Self {
        SolveReport {
            setup_time: 0.0,
            solve_time: 0.0,
            total_time: 0.0,
            ..self.clone()
        }
    }

    fn level_infos(&self) -> Vec<LevelInfo> {
        self.levels
            .iter()
            .map(|l| LevelInfo {
                n: l.n,
                nnz: l.nnz,
                ratio: l.ratio,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let rows: [(&str, String); 12] = [
            ("problem", self.problem.clone()),
            ("unknowns", self.n.to_string()),
            ("nonzeros", self.nnz.to_string()),
            ("solver", self.solver.clone()),
            ("converged", self.converged.to_string()),
            ("iterations", self.iterations.to_string()),
            ("residual", format!("{:.3e}", self.rel_residual)),
            ("C_gd", format!("{:.3}", self.c_gd)),
            ("C_op", format!("{:.3}", self.c_op)),
            ("T_p [s]", format!("{:.3}", self.setup_time)),
            ("T_s [s]", format!("{:.3}", self.solve_time)),
            ("T_t [s]", format!("{:.3}", self.total_time)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<12} {v}");
        }
        if self.orphans > 0 {
            let _ = writeln!(s, "{:<12} {}", "orphans", self.orphans);
        }
        s.push('\n');
        s.push_str(&format_summary(&self.level_infos()));
        if !self.history.is_empty() {
            s.push('\n');
            s.push_str(&amg_core::krylov::history_csv(&self.history));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The per-level table; see [`levels_from_csv`].
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.levels {
            w.serialize(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.to_text(),
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

pub fn levels_from_csv(text: &str) -> Result<Vec<LevelRow>, AmgError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| AmgError::Parse {
                line: k + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn from_json(text: &str) -> Result<SolveReport, AmgError> {
    let r: SolveReport = serde_json::from_str(text).map_err(|e| AmgError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(AmgError::Config(format!(
            "report schema {} is not supported (expected {SCHEMA_VERSION})",
            r.schema_version
        )));
    }
    Ok(r)
}
