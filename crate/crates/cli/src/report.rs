//! JSON run reports and plain-text tables.

use std::fmt::Write as _;

use lasserre::relax::{HierarchyResult, OrderRecord};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::problem_file::ProblemFile;

pub const SCHEMA: &str = "lasserre-run/1";

/// `v` rounded to `digits` significant digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

/// `v` with `digits` significant digits, in fixed notation when that stays short.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{:.*e}", digits - 1, v)
    }
}

#[derive(Debug, Serialize)]
pub struct ProblemDigest {
    pub variables: usize,
    pub equalities: usize,
    pub inequalities: usize,
    /// SHA-256 of the printed problem file.
    pub sha256: String,
}

impl ProblemDigest {
    pub fn new(file: &ProblemFile) -> Self {
        let text = file.to_string();
        let hash = Sha256::digest(text.as_bytes());
        ProblemDigest {
            variables: file.problem.n(),
            equalities: file.problem.equalities().len(),
            inequalities: file.problem.inequalities().len(),
            sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RecordOut {
    pub k: u32,
    pub kind: &'static str,
    pub side: &'static str,
    pub bound: Option<f64>,
    pub status: String,
    pub ranks: Vec<usize>,
    pub flat: bool,
    pub flat_order: Option<u32>,
    pub points: Vec<Vec<f64>>,
    pub regularized: bool,
    pub solve_ms: f64,
    pub iterations: usize,
    pub skipped_products: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const DIGITS: usize = 12;

impl From<&OrderRecord> for RecordOut {
    fn from(r: &OrderRecord) -> Self {
        RecordOut {
            k: r.k,
            kind: r.kind,
            side: r.side.as_str(),
            bound: r.bound.map(|b| round_sig(b, DIGITS)),
            status: r.status.clone(),
            ranks: r.ranks.clone(),
            flat: r.flat,
            flat_order: r.flat_order,
            points: r
                .points
                .iter()
                .map(|p| p.iter().map(|v| round_sig(*v, DIGITS)).collect())
                .collect(),
            regularized: r.regularized,
            solve_ms: round_sig(r.solve_ms, 6),
            iterations: r.iterations,
            skipped_products: r.skipped_products.clone(),
            error: r.error.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub problem: ProblemDigest,
    pub transform: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub records: Vec<RecordOut>,
    pub stabilized_at: Option<u32>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn new(
        file: &ProblemFile,
        transform: Option<String>,
        seed: u64,
        threads: usize,
        result: &HierarchyResult,
        wall_ms: f64,
    ) -> Self {
        RunReport {
            schema: SCHEMA,
            problem: ProblemDigest::new(file),
            transform,
            seed,
            threads,
            records: result.records.iter().map(RecordOut::from).collect(),
            stabilized_at: result.stabilized_at,
            wall_ms: round_sig(wall_ms, 6),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One line per record: order, side, bound, status, ranks, flatness and points.
pub fn table(records: &[OrderRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3}  {:<6}  {:>14}  {:<26}  {:<5}  ranks / points",
        "k", "side", "bound", "status", "flat"
    );
    for r in records {
        let bound = r.bound.map_or_else(|| "-".to_string(), |b| format_sig(b, 6));
        let flat = match r.flat_order {
            Some(t) => format!("t={t}"),
            None => "no".into(),
        };
        let mut tail = if r.ranks.is_empty() {
            String::new()
        } else {
            format!("{:?}", r.ranks)
        };
        for p in &r.points {
            let coords: Vec<String> = p.iter().map(|v| format_sig(*v, 6)).collect();
            let _ = write!(tail, " ({})", coords.join(", "));
        }
        if let Some(e) = &r.error {
            let _ = write!(tail, " error: {e}");
        }
        let _ = writeln!(
            out,
            "{:>3}  {:<6}  {:>14}  {:<26}  {:<5}  {}",
            r.k,
            r.side.as_str(),
            bound,
            r.status,
            flat,
            tail.trim_start()
        );
    }
    out
}
