//! Table serialization.
//!
//! CSV floats are written as `{:.16e}` (17 significant digits, exact round
//! trip). Missing values are empty cells; a gap that does not exist (no excited
//! level) is written as `NA`. JSON output uses the shortest round-trip float
//! representation and `null` for missing values.

use std::io::Write;

use serde::Serialize;

use super::experiments::{CapRow, EventFrequencyReport, ResultRow};
use crate::certificate::Certificate;
use crate::error::Result;
use crate::spectral::SolverKind;

pub const SWEEP_HEADER: [&str; 20] = [
    "trial",
    "master_seed",
    "d",
    "r",
    "lattice",
    "k",
    "size",
    "ground_energy",
    "kernel_dim",
    "gap",
    "frustration_free",
    "solver",
    "coupling_norm",
    "gamma_loc",
    "gamma_loc_lb",
    "chain_bound",
    "tree_bound",
    "verdict",
    "error",
    "wall_time_s",
];

pub const EVENT_HEADER: [&str; 14] = [
    "d",
    "r",
    "epsilon",
    "master_seed",
    "trials",
    "failed",
    "hits",
    "frequency",
    "wilson_low",
    "wilson_high",
    "standard_error",
    "landing_bound",
    "cap_exact",
    "z_score",
];

pub const CAP_HEADER: [&str; 8] = [
    "n",
    "delta",
    "exact",
    "lower_bound",
    "samples",
    "monte_carlo",
    "standard_error",
    "z_score",
];

pub const CERTIFICATE_HEADER: [&str; 12] = [
    "d",
    "r",
    "master_seed",
    "stream_index",
    "coupling_norm",
    "product_norm",
    "meet_rank",
    "gamma_loc",
    "gamma_loc_lb",
    "chain_bound",
    "verdict",
    "tree_bounds",
];

/// `{:.16e}`, the CSV float format.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn solver_str(s: SolverKind) -> &'static str {
    match s {
        SolverKind::Dense => "dense",
        SolverKind::Iterative => "iterative",
    }
}

fn sweep_record(row: &ResultRow) -> Vec<String> {
    let gap = if row.gap_not_applicable() {
        "NA".to_string()
    } else {
        opt_f(row.gap)
    };
    vec![
        row.trial.to_string(),
        row.master_seed.to_string(),
        row.d.to_string(),
        row.r.to_string(),
        row.lattice.as_str().to_string(),
        opt(row.k),
        opt(row.size),
        opt_f(row.ground_energy),
        opt(row.kernel_dim),
        gap,
        opt(row.frustration_free),
        row.solver.map(solver_str).unwrap_or_default().to_string(),
        opt_f(row.coupling_norm),
        opt_f(row.gamma_loc),
        opt_f(row.gamma_loc_lb),
        opt_f(row.chain_bound),
        opt_f(row.tree_bound),
        row.verdict.map(|v| v.as_str()).unwrap_or_default().to_string(),
        row.error.clone().unwrap_or_default(),
        opt_f(row.wall_time_s),
    ]
}

fn write_table<W: Write>(w: W, header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for rec in records {
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    write_table(w, &SWEEP_HEADER, rows.iter().map(sweep_record))
}

pub fn write_event_csv<W: Write>(w: W, rep: &EventFrequencyReport) -> Result<()> {
    let rec = vec![
        rep.d.to_string(),
        rep.r.to_string(),
        fmt_f64(rep.epsilon),
        rep.master_seed.to_string(),
        rep.trials.to_string(),
        rep.failed.to_string(),
        rep.hits.to_string(),
        opt_f(rep.frequency),
        opt_f(rep.wilson_low),
        opt_f(rep.wilson_high),
        opt_f(rep.standard_error),
        opt_f(rep.landing_bound),
        opt_f(rep.cap_exact),
        opt_f(rep.z_score),
    ];
    write_table(w, &EVENT_HEADER, std::iter::once(rec))
}

pub fn write_cap_csv<W: Write>(w: W, rows: &[CapRow]) -> Result<()> {
    write_table(
        w,
        &CAP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.delta),
                fmt_f64(r.exact),
                opt_f(r.lower_bound),
                r.samples.to_string(),
                opt_f(r.monte_carlo),
                opt_f(r.standard_error),
                opt_f(r.z_score),
            ]
        }),
    )
}

/// One-row summary of a certificate; tree bounds as `k:bound` pairs joined by `;`.
pub fn write_certificate_csv<W: Write>(w: W, c: &Certificate) -> Result<()> {
    let trees = c
        .tree_bounds
        .iter()
        .map(|(k, b)| format!("{k}:{}", fmt_f64(*b)))
        .collect::<Vec<_>>()
        .join(";");
    let rec = vec![
        c.d.to_string(),
        c.r.to_string(),
        opt(c.seed.map(|s| s.master_seed)),
        opt(c.seed.map(|s| s.stream_index)),
        fmt_f64(c.coupling_norm),
        fmt_f64(c.product_norm),
        c.meet_rank.to_string(),
        fmt_f64(c.gamma_loc),
        fmt_f64(c.gamma_loc_lb),
        fmt_f64(c.chain_bound),
        c.verdict.as_str().to_string(),
        trees,
    ];
    write_table(w, &CERTIFICATE_HEADER, std::iter::once(rec))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
