//! Configuration, seeded parallel experiments and result tables.
//!
//! Every trial draws its randomness from `RandomSeed::new(master_seed, trial)`
//! only, trials run on a rayon pool and results are collected in trial order,
//! so output files depend on the config alone and not on the thread count.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};

pub use config::{CapGrid, ExperimentConfig, FamilyKind, Mode, OutputFormat, Overrides};
pub use experiments::{
    read_projector, run_cap_table, run_certify_one, run_event_frequency, run_gap_sweep,
    run_tree_gap, wilson_interval, CapRow, EventFrequencyReport, LatticeLabel, ResultRow,
    SweepSummary, SweepTable, SOUNDNESS_TOL, WILSON_Z,
};
pub use output::{
    fmt_f64, to_json, write_cap_csv, write_certificate_csv, write_event_csv, write_sweep_csv,
    CAP_HEADER, CERTIFICATE_HEADER, EVENT_HEADER, SWEEP_HEADER,
};

use crate::certificate::Certificate;
use crate::error::Result;

/// Result of any experiment mode.
#[derive(Debug, Clone)]
pub enum RunOutput {
    Sweep(SweepTable),
    EventFrequency(EventFrequencyReport),
    CapTable(Vec<CapRow>),
    Certificate(Certificate),
}

impl RunOutput {
    /// Number of trials that recorded an error.
    pub fn failed_trials(&self) -> usize {
        match self {
            RunOutput::Sweep(t) => t.summary.failed,
            RunOutput::EventFrequency(r) => r.failed,
            RunOutput::CapTable(_) | RunOutput::Certificate(_) => 0,
        }
    }

    /// The main output document.
    pub fn render(&self, format: OutputFormat) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match (self, format) {
            (RunOutput::Sweep(t), OutputFormat::Csv) => write_sweep_csv(&mut buf, &t.rows)?,
            (RunOutput::EventFrequency(r), OutputFormat::Csv) => write_event_csv(&mut buf, r)?,
            (RunOutput::CapTable(rows), OutputFormat::Csv) => write_cap_csv(&mut buf, rows)?,
            (RunOutput::Certificate(c), OutputFormat::Csv) => write_certificate_csv(&mut buf, c)?,
            (RunOutput::Sweep(t), OutputFormat::Json) => buf = to_json(t)?.into_bytes(),
            (RunOutput::EventFrequency(r), OutputFormat::Json) => buf = to_json(r)?.into_bytes(),
            (RunOutput::CapTable(rows), OutputFormat::Json) => buf = to_json(rows)?.into_bytes(),
            (RunOutput::Certificate(c), OutputFormat::Json) => buf = to_json(c)?.into_bytes(),
        }
        Ok(buf)
    }

    /// Short human-readable digest (JSON) for the console.
    pub fn summary_json(&self) -> Result<Option<String>> {
        Ok(match self {
            RunOutput::Sweep(t) => Some(to_json(&t.summary)?),
            RunOutput::EventFrequency(r) => Some(to_json(r)?),
            _ => None,
        })
    }

    /// Writes the document to `out`; sweeps in CSV also get `<out>.summary.json`.
    pub fn write_to(&self, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        std::fs::write(out, self.render(format)?)?;
        let mut written = vec![out.to_path_buf()];
        if let (RunOutput::Sweep(t), OutputFormat::Csv) = (self, format) {
            let mut side = out.as_os_str().to_owned();
            side.push(".summary.json");
            let side = PathBuf::from(side);
            std::fs::write(&side, to_json(&t.summary)?)?;
            written.push(side);
        }
        Ok(written)
    }
}

/// Dispatches on `cfg.mode`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    Ok(match cfg.mode {
        Mode::GapSweep => RunOutput::Sweep(run_gap_sweep(cfg)?),
        Mode::TreeGap => RunOutput::Sweep(run_tree_gap(cfg)?),
        Mode::EventFrequency => RunOutput::EventFrequency(run_event_frequency(cfg)?),
        Mode::CapTable => RunOutput::CapTable(run_cap_table(cfg)?),
        Mode::CertifyOne => RunOutput::Certificate(run_certify_one(cfg)?),
    })
}
