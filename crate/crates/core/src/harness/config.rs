use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{max_ff_rank, ChainSpec, LatticeKind, TreeSpec, DENSE_LIMIT};
use crate::spectral::SolverMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GapSweep,
    EventFrequency,
    CapTable,
    CertifyOne,
    TreeGap,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::GapSweep => "gap-sweep",
            Mode::EventFrequency => "event-frequency",
            Mode::CapTable => "cap-table",
            Mode::CertifyOne => "certify-one",
            Mode::TreeGap => "tree-gap",
        }
    }
}

/// How each trial's orthonormal family is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    #[default]
    Haar,
    /// Random family within `epsilon` of the good vectors.
    NearGood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Cartesian grid of cap queries for the cap table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapGrid {
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
}

/// One experiment, loaded from a JSON document.
///
/// Fields that a mode does not use must be absent or left at their defaults;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub d: Option<usize>,
    pub r: Option<usize>,
    /// Chain lengths for exact gaps; empty means certificates only.
    #[serde(default)]
    pub lengths: Vec<usize>,
    /// Branching factor for tree mode.
    pub k: Option<usize>,
    /// Tree depths (root alone is one level).
    #[serde(default)]
    pub levels: Vec<usize>,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Stream used by `certify-one` when sampling instead of reading a file.
    #[serde(default)]
    pub stream_index: u64,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub family: FamilyKind,
    #[serde(default)]
    pub solver: SolverMethod,
    /// Iterative kernel counting cap; 0 skips the count.
    #[serde(default)]
    pub kernel_cap: usize,
    pub kernel_threshold: Option<f64>,
    pub solver_tolerance: Option<f64>,
    /// Tree branching factors for which sweep certificates also report a bound.
    #[serde(default)]
    pub k_list: Vec<usize>,
    /// `epsilon` of the gap-probability bound quoted in sweep summaries;
    /// defaults to `1/(16 r)`.
    pub bound_epsilon: Option<f64>,
    pub cap_grid: Option<CapGrid>,
    /// Serialized `LocalProjector` for `certify-one`.
    pub projector: Option<PathBuf>,
    /// Record per-row wall time. Off by default so outputs stay reproducible.
    #[serde(default)]
    pub wall_time: bool,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Option<OutputFormat>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// A config with every optional field empty.
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            d: None,
            r: None,
            lengths: Vec::new(),
            k: None,
            levels: Vec::new(),
            trials: 0,
            master_seed: 0,
            stream_index: 0,
            epsilon: None,
            family: FamilyKind::Haar,
            solver: SolverMethod::Auto,
            kernel_cap: 0,
            kernel_threshold: None,
            solver_tolerance: None,
            k_list: Vec::new(),
            bound_epsilon: None,
            cap_grid: None,
            projector: None,
            wall_time: false,
            out: None,
            format: OutputFormat::Csv,
            threads: None,
        }
    }

    /// Parses without validating.
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| cfg_err(format!("invalid config: {e}")))
    }

    /// Reads, parses and validates a config file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(f) = o.format {
            self.format = f;
        }
    }

    fn need_d_r(&self) -> Result<(usize, usize)> {
        let d = self.d.ok_or_else(|| cfg_err(format!("mode {} needs d", self.mode.as_str())))?;
        let r = self.r.ok_or_else(|| cfg_err(format!("mode {} needs r", self.mode.as_str())))?;
        if d < 2 {
            return Err(cfg_err(format!("d={d} must be at least 2")));
        }
        if r < 1 || r > d * d {
            return Err(cfg_err(format!("r={r} must satisfy 1 <= r <= d^2 = {}", d * d)));
        }
        Ok((d, r))
    }

    /// `r` as used by bound formulas; 1 when unset.
    pub fn rank_or_one(&self) -> usize {
        self.r.unwrap_or(1).max(1)
    }

    pub fn effective_bound_epsilon(&self) -> f64 {
        self.bound_epsilon
            .unwrap_or(1.0 / (16.0 * self.rank_or_one() as f64))
    }

    fn check_family(&self, d: usize, r: usize) -> Result<()> {
        if self.family == FamilyKind::NearGood {
            if r >= d {
                return Err(cfg_err(format!("near-good family needs r < d (r={r}, d={d})")));
            }
            let eps = self
                .epsilon
                .ok_or_else(|| cfg_err("near-good family needs epsilon"))?;
            let limit = 1.0 / (8.0 * r as f64);
            if !(eps > 0.0 && eps < limit) {
                return Err(cfg_err(format!(
                    "near-good epsilon={eps} must lie in (0, 1/(8r)) = (0, {limit})"
                )));
            }
        }
        Ok(())
    }

    fn check_solver(&self) -> Result<()> {
        if let Some(t) = self.kernel_threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(cfg_err(format!("kernel_threshold={t} must be positive")));
            }
        }
        if let Some(t) = self.solver_tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(cfg_err(format!("solver_tolerance={t} must be positive")));
            }
        }
        if let Some(k) = self.k_list.iter().find(|&&k| k < 2) {
            return Err(cfg_err(format!("k_list entry {k} < 2")));
        }
        Ok(())
    }

    fn check_dense_budget(&self, dim: usize, what: &str) -> Result<()> {
        if dim > DENSE_LIMIT && self.solver != SolverMethod::Iterative {
            return Err(cfg_err(format!(
                "{what} has dimension {dim} > {DENSE_LIMIT}; set \"solver\": \"iterative\" to allow it"
            )));
        }
        Ok(())
    }

    /// Checks the mode's domain constraints.
    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(cfg_err("threads must be at least 1"));
        }
        if let Some(be) = self.bound_epsilon {
            let limit = 1.0 / (8.0 * self.rank_or_one() as f64);
            if !(be > 0.0 && be < limit) {
                return Err(cfg_err(format!("bound_epsilon={be} must lie in (0, {limit})")));
            }
        }
        match self.mode {
            Mode::GapSweep => {
                let (d, r) = self.need_d_r()?;
                let max = max_ff_rank(d, LatticeKind::Chain);
                if r > max {
                    return Err(cfg_err(format!(
                        "r={r} exceeds the frustration-free rank bound {max} for d={d}"
                    )));
                }
                self.check_family(d, r)?;
                self.check_solver()?;
                for &l in &self.lengths {
                    let spec = ChainSpec::new(d, r, l).map_err(|e| cfg_err(e.to_string()))?;
                    let dim = spec.state_dim().map_err(|e| cfg_err(e.to_string()))?;
                    self.check_dense_budget(dim, &format!("chain of length {l}"))?;
                }
            }
            Mode::TreeGap => {
                let (d, r) = self.need_d_r()?;
                let k = self.k.ok_or_else(|| cfg_err("tree-gap needs k"))?;
                if k < 2 {
                    return Err(cfg_err(format!("k={k} must be at least 2")));
                }
                if r * k >= d {
                    return Err(cfg_err(format!("tree-gap needs r < d/k (r={r}, d={d}, k={k})")));
                }
                self.check_family(d, r)?;
                self.check_solver()?;
                for &l in &self.levels {
                    let spec = TreeSpec::new(d, r, k, l).map_err(|e| cfg_err(e.to_string()))?;
                    let dim = spec.state_dim().map_err(|e| cfg_err(e.to_string()))?;
                    self.check_dense_budget(dim, &format!("tree with {l} levels"))?;
                }
            }
            Mode::EventFrequency => {
                let (d, r) = self.need_d_r()?;
                if r >= d {
                    return Err(cfg_err(format!("event-frequency needs r < d (r={r}, d={d})")));
                }
                let eps = self
                    .epsilon
                    .ok_or_else(|| cfg_err("event-frequency needs epsilon"))?;
                if !(0.0..0.25).contains(&eps) {
                    return Err(cfg_err(format!("epsilon={eps} must lie in [0, 1/4)")));
                }
            }
            Mode::CapTable => {
                let grid = self
                    .cap_grid
                    .as_ref()
                    .ok_or_else(|| cfg_err("cap-table needs cap_grid"))?;
                if grid.n.is_empty() || grid.delta.is_empty() {
                    return Err(cfg_err("cap_grid needs at least one n and one delta"));
                }
                if let Some(n) = grid.n.iter().find(|&&n| n < 1) {
                    return Err(cfg_err(format!("cap_grid n={n} must be at least 1")));
                }
                if let Some(x) = grid
                    .delta
                    .iter()
                    .find(|&&x| !(x > 0.0 && x < std::f64::consts::PI))
                {
                    return Err(cfg_err(format!("cap_grid delta={x} outside (0, pi)")));
                }
            }
            Mode::CertifyOne => {
                self.check_solver()?;
                if self.projector.is_none() {
                    let (d, r) = self.need_d_r()?;
                    self.check_family(d, r)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json_str(r#"{"mode":"gap-sweep","d":3,"r":1,"trails":5}"#);
        assert!(matches!(err, Err(Error::Config(m)) if m.contains("trails")));
    }

    #[test]
    fn minimal_sweep_parses_and_validates() {
        let cfg = ExperimentConfig::from_json_str(r#"{"mode":"gap-sweep","d":3,"r":1,"trials":4}"#).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.effective_bound_epsilon(), 1.0 / 16.0);
        assert_eq!(cfg.family, FamilyKind::Haar);
    }

    #[test]
    fn domain_violations_are_config_errors() {
        let bad = [
            r#"{"mode":"gap-sweep","d":3,"r":3}"#,
            r#"{"mode":"gap-sweep","d":3,"r":1,"lengths":[1]}"#,
            r#"{"mode":"gap-sweep","d":3,"r":1,"lengths":[10]}"#,
            r#"{"mode":"gap-sweep","d":3,"r":1,"family":"near-good"}"#,
            r#"{"mode":"gap-sweep","d":3,"r":1,"family":"near-good","epsilon":0.2}"#,
            r#"{"mode":"tree-gap","d":3,"r":2,"k":2}"#,
            r#"{"mode":"event-frequency","d":2,"r":1,"epsilon":0.25}"#,
            r#"{"mode":"event-frequency","d":2,"r":2,"epsilon":0.1}"#,
            r#"{"mode":"cap-table","cap_grid":{"n":[3],"delta":[4.0]}}"#,
            r#"{"mode":"cap-table"}"#,
            r#"{"mode":"certify-one"}"#,
            r#"{"mode":"gap-sweep","d":3,"r":1,"threads":0}"#,
        ];
        for s in bad {
            let cfg = ExperimentConfig::from_json_str(s).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{s}");
        }
    }

    #[test]
    fn iterative_lifts_dense_budget() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"mode":"gap-sweep","d":3,"r":1,"lengths":[10],"solver":"iterative"}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::new(Mode::CapTable);
        cfg.apply(&Overrides {
            seed: Some(9),
            trials: Some(3),
            threads: Some(2),
            format: Some(OutputFormat::Json),
            out: None,
        });
        assert_eq!((cfg.master_seed, cfg.trials, cfg.threads), (9, 3, Some(2)));
        assert_eq!(cfg.format, OutputFormat::Json);
    }
}
