use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FamilyKind, Mode};
use crate::capgeom::{
    cap_lower_bound, cap_measure_exact, euclidean_to_spherical_radius, gap_probability_bound,
    gap_threshold, landing_probability_bound, CapQuery,
};
use crate::certificate::{certify, construct_near_good, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::haar::{haar_orthogonal, sample_family, OrthonormalFamily, RandomSeed};
use crate::model::{ChainSpec, Lattice, LocalProjector, TreeSpec};
use crate::spectral::{gap_report, SolverKind, SpectralOptions, SpectralReport, DEFAULT_SOLVER_TOL};

/// Slack allowed when comparing exact gaps with certified lower bounds.
pub const SOUNDNESS_TOL: f64 = 1e-8;

/// Purpose tag for the Lanczos start vectors of a trial.
const SOLVER_STREAM: u64 = 0x5350_4543;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeLabel {
    Chain,
    Tree,
    /// Certificate only, no Hamiltonian diagonalized.
    Local,
}

impl LatticeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            LatticeLabel::Chain => "chain",
            LatticeLabel::Tree => "tree",
            LatticeLabel::Local => "local",
        }
    }
}

/// One `(trial, size)` line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: u64,
    pub master_seed: u64,
    pub d: usize,
    pub r: usize,
    pub lattice: LatticeLabel,
    pub k: Option<usize>,
    /// Chain length or number of tree levels.
    pub size: Option<usize>,
    pub ground_energy: Option<f64>,
    pub kernel_dim: Option<usize>,
    /// `None` with `solver` set means no gap exists (e.g. a single vertex).
    pub gap: Option<f64>,
    pub frustration_free: Option<bool>,
    pub solver: Option<SolverKind>,
    pub coupling_norm: Option<f64>,
    pub gamma_loc: Option<f64>,
    pub gamma_loc_lb: Option<f64>,
    pub chain_bound: Option<f64>,
    pub tree_bound: Option<f64>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    pub wall_time_s: Option<f64>,
}

impl ResultRow {
    fn empty(trial: u64, cfg: &ExperimentConfig, lattice: LatticeLabel, size: Option<usize>) -> Self {
        Self {
            trial,
            master_seed: cfg.master_seed,
            d: cfg.d.unwrap_or(0),
            r: cfg.r.unwrap_or(0),
            lattice,
            k: if lattice == LatticeLabel::Tree { cfg.k } else { None },
            size,
            ground_energy: None,
            kernel_dim: None,
            gap: None,
            frustration_free: None,
            solver: None,
            coupling_norm: None,
            gamma_loc: None,
            gamma_loc_lb: None,
            chain_bound: None,
            tree_bound: None,
            verdict: None,
            error: None,
            wall_time_s: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// True when a spectral computation ran and found no excited level.
    pub fn gap_not_applicable(&self) -> bool {
        self.error.is_none() && self.solver.is_some() && self.gap.is_none()
    }

    fn fill_certificate(&mut self, c: &Certificate) {
        self.coupling_norm = Some(c.coupling_norm);
        self.gamma_loc = Some(c.gamma_loc);
        self.gamma_loc_lb = Some(c.gamma_loc_lb);
        self.chain_bound = Some(c.chain_bound);
        match self.k.and_then(|k| c.tree_bounds.get(&k).map(|b| (k, *b))) {
            Some((k, b)) => {
                self.tree_bound = Some(b);
                self.verdict = c.tree_verdicts.get(&k).copied();
            }
            None => self.verdict = Some(c.verdict),
        }
    }

    fn fill_spectrum(&mut self, s: &SpectralReport) {
        self.ground_energy = Some(s.ground_energy);
        self.kernel_dim = s.kernel_dim;
        self.gap = s.gap;
        self.frustration_free = Some(s.frustration_free);
        self.solver = Some(s.method);
    }

    fn fail(&mut self, code: &str) {
        self.error = Some(code.to_string());
    }

    fn all_finite(&self) -> bool {
        [
            self.ground_energy,
            self.gap,
            self.coupling_norm,
            self.gamma_loc,
            self.gamma_loc_lb,
            self.chain_bound,
            self.tree_bound,
            self.wall_time_s,
        ]
        .iter()
        .all(|v| v.is_none_or(f64::is_finite))
    }
}

/// Aggregate of a chain or tree sweep. Counts are per trial; a trial is
/// completed when none of its rows failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mode: Mode,
    pub trials: usize,
    pub completed: usize,
    pub failed: usize,
    pub certified: usize,
    /// `certified / completed`; absent when nothing completed.
    pub certified_fraction: Option<f64>,
    pub bound_epsilon: Option<f64>,
    /// `1 - 8 r epsilon` for `bound_epsilon`.
    pub gap_threshold: Option<f64>,
    pub gap_probability_bound: Option<f64>,
    pub fraction_at_least_bound: Option<bool>,
    /// Rows with an exact gap.
    pub gap_rows: usize,
    /// Rows whose exact gap exceeds `gap_threshold`.
    pub gap_rows_above_threshold: usize,
    /// Rows where the raw finite-size inequality was tested.
    pub finite_size_checked: usize,
    pub finite_size_violations: usize,
    /// Rows with a certified verdict whose exact gap was compared to the bound.
    pub certificate_checked: usize,
    pub certificate_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<ResultRow>,
    pub summary: SweepSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFrequencyReport {
    pub d: usize,
    pub r: usize,
    pub epsilon: f64,
    pub master_seed: u64,
    pub trials: usize,
    pub failed: usize,
    pub hits: usize,
    pub frequency: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
    /// Binomial standard error; uses the exact probability when known.
    pub standard_error: Option<f64>,
    pub landing_bound: Option<f64>,
    /// Cap measure of radius `2 asin(epsilon/2)` on `S^(d^2-1)`; only for `r = 1`.
    pub cap_exact: Option<f64>,
    /// `(frequency - cap_exact) / standard_error`.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapRow {
    pub n: usize,
    pub delta: f64,
    pub exact: f64,
    pub lower_bound: Option<f64>,
    pub samples: usize,
    pub monte_carlo: Option<f64>,
    /// `sqrt(p (1 - p) / samples)` at the exact `p`.
    pub standard_error: Option<f64>,
    pub z_score: Option<f64>,
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> Option<(f64, f64)> {
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Some(((centre - half).max(0.0), (centre + half).min(1.0)))
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `f` for every trial index in parallel and returns results in index order.
fn run_trials<T, F>(cfg: &ExperimentConfig, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    Ok(pool(cfg)?.install(|| (0..count as u64).into_par_iter().map(&f).collect()))
}

fn trial_family(cfg: &ExperimentConfig, seed: RandomSeed) -> Result<OrthonormalFamily> {
    let (d, r) = (cfg.d.unwrap_or(0), cfg.r.unwrap_or(0));
    match cfg.family {
        FamilyKind::Haar => sample_family(d, r, seed),
        FamilyKind::NearGood => construct_near_good(d, r, cfg.epsilon.unwrap_or(0.0), seed),
    }
}

fn spectral_options(cfg: &ExperimentConfig, seed: RandomSeed) -> SpectralOptions {
    SpectralOptions {
        method: cfg.solver,
        kernel_threshold: cfg.kernel_threshold,
        solver_tolerance: cfg.solver_tolerance.unwrap_or(DEFAULT_SOLVER_TOL),
        kernel_cap: cfg.kernel_cap,
        seed: seed.derive(SOLVER_STREAM),
    }
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.code().to_string()),
        Err(_) => Err("panic".to_string()),
    }
}

/// Certificate plus one row per lattice size for a single trial.
fn lattice_trial(cfg: &ExperimentConfig, trial: u64) -> Vec<ResultRow> {
    let seed = RandomSeed::new(cfg.master_seed, trial);
    let (label, sizes) = match cfg.mode {
        Mode::TreeGap => (LatticeLabel::Tree, cfg.levels.clone()),
        _ if cfg.lengths.is_empty() => (LatticeLabel::Local, Vec::new()),
        _ => (LatticeLabel::Chain, cfg.lengths.clone()),
    };
    let k_list: Vec<usize> = match cfg.mode {
        Mode::TreeGap => cfg.k.into_iter().collect(),
        _ => cfg.k_list.clone(),
    };
    let start = Instant::now();
    let base = guarded(|| {
        let family = trial_family(cfg, seed)?;
        let p = LocalProjector::from_family(&family);
        let mut cert = certify(&p, &k_list)?;
        cert.seed = Some(seed);
        Ok((p, cert))
    });
    let mut cert_time = start.elapsed().as_secs_f64();
    let sizes: Vec<Option<usize>> = if sizes.is_empty() {
        vec![None]
    } else {
        sizes.into_iter().map(Some).collect()
    };
    sizes
        .into_iter()
        .map(|size| {
            let mut row = ResultRow::empty(trial, cfg, label, size);
            let start = Instant::now();
            match &base {
                Err(code) => row.fail(code),
                Ok((p, cert)) => {
                    row.fill_certificate(cert);
                    if let Some(n) = size {
                        let lattice = match label {
                            LatticeLabel::Tree => TreeSpec::new(p.d(), p.rank(), cfg.k.unwrap_or(2), n)
                                .map(Lattice::Tree),
                            _ => ChainSpec::new(p.d(), p.rank(), n).map(Lattice::Chain),
                        };
                        let opts = spectral_options(cfg, seed);
                        match guarded(|| gap_report(&lattice?, p, &opts)) {
                            Ok(s) => row.fill_spectrum(&s),
                            Err(code) => row.fail(&code),
                        }
                    }
                }
            }
            if cfg.wall_time {
                row.wall_time_s = Some(start.elapsed().as_secs_f64() + cert_time);
                cert_time = 0.0;
            }
            if !row.all_finite() && row.error.is_none() {
                row.fail("non-finite");
            }
            row
        })
        .collect()
}

fn summarize(cfg: &ExperimentConfig, rows: &[ResultRow]) -> SweepSummary {
    let trials = cfg.trials;
    let mut completed = 0;
    let mut certified = 0;
    for t in 0..trials as u64 {
        let trial_rows: Vec<&ResultRow> = rows.iter().filter(|r| r.trial == t).collect();
        if trial_rows.iter().all(|r| r.is_ok()) {
            completed += 1;
            if trial_rows
                .first()
                .and_then(|r| r.verdict)
                .is_some_and(Verdict::is_certified)
            {
                certified += 1;
            }
        }
    }
    let certified_fraction = (completed > 0).then(|| certified as f64 / completed as f64);

    let chain_mode = cfg.mode == Mode::GapSweep;
    let (bound_epsilon, threshold, bound) = if chain_mode {
        let r = cfg.rank_or_one();
        let eps = cfg.effective_bound_epsilon();
        let b = gap_probability_bound(cfg.d.unwrap_or(2), r, eps).ok();
        (Some(eps), Some(gap_threshold(r, eps)), b)
    } else {
        (None, None, None)
    };

    let mut s = SweepSummary {
        mode: cfg.mode,
        trials,
        completed,
        failed: trials - completed,
        certified,
        certified_fraction,
        bound_epsilon,
        gap_threshold: threshold,
        gap_probability_bound: bound,
        fraction_at_least_bound: certified_fraction.zip(bound).map(|(f, b)| f >= b),
        gap_rows: 0,
        gap_rows_above_threshold: 0,
        finite_size_checked: 0,
        finite_size_violations: 0,
        certificate_checked: 0,
        certificate_violations: 0,
    };
    for row in rows.iter().filter(|r| r.is_ok()) {
        let Some(gap) = row.gap else { continue };
        s.gap_rows += 1;
        if threshold.is_some_and(|t| gap > t) {
            s.gap_rows_above_threshold += 1;
        }
        if row.frustration_free != Some(true) {
            continue;
        }
        let size = row.size.unwrap_or(0);
        match row.lattice {
            LatticeLabel::Chain if size >= 4 => {
                if let Some(g) = row.gamma_loc {
                    let raw = if g >= 1.0 { 1.0 } else { 2.0 * (g - 0.5) };
                    s.finite_size_checked += 1;
                    if gap < raw - SOUNDNESS_TOL {
                        s.finite_size_violations += 1;
                    }
                }
                if row.verdict.is_some_and(Verdict::is_certified) {
                    s.certificate_checked += 1;
                    if gap < row.chain_bound.unwrap_or(0.0) - SOUNDNESS_TOL {
                        s.certificate_violations += 1;
                    }
                }
            }
            LatticeLabel::Tree if size >= 2 => {
                if row.verdict.is_some_and(Verdict::is_certified) {
                    s.certificate_checked += 1;
                    if gap < row.tree_bound.unwrap_or(0.0) - SOUNDNESS_TOL {
                        s.certificate_violations += 1;
                    }
                }
            }
            _ => {}
        }
    }
    s
}

fn expect_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "config mode is {}, expected {}",
            cfg.mode.as_str(),
            mode.as_str()
        )));
    }
    cfg.validate()
}

/// Random chains: certificate for every trial and exact gaps for each length.
pub fn run_gap_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    expect_mode(cfg, Mode::GapSweep)?;
    let rows: Vec<ResultRow> = run_trials(cfg, cfg.trials, |t| lattice_trial(cfg, t))?
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(cfg, &rows);
    Ok(SweepTable { rows, summary })
}

/// Random trees: tree certificate for `k` and exact gaps for each depth.
pub fn run_tree_gap(cfg: &ExperimentConfig) -> Result<SweepTable> {
    expect_mode(cfg, Mode::TreeGap)?;
    let rows: Vec<ResultRow> = run_trials(cfg, cfg.trials, |t| lattice_trial(cfg, t))?
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(cfg, &rows);
    Ok(SweepTable { rows, summary })
}

/// Frequency of `max_i ||phi_i - v_i|| < epsilon` with `v_i` the good vectors.
pub fn run_event_frequency(cfg: &ExperimentConfig) -> Result<EventFrequencyReport> {
    expect_mode(cfg, Mode::EventFrequency)?;
    let (d, r) = (cfg.d.unwrap_or(0), cfg.r.unwrap_or(0));
    let eps = cfg.epsilon.unwrap_or(0.0);
    let good = OrthonormalFamily::good_vectors(d, r)?;
    let outcomes = run_trials(cfg, cfg.trials, |t| {
        guarded(|| {
            let family = sample_family(d, r, RandomSeed::new(cfg.master_seed, t))?;
            Ok(family.max_distance_to(&good) < eps)
        })
    })?;
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    let hits = outcomes.iter().filter(|o| matches!(o, Ok(true))).count();
    let n = cfg.trials - failed;
    let frequency = (n > 0).then(|| hits as f64 / n as f64);
    let cap_exact = if r == 1 && eps > 0.0 {
        Some(cap_measure_exact(&CapQuery::new(d * d - 1, euclidean_to_spherical_radius(eps))?)?)
    } else {
        None
    };
    let p_ref = cap_exact.or(frequency);
    let standard_error = p_ref
        .filter(|_| n > 0)
        .map(|p| (p * (1.0 - p) / n as f64).sqrt());
    let z_score = match (frequency, cap_exact, standard_error) {
        (Some(f), Some(c), Some(se)) if se > 0.0 => Some((f - c) / se),
        _ => None,
    };
    let (wilson_low, wilson_high) = wilson_interval(hits, n, WILSON_Z).unzip();
    Ok(EventFrequencyReport {
        d,
        r,
        epsilon: eps,
        master_seed: cfg.master_seed,
        trials: cfg.trials,
        failed,
        hits,
        frequency,
        wilson_low,
        wilson_high,
        standard_error,
        landing_bound: if eps > 0.0 {
            Some(landing_probability_bound(d, r, eps)?)
        } else {
            None
        },
        cap_exact,
        z_score,
    })
}

/// Exact cap measures, closed-form lower bounds and Monte Carlo estimates.
///
/// Monte Carlo points are first columns of Haar matrices of size `n + 1`; the
/// sample for row `i`, draw `t` uses stream `t` of a seed derived from row `i`.
pub fn run_cap_table(cfg: &ExperimentConfig) -> Result<Vec<CapRow>> {
    expect_mode(cfg, Mode::CapTable)?;
    let grid = cfg.cap_grid.as_ref().expect("validated");
    let queries: Vec<CapQuery> = grid
        .n
        .iter()
        .flat_map(|&n| grid.delta.iter().map(move |&delta| (n, delta)))
        .map(|(n, delta)| CapQuery::new(n, delta))
        .collect::<Result<_>>()?;
    let samples = cfg.trials;
    let pool = pool(cfg)?;
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let exact = cap_measure_exact(q)?;
            let lower_bound = if q.delta < 0.25 { Some(cap_lower_bound(q)?) } else { None };
            let (monte_carlo, standard_error, z_score) = if samples > 0 {
                let cos_delta = q.delta.cos();
                let hits: usize = pool.install(|| {
                    (0..samples as u64)
                        .into_par_iter()
                        .map(|t| {
                            let seed = RandomSeed::new(cfg.master_seed, t).derive(i as u64 + 1);
                            let o = haar_orthogonal(q.n + 1, seed).expect("n + 1 >= 2");
                            usize::from(o[(0, 0)] > cos_delta)
                        })
                        .sum()
                });
                let f = hits as f64 / samples as f64;
                let se = (exact * (1.0 - exact) / samples as f64).sqrt();
                let z = if se > 0.0 { Some((f - exact) / se) } else { None };
                (Some(f), Some(se), z)
            } else {
                (None, None, None)
            };
            Ok(CapRow {
                n: q.n,
                delta: q.delta,
                exact,
                lower_bound,
                samples,
                monte_carlo,
                standard_error,
                z_score,
            })
        })
        .collect()
}

/// Certificate for a projector read from `cfg.projector`, or sampled from
/// `(master_seed, stream_index)`.
pub fn run_certify_one(cfg: &ExperimentConfig) -> Result<Certificate> {
    expect_mode(cfg, Mode::CertifyOne)?;
    let (p, seed) = match &cfg.projector {
        Some(path) => (read_projector(path)?, None),
        None => {
            let seed = RandomSeed::new(cfg.master_seed, cfg.stream_index);
            (LocalProjector::from_family(&trial_family(cfg, seed)?), Some(seed))
        }
    };
    let mut cert = certify(&p, &cfg.k_list)?;
    cert.seed = seed;
    Ok(cert)
}

pub fn read_projector(path: &Path) -> Result<LocalProjector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid projector in {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::CapGrid;

    fn sweep_cfg(trials: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Mode::GapSweep);
        cfg.d = Some(2);
        cfg.r = Some(1);
        cfg.trials = trials;
        cfg.lengths = vec![4, 5];
        cfg.master_seed = 11;
        cfg
    }

    #[test]
    fn wilson_examples() {
        assert!(wilson_interval(0, 0, WILSON_Z).is_none());
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z).unwrap();
        assert!(lo.abs() < 1e-15);
        assert!((hi - 0.036_995).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, WILSON_Z).unwrap();
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trials_gives_empty_table() {
        let t = run_gap_sweep(&sweep_cfg(0)).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.summary.certified_fraction, None);
        assert_eq!(t.summary.fraction_at_least_bound, None);
    }

    #[test]
    fn sweep_rows_sorted_and_summary_consistent() {
        let t = run_gap_sweep(&sweep_cfg(6)).unwrap();
        assert_eq!(t.rows.len(), 12);
        for (i, row) in t.rows.iter().enumerate() {
            assert_eq!(row.trial, (i / 2) as u64);
            assert_eq!(row.size, Some(4 + i % 2));
            assert!(row.is_ok());
        }
        let s = &t.summary;
        assert_eq!(s.completed + s.failed, 6);
        let certified = t
            .rows
            .iter()
            .filter(|r| r.size == Some(4) && r.verdict.unwrap().is_certified())
            .count();
        assert_eq!(s.certified, certified);
        assert_eq!(s.certified_fraction, Some(certified as f64 / 6.0));
        assert_eq!(s.finite_size_violations, 0);
        assert_eq!(s.certificate_violations, 0);
    }

    #[test]
    fn mode_mismatch_is_config_error() {
        let mut cfg = sweep_cfg(1);
        cfg.mode = Mode::TreeGap;
        assert!(matches!(run_gap_sweep(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_vertex_tree_has_no_gap() {
        let mut cfg = ExperimentConfig::new(Mode::TreeGap);
        cfg.d = Some(3);
        cfg.r = Some(1);
        cfg.k = Some(2);
        cfg.levels = vec![1, 2];
        cfg.trials = 2;
        let t = run_tree_gap(&cfg).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows[0].gap_not_applicable());
        assert_eq!(t.rows[0].ground_energy, Some(0.0));
        assert!(t.rows[1].gap.is_some());
        assert!(t.rows[1].tree_bound.is_some());
    }

    #[test]
    fn zero_epsilon_never_hits() {
        let mut cfg = ExperimentConfig::new(Mode::EventFrequency);
        cfg.d = Some(2);
        cfg.r = Some(1);
        cfg.epsilon = Some(0.0);
        cfg.trials = 50;
        let rep = run_event_frequency(&cfg).unwrap();
        assert_eq!(rep.hits, 0);
        assert_eq!(rep.frequency, Some(0.0));
        assert_eq!(rep.landing_bound, None);
    }

    #[test]
    fn cap_table_closed_forms() {
        let mut cfg = ExperimentConfig::new(Mode::CapTable);
        cfg.cap_grid = Some(CapGrid {
            n: vec![1, 3],
            delta: vec![0.1, std::f64::consts::FRAC_PI_2],
        });
        let rows = run_cap_table(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[0].exact - 0.1 / std::f64::consts::PI).abs() < 1e-10);
        assert!((rows[1].exact - 0.5).abs() < 1e-12);
        assert!(rows[2].exact > rows[2].lower_bound.unwrap());
        assert!(rows[3].lower_bound.is_none());
        assert!(rows.iter().all(|r| r.monte_carlo.is_none()));
    }

    #[test]
    fn certify_one_from_seed_records_seed() {
        let mut cfg = ExperimentConfig::new(Mode::CertifyOne);
        cfg.d = Some(3);
        cfg.r = Some(1);
        cfg.master_seed = 4;
        cfg.stream_index = 7;
        let c = run_certify_one(&cfg).unwrap();
        assert_eq!(c.seed, Some(RandomSeed::new(4, 7)));
    }
}
