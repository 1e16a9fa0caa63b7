//! Ground energies, kernel dimensions and spectral gaps.
//!
//! Two independent routes are provided. [`dense_spectrum`] diagonalizes an
//! assembled matrix; it first splits the matrix into the connected components
//! of its nonzero pattern and diagonalizes each block, which is exact and
//! makes diagonal (commuting-projector) models cheap at any size below the
//! dense limit. The iterative route is a Lanczos solver with full
//! reorthogonalization:
//!
//! * [`lowest_eigs`] returns the lowest eigenvalues with multiplicity by
//!   locking one converged Ritz vector per run and restarting in the
//!   orthogonal complement of everything locked so far.
//! * [`smallest_eig_above`] finds the smallest eigenvalue above a threshold
//!   without resolving the kernel: the start vector is `A g`, which lies in
//!   `ran(A) = ker(A)^perp` for a symmetric `A`, so the Krylov space never
//!   needs to visit the (possibly huge) ground space.
//!
//! All start vectors are drawn from a [`RandomSeed`].

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{gaussian_vector, RandomSeed};
use crate::model::{
    ChainHamiltonian, Lattice, LocalProjector, TreeHamiltonian, DENSE_LIMIT,
};

/// A real symmetric operator available only through products.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// Overwrites `y` with `A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.column(j).iter()) {
                *yi += a * xj;
            }
        }
    }
}

/// Default per-term kernel threshold; multiplied by the number of terms.
pub const KERNEL_THRESHOLD_PER_TERM: f64 = 1e-9;

/// Default Ritz residual tolerance of the iterative solver.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Largest number of locked eigenpairs when counting a kernel.
pub const DEFAULT_KERNEL_CAP: usize = 128;

/// Dimension up to which [`SolverMethod::Auto`] diagonalizes densely.
pub const AUTO_DENSE_LIMIT: usize = 1024;

/// Full ascending spectrum of a dense symmetric matrix.
pub fn dense_spectrum(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: h.ncols(),
        });
    }
    if n > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            dim: n,
            limit: DENSE_LIMIT,
        });
    }
    let mut eigenvalues = Vec::with_capacity(n);
    for block in irreducible_blocks(h) {
        if block.len() == 1 {
            eigenvalues.push(h[(block[0], block[0])]);
            continue;
        }
        let m = block.len();
        let sub = DMatrix::from_fn(m, m, |i, j| h[(block[i], block[j])]);
        eigenvalues.extend(sub.symmetric_eigenvalues().iter().copied());
    }
    eigenvalues.sort_by(f64::total_cmp);
    Ok(eigenvalues)
}

/// Connected components of the graph with an edge wherever `h[i,j] != 0`.
fn irreducible_blocks(h: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for (i, &v) in h.column(j).iter().enumerate().skip(j + 1) {
            if v != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

/// Settings for the Lanczos solver.
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Ritz pairs are accepted once `||A y - theta y|| < tol`.
    pub tol: f64,
    /// Krylov dimension cap per run.
    pub max_iter: usize,
    pub seed: RandomSeed,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SOLVER_TOL,
            max_iter: 600,
            seed: RandomSeed::new(0, 0),
        }
    }
}

enum StopRule {
    Lowest,
    LowestAbove(f64),
}

struct RitzPair {
    value: f64,
    vector: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of classical Gram-Schmidt against `against`.
fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// One Lanczos run in the orthogonal complement of `locked`.
/// Returns `None` when the rule admits no candidate in an exhausted space.
fn lanczos_run<O: LinearOperator + ?Sized>(
    op: &O,
    mut start: Vec<f64>,
    locked: &[Vec<f64>],
    opts: &LanczosOptions,
    rule: StopRule,
) -> Result<Option<RitzPair>> {
    let n = op.dim();
    orthogonalize(&mut start, locked);
    let start_norm = norm(&start);
    if start_norm < 1e-300 || !start_norm.is_finite() {
        return Ok(None);
    }
    start.iter_mut().for_each(|v| *v /= start_norm);

    let space = n - locked.len();
    let max_steps = opts.max_iter.min(space).max(1);
    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut scale: f64 = 0.0;

    for step in 0..max_steps {
        let q = &basis[step];
        op.apply(q, &mut w);
        let alpha = dot(q, &w);
        axpy(-alpha, q, &mut w);
        if step > 0 {
            axpy(-betas[step - 1], &basis[step - 1], &mut w);
        }
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let beta = norm(&w);
        alphas.push(alpha);
        scale = scale.max(alpha.abs() + beta);

        let breakdown = beta <= 1e-12 * scale.max(1.0);
        let last = step + 1 == max_steps;
        let check = breakdown || last || (step + 1) % 5 == 0 || step < 4;
        if check {
            if let Some(pair) = select_ritz(&alphas, &betas, beta, &basis, opts.tol, &rule, breakdown || (last && step + 1 == space))? {
                return Ok(Some(pair));
            }
            if breakdown || (last && step + 1 == space) {
                return Ok(None);
            }
        }
        if last {
            break;
        }
        w.iter_mut().for_each(|v| *v /= beta);
        betas.push(beta);
        basis.push(std::mem::replace(&mut w, vec![0.0; n]));
    }
    Err(Error::NotConverged(format!(
        "no converged Ritz pair after {max_steps} Lanczos steps (tol {:e})",
        opts.tol
    )))
}

/// Applies the stop rule to the Ritz pairs of the current tridiagonal matrix.
fn select_ritz(
    alphas: &[f64],
    betas: &[f64],
    beta_next: f64,
    basis: &[Vec<f64>],
    tol: f64,
    rule: &StopRule,
    exhausted: bool,
) -> Result<Option<RitzPair>> {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let candidate = match rule {
        StopRule::Lowest => order.first().copied(),
        StopRule::LowestAbove(thr) => order.iter().copied().find(|&i| eig.eigenvalues[i] > *thr),
    };
    let Some(i) = candidate else {
        return Ok(None);
    };
    let residual = beta_next * eig.eigenvectors[(m - 1, i)].abs();
    if residual >= tol && !exhausted {
        return Ok(None);
    }
    let n = basis[0].len();
    let mut vector = vec![0.0; n];
    for (k, q) in basis.iter().take(m).enumerate() {
        axpy(eig.eigenvectors[(k, i)], q, &mut vector);
    }
    let nv = norm(&vector);
    vector.iter_mut().for_each(|v| *v /= nv);
    Ok(Some(RitzPair {
        value: eig.eigenvalues[i],
        vector,
    }))
}

fn start_vector(opts: &LanczosOptions, purpose: u64, n: usize) -> Vec<f64> {
    gaussian_vector(&mut opts.seed.derive(purpose).rng(), n)
}

/// Locks eigenpairs from the bottom of the spectrum until `done` holds for
/// the values found so far or `cap` values are locked.
fn lock_lowest<O, F>(op: &O, cap: usize, opts: &LanczosOptions, mut done: F) -> Result<Vec<f64>>
where
    O: LinearOperator + ?Sized,
    F: FnMut(&[f64]) -> bool,
{
    let n = op.dim();
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    while values.len() < cap.min(n) && !done(&values) {
        let run = values.len() as u64;
        let start = start_vector(opts, 1 + run, n);
        let pair = lanczos_run(op, start, &locked, opts, StopRule::Lowest)?.ok_or_else(|| {
            Error::NotConverged("start vector vanished in the deflated space".into())
        })?;
        let mut v = pair.vector;
        orthogonalize(&mut v, &locked);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        locked.push(v);
        values.push(pair.value);
    }
    Ok(values)
}

/// The `count` lowest eigenvalues of `op`, ascending, with multiplicity.
pub fn lowest_eigs<O: LinearOperator + ?Sized>(
    op: &O,
    count: usize,
    opts: &LanczosOptions,
) -> Result<Vec<f64>> {
    if count > op.dim() {
        return Err(Error::InvalidDimension(format!(
            "requested {count} eigenvalues of a {}-dimensional operator",
            op.dim()
        )));
    }
    let mut values = lock_lowest(op, count, opts, |_| false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest eigenvalue strictly above `threshold`, or `None` if there is none.
pub fn smallest_eig_above<O: LinearOperator + ?Sized>(
    op: &O,
    threshold: f64,
    opts: &LanczosOptions,
) -> Result<Option<f64>> {
    let n = op.dim();
    let g = start_vector(opts, 0, n);
    let mut start = vec![0.0; n];
    op.apply(&g, &mut start);
    Ok(lanczos_run(op, start, &[], opts, StopRule::LowestAbove(threshold))?.map(|p| p.value))
}

/// How [`gap_report`] obtains eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Dense up to [`AUTO_DENSE_LIMIT`], iterative above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// Which solver actually produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub method: SolverMethod,
    /// Overrides the default `1e-9 * (number of terms)`.
    pub kernel_threshold: Option<f64>,
    pub solver_tolerance: f64,
    /// Locked-eigenpair cap when counting the kernel iteratively; 0 skips counting.
    pub kernel_cap: usize,
    pub seed: RandomSeed,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            kernel_threshold: None,
            solver_tolerance: DEFAULT_SOLVER_TOL,
            kernel_cap: DEFAULT_KERNEL_CAP,
            seed: RandomSeed::new(0, 0),
        }
    }
}

/// Low-lying spectrum of a Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub ground_energy: f64,
    /// `None` when the iterative kernel count hit its cap or was skipped.
    pub kernel_dim: Option<usize>,
    /// Smallest eigenvalue above the kernel threshold (frustration-free case)
    /// or `E1 - E0` between distinct levels (otherwise); `None` if no such level.
    pub gap: Option<f64>,
    pub frustration_free: bool,
    pub method: SolverKind,
    pub kernel_threshold: f64,
    pub solver_tolerance: f64,
    /// Kernel count changes when the threshold is scaled by 10 or 1/10.
    pub kernel_borderline: bool,
}

/// Default kernel threshold for a Hamiltonian with `terms` projector terms.
pub fn default_kernel_threshold(terms: usize) -> f64 {
    // A Hamiltonian with no terms is identically zero; keep a positive threshold.
    KERNEL_THRESHOLD_PER_TERM * terms.max(1) as f64
}

/// Builds the Hamiltonian of `lattice` from `p` and analyses its low spectrum.
pub fn gap_report(lattice: &Lattice, p: &LocalProjector, opts: &SpectralOptions) -> Result<SpectralReport> {
    if lattice.d() != p.d() {
        return Err(Error::DimensionMismatch {
            expected: lattice.d(),
            actual: p.d(),
        });
    }
    let terms = lattice.num_terms()?;
    match lattice {
        Lattice::Chain(c) => {
            let h = ChainHamiltonian::new(p, c.length)?;
            report_for_operator(&h, terms, opts, || h.dense())
        }
        Lattice::Tree(t) => {
            let h = TreeHamiltonian::new(p, t.k, t.levels)?;
            report_for_operator(&h, terms, opts, || h.dense())
        }
    }
}

/// Spectral report for an arbitrary positive semidefinite operator.
pub fn report_for_operator<O, F>(
    op: &O,
    terms: usize,
    opts: &SpectralOptions,
    dense: F,
) -> Result<SpectralReport>
where
    O: LinearOperator + ?Sized,
    F: FnOnce() -> Result<DMatrix<f64>>,
{
    let threshold = opts
        .kernel_threshold
        .unwrap_or_else(|| default_kernel_threshold(terms));
    let use_dense = match opts.method {
        SolverMethod::Dense => true,
        SolverMethod::Iterative => false,
        SolverMethod::Auto => op.dim() <= AUTO_DENSE_LIMIT,
    };
    if use_dense {
        let spectrum = dense_spectrum(&dense()?)?;
        Ok(report_from_spectrum(&spectrum, threshold, opts.solver_tolerance))
    } else {
        iterative_report(op, threshold, opts)
    }
}

fn report_from_spectrum(spectrum: &[f64], threshold: f64, tol: f64) -> SpectralReport {
    let e0 = spectrum[0];
    let count_below = |t: f64| spectrum.iter().take_while(|&&e| e <= t).count();
    if e0 <= threshold {
        let kernel = count_below(threshold);
        let borderline =
            count_below(threshold / 10.0) != kernel || count_below(threshold * 10.0) != kernel;
        SpectralReport {
            ground_energy: e0,
            kernel_dim: Some(kernel),
            gap: spectrum.get(kernel).copied(),
            frustration_free: true,
            method: SolverKind::Dense,
            kernel_threshold: threshold,
            solver_tolerance: tol,
            kernel_borderline: borderline,
        }
    } else {
        SpectralReport {
            ground_energy: e0,
            kernel_dim: Some(0),
            gap: spectrum.iter().find(|&&e| e > e0 + threshold).map(|e| e - e0),
            frustration_free: false,
            method: SolverKind::Dense,
            kernel_threshold: threshold,
            solver_tolerance: tol,
            kernel_borderline: false,
        }
    }
}

fn iterative_report<O: LinearOperator + ?Sized>(
    op: &O,
    threshold: f64,
    opts: &SpectralOptions,
) -> Result<SpectralReport> {
    let lanczos = LanczosOptions {
        tol: opts.solver_tolerance,
        seed: opts.seed,
        ..LanczosOptions::default()
    };
    let cap = opts.kernel_cap.max(1);
    let first = lock_lowest(op, 1, &lanczos, |_| false)?;
    let e0 = first[0];

    if e0 <= threshold {
        let gap = smallest_eig_above(op, threshold, &lanczos)?;
        let mut kernel_dim = None;
        let mut borderline = false;
        if opts.kernel_cap > 0 {
            let values = lock_lowest(op, cap, &lanczos, |v| v.last().is_some_and(|&e| e > threshold))?;
            if let Some(&above) = values.last().filter(|&&e| e > threshold) {
                let kernel = values.len() - 1;
                kernel_dim = Some(kernel);
                let low = values.iter().filter(|&&e| e <= threshold / 10.0).count();
                borderline = low != kernel || above <= threshold * 10.0;
                if let Some(g) = gap {
                    if (g - above).abs() > 1e-6 {
                        return Err(Error::NotConverged(format!(
                            "range-restricted gap {g} disagrees with deflated value {above}"
                        )));
                    }
                }
            }
        }
        Ok(SpectralReport {
            ground_energy: e0,
            kernel_dim,
            gap,
            frustration_free: true,
            method: SolverKind::Iterative,
            kernel_threshold: threshold,
            solver_tolerance: opts.solver_tolerance,
            kernel_borderline: borderline,
        })
    } else {
        let values = lock_lowest(op, cap.max(2), &lanczos, |v| {
            v.iter().any(|&e| e > e0 + threshold)
        })?;
        let gap = values.iter().find(|&&e| e > e0 + threshold).map(|e| e - e0);
        if gap.is_none() && values.len() < op.dim() {
            return Err(Error::NotConverged(format!(
                "ground level of the non-frustration-free operator exceeds {} states",
                values.len()
            )));
        }
        Ok(SpectralReport {
            ground_energy: e0,
            kernel_dim: Some(0),
            gap,
            frustration_free: false,
            method: SolverKind::Iterative,
            kernel_threshold: threshold,
            solver_tolerance: opts.solver_tolerance,
            kernel_borderline: false,
        })
    }
}
