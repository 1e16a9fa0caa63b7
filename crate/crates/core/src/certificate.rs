//! Finite-size gap certificates built from the three-site problem.
//!
//! With `P12 = P (x) I` and `P23 = I (x) P` on three sites, the certificate
//! evaluates
//!
//! * the coupling norm `c = ||P12 P23 - P12 ^ P23||`, where `^` is the
//!   projector onto the intersection of the two ranges,
//! * the local gap `gamma_loc` of `H_loc = P12 + P23`, and its lower bound
//!   `1 - c` coming from the anticommutator inequality
//!   `{Q1, Q2} >= -||Q1 Q2 - Q1 ^ Q2|| (Q1 + Q2)`,
//! * the chain bound (`1` if `gamma_loc >= 1`, else `2 (gamma_loc - 1/2)`),
//!   a lower bound on the gap of every open chain with `L >= 4`,
//! * the `k`-ary tree bound (`1` if `gamma_loc >= 1`, else
//!   `2k (gamma_loc - 1 + 1/(2k))`).
//!
//! A positive bound certifies a gap uniformly in the system size.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{gaussian_vector, OrthonormalFamily, RandomSeed};
use crate::model::{LocalProjector, DENSE_LIMIT, PROJECTOR_TOL};
use crate::spectral::{default_kernel_threshold, dense_spectrum};

/// Eigenvalues of `Q1 + Q2` within this distance of 2 span the meet.
pub const MEET_TOL: f64 = 1e-8;

/// Stopping tolerance of the von Neumann power iteration.
pub const VON_NEUMANN_TOL: f64 = 1e-10;

/// Largest successive difference accepted when rounding stalls the iteration.
pub const VON_NEUMANN_FLOOR: f64 = 1e-8;

/// Purpose tag for seeds of the near-good perturbation.
const NEAR_GOOD_STREAM: u64 = 0x6e65_6172;

fn check_projector(q: &DMatrix<f64>, name: &str) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(Error::NotProjector(format!("{name} is not square")));
    }
    let asym = (q - q.transpose()).amax();
    if asym > PROJECTOR_TOL {
        return Err(Error::NotProjector(format!("{name} asymmetry {asym:e}")));
    }
    let idem = (q * q - q).amax();
    if idem > PROJECTOR_TOL {
        return Err(Error::NotProjector(format!("{name}: |Q^2 - Q| = {idem:e}")));
    }
    Ok(())
}

fn check_pair(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> Result<()> {
    check_projector(q1, "Q1")?;
    check_projector(q2, "Q2")?;
    if q1.shape() != q2.shape() {
        return Err(Error::DimensionMismatch {
            expected: q1.nrows(),
            actual: q2.nrows(),
        });
    }
    Ok(())
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if !m.iter().all(|x| x.is_finite()) {
        return f64::INFINITY;
    }
    match SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000) {
        Some(svd) => svd.singular_values.max(),
        // sqrt of the top eigenvalue of M^T M.
        None => (m.transpose() * m).symmetric_eigenvalues().max().max(0.0).sqrt(),
    }
}

/// Orthogonal projector onto `ran(Q1) ^ ran(Q2)`, from the eigenvalue-2
/// eigenspace of `Q1 + Q2`.
pub fn meet(q1: &DMatrix<f64>, q2: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_pair(q1, q2)?;
    Ok(meet_unchecked(q1, q2, tol).0)
}

fn meet_unchecked(q1: &DMatrix<f64>, q2: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let n = q1.nrows();
    let eig = SymmetricEigen::new(q1 + q2);
    let mut m = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if (lambda - 2.0).abs() < tol {
            let v = eig.eigenvectors.column(i);
            m += v * v.transpose();
            rank += 1;
        }
    }
    (m, rank)
}

/// Meet via repeated squaring of `Q1 Q2`, i.e. `(Q1 Q2)^(2^j)`, until two
/// successive powers differ by less than `tol` in operator norm.
///
/// Each squaring doubles the rounding error along the intersection, so when
/// principal angles near zero slow convergence the differences can bottom out
/// above `tol`. Once they have dropped below [`VON_NEUMANN_FLOOR`] and start
/// growing again, the best power seen is returned.
pub fn meet_von_neumann(q1: &DMatrix<f64>, q2: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_pair(q1, q2)?;
    let mut a = q1 * q2;
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for _ in 0..64 {
        let next = &a * &a;
        let diff = operator_norm(&(&next - &a));
        if diff < tol {
            return Ok(next);
        }
        if !diff.is_finite() {
            break;
        }
        match &best {
            Some((b, _)) if diff >= *b => {
                if *b < VON_NEUMANN_FLOOR {
                    break;
                }
            }
            _ => best = Some((diff, next.clone())),
        }
        a = next;
    }
    match best {
        Some((b, m)) if b < VON_NEUMANN_FLOOR => Ok(m),
        _ => Err(Error::NotConverged(
            "von Neumann iteration did not settle".into(),
        )),
    }
}

/// Smallest eigenvalue of `{Q1,Q2} + ||Q1 Q2 - Q1^Q2|| (Q1 + Q2)`; never
/// negative beyond rounding.
pub fn fnw_defect(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> Result<f64> {
    check_pair(q1, q2)?;
    let (m, _) = meet_unchecked(q1, q2, MEET_TOL);
    let c = operator_norm(&(q1 * q2 - m));
    let anti = q1 * q2 + q2 * q1;
    let sum = q1 + q2;
    let target = anti + sum * c;
    let sym = (&target + target.transpose()) * 0.5;
    Ok(sym.symmetric_eigenvalues().min())
}

/// Norms describing how far `P12` and `P23` are from commuting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `||P12 P23 - P12 ^ P23||`.
    pub norm: f64,
    /// `||P12 P23||`.
    pub product_norm: f64,
    /// `||P12 ^ P23||` (1 when the meet is nonzero).
    pub meet_norm: f64,
    pub meet_rank: usize,
}

fn check_three_site(p: &LocalProjector) -> Result<()> {
    let dim = p.d().pow(3);
    if dim > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

pub fn coupling(p: &LocalProjector) -> Result<Coupling> {
    check_three_site(p)?;
    let p12 = p.on_first_pair();
    let p23 = p.on_second_pair();
    let (m, meet_rank) = meet_unchecked(&p12, &p23, MEET_TOL);
    let prod = &p12 * &p23;
    Ok(Coupling {
        norm: operator_norm(&(&prod - &m)),
        product_norm: operator_norm(&prod),
        meet_norm: operator_norm(&m),
        meet_rank,
    })
}

/// `||P12 P23 - P12 ^ P23||` on the `d^3`-dimensional three-site space.
pub fn coupling_norm(p: &LocalProjector) -> Result<f64> {
    Ok(coupling(p)?.norm)
}

/// Spectral gap of `H_loc = P12 + P23` (smallest eigenvalue above the kernel).
pub fn local_gap(p: &LocalProjector) -> Result<f64> {
    check_three_site(p)?;
    let h = p.on_first_pair() + p.on_second_pair();
    let spectrum = dense_spectrum(&h)?;
    let threshold = default_kernel_threshold(2);
    if spectrum[0] > threshold {
        return Err(Error::NotProjector(format!(
            "three-site Hamiltonian has ground energy {} > {threshold:e}",
            spectrum[0]
        )));
    }
    spectrum
        .into_iter()
        .find(|&e| e > threshold)
        .ok_or_else(|| Error::Domain("three-site Hamiltonian is identically zero".into()))
}

/// Lower bound on the gap of every open chain with at least four sites.
pub fn chain_bound(gamma_loc: f64) -> f64 {
    if gamma_loc >= 1.0 {
        1.0
    } else {
        2.0 * (gamma_loc - 0.5)
    }
}

/// Lower bound on the gap of the `k`-ary tree; `k = 1` reproduces [`chain_bound`].
pub fn tree_bound(gamma_loc: f64, k: usize) -> f64 {
    if gamma_loc >= 1.0 {
        1.0
    } else {
        let k = k as f64;
        2.0 * k * (gamma_loc - 1.0 + 1.0 / (2.0 * k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedGapped,
    Inconclusive,
}

impl Verdict {
    fn from_bound(bound: f64) -> Self {
        if bound > 0.0 {
            Verdict::CertifiedGapped
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn is_certified(self) -> bool {
        self == Verdict::CertifiedGapped
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CertifiedGapped => "certified-gapped",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub meet_tol: f64,
    pub kernel_threshold: f64,
}

/// Outcome of the finite-size criteria for one interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub d: usize,
    pub r: usize,
    pub coupling_norm: f64,
    pub product_norm: f64,
    pub meet_rank: usize,
    /// Exact gap of the three-site Hamiltonian.
    pub gamma_loc: f64,
    /// `1 - coupling_norm`.
    pub gamma_loc_lb: f64,
    /// Chain bound evaluated at `max(gamma_loc, gamma_loc_lb)`.
    pub chain_bound: f64,
    pub verdict: Verdict,
    pub tree_bounds: BTreeMap<usize, f64>,
    pub tree_verdicts: BTreeMap<usize, Verdict>,
    pub tolerances: CertificateTolerances,
    /// Seed of the sampled interaction, when known.
    pub seed: Option<RandomSeed>,
}

impl Certificate {
    /// The value fed into the chain and tree bounds.
    pub fn effective_gamma_loc(&self) -> f64 {
        self.gamma_loc.max(self.gamma_loc_lb)
    }
}

/// Evaluates every criterion for `p`, with tree bounds for each `k` in `k_list`.
pub fn certify(p: &LocalProjector, k_list: &[usize]) -> Result<Certificate> {
    if let Some(&k) = k_list.iter().find(|&&k| k < 2) {
        return Err(Error::Domain(format!("tree branching factor k={k} < 2")));
    }
    let c = coupling(p)?;
    let gamma_loc = local_gap(p)?;
    let gamma_loc_lb = 1.0 - c.norm;
    let effective = gamma_loc.max(gamma_loc_lb);
    let chain = chain_bound(effective);
    let tree_bounds: BTreeMap<usize, f64> =
        k_list.iter().map(|&k| (k, tree_bound(effective, k))).collect();
    let tree_verdicts = tree_bounds
        .iter()
        .map(|(&k, &b)| (k, Verdict::from_bound(b)))
        .collect();
    Ok(Certificate {
        d: p.d(),
        r: p.rank(),
        coupling_norm: c.norm,
        product_norm: c.product_norm,
        meet_rank: c.meet_rank,
        gamma_loc,
        gamma_loc_lb,
        chain_bound: chain,
        verdict: Verdict::from_bound(chain),
        tree_bounds,
        tree_verdicts,
        tolerances: CertificateTolerances {
            meet_tol: MEET_TOL,
            kernel_threshold: default_kernel_threshold(2),
        },
        seed: None,
    })
}

/// A random orthonormal family with `max_i ||phi_i - |1 (x) (i+1)>|| < epsilon`.
///
/// Each good vector is displaced by `0.9 * epsilon` along a random unit
/// direction and the result is Gram-Schmidt orthonormalized; the displacement
/// is halved until the distance condition holds (at most 20 attempts).
pub fn construct_near_good(
    d: usize,
    r: usize,
    epsilon: f64,
    seed: RandomSeed,
) -> Result<OrthonormalFamily> {
    let good = OrthonormalFamily::good_vectors(d, r)?;
    if !(epsilon > 0.0 && epsilon < 1.0 / (8.0 * r as f64)) {
        return Err(Error::Domain(format!(
            "epsilon={epsilon} must lie in (0, 1/(8r)) = (0, {})",
            1.0 / (8.0 * r as f64)
        )));
    }
    let n = d * d;
    let mut rng = seed.derive(NEAR_GOOD_STREAM).rng();
    let directions: Vec<Vec<f64>> = (0..r)
        .map(|_| {
            let g = gaussian_vector(&mut rng, n);
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut scale = 0.9 * epsilon;
    for _ in 0..20 {
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(r);
        for (v, g) in good.vectors.iter().zip(&directions) {
            let mut phi: Vec<f64> = v.iter().zip(g).map(|(a, b)| a + scale * b).collect();
            for _ in 0..2 {
                for q in &vectors {
                    let c: f64 = q.iter().zip(&phi).map(|(a, b)| a * b).sum();
                    phi.iter_mut().zip(q).for_each(|(p, q)| *p -= c * q);
                }
            }
            let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
            phi.iter_mut().for_each(|x| *x /= norm);
            vectors.push(phi);
        }
        let family = OrthonormalFamily {
            d,
            r,
            vectors,
            seed: Some(seed),
        };
        if family.max_distance_to(&good) < epsilon && family.gram_deviation() < 1e-12 {
            return Ok(family);
        }
        scale /= 2.0;
    }
    Err(Error::Construction(format!(
        "no family within epsilon={epsilon} of the good vectors after 20 attempts"
    )))
}
