//! Local projectors and the chain/tree Hamiltonians built from them.
//!
//! # Basis convention
//!
//! Local labels `|1>, ..., |d>` are stored as 0-based digits `0..d`. The pair
//! state `|i (x) j>` has flat index `(i-1)*d + (j-1)`, see [`pair_index`]. A
//! configuration `(i_1, ..., i_n)` of `n` sites has flat index
//! `sum_s (i_s - 1) * d^(n-s)`: site 1 is the most significant digit. Tree
//! vertices are numbered breadth-first from the root (vertex 0), so the
//! children of vertex `v` are `k*v + 1 ..= k*v + k`.
//!
//! Chain bonds carry `P` on sites `(j, j+1)`. Tree edges carry `P` with its
//! first tensor factor on the parent and its second on the child.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::haar::OrthonormalFamily;
use crate::spectral::LinearOperator;

/// Tolerance for `P^2 = P` and `tr P = r` on externally supplied matrices.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Largest dimension for which a dense matrix may be assembled.
pub const DENSE_LIMIT: usize = 20_000;

/// Largest state space the matrix-free operators will address.
pub const MAX_STATE_DIM: usize = 1 << 28;

/// Flat index of `|i (x) j>` for 0-based digits.
pub fn pair_index(i: usize, j: usize, d: usize) -> usize {
    i * d + j
}

/// Flat index of a configuration of 0-based digits, first site most significant.
pub fn config_index(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// Inverse of [`config_index`].
pub fn decode_config(mut index: usize, d: usize, sites: usize) -> Vec<usize> {
    let mut digits = vec![0; sites];
    for s in (0..sites).rev() {
        digits[s] = index % d;
        index /= d;
    }
    digits
}

fn checked_state_dim(d: usize, sites: usize) -> Result<usize> {
    let dim = u32::try_from(sites)
        .ok()
        .and_then(|s| d.checked_pow(s))
        .ok_or_else(|| Error::Overflow(format!("d^{sites} overflows (d={d})")))?;
    if dim > MAX_STATE_DIM {
        return Err(Error::Overflow(format!(
            "state dimension {dim} exceeds {MAX_STATE_DIM}"
        )));
    }
    Ok(dim)
}

/// A rank-`r` orthogonal projector on `C^d (x) C^d` with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProjector {
    d: usize,
    r: usize,
    matrix: DMatrix<f64>,
}

impl LocalProjector {
    /// `P = sum_i |phi_i><phi_i|`.
    pub fn from_family(family: &OrthonormalFamily) -> Self {
        let n = family.d * family.d;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v: f64 = family.vectors.iter().map(|phi| phi[a] * phi[b]).sum();
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Self {
            d: family.d,
            r: family.r,
            matrix: m,
        }
    }

    /// The diagonal reference projector onto `|1 (x) 2>, ..., |1 (x) (r+1)>`.
    pub fn reference(d: usize, r: usize) -> Result<Self> {
        Ok(Self::from_family(&OrthonormalFamily::good_vectors(d, r)?))
    }

    /// Wraps a matrix after checking symmetry, idempotency and trace.
    pub fn from_matrix(d: usize, r: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
        }
        let n = d * d;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        if r == 0 || r > n {
            return Err(Error::InvalidRank(format!("rank {r} outside 1..={n}")));
        }
        if matrix != matrix.transpose() {
            return Err(Error::NotProjector("matrix is not exactly symmetric".into()));
        }
        let idem = (&matrix * &matrix - &matrix).amax();
        if idem > PROJECTOR_TOL {
            return Err(Error::NotProjector(format!("|P^2 - P| = {idem:e}")));
        }
        let trace = matrix.trace();
        if (trace - r as f64).abs() > PROJECTOR_TOL {
            return Err(Error::NotProjector(format!("trace {trace} != rank {r}")));
        }
        Ok(Self { d, r, matrix })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `P (x) I_d` on three sites.
    pub fn on_first_pair(&self) -> DMatrix<f64> {
        self.matrix.kronecker(&DMatrix::identity(self.d, self.d))
    }

    /// `I_d (x) P` on three sites.
    pub fn on_second_pair(&self) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.d, self.d).kronecker(&self.matrix)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectorJson {
    d: usize,
    r: usize,
    /// Row-major, `d^4` entries.
    matrix: Vec<f64>,
}

impl Serialize for LocalProjector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.d * self.d;
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(self.matrix[(i, j)]);
            }
        }
        ProjectorJson {
            d: self.d,
            r: self.r,
            matrix: flat,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LocalProjector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ProjectorJson::deserialize(deserializer)?;
        let n = raw.d * raw.d;
        if raw.matrix.len() != n * n {
            return Err(serde::de::Error::custom(format!(
                "matrix has {} entries, expected {}",
                raw.matrix.len(),
                n * n
            )));
        }
        let m = DMatrix::from_row_slice(n, n, &raw.matrix);
        LocalProjector::from_matrix(raw.d, raw.r, m).map_err(serde::de::Error::custom)
    }
}

/// Which lattice a rank bound or spec refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Chain,
    Tree { k: usize },
}

/// Largest rank for which the translated Hamiltonian is known to be
/// frustration-free: `max(d-1, floor(d^2/4))` on chains and the largest
/// integer strictly below `d/k` on trees.
pub fn max_ff_rank(d: usize, lattice: LatticeKind) -> usize {
    match lattice {
        LatticeKind::Chain => (d.saturating_sub(1)).max(d * d / 4),
        LatticeKind::Tree { k } => d.div_ceil(k.max(1)).saturating_sub(1),
    }
}

/// Open chain of `length` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub d: usize,
    pub r: usize,
    pub length: usize,
}

impl ChainSpec {
    pub fn new(d: usize, r: usize, length: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
        }
        if length < 2 {
            return Err(Error::InvalidDimension(format!("chain length {length} < 2")));
        }
        Ok(Self { d, r, length })
    }

    pub fn num_terms(&self) -> usize {
        self.length - 1
    }

    pub fn state_dim(&self) -> Result<usize> {
        checked_state_dim(self.d, self.length)
    }

    pub fn rank_guarantees_ff(&self) -> bool {
        self.r >= 1 && self.r <= max_ff_rank(self.d, LatticeKind::Chain)
    }
}

/// Rooted `k`-ary tree with `levels` levels; the root alone is level 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub d: usize,
    pub r: usize,
    pub k: usize,
    pub levels: usize,
}

impl TreeSpec {
    pub fn new(d: usize, r: usize, k: usize, levels: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
        }
        if k < 2 {
            return Err(Error::InvalidDimension(format!("branching factor k={k} < 2")));
        }
        if levels < 1 {
            return Err(Error::InvalidDimension("a tree needs at least one level".into()));
        }
        let spec = Self { d, r, k, levels };
        spec.vertex_count()?;
        Ok(spec)
    }

    /// `(k^L - 1)/(k - 1)`.
    pub fn vertex_count(&self) -> Result<usize> {
        let mut total: usize = 0;
        let mut level_size: usize = 1;
        for level in 0..self.levels {
            if level > 0 {
                level_size = level_size
                    .checked_mul(self.k)
                    .ok_or_else(|| Error::Overflow("tree vertex count overflows".into()))?;
            }
            total = total
                .checked_add(level_size)
                .ok_or_else(|| Error::Overflow("tree vertex count overflows".into()))?;
        }
        Ok(total)
    }

    pub fn num_terms(&self) -> Result<usize> {
        Ok(self.vertex_count()? - 1)
    }

    pub fn state_dim(&self) -> Result<usize> {
        checked_state_dim(self.d, self.vertex_count()?)
    }

    /// Parent-child pairs in breadth-first numbering.
    pub fn edges(&self) -> Result<Vec<(usize, usize)>> {
        let v = self.vertex_count()?;
        Ok((1..v).map(|c| ((c - 1) / self.k, c)).collect())
    }

    pub fn rank_guarantees_ff(&self) -> bool {
        self.r >= 1 && self.r <= max_ff_rank(self.d, LatticeKind::Tree { k: self.k })
    }
}

/// Either lattice, for APIs that handle both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    Chain(ChainSpec),
    Tree(TreeSpec),
}

impl Lattice {
    pub fn d(&self) -> usize {
        match self {
            Lattice::Chain(c) => c.d,
            Lattice::Tree(t) => t.d,
        }
    }

    pub fn num_terms(&self) -> Result<usize> {
        match self {
            Lattice::Chain(c) => Ok(c.num_terms()),
            Lattice::Tree(t) => t.num_terms(),
        }
    }

    pub fn state_dim(&self) -> Result<usize> {
        match self {
            Lattice::Chain(c) => c.state_dim(),
            Lattice::Tree(t) => t.state_dim(),
        }
    }
}

/// `H_L = sum_j P_{j,j+1}` on an open chain, applied without assembling it.
#[derive(Debug, Clone)]
pub struct ChainHamiltonian {
    projector: LocalProjector,
    length: usize,
    dim: usize,
    /// `stride[j]` is the index stride of site `j + 1` (second site of bond `j`).
    strides: Vec<usize>,
}

impl ChainHamiltonian {
    pub fn new(projector: &LocalProjector, length: usize) -> Result<Self> {
        let spec = ChainSpec::new(projector.d(), projector.rank(), length)?;
        let dim = spec.state_dim()?;
        let d = projector.d();
        let strides = (0..length - 1)
            .map(|j| d.pow((length - 2 - j) as u32))
            .collect();
        Ok(Self {
            projector: projector.clone(),
            length,
            dim,
            strides,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn num_terms(&self) -> usize {
        self.length - 1
    }

    /// `I_{d^j} (x) P (x) I_{d^(L-j-2)}` summed over bonds.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.dim > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                dim: self.dim,
                limit: DENSE_LIMIT,
            });
        }
        let d = self.projector.d();
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.length - 1 {
            let left = DMatrix::<f64>::identity(d.pow(j as u32), d.pow(j as u32));
            let right_dim = d.pow((self.length - 2 - j) as u32);
            let right = DMatrix::<f64>::identity(right_dim, right_dim);
            h += left.kronecker(&self.projector.matrix).kronecker(&right);
        }
        Ok(h)
    }
}

impl LinearOperator for ChainHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let d2 = self.projector.d() * self.projector.d();
        let p = &self.projector.matrix;
        for &s in &self.strides {
            let block = d2 * s;
            for base in (0..self.dim).step_by(block) {
                for a_out in 0..d2 {
                    let out = base + a_out * s;
                    for a_in in 0..d2 {
                        let c = p[(a_out, a_in)];
                        if c == 0.0 {
                            continue;
                        }
                        let inp = base + a_in * s;
                        for t in 0..s {
                            y[out + t] += c * x[inp + t];
                        }
                    }
                }
            }
        }
    }
}

/// `H_L = sum_e P_e` over the edges of a rooted `k`-ary tree.
#[derive(Debug, Clone)]
pub struct TreeHamiltonian {
    projector: LocalProjector,
    spec: TreeSpec,
    dim: usize,
    /// `(parent stride, child stride)` per edge.
    edge_strides: Vec<(usize, usize)>,
}

impl TreeHamiltonian {
    pub fn new(projector: &LocalProjector, k: usize, levels: usize) -> Result<Self> {
        let spec = TreeSpec::new(projector.d(), projector.rank(), k, levels)?;
        let dim = spec.state_dim()?;
        let v = spec.vertex_count()?;
        let d = projector.d();
        let stride = |site: usize| d.pow((v - 1 - site) as u32);
        let edge_strides = spec
            .edges()?
            .into_iter()
            .map(|(p, c)| (stride(p), stride(c)))
            .collect();
        Ok(Self {
            projector: projector.clone(),
            spec,
            dim,
            edge_strides,
        })
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn num_terms(&self) -> usize {
        self.edge_strides.len()
    }

    /// Dense matrix assembled column by column from the matrix-free product.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        dense_from_operator(self)
    }
}

impl LinearOperator for TreeHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let d = self.projector.d();
        let d2 = d * d;
        let p = &self.projector.matrix;
        let mut local = vec![0.0; d2];
        let mut offsets = vec![0usize; d2];
        for &(sp, sc) in &self.edge_strides {
            for (a, off) in offsets.iter_mut().enumerate() {
                *off = (a / d) * sp + (a % d) * sc;
            }
            for base in 0..self.dim {
                if (base / sp) % d != 0 || (base / sc) % d != 0 {
                    continue;
                }
                for (l, off) in local.iter_mut().zip(&offsets) {
                    *l = x[base + off];
                }
                for (a_out, off) in offsets.iter().enumerate() {
                    let mut acc = 0.0;
                    for (a_in, l) in local.iter().enumerate() {
                        acc += p[(a_out, a_in)] * l;
                    }
                    y[base + off] += acc;
                }
            }
        }
    }
}

/// Assembles any operator densely by applying it to the unit vectors.
pub fn dense_from_operator<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<f64>> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            dim: n,
            limit: DENSE_LIMIT,
        });
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    Ok(m)
}

/// `H_L x` on a chain of `length` sites.
pub fn chain_matvec(p: &LocalProjector, length: usize, x: &[f64]) -> Result<Vec<f64>> {
    let h = ChainHamiltonian::new(p, length)?;
    apply_checked(&h, x)
}

/// `H_L^{(k)} x` on a tree with `levels` levels.
pub fn tree_matvec(p: &LocalProjector, k: usize, levels: usize, x: &[f64]) -> Result<Vec<f64>> {
    let h = TreeHamiltonian::new(p, k, levels)?;
    apply_checked(&h, x)
}

fn apply_checked<O: LinearOperator>(op: &O, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: x.len(),
        });
    }
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    Ok(y)
}
