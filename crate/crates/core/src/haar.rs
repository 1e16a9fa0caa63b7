//! Seeded Haar sampling on the orthogonal group.
//!
//! Every random quantity in the crate is drawn from a [`RandomSeed`], a
//! `(master_seed, stream_index)` pair mapped onto an independent ChaCha8
//! stream. Gaussian variates come from `rand_distr::StandardNormal` (the
//! ziggurat transform), so a fixed binary reproduces every sample bit for bit.
//!
//! Haar matrices are produced by the Gaussian-QR construction: fill an `n x n`
//! matrix with i.i.d. standard normals (column-major order), factor it as
//! `QR`, then flip the sign of every column of `Q` whose matching diagonal
//! entry of `R` is negative. Without the sign fix the law of `Q` depends on
//! the QR implementation and is not Haar.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed {
    pub master_seed: u64,
    /// Trial number within an experiment.
    pub stream_index: u64,
}

impl RandomSeed {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A seed for an auxiliary purpose (start vectors, perturbations) derived
    /// from this one without overlapping the Haar stream.
    pub fn derive(&self, purpose: u64) -> RandomSeed {
        // splitmix64 finalizer over (master, purpose)
        let mut z = self
            .master_seed
            .wrapping_add(purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        RandomSeed::new(z, self.stream_index)
    }
}

/// Fills a vector with standard normal variates drawn from `rng`.
pub fn gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Samples an `n x n` Haar-distributed real orthogonal matrix.
pub fn haar_orthogonal(n: usize, seed: RandomSeed) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "Haar matrix dimension must be at least 1".into(),
        ));
    }
    let mut rng = seed.rng();
    let gauss = DMatrix::from_vec(n, n, gaussian_vector(&mut rng, n * n));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    Ok(q)
}

/// `r` real orthonormal vectors in `R^{d^2}`, indexed in the lexicographic
/// product basis (see [`crate::model::pair_index`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalFamily {
    pub d: usize,
    pub r: usize,
    pub vectors: Vec<Vec<f64>>,
    /// Seed that produced the family, if it was sampled.
    pub seed: Option<RandomSeed>,
}

/// Orthonormality tolerance for families accepted from outside the sampler.
const FAMILY_TOL: f64 = 1e-10;

impl OrthonormalFamily {
    /// Validates and wraps externally supplied vectors.
    pub fn from_vectors(d: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
        }
        let r = vectors.len();
        if r == 0 || r > d * d {
            return Err(Error::InvalidRank(format!(
                "rank r={r} must satisfy 1 <= r <= d^2 = {}",
                d * d
            )));
        }
        for v in &vectors {
            if v.len() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    actual: v.len(),
                });
            }
        }
        let family = Self {
            d,
            r,
            vectors,
            seed: None,
        };
        let dev = family.gram_deviation();
        if dev > FAMILY_TOL {
            return Err(Error::InvalidRank(format!(
                "vectors are not orthonormal (Gram deviation {dev:e})"
            )));
        }
        Ok(family)
    }

    /// The canonical vectors `|1 (x) (i+1)>`, `i = 1..r`; flat indices `1..=r`.
    pub fn good_vectors(d: usize, r: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
        }
        if r == 0 || r >= d {
            return Err(Error::InvalidRank(format!(
                "good vectors need 1 <= r < d (got r={r}, d={d})"
            )));
        }
        let vectors = (1..=r)
            .map(|i| {
                let mut v = vec![0.0; d * d];
                v[i] = 1.0;
                v
            })
            .collect();
        Ok(Self {
            d,
            r,
            vectors,
            seed: None,
        })
    }

    /// Largest entry of `|G - I|` where `G` is the Gram matrix.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_i ||self_i - other_i||` over the common prefix of both families.
    pub fn max_distance_to(&self, other: &OrthonormalFamily) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// First `r` columns of a Haar matrix of size `d^2`.
pub fn sample_family(d: usize, r: usize, seed: RandomSeed) -> Result<OrthonormalFamily> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("local dimension d={d} < 2")));
    }
    let n = d * d;
    if r == 0 || r > n {
        return Err(Error::InvalidRank(format!(
            "rank r={r} must satisfy 1 <= r <= d^2 = {n}"
        )));
    }
    let o = haar_orthogonal(n, seed)?;
    let vectors = (0..r).map(|c| o.column(c).iter().copied().collect()).collect();
    Ok(OrthonormalFamily {
        d,
        r,
        vectors,
        seed: Some(seed),
    })
}
