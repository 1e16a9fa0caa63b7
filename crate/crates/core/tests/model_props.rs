use nalgebra::DMatrix;
use proptest::prelude::*;

use ffgap::haar::{sample_family, RandomSeed};
use ffgap::model::{
    chain_matvec, decode_config, tree_matvec, ChainHamiltonian, LocalProjector, TreeHamiltonian,
    TreeSpec,
};
use ffgap::spectral::LinearOperator;

/// Matrix element `<a| H |b>` summed edge by edge from the digit strings.
fn element(p: &LocalProjector, edges: &[(usize, usize)], a: &[usize], b: &[usize]) -> f64 {
    let d = p.d();
    edges
        .iter()
        .filter(|&&(u, v)| (0..a.len()).all(|s| s == u || s == v || a[s] == b[s]))
        .map(|&(u, v)| p.matrix()[(a[u] * d + a[v], b[u] * d + b[v])])
        .sum()
}

fn oracle(p: &LocalProjector, sites: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let d = p.d();
    let n = d.pow(sites as u32);
    let digits: Vec<Vec<usize>> = (0..n).map(|i| decode_config(i, d, sites)).collect();
    DMatrix::from_fn(n, n, |i, j| element(p, edges, &digits[i], &digits[j]))
}

fn chain_edges(length: usize) -> Vec<(usize, usize)> {
    (0..length - 1).map(|j| (j, j + 1)).collect()
}

fn projector(d: usize, r: usize, seed: u64) -> LocalProjector {
    LocalProjector::from_family(&sample_family(d, r, RandomSeed::new(seed, 0)).unwrap())
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RandomSeed::new(seed, 1).rng();
    ffgap::haar::gaussian_vector(&mut rng, n)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn chain_matvec_matches_elementwise_oracle() {
    for (d, r, length) in [(2, 1, 2), (2, 1, 5), (2, 2, 8), (3, 1, 3), (3, 2, 5), (4, 3, 4), (4, 1, 6)] {
        let p = projector(d, r, (d * 100 + r * 10 + length) as u64);
        let h = oracle(&p, length, &chain_edges(length));
        let x = random_vector(h.nrows(), 3);
        let want = &h * DMatrix::from_column_slice(x.len(), 1, &x);
        let got = chain_matvec(&p, length, &x).unwrap();
        assert!(max_diff(&got, want.as_slice()) < 1e-12, "d={d} r={r} L={length}");
    }
}

#[test]
fn tree_matvec_matches_elementwise_oracle() {
    for (d, r, k, levels) in [(3, 1, 2, 2), (3, 1, 2, 3), (2, 1, 3, 2), (3, 1, 3, 2), (4, 1, 3, 2), (2, 1, 2, 3)] {
        let p = projector(d, r, (d * 1000 + k * 10 + levels) as u64);
        let spec = TreeSpec::new(d, r, k, levels).unwrap();
        let sites = spec.vertex_count().unwrap();
        let h = oracle(&p, sites, &spec.edges().unwrap());
        let x = random_vector(h.nrows(), 4);
        let want = &h * DMatrix::from_column_slice(x.len(), 1, &x);
        let got = tree_matvec(&p, k, levels, &x).unwrap();
        assert!(max_diff(&got, want.as_slice()) < 1e-12, "d={d} k={k} levels={levels}");
    }
}

#[test]
fn tree_edges_point_from_parent_to_child() {
    let spec = TreeSpec::new(3, 1, 2, 3).unwrap();
    assert_eq!(
        spec.edges().unwrap(),
        vec![(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]
    );
}

#[test]
fn two_level_binary_tree_is_a_path_through_the_root() {
    // Edges (0,1),(0,2): the root is the first factor of both terms.
    let p = projector(2, 1, 77);
    let tree = TreeHamiltonian::new(&p, 2, 2).unwrap().dense().unwrap();
    let h = oracle(&p, 3, &[(0, 1), (0, 2)]);
    assert!((tree - h).amax() < 1e-14);
}

#[test]
fn frustration_free_for_small_ranks() {
    use ffgap::spectral::{dense_spectrum, default_kernel_threshold};
    for seed in 0..10 {
        for (d, r, length) in [(2, 1, 6), (3, 1, 5), (3, 2, 5), (4, 3, 4)] {
            let p = projector(d, r, seed);
            let h = ChainHamiltonian::new(&p, length).unwrap().dense().unwrap();
            let e0 = dense_spectrum(&h).unwrap()[0];
            assert!(e0 <= default_kernel_threshold(length - 1), "d={d} r={r} seed={seed}: {e0}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_operator_is_symmetric_and_positive(
        d in 2usize..=3,
        length in 2usize..=6,
        seed in any::<u64>(),
        rank_pick in 0usize..8,
    ) {
        let r = 1 + rank_pick % (d * d - 1);
        let p = projector(d, r, seed);
        let h = ChainHamiltonian::new(&p, length).unwrap();
        let n = h.dim();
        let x = random_vector(n, seed ^ 1);
        let y = random_vector(n, seed ^ 2);
        let mut hx = vec![0.0; n];
        let mut hy = vec![0.0; n];
        h.apply(&x, &mut hx);
        h.apply(&y, &mut hy);
        prop_assert!((dot(&y, &hx) - dot(&hy, &x)).abs() < 1e-10);
        let norm = dot(&x, &x).sqrt();
        prop_assert!(dot(&x, &hx) / (norm * norm) >= -1e-10);
    }

    #[test]
    fn tree_operator_is_symmetric_and_positive(
        d in 2usize..=3,
        k in 2usize..=3,
        levels in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let p = projector(d, 1, seed);
        let h = TreeHamiltonian::new(&p, k, levels).unwrap();
        prop_assume!(h.dim() <= 4096);
        let n = h.dim();
        let x = random_vector(n, seed ^ 3);
        let y = random_vector(n, seed ^ 4);
        let mut hx = vec![0.0; n];
        let mut hy = vec![0.0; n];
        h.apply(&x, &mut hx);
        h.apply(&y, &mut hy);
        prop_assert!((dot(&y, &hx) - dot(&hy, &x)).abs() < 1e-10);
        let norm = dot(&x, &x).sqrt();
        prop_assert!(dot(&x, &hx) / (norm * norm) >= -1e-10);
    }

    #[test]
    fn projector_json_round_trip(d in 2usize..=4, seed in any::<u64>()) {
        let p = projector(d, 1, seed);
        let text = serde_json::to_string(&p).unwrap();
        let back: LocalProjector = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }
}
