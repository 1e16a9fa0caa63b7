use rayon::prelude::*;

use ffgap::capgeom::{cap_measure_exact, euclidean_to_spherical_radius, spherical_distance, CapQuery};
use ffgap::haar::{gaussian_vector, sample_family, RandomSeed};

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

// mpmath: regularized incomplete Beta for the cap of spherical radius 2 asin(1/4) on S^3.
const CAP_S3_HALF: f64 = 0.0260227743718794;

#[test]
fn first_vector_lands_in_cap_at_the_haar_rate() {
    let trials = 1_000_000u64;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let fam = sample_family(2, 1, RandomSeed::new(5, t)).unwrap();
            let v = &fam.vectors[0];
            let dist2 = (v[0] - 1.0).powi(2) + v[1..].iter().map(|x| x * x).sum::<f64>();
            u64::from(dist2.sqrt() < 0.5)
        })
        .sum();
    let q = CapQuery::new(3, euclidean_to_spherical_radius(0.5)).unwrap();
    let p = cap_measure_exact(&q).unwrap();
    assert!((p - CAP_S3_HALF).abs() < 1e-12);
    let freq = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((freq - p).abs() < 4.0 * se, "frequency {freq} vs {p} (se {se})");
}

#[test]
fn chord_never_exceeds_arc() {
    let mut rng = RandomSeed::new(6, 0).rng();
    for i in 0..10_000 {
        let n = 2 + i % 30;
        let x = unit(gaussian_vector(&mut rng, n));
        let y = unit(gaussian_vector(&mut rng, n));
        let chord = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let arc = spherical_distance(&x, &y).unwrap();
        assert!(chord <= arc + 1e-12, "{chord} > {arc}");
        assert!((euclidean_to_spherical_radius(chord) - arc).abs() < 1e-7);
    }
}

#[test]
fn same_seed_same_family() {
    let a = sample_family(3, 2, RandomSeed::new(11, 4)).unwrap();
    let b = sample_family(3, 2, RandomSeed::new(11, 4)).unwrap();
    let c = sample_family(3, 2, RandomSeed::new(11, 5)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
