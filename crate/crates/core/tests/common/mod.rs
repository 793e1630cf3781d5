#![allow(dead_code)]

use std::path::PathBuf;

use qcluster::matrix::IntMatrix;
use qcluster::seeds::{QuantumSeed, Skewsymmetrizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn exam1() -> QuantumSeed {
    QuantumSeed::load(fixture("exam1.json")).expect("exam1 fixture")
}

pub fn exam3() -> QuantumSeed {
    QuantumSeed::load(fixture("exam3.json")).expect("exam3 fixture")
}

pub fn rows(m: &IntMatrix) -> Vec<Vec<i64>> {
    m.to_rows()
}

/// Random skew-symmetrizable `B` with `|b_ij| <= max_b` and symmetrizer entries in `1..=max_d`.
pub fn random_exchange<R: Rng>(
    rng: &mut R,
    n: usize,
    max_b: i64,
    max_d: i64,
) -> (IntMatrix, Vec<i64>) {
    let d: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=max_d)).collect();
    let mut b = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // d_i b_ij = -d_j b_ji, so b_ji is determined by b_ij when it is an integer in range.
            let options: Vec<i64> = (-max_b..=max_b)
                .filter(|&v| (d[i] * v) % d[j] == 0 && (d[i] * v / d[j]).abs() <= max_b)
                .collect();
            let v = options[rng.gen_range(0..options.len())];
            b[i][j] = v;
            b[j][i] = -d[i] * v / d[j];
        }
    }
    (IntMatrix::from_rows(b).unwrap(), d)
}

pub fn random_principal_seed<R: Rng>(rng: &mut R, n: usize) -> QuantumSeed {
    let (b, d) = random_exchange(rng, n, 3, 3);
    QuantumSeed::principal(&b, &Skewsymmetrizer::new(d).unwrap()).unwrap()
}

/// Deterministic family of principal seeds with `n` in `{2, 3}`, `|b_ij| <= 3`, `d_i <= 3`.
pub fn random_principal_seeds(count: usize, seed: u64) -> Vec<QuantumSeed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=3);
            random_principal_seed(&mut rng, n)
        })
        .collect()
}
