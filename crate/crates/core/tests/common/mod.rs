//! Dense brute-force reference implementations for the integration tests.
//! Nothing here calls into the sparse code paths under test.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kolmac::ratings::{Observation, RatingMatrix, RatingScale};

pub type Dense = Vec<Vec<u8>>;

pub fn random_sparse(n: usize, m: usize, density: f64, seed: u64) -> (RatingMatrix, Dense) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = vec![vec![0u8; m]; n];
    let mut triplets = Vec::new();
    for (u, row) in dense.iter_mut().enumerate() {
        for (o, cell) in row.iter_mut().enumerate() {
            if rng.gen_bool(density) {
                let r = rng.gen_range(1..=5);
                *cell = r;
                triplets.push(Observation::new(u, o, r));
            }
        }
    }
    let matrix = RatingMatrix::from_triplets(&triplets, n, m, RatingScale::FIVE_STAR).unwrap();
    (matrix, dense)
}

pub fn transpose(d: &Dense) -> Dense {
    let m = d.first().map_or(0, Vec::len);
    (0..m).map(|o| d.iter().map(|row| row[o]).collect()).collect()
}

/// Number of positions where both vectors are nonzero.
pub fn co_rated_dense(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| **x != 0 && **y != 0).count()
}

/// `(value, mass)` of the weighted average of column `o` over rows `v != u`
/// that rated `o`, weights `sim[u][v] * co_rated(row u, row v)^2`.
pub fn neighbour_term(rows: &Dense, sim: &[Vec<f64>], u: usize, o: usize) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for v in 0..rows.len() {
        if v == u || rows[v][o] == 0 {
            continue;
        }
        let c = co_rated_dense(&rows[u], &rows[v]) as f64;
        let w = sim[u][v] * c * c;
        num += w * rows[v][o] as f64;
        den += w;
    }
    (if den > 0.0 { num / den } else { 0.0 }, den)
}

pub fn user_term_oracle(dense: &Dense, s_u: &[Vec<f64>], u: usize, o: usize) -> (f64, f64) {
    neighbour_term(dense, s_u, u, o)
}

pub fn item_term_oracle(dense: &Dense, s_i: &[Vec<f64>], u: usize, o: usize) -> (f64, f64) {
    neighbour_term(&transpose(dense), s_i, o, u)
}

fn mean_of(values: impl Iterator<Item = u8>) -> Option<f64> {
    let v: Vec<f64> = values.filter(|&r| r != 0).map(f64::from).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Full prediction rule with the default fallback chain.
pub fn predict_oracle(
    dense: &Dense,
    s_u: &[Vec<f64>],
    s_i: &[Vec<f64>],
    alpha: f64,
    u: usize,
    o: usize,
) -> f64 {
    let (uv, um) = user_term_oracle(dense, s_u, u, o);
    let (iv, im) = item_term_oracle(dense, s_i, u, o);
    let raw = if um > 0.0 && im > 0.0 {
        alpha * uv + (1.0 - alpha) * iv
    } else if um > 0.0 {
        uv
    } else if im > 0.0 {
        iv
    } else {
        mean_of(dense[u].iter().copied())
            .or_else(|| mean_of(dense.iter().map(|row| row[o])))
            .or_else(|| mean_of(dense.iter().flatten().copied()))
            .unwrap_or(3.0)
    };
    raw.clamp(1.0, 5.0)
}

/// Random symmetric similarity with unit diagonal.
pub fn random_similarity(order: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = vec![vec![0.0; order]; order];
    for a in 0..order {
        s[a][a] = 1.0;
        for b in 0..a {
            let v = rng.gen_range(0.0..=1.0);
            s[a][b] = v;
            s[b][a] = v;
        }
    }
    s
}

pub fn flatten(s: &[Vec<f64>]) -> Vec<f64> {
    s.iter().flatten().copied().collect()
}

/// Exact rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..m {
        if rank == n {
            break;
        }
        let Some(pivot) = (rank..n).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, pivot);
        for r in rank + 1..n {
            for c in col + 1..m {
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    rank
}

pub fn data_dir() -> PathBuf {
    std::env::var_os("KOLMAC_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
