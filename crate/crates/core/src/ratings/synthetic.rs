use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ratings::matrix::{Observation, RatingMatrix, RatingScale};

/// Singular values at or below this fraction of the largest one count as
/// zero when deciding the numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Numerical rank of the dense view of `matrix` (absent entries as 0).
pub fn numerical_rank(matrix: &RatingMatrix) -> usize {
    let (n, m) = (matrix.n_users(), matrix.n_items());
    if n == 0 || m == 0 {
        return 0;
    }
    let dense = DMatrix::from_fn(n, m, |u, o| matrix.value(u, o) as f64);
    let sv = dense.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// A fully observed `n × m` matrix with i.i.d. uniform entries in `scale`,
/// redrawn until it has full row rank `n`.
pub fn generate_synthetic(n: usize, m: usize, scale: RatingScale, seed: u64) -> Result<RatingMatrix> {
    if n > m {
        return Err(Error::Config(format!(
            "synthetic matrix needs n <= m for full row rank, got {n}x{m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let triplets: Vec<Observation> = (0..n)
            .flat_map(|u| (0..m).map(move |o| (u, o)))
            .map(|(u, o)| Observation::new(u, o, rng.gen_range(scale.min..=scale.max)))
            .collect();
        let matrix = RatingMatrix::from_triplets(&triplets, n, m, scale)?;
        if numerical_rank(&matrix) == n {
            return Ok(matrix);
        }
    }
}
