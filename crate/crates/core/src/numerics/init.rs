use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{Matrix, NumericsError};

/// The one generator type threaded through every stochastic operation.
pub type Rng64 = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    Zeros,
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    /// Glorot uniform with bound `sqrt(6 / (rows + cols))`.
    Xavier,
}

pub fn init_params<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    rng: &mut R,
) -> Result<Matrix, NumericsError> {
    if rows == 0 || cols == 0 {
        return Err(NumericsError::ZeroDimension((rows, cols)));
    }
    let n = rows * cols;
    let values: Vec<f64> = match scheme {
        InitScheme::Zeros => vec![0.0; n],
        InitScheme::Normal { mean, std } => {
            let dist = Normal::new(mean, std).map_err(|_| NumericsError::NonFinite)?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        InitScheme::Uniform { low, high } => {
            let dist = Uniform::new(low, high).map_err(|_| NumericsError::NonFinite)?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        InitScheme::Xavier => {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let dist = Uniform::new(-bound, bound).map_err(|_| NumericsError::NonFinite)?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
    };
    Matrix::from_vec(rows, cols, values)
}
