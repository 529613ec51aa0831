//! Dense numeric primitives shared by the knowledge-embedding trainer and
//! the memory network: matrices, a max-shifted softmax, Adam, seeded
//! initialisation, a central-difference gradient checker and the binary
//! checkpoint container.

mod adam;
mod checkpoint;
mod gradcheck;
mod init;
mod matrix;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    read_bundle, read_matrix, write_bundle, write_matrix, Bundle, BUNDLE_MAGIC, FORMAT_VERSION,
    MATRIX_MAGIC,
};
pub use gradcheck::{gradient_check, GradCheckReport, ParamSet};
pub use init::{init_params, seeded_rng, InitScheme, Rng64};
pub use matrix::{axpy, dot, l2_norm, mean_of, Matrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("empty input")]
    Empty,
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("zero dimension in requested shape {0:?}")]
    ZeroDimension((usize, usize)),
    #[error("finite-difference epsilon {0} outside [1e-6, 1e-3]")]
    BadEpsilon(f64),
    #[error("loss function is not deterministic: {first} != {second}")]
    NonDeterministic { first: f64, second: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Softmax computed after subtracting the maximum score.
pub fn stable_softmax(scores: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if scores.is_empty() {
        return Err(NumericsError::Empty);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// A trainable matrix with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_symmetric_pair() {
        assert_eq!(stable_softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_large_gap_does_not_overflow() {
        let p = stable_softmax(&[1000.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
    }

    #[test]
    fn softmax_one_two_three() {
        // exp(-2), exp(-1), 1 normalised; evaluated independently below
        let z = (-2f64).exp() + (-1f64).exp() + 1.0;
        let oracle = [(-2f64).exp() / z, (-1f64).exp() / z, 1.0 / z];
        let frozen = [0.09003057, 0.24472847, 0.66524096];
        let p = stable_softmax(&[1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            assert!((p[i] - oracle[i]).abs() < 1e-12);
            assert!((p[i] - frozen[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(matches!(stable_softmax(&[]), Err(NumericsError::Empty)));
        assert!(matches!(
            stable_softmax(&[1.0, f64::INFINITY]),
            Err(NumericsError::NonFinite)
        ));
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            v in prop::collection::vec(-1e3f64..1e3, 1..200),
            shift in -1e3f64..1e3,
        ) {
            let p = stable_softmax(&v).unwrap();
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let q = stable_softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
