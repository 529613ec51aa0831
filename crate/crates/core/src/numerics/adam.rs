use serde::{Deserialize, Serialize};

use super::{Matrix, NumericsError, ParamTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub t: u64,
}

impl AdamState {
    pub fn for_param(param: &ParamTensor) -> Self {
        let (r, c) = param.value.shape();
        Self {
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param.value` from `param.grad`.
/// The gradient is left untouched.
pub fn adam_step(
    param: &mut ParamTensor,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<(), NumericsError> {
    let shape = param.value.shape();
    for found in [param.grad.shape(), state.m.shape(), state.v.shape()] {
        if found != shape {
            return Err(NumericsError::ShapeMismatch {
                expected: shape,
                found,
            });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    let values = param.value.as_mut_slice();
    let grads = param.grad.as_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for i in 0..values.len() {
        let g = grads[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        values[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    if !param.value.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> ParamTensor {
        ParamTensor::new("x", Matrix::from_vec(1, 1, vec![x]).unwrap())
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = ParamTensor::new("w", Matrix::from_vec(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap());
        let before = p.value.clone();
        let mut s = AdamState::for_param(&p);
        for step in 1..=5 {
            adam_step(&mut p, &mut s, &AdamConfig::default()).unwrap();
            assert_eq!(s.t, step);
            assert_eq!(p.value, before);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.01, 250.0] {
            let mut p = scalar(1.0);
            p.grad.set(0, 0, g);
            let mut s = AdamState::for_param(&p);
            let cfg = AdamConfig::default();
            adam_step(&mut p, &mut s, &cfg).unwrap();
            let delta = p.value.get(0, 0) - 1.0;
            assert!((delta + cfg.learning_rate * g.signum()).abs() < 1e-6);
            assert_eq!(p.grad.get(0, 0), g);
        }
    }

    /// Independent scripted run of the update rule on f(x) = x².
    fn scripted_adam_quadratic(x0: f64, lr: f64, steps: usize) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut x, mut m, mut v) = (x0, 0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * x;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        x
    }

    #[test]
    fn quadratic_converges_within_hundred_steps() {
        let oracle = scripted_adam_quadratic(1.0, 0.1, 100);
        assert!(oracle.abs() < 0.05);
        let mut p = scalar(1.0);
        let mut s = AdamState::for_param(&p);
        let cfg = AdamConfig::with_learning_rate(0.1);
        for _ in 0..100 {
            let x = p.value.get(0, 0);
            p.grad.set(0, 0, 2.0 * x);
            adam_step(&mut p, &mut s, &cfg).unwrap();
        }
        assert!(p.value.get(0, 0).abs() < 0.05);
        assert!((p.value.get(0, 0) - oracle).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = scalar(1.0);
        let mut s = AdamState {
            m: Matrix::zeros(2, 1),
            v: Matrix::zeros(2, 1),
            t: 0,
        };
        assert!(adam_step(&mut p, &mut s, &AdamConfig::default()).is_err());
    }
}
