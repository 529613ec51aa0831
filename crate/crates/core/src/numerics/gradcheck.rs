use super::{NumericsError, ParamTensor};

/// Anything that exposes its trainable tensors in a fixed order.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&ParamTensor>;
    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor>;
}

impl ParamSet for Vec<ParamTensor> {
    fn tensors(&self) -> Vec<&ParamTensor> {
        self.iter().collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `(tensor name, max relative error over its entries)`
    pub per_param: Vec<(String, f64)>,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Compares the analytic gradients stored in `params` against central
/// differences of `loss_fn`. Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
///
/// Values are restored after each probe; the analytic gradients are read,
/// never modified.
pub fn gradient_check<P, F>(
    params: &mut P,
    mut loss_fn: F,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NumericsError>
where
    P: ParamSet + ?Sized,
    F: FnMut(&P) -> f64,
{
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(NumericsError::BadEpsilon(epsilon));
    }
    let first = loss_fn(params);
    let second = loss_fn(params);
    if first.to_bits() != second.to_bits() {
        return Err(NumericsError::NonDeterministic { first, second });
    }

    let count = params.tensors().len();
    let mut per_param = Vec::with_capacity(count);
    let mut overall = 0.0f64;
    for t in 0..count {
        let (name, len) = {
            let tensors = params.tensors();
            (tensors[t].name.clone(), tensors[t].len())
        };
        let mut worst = 0.0f64;
        for j in 0..len {
            let original = params.tensors()[t].value.as_slice()[j];
            let analytic = params.tensors()[t].grad.as_slice()[j];

            params.tensors_mut()[t].value.as_mut_slice()[j] = original + epsilon;
            let plus = loss_fn(params);
            params.tensors_mut()[t].value.as_mut_slice()[j] = original - epsilon;
            let minus = loss_fn(params);
            params.tensors_mut()[t].value.as_mut_slice()[j] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let err = (analytic - numeric).abs() / denom;
            if !err.is_finite() {
                return Err(NumericsError::NonFinite);
            }
            worst = worst.max(err);
        }
        overall = overall.max(worst);
        per_param.push((name, worst));
    }
    Ok(GradCheckReport {
        per_param,
        max_relative_error: overall,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use std::cell::Cell;

    fn square_param(x: f64, grad_scale: f64) -> Vec<ParamTensor> {
        let mut p = ParamTensor::new("x", Matrix::from_vec(1, 1, vec![x]).unwrap());
        p.grad.set(0, 0, grad_scale * 2.0 * x);
        vec![p]
    }

    #[allow(clippy::ptr_arg)] // the loss closure receives the ParamSet itself
    fn square_loss(p: &Vec<ParamTensor>) -> f64 {
        let x = p[0].value.get(0, 0);
        x * x
    }

    #[test]
    fn quadratic_passes() {
        let mut p = square_param(3.0, 1.0);
        let report = gradient_check(&mut p, square_loss, 1e-4, 1e-8).unwrap();
        assert!(report.max_relative_error < 1e-8, "{report:?}");
        assert!(report.passed());
        assert_eq!(p[0].value.get(0, 0), 3.0);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut p = square_param(3.0, 1.1);
        let report = gradient_check(&mut p, square_loss, 1e-4, 1e-4).unwrap();
        // |6.6 - 6| / 6.6
        assert!((report.max_relative_error - 0.6 / 6.6).abs() < 1e-6);
        assert!(!report.passed());
    }

    #[test]
    fn nondeterministic_loss_is_reported() {
        let mut p = square_param(1.0, 1.0);
        let calls = Cell::new(0.0);
        let result = gradient_check(
            &mut p,
            |_| {
                calls.set(calls.get() + 1.0);
                calls.get()
            },
            1e-4,
            1e-4,
        );
        assert!(matches!(result, Err(NumericsError::NonDeterministic { .. })));
    }

    #[test]
    fn epsilon_range_enforced() {
        let mut p = square_param(1.0, 1.0);
        assert!(gradient_check(&mut p, square_loss, 1e-2, 1e-4).is_err());
        assert!(gradient_check(&mut p, square_loss, 1e-8, 1e-4).is_err());
    }
}
