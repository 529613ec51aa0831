//! Cross-entropy loss and hand-derived gradients.

use crate::numerics::{axpy, dot, Matrix};

use super::{forward, ForwardTrace, MnmParams, ModelError, ModelInput, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    /// Mean cross-entropy.
    pub loss: f64,
    /// Positive-class probability of every instance, in batch order.
    pub positive: Vec<f64>,
}

fn log_prob(trace: &ForwardTrace, label: usize) -> f64 {
    let [a, b] = trace.logits;
    let m = a.max(b);
    let lse = m + ((a - m).exp() + (b - m).exp()).ln();
    trace.logits[label] - lse
}

fn check_label(label: usize) -> Result<(), ModelError> {
    if label > 1 {
        return Err(ModelError::Contract(format!("label {label} is not 0 or 1")));
    }
    Ok(())
}

/// Mean cross-entropy without touching gradients.
pub fn batch_loss(params: &MnmParams, batch: &[(ModelInput, usize)]) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Contract("empty batch".into()));
    }
    let mut total = 0.0;
    for (input, label) in batch {
        check_label(*label)?;
        total -= log_prob(&forward(params, input)?, *label);
    }
    Ok(total / batch.len() as f64)
}

/// Mean cross-entropy over `batch`; overwrites every parameter gradient
/// with the gradient of that mean. Instances are accumulated in batch
/// order so the result is bit-reproducible.
pub fn loss_and_gradients(params: &mut MnmParams, batch: &[(ModelInput, usize)]) -> Result<BatchLoss, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Contract("empty batch".into()));
    }
    for (_, label) in batch {
        check_label(*label)?;
    }
    params.zero_grad();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut positive = Vec::with_capacity(batch.len());
    for (input, label) in batch {
        let trace = forward(params, input)?;
        total -= log_prob(&trace, *label);
        positive.push(trace.positive_probability());
        backward(params, &trace, *label, scale);
    }
    Ok(BatchLoss {
        loss: total * scale,
        positive,
    })
}

fn backward(params: &mut MnmParams, trace: &ForwardTrace, label: usize, scale: f64) {
    let d = params.config.dim;
    let single = params.config.variant == Variant::Single;

    let dlogits: Vec<f64> = (0..2)
        .map(|c| scale * (trace.probabilities[c] - if c == label { 1.0 } else { 0.0 }))
        .collect();
    params.classifier.grad.add_outer(1.0, &dlogits, &trace.output);
    for (c, g) in dlogits.iter().enumerate() {
        let b = params.classifier_bias.grad.get(c, 0);
        params.classifier_bias.grad.set(c, 0, b + g);
    }
    let dout = params.classifier.value.matvec_transposed(&dlogits);

    for (p, layers) in trace.pathways.iter().enumerate() {
        let mut de: Vec<Vec<f64>> = if single {
            vec![dout[..d].to_vec(), dout[d..2 * d].to_vec()]
        } else {
            vec![dout[p * d..(p + 1) * d].to_vec()]
        };
        for (k, layer) in layers.iter().enumerate().rev() {
            let n = layer.memory.rows();

            // e′_j = W_t e_j + v
            let transform = &mut params.layers[k].transform;
            let mut dv = vec![0.0; d];
            let mut de_in = Vec::with_capacity(de.len());
            for (j, g) in de.iter().enumerate() {
                transform.grad.add_outer(1.0, g, &layer.entities_in[j]);
                de_in.push(transform.value.matvec_transposed(g));
                axpy(&mut dv, 1.0, g);
            }

            // pooling
            let mut dalpha = vec![0.0; n];
            let mut dmem = Matrix::zeros(n, d);
            match &layer.argmax {
                None => {
                    for (i, da) in dalpha.iter_mut().enumerate() {
                        *da = dot(layer.memory.row(i), &dv);
                        axpy(dmem.row_mut(i), layer.weights[i], &dv);
                    }
                }
                Some(arg) => {
                    for (c, &i) in arg.iter().enumerate() {
                        dalpha[i] += layer.memory.get(i, c) * dv[c];
                        let cur = dmem.get(i, c);
                        dmem.set(i, c, cur + layer.weights[i] * dv[c]);
                    }
                }
            }

            // softmax then tanh
            let s: f64 = layer.weights.iter().zip(&dalpha).map(|(a, g)| a * g).sum();
            let dscore: Vec<f64> = (0..n)
                .map(|i| layer.weights[i] * (dalpha[i] - s) * (1.0 - layer.scores[i] * layer.scores[i]))
                .collect();
            let total: f64 = dscore.iter().sum();

            let att = params.attention_for_mut(p, k);
            {
                let g = att.weight.grad.as_mut_slice();
                for (i, &ds) in dscore.iter().enumerate() {
                    axpy(&mut g[..d], ds, layer.memory.row(i));
                }
                for (j, e) in layer.entities_in.iter().enumerate() {
                    axpy(&mut g[d * (1 + j)..d * (2 + j)], total, e);
                }
            }
            let b = att.bias.grad.get(0, 0);
            att.bias.grad.set(0, 0, b + total);
            let w = att.weight.value.as_slice();
            for (j, g) in de_in.iter_mut().enumerate() {
                axpy(g, total, &w[d * (1 + j)..d * (2 + j)]);
            }
            de = de_in;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KnowledgeMode, MnmConfig};
    use crate::numerics::{gradient_check, init_params, seeded_rng, InitScheme};

    fn instance(n: usize, d: usize, seed: u64) -> ModelInput {
        let mut rng = seeded_rng(seed);
        let s = InitScheme::Normal { mean: 0.0, std: 0.5 };
        let mut v = |r| init_params(r, d, s, &mut rng).unwrap();
        ModelInput {
            words: v(n),
            distances: [(0..n).map(|i| (i + 1).min(n)).collect(), (0..n).map(|i| n - 1 - i).collect()],
            entities: [v(1).into_vec(), v(1).into_vec()],
            relation: Some(v(1).into_vec()),
        }
    }

    #[test]
    fn uniform_predictor_costs_ln2() {
        let cfg = MnmConfig { layers: 2, dim: 4, ..MnmConfig::default() };
        let mut params = MnmParams::init(&cfg).unwrap();
        params.classifier.value.fill(0.0);
        let batch = vec![(instance(5, 4, 1), 1), (instance(3, 4, 2), 0)];
        let r = loss_and_gradients(&mut params, &batch).unwrap();
        assert!((r.loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_costs_nothing() {
        let cfg = MnmConfig { layers: 1, dim: 3, ..MnmConfig::default() };
        let mut params = MnmParams::init(&cfg).unwrap();
        params.classifier.value.fill(0.0);
        params.classifier_bias.value.set(1, 0, 60.0);
        let loss = batch_loss(&params, &[(instance(4, 3, 0), 1)]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn bad_label_is_rejected() {
        let cfg = MnmConfig { layers: 1, dim: 3, ..MnmConfig::default() };
        let mut params = MnmParams::init(&cfg).unwrap();
        assert!(loss_and_gradients(&mut params, &[(instance(4, 3, 0), 2)]).is_err());
        assert!(loss_and_gradients(&mut params, &[]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences_for_every_combination() {
        for variant in Variant::ALL {
            for knowledge in KnowledgeMode::ALL {
                let cfg = MnmConfig { layers: 2, dim: 5, variant, knowledge, seed: 7, ..MnmConfig::default() };
                let mut params = MnmParams::init(&cfg).unwrap();
                let batch = vec![(instance(5, 5, 3), 1), (instance(7, 5, 4), 0)];
                loss_and_gradients(&mut params, &batch).unwrap();
                let report = gradient_check(&mut params, |p| batch_loss(p, &batch).unwrap(), 1e-5, 1e-4).unwrap();
                assert!(report.passed(), "{cfg:?}: {:?}", report.per_param);
            }
        }
    }

    #[test]
    fn loss_is_bit_reproducible() {
        let cfg = MnmConfig { layers: 3, dim: 6, ..MnmConfig::default() };
        let batch = vec![(instance(9, 6, 5), 1), (instance(4, 6, 6), 0)];
        let mut a = MnmParams::init(&cfg).unwrap();
        let mut b = MnmParams::init(&cfg).unwrap();
        let la = loss_and_gradients(&mut a, &batch).unwrap();
        let lb = loss_and_gradients(&mut b, &batch).unwrap();
        assert_eq!(la.loss.to_bits(), lb.loss.to_bits());
        assert_eq!(a, b);
    }
}
