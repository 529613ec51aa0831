use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{batch_loss, loss_and_gradients, MnmParams, ModelInput};
use crate::numerics::{adam_step, seeded_rng, AdamConfig, AdamState, ParamSet};

use super::PipelineError;

/// Stop when the held-out loss has not improved for `patience` epochs and
/// keep the best parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    pub holdout_fraction: f64,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Keep at most `ratio × positives` negatives, redrawn every epoch.
    pub negative_ratio: Option<f64>,
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 100,
            epochs: 50,
            seed: 1,
            shuffle: true,
            negative_ratio: None,
            early_stopping: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if let Some(r) = self.negative_ratio {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("negative_ratio must be positive, got {r}"));
            }
        }
        if let Some(es) = &self.early_stopping {
            if !(es.holdout_fraction > 0.0 && es.holdout_fraction < 1.0) {
                return bad(format!("holdout_fraction must be in (0, 1), got {}", es.holdout_fraction));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MnmParams,
    /// Mean training loss of every epoch.
    pub loss_curve: Vec<f64>,
    /// Held-out loss per epoch when early stopping is on.
    pub holdout_curve: Vec<f64>,
    /// Epoch (1-based) whose parameters were kept, when early stopping ran.
    pub best_epoch: Option<usize>,
}

fn epoch_order<R: Rng>(data: &[(ModelInput, usize)], train_idx: &[usize], cfg: &TrainConfig, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = match cfg.negative_ratio {
        None => train_idx.to_vec(),
        Some(ratio) => {
            let (pos, mut neg): (Vec<usize>, Vec<usize>) = train_idx.iter().partition(|&&i| data[i].1 == 1);
            let keep = ((pos.len() as f64 * ratio).ceil() as usize).min(neg.len());
            neg.shuffle(rng);
            neg.truncate(keep);
            let mut all = pos;
            all.extend(neg);
            all.sort_unstable();
            all
        }
    };
    if cfg.shuffle {
        order.shuffle(rng);
    }
    order
}

/// Minibatch Adam on the mean cross-entropy.
pub fn train(
    mut params: MnmParams,
    data: &[(ModelInput, usize)],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(PipelineError::EmptyTrainingSet);
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut all: Vec<usize> = (0..data.len()).collect();
    let (train_idx, holdout): (Vec<usize>, Vec<(ModelInput, usize)>) = match &cfg.early_stopping {
        Some(es) if data.len() >= 2 => {
            all.shuffle(&mut rng);
            let h = ((data.len() as f64 * es.holdout_fraction).round() as usize).clamp(1, data.len() - 1);
            let mut t = all.split_off(h);
            t.sort_unstable();
            (t, all.iter().map(|&i| data[i].clone()).collect())
        }
        _ => (all, Vec::new()),
    };

    let adam = AdamConfig::with_learning_rate(cfg.learning_rate);
    let mut states: Vec<AdamState> = params.tensors().into_iter().map(AdamState::for_param).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut holdout_curve = Vec::new();
    let mut best: Option<(f64, usize, MnmParams)> = None;

    for epoch in 1..=cfg.epochs {
        let order = epoch_order(data, &train_idx, cfg, &mut rng);
        if order.is_empty() {
            return Err(PipelineError::EmptyTrainingSet);
        }
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(ModelInput, usize)> = chunk.iter().map(|&i| data[i].clone()).collect();
            let r = loss_and_gradients(&mut params, &batch)?;
            if !r.loss.is_finite() {
                return Err(PipelineError::NonFiniteLoss { epoch });
            }
            total += r.loss * chunk.len() as f64;
            for (t, s) in params.tensors_mut().into_iter().zip(states.iter_mut()) {
                adam_step(t, s, &adam)?;
            }
        }
        loss_curve.push(total / order.len() as f64);

        if let Some(es) = &cfg.early_stopping {
            if holdout.is_empty() {
                continue;
            }
            let h = batch_loss(&params, &holdout)?;
            if !h.is_finite() {
                return Err(PipelineError::NonFiniteLoss { epoch });
            }
            holdout_curve.push(h);
            let improved = best.as_ref().is_none_or(|(b, _, _)| h < *b);
            if improved {
                best = Some((h, epoch, params.clone()));
            } else if epoch - best.as_ref().expect("set on first epoch").1 >= es.patience {
                break;
            }
        }
    }

    let (mut params, best_epoch) = match best {
        Some((_, e, p)) => (p, Some(e)),
        None => (params, None),
    };
    params.zero_grad();
    Ok(TrainOutcome {
        params,
        loss_curve,
        holdout_curve,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MnmConfig;
    use crate::numerics::{init_params, InitScheme};

    fn data(n: usize, d: usize) -> Vec<(ModelInput, usize)> {
        let mut rng = seeded_rng(11);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let mut words = init_params(4, d, InitScheme::Normal { mean: 0.0, std: 0.3 }, &mut rng).unwrap();
                // the label is written into the first word
                words.set(0, 0, if label == 1 { 1.0 } else { -1.0 });
                let input = ModelInput {
                    words,
                    distances: [vec![1, 2, 3, 4], vec![4, 3, 2, 1]],
                    entities: [vec![0.1; d], vec![-0.1; d]],
                    relation: Some(vec![0.0; d]),
                };
                (input, label)
            })
            .collect()
    }

    #[test]
    fn zero_epochs_leave_parameters_unchanged() {
        let cfg = MnmConfig { layers: 1, dim: 4, ..MnmConfig::default() };
        let p = MnmParams::init(&cfg).unwrap();
        let out = train(p.clone(), &data(6, 4), &TrainConfig { epochs: 0, ..TrainConfig::default() }).unwrap();
        assert_eq!(out.params, p);
        assert!(out.loss_curve.is_empty());
    }

    #[test]
    fn same_seed_same_curve_and_loss_goes_down() {
        let cfg = MnmConfig { layers: 1, dim: 4, ..MnmConfig::default() };
        let tc = TrainConfig { epochs: 30, batch_size: 4, learning_rate: 0.01, ..TrainConfig::default() };
        let d = data(20, 4);
        let a = train(MnmParams::init(&cfg).unwrap(), &d, &tc).unwrap();
        let b = train(MnmParams::init(&cfg).unwrap(), &d, &tc).unwrap();
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.params, b.params);
        assert!(a.loss_curve.last().unwrap() < &a.loss_curve[0]);
    }

    #[test]
    fn empty_set_and_bad_config_are_errors() {
        let cfg = MnmConfig { layers: 1, dim: 4, ..MnmConfig::default() };
        let p = MnmParams::init(&cfg).unwrap();
        assert!(matches!(train(p.clone(), &[], &TrainConfig::default()), Err(PipelineError::EmptyTrainingSet)));
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(train(p, &data(2, 4), &bad).is_err());
    }

    #[test]
    fn early_stopping_and_subsampling_run() {
        let cfg = MnmConfig { layers: 1, dim: 4, ..MnmConfig::default() };
        let tc = TrainConfig {
            epochs: 40,
            batch_size: 5,
            learning_rate: 0.05,
            negative_ratio: Some(0.5),
            early_stopping: Some(EarlyStopping { holdout_fraction: 0.25, patience: 3 }),
            ..TrainConfig::default()
        };
        let out = train(MnmParams::init(&cfg).unwrap(), &data(20, 4), &tc).unwrap();
        assert_eq!(out.holdout_curve.len(), out.loss_curve.len());
        let best = out.best_epoch.unwrap();
        let min = out.holdout_curve.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(out.holdout_curve[best - 1], min);
    }
}
