use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{micro_prf, PairSets};
use crate::model::{forward, MnmConfig, MnmParams, ModelInput};
use crate::numerics::seeded_rng;
use crate::GenePair;

use super::{aggregate_document, train, InstancePrediction, PipelineError, TrainConfig};

/// Encoded instances of one document with its complete gold set.
#[derive(Debug, Clone)]
pub struct CvDocument {
    pub doc_id: String,
    pub gold: BTreeSet<GenePair>,
    pub instances: Vec<(GenePair, ModelInput, usize)>,
}

/// Fold of every document (in input order). Documents are sorted by id,
/// shuffled with `seed` and dealt round-robin, so fold sizes differ by at
/// most one.
pub fn assign_folds(doc_ids: &[String], k: usize, seed: u64) -> Result<Vec<usize>, PipelineError> {
    if k < 2 {
        return Err(PipelineError::Config(format!("need at least 2 folds, got {k}")));
    }
    if doc_ids.len() < k {
        return Err(PipelineError::TooFewDocuments {
            documents: doc_ids.len(),
            folds: k,
        });
    }
    let mut order: Vec<usize> = (0..doc_ids.len()).collect();
    order.sort_by(|&a, &b| doc_ids[a].cmp(&doc_ids[b]));
    order.shuffle(&mut seeded_rng(seed));
    let mut folds = vec![0; doc_ids.len()];
    for (pos, &doc) in order.iter().enumerate() {
        folds[doc] = pos % k;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub config: MnmConfig,
    pub folds: Vec<FoldMetrics>,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub results: Vec<ConfigResult>,
    /// Index into `results` of the best mean F1 (first on ties).
    pub selected: usize,
}

impl CvReport {
    pub fn selected_config(&self) -> &MnmConfig {
        &self.results[self.selected].config
    }
}

/// Trains on every document outside `fold` and scores the aggregated
/// predictions of the documents inside it. The model and training seeds
/// are offset by the fold index.
pub fn run_fold(
    docs: &[CvDocument],
    folds: &[usize],
    fold: usize,
    config: &MnmConfig,
    train_cfg: &TrainConfig,
) -> Result<FoldMetrics, PipelineError> {
    let model_cfg = MnmConfig {
        seed: config.seed.wrapping_add(fold as u64),
        ..config.clone()
    };
    let tc = TrainConfig {
        seed: train_cfg.seed.wrapping_add(fold as u64),
        ..train_cfg.clone()
    };
    let data: Vec<(ModelInput, usize)> = docs
        .iter()
        .zip(folds)
        .filter(|&(_, &f)| f != fold)
        .flat_map(|(d, _)| d.instances.iter().map(|(_, x, y)| (x.clone(), *y)))
        .collect();
    let params = train(MnmParams::init(&model_cfg)?, &data, &tc)?.params;

    let mut gold = PairSets::new();
    let mut preds = Vec::new();
    for (d, _) in docs.iter().zip(folds).filter(|&(_, &f)| f == fold) {
        gold.insert(d.doc_id.clone(), d.gold.clone());
        for (pair, x, _) in &d.instances {
            let p = forward(&params, x)?.positive_probability();
            preds.push(InstancePrediction {
                doc_id: d.doc_id.clone(),
                pair: pair.clone(),
                probability: p,
                positive: p > 0.5,
            });
        }
    }
    let r = micro_prf(&gold, &aggregate_document(&preds).pair_sets());
    Ok(FoldMetrics {
        fold,
        tp: r.tp,
        fp: r.fp,
        fn_: r.fn_,
        precision: r.precision,
        recall: r.recall,
        f1: r.f1,
    })
}

/// Document-level k-fold cross-validation of every config in `grid`.
/// Folds run in parallel with isolated parameters; results do not depend
/// on the thread count.
pub fn cross_validate(
    docs: &[CvDocument],
    k: usize,
    grid: &[MnmConfig],
    train_cfg: &TrainConfig,
) -> Result<CvReport, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::Config("empty configuration grid".into()));
    }
    let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    let folds = assign_folds(&ids, k, train_cfg.seed)?;
    let mut results = Vec::with_capacity(grid.len());
    for config in grid {
        let metrics = (0..k)
            .into_par_iter()
            .map(|f| run_fold(docs, &folds, f, config, train_cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let mean_f1 = metrics.iter().map(|m| m.f1).sum::<f64>() / k as f64;
        results.push(ConfigResult {
            config: config.clone(),
            folds: metrics,
            mean_f1,
        });
    }
    let selected = results
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.mean_f1 > results[best].mean_f1 { i } else { best });
    Ok(CvReport { results, selected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_documents_five_folds() {
        let ids: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let folds = assign_folds(&ids, 5, 3).unwrap();
        for f in 0..5 {
            assert_eq!(folds.iter().filter(|&&x| x == f).count(), 2);
        }
        assert_eq!(folds, assign_folds(&ids, 5, 3).unwrap());
        assert!(matches!(
            assign_folds(&ids[..4], 5, 3),
            Err(PipelineError::TooFewDocuments { documents: 4, folds: 5 })
        ));
    }
}
