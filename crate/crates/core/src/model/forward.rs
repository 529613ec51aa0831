//! Forward pass of the memory network.
//!
//! Memories are stored row-wise: row `i` of an `n × d` matrix is the
//! (position-scaled) vector of context word `i`.

use crate::numerics::{axpy, dot, stable_softmax, Matrix};

use super::{AttentionParams, MnmParams, ModelError, Variant};

/// Numeric input of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    /// `n × d`, one row per context word.
    pub words: Matrix,
    /// Distance of every context word to the first and second entity.
    pub distances: [Vec<usize>; 2],
    pub entities: [Vec<f64>; 2],
    pub relation: Option<Vec<f64>>,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.words.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.words.rows() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Sum,
    Max,
}

/// `(1 − p/n) − (k/d)(1 − 2p/n)` for a word at distance `p` in a sequence
/// of length `n`, at layer `k` (1-based) with embedding dimension `d`.
pub fn position_percentage(p: usize, n: usize, k: usize, d: usize) -> Result<f64, ModelError> {
    if n == 0 || k == 0 || d == 0 || p > n {
        return Err(ModelError::Contract(format!(
            "position_percentage needs n, k, d >= 1 and p <= n (p={p}, n={n}, k={k}, d={d})"
        )));
    }
    let ratio = p as f64 / n as f64;
    Ok((1.0 - ratio) - (k as f64 / d as f64) * (1.0 - 2.0 * ratio))
}

/// Scales every word vector by its position percentage for layer `k`.
/// Returns the memory and the per-word scale (all ones when disabled).
pub fn apply_position(
    words: &Matrix,
    distances: &[usize],
    k: usize,
    dim: usize,
    enabled: bool,
) -> Result<(Matrix, Vec<f64>), ModelError> {
    let n = words.rows();
    if distances.len() != n {
        return Err(ModelError::Contract(format!(
            "{} distances for {n} words",
            distances.len()
        )));
    }
    if !enabled {
        return Ok((words.clone(), vec![1.0; n]));
    }
    let scale = distances
        .iter()
        .map(|&p| position_percentage(p, n, k, dim))
        .collect::<Result<Vec<_>, _>>()?;
    let mut memory = words.clone();
    for (i, s) in scale.iter().enumerate() {
        memory.row_mut(i).iter_mut().for_each(|x| *x *= s);
    }
    Ok((memory, scale))
}

/// Scores `g_i = tanh(W_a [m_i; q] + b_a)` and weights `softmax(g)`, where
/// `q` is the concatenation of the pathway's entity states.
pub fn attention(
    memory: &Matrix,
    query: &[f64],
    params: &AttentionParams,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let d = memory.cols();
    let w = params.weight.value.as_slice();
    if w.len() != d + query.len() {
        return Err(ModelError::Contract(format!(
            "attention weight has width {}, input is {}",
            w.len(),
            d + query.len()
        )));
    }
    if memory.rows() == 0 {
        return Err(ModelError::EmptySequence);
    }
    let base = dot(&w[d..], query) + params.bias.value.get(0, 0);
    let scores: Vec<f64> = (0..memory.rows())
        .map(|i| (dot(&w[..d], memory.row(i)) + base).tanh())
        .collect();
    let weights = stable_softmax(&scores)?;
    Ok((scores, weights))
}

/// Pools the weighted memory. For max pooling also returns, per dimension,
/// the row that supplied the maximum (first on ties).
pub fn pool(memory: &Matrix, weights: &[f64], pooling: Pooling) -> (Vec<f64>, Option<Vec<usize>>) {
    let d = memory.cols();
    match pooling {
        Pooling::Sum => {
            let mut v = vec![0.0; d];
            for (i, &a) in weights.iter().enumerate() {
                axpy(&mut v, a, memory.row(i));
            }
            (v, None)
        }
        Pooling::Max => {
            let mut v = vec![f64::NEG_INFINITY; d];
            let mut arg = vec![0usize; d];
            for (i, &a) in weights.iter().enumerate() {
                for (c, &m) in memory.row(i).iter().enumerate() {
                    let x = a * m;
                    if x > v[c] {
                        v[c] = x;
                        arg[c] = i;
                    }
                }
            }
            (v, Some(arg))
        }
    }
}

/// Everything one computational layer produced for one pathway.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Per-word position scale used to build `memory`.
    pub scale: Vec<f64>,
    pub memory: Matrix,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub pooled: Vec<f64>,
    pub argmax: Option<Vec<usize>>,
    pub entities_in: Vec<Vec<f64>>,
    pub entities_out: Vec<Vec<f64>>,
}

/// Attention, pooling and `e′ = W_t e + v_att` for each entity state.
pub fn layer_step(
    memory: Matrix,
    scale: Vec<f64>,
    entities: &[Vec<f64>],
    attention_params: &AttentionParams,
    transform: &Matrix,
    pooling: Pooling,
) -> Result<LayerTrace, ModelError> {
    let query: Vec<f64> = entities.iter().flatten().copied().collect();
    let (scores, weights) = attention(&memory, &query, attention_params)?;
    let (pooled, argmax) = pool(&memory, &weights, pooling);
    let entities_out = entities
        .iter()
        .map(|e| {
            let mut out = transform.matvec(e);
            axpy(&mut out, 1.0, &pooled);
            out
        })
        .collect();
    Ok(LayerTrace {
        scale,
        memory,
        scores,
        weights,
        pooled,
        argmax,
        entities_in: entities.to_vec(),
        entities_out,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `pathways[p][k]`: pathway `p`, layer `k` (0-based).
    pub pathways: Vec<Vec<LayerTrace>>,
    /// Classifier input `[e′₁; e′₂; (r)]`.
    pub output: Vec<f64>,
    pub logits: [f64; 2],
    /// `[p(negative), p(positive)]`
    pub probabilities: [f64; 2],
}

impl ForwardTrace {
    pub fn positive_probability(&self) -> f64 {
        self.probabilities[1]
    }
}

fn check_input(params: &MnmParams, input: &ModelInput) -> Result<(), ModelError> {
    let d = params.config.dim;
    if input.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let mismatch = |what: &str, found: usize| {
        Err(ModelError::Contract(format!("{what} has dimension {found}, model expects {d}")))
    };
    if input.words.cols() != d {
        return mismatch("word matrix", input.words.cols());
    }
    for e in &input.entities {
        if e.len() != d {
            return mismatch("entity vector", e.len());
        }
    }
    if params.config.knowledge.uses_relation() {
        match &input.relation {
            Some(r) if r.len() == d => {}
            Some(r) => return mismatch("relation vector", r.len()),
            None => {
                return Err(ModelError::Contract(format!(
                    "knowledge mode {} needs a relation vector",
                    params.config.knowledge.name()
                )))
            }
        }
    }
    Ok(())
}

/// Runs every pathway through all layers and the softmax classifier.
pub fn forward(params: &MnmParams, input: &ModelInput) -> Result<ForwardTrace, ModelError> {
    check_input(params, input)?;
    let cfg = &params.config;
    let pooling = if cfg.variant == Variant::MaxPooling {
        Pooling::Max
    } else {
        Pooling::Sum
    };
    let n = input.len();
    let mut pathways = Vec::with_capacity(cfg.pathways());
    let mut finals: Vec<Vec<f64>> = Vec::with_capacity(2);
    for p in 0..cfg.pathways() {
        let (mut entities, distances): (Vec<Vec<f64>>, Vec<usize>) = if cfg.variant == Variant::Single {
            let nearest = (0..n)
                .map(|i| input.distances[0][i].min(input.distances[1][i]))
                .collect();
            (input.entities.to_vec(), nearest)
        } else {
            (vec![input.entities[p].clone()], input.distances[p].clone())
        };
        let mut layers = Vec::with_capacity(cfg.layers);
        for k in 0..cfg.layers {
            let (memory, scale) = apply_position(&input.words, &distances, k + 1, cfg.dim, cfg.position_encoding)?;
            let layer = layer_step(
                memory,
                scale,
                &entities,
                params.attention_for(p, k),
                &params.layers[k].transform.value,
                pooling,
            )?;
            entities = layer.entities_out.clone();
            layers.push(layer);
        }
        finals.extend(entities);
        pathways.push(layers);
    }

    let mut output: Vec<f64> = finals.into_iter().flatten().collect();
    if cfg.knowledge.uses_relation() {
        output.extend_from_slice(input.relation.as_ref().expect("checked above"));
    }
    let raw = params.classifier.value.matvec(&output);
    let logits = [
        raw[0] + params.classifier_bias.value.get(0, 0),
        raw[1] + params.classifier_bias.value.get(1, 0),
    ];
    let probs = stable_softmax(&logits)?;
    if !output.iter().all(|x| x.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(ForwardTrace {
        pathways,
        output,
        logits,
        probabilities: [probs[0], probs[1]],
    })
}
