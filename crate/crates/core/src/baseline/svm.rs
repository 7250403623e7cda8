//! Linear SVM trained with Pegasos (primal stochastic sub-gradient descent
//! on the L2-regularised hinge loss).
//!
//! The bias is learned as the weight of an implicit constant feature, so it
//! is regularised along with the other weights.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tfidf::SparseVec;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
        }
    }
}

impl LinearSvm {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.indices
            .iter()
            .zip(&x.values)
            .filter(|(&i, _)| i < self.weights.len())
            .map(|(&i, v)| self.weights[i] * v)
            .sum::<f64>()
            + self.bias
    }

    /// Positive class on a non-negative decision value.
    pub fn predict(&self, x: &SparseVec) -> bool {
        self.decision(x) >= 0.0
    }

    /// Mean hinge loss plus `λ/2 ‖w‖²` (bias included) on `features`.
    pub fn objective(&self, features: &[SparseVec], labels: &[bool]) -> f64 {
        let hinge: f64 = features
            .iter()
            .zip(labels)
            .map(|(x, &y)| (1.0 - sign(y) * self.decision(x)).max(0.0))
            .sum::<f64>()
            / features.len().max(1) as f64;
        let norm_sq: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        hinge + 0.5 * self.lambda * norm_sq
    }
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// Trains on `features` (dimension `dim`) with the Pegasos schedule
/// `η_t = 1/(λt)`, visiting examples in a seeded shuffled order each epoch.
pub fn train_svm(features: &[SparseVec], labels: &[bool], dim: usize, params: &SvmParams) -> Result<LinearSvm> {
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y)) {
        return Err(Error::invalid("SVM training needs at least one example of each class"));
    }
    if params.lambda <= 0.0 {
        return Err(Error::invalid("lambda must be positive"));
    }
    if let Some(x) = features.iter().find(|x| x.min_dim() > dim) {
        return Err(Error::Shape(format!("feature index {} out of range {dim}", x.min_dim() - 1)));
    }

    // w = scale · v, which makes the shrink step O(1).
    let mut v = vec![0.0; dim];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut rng = rng::substream(params.seed, "svm");
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let x = &features[i];
            let y = sign(labels[i]);
            let margin = y * scale * (x.dot_dense(&v) + vb);
            let shrink = 1.0 - eta * params.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                vb = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for (&j, xv) in x.indices.iter().zip(&x.values) {
                    v[j] += step * xv;
                }
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                vb *= scale;
                scale = 1.0;
            }
        }
    }
    let svm = LinearSvm {
        weights: v.iter().map(|w| w * scale).collect(),
        bias: vb * scale,
        lambda: params.lambda,
    };
    if svm.weights.iter().any(|w| !w.is_finite()) || !svm.bias.is_finite() {
        return Err(Error::NonFinite("SVM weights".into()));
    }
    Ok(svm)
}
