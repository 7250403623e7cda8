//! Combining several classifiers: a Gaussian-mixture conditional likelihood
//! model over logit-transformed member probabilities, and majority voting.

mod gaussian;
mod mixture;

use std::path::Path;

use log::warn;

pub use gaussian::Gaussian;
pub use mixture::{fit_mm, predict_mm, ClassDensity, MixtureEnsemble, MmConfig};

use crate::container::TensorFile;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Probabilities are clipped to `[LATENT_EPS, 1 − LATENT_EPS]` before the
/// logit transform.
pub const LATENT_EPS: f64 = 1e-6;

pub const ENSEMBLE_MAGIC: &[u8; 8] = b"MICEENS1";

/// `ln(p′/(1−p′))` with `p′ = clamp(p, ε, 1−ε)`.
pub fn inverse_logistic(p: f64, eps: f64) -> f64 {
    let q = p.clamp(eps, 1.0 - eps);
    (q / (1.0 - q)).ln()
}

/// Logits of each member's positive-class probability, in member order.
pub fn stack_latents(probabilities: &[f64]) -> Vec<f64> {
    probabilities.iter().map(|&p| inverse_logistic(p, LATENT_EPS)).collect()
}

/// Majority of binary votes. Ties go to the positive class.
pub fn vote(predictions: &[bool]) -> bool {
    let yes = predictions.iter().filter(|&&p| p).count();
    let no = predictions.len() - yes;
    if yes == no {
        warn!("voting tie between {yes} and {no} voters; choosing the idiomatic class");
    }
    yes >= no
}

/// A fitted ensemble together with the names of its members, in the order
/// their probabilities are stacked.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedEnsemble {
    pub members: Vec<String>,
    pub mixture: MixtureEnsemble,
}

impl FittedEnsemble {
    pub fn posterior(&self, member_probabilities: &[f64]) -> Result<[f64; 2]> {
        self.mixture.posterior(&stack_latents(member_probabilities))
    }

    fn to_tensor_file(&self) -> Result<TensorFile> {
        if self.members.iter().any(|m| m.contains(',')) {
            return Err(Error::invalid("member names cannot contain commas"));
        }
        let mut f = TensorFile::new();
        f.set("members", self.members.join(","));
        f.set("dim", self.mixture.dim());
        for (c, class) in self.mixture.classes.iter().enumerate() {
            f.set(&format!("class{c}.gamma"), format!("{:e}", class.gamma));
            f.set(&format!("class{c}.count"), class.count);
            f.push(format!("class{c}.weights"), Matrix::from_vec(1, class.weights.len(), class.weights.clone()));
            for (k, g) in class.components.iter().enumerate() {
                f.push(format!("class{c}.component{k}.mean"), Matrix::from_vec(1, g.dim(), g.mean().to_vec()));
                f.push(format!("class{c}.component{k}.covariance"), g.covariance().clone());
            }
        }
        Ok(f)
    }

    fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        let members: Vec<String> = f.meta("members")?.split(',').map(String::from).collect();
        let dim: usize = f.meta_parse("dim")?;
        let mut classes = Vec::new();
        for c in 0..2 {
            let weights = f.tensor(&format!("class{c}.weights"))?.as_slice().to_vec();
            let components = (0..weights.len())
                .map(|k| {
                    let mean = f.tensor(&format!("class{c}.component{k}.mean"))?.as_slice().to_vec();
                    let cov = f.tensor(&format!("class{c}.component{k}.covariance"))?.clone();
                    if mean.len() != dim {
                        return Err(Error::Format(format!("component mean has length {}, expected {dim}", mean.len())));
                    }
                    Gaussian::new(mean, cov)
                })
                .collect::<Result<Vec<_>>>()?;
            classes.push(ClassDensity {
                weights,
                components,
                gamma: f.meta_parse(&format!("class{c}.gamma"))?,
                count: f.meta_parse(&format!("class{c}.count"))?,
            });
        }
        let [a, b]: [ClassDensity; 2] = classes.try_into().expect("two classes");
        Ok(FittedEnsemble {
            members,
            mixture: MixtureEnsemble { classes: [a, b] },
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        self.to_tensor_file()?.encode(ENSEMBLE_MAGIC)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::decode(bytes, ENSEMBLE_MAGIC)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_tensor_file()?.write(path, ENSEMBLE_MAGIC)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::read(path, ENSEMBLE_MAGIC)?)
    }
}
