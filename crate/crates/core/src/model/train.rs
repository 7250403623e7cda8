//! Mini-batch training loop.
//!
//! Sentences are processed one at a time (no padding). Gradients are summed
//! over a batch and divided by the number of predicted units in it, which is
//! the gradient of the batch-mean cross-entropy.

use log::{debug, info};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::bigru::BiGru;
use super::rmsprop::{rmsprop_step, RmspropConfig, RmspropState};
use super::Task;
use crate::corpus::AnnotatedSentence;
use crate::embeddings::EmbeddingArchive;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Global L2 norm cap on the batch gradient.
    pub clip_norm: Option<f64>,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-7,
            batch_size: 32,
            seed: 0,
            clip_norm: None,
            hidden: 100,
            dropout: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::invalid(msg)) };
        check(self.rho > 0.0 && self.rho < 1.0, "rho must be in (0, 1)")?;
        check(self.epsilon > 0.0, "epsilon must be positive")?;
        check(self.learning_rate > 0.0, "learning rate must be positive")?;
        check(self.batch_size >= 1, "batch size must be at least 1")?;
        check(self.hidden >= 1, "hidden size must be at least 1")?;
        check((0.0..1.0).contains(&self.dropout), "dropout must be in [0, 1)")?;
        check(self.clip_norm.is_none_or(|c| c > 0.0), "clip norm must be positive")
    }

    pub fn optimizer(&self) -> RmspropConfig {
        RmspropConfig {
            learning_rate: self.learning_rate,
            rho: self.rho,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BiGru,
    pub optimizer: RmspropState,
    /// Mean cross-entropy over the units seen in each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Unit labels of a sentence for `task`.
pub fn unit_labels(sentence: &AnnotatedSentence, task: Task) -> Vec<bool> {
    match task {
        Task::Token => sentence.token_labels.iter().map(|l| l.is_idiomatic()).collect(),
        Task::Sentence => vec![sentence.is_idiomatic()],
    }
}

/// Embedding matrices for `sentences`, checked against the archive first so
/// every missing id is reported at once.
pub fn gather_inputs(sentences: &[&AnnotatedSentence], archive: &EmbeddingArchive) -> Result<Vec<Matrix>> {
    archive.validate_against(sentences.iter().copied())?;
    Ok(sentences
        .iter()
        .map(|s| archive.get(&s.id).expect("validated").to_matrix())
        .collect())
}

/// Initialises a model from `config` and trains it.
pub fn train(
    sentences: &[&AnnotatedSentence],
    archive: &EmbeddingArchive,
    task: Task,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let model = BiGru::glorot(archive.dim(), config.hidden, config.dropout, config.seed);
    let optimizer = RmspropState::new(&model);
    train_from(model, optimizer, sentences, archive, task, config)
}

/// Continues training an existing model and optimiser state.
pub fn train_from(
    mut model: BiGru,
    mut optimizer: RmspropState,
    sentences: &[&AnnotatedSentence],
    archive: &EmbeddingArchive,
    task: Task,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if sentences.is_empty() {
        return Err(Error::invalid("no training sentences"));
    }
    if archive.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "archive dim {} does not match model input dim {}",
            archive.dim(),
            model.input_dim()
        )));
    }
    let inputs = gather_inputs(sentences, archive)?;
    let labels: Vec<Vec<bool>> = sentences.iter().map(|s| unit_labels(s, task)).collect();
    let opt = config.optimizer();
    let mut shuffle_rng = rng::substream(config.seed, "shuffle");
    let mut dropout_rng = rng::substream(config.seed, "dropout");
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut epoch_loss, mut epoch_units) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.zeros_like();
            let mut units = 0usize;
            for &i in batch {
                let n_units = labels[i].len();
                let masks = (model.dropout_rate > 0.0).then(|| model.sample_masks(n_units, &mut dropout_rng));
                let (loss, n) =
                    model.accumulate_gradients(&inputs[i], &labels[i], task, masks.as_ref(), &mut grads)?;
                epoch_loss += loss;
                units += n;
            }
            epoch_units += units;
            let scale = 1.0 / units as f64;
            let mut norm_sq = 0.0;
            for t in grads.tensors_mut() {
                for v in t.iter_mut() {
                    *v *= scale;
                    norm_sq += *v * *v;
                }
            }
            if !norm_sq.is_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient in epoch {} (batch starting at sentence {})",
                    epoch + 1,
                    sentences[batch[0]].id
                )));
            }
            if let Some(c) = config.clip_norm {
                let norm = norm_sq.sqrt();
                if norm > c {
                    grads.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|v| *v *= c / norm));
                }
            }
            rmsprop_step(&mut model, &grads, &mut optimizer, &opt);
        }
        let mean = epoch_loss / epoch_units as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("training loss in epoch {}", epoch + 1)));
        }
        info!("epoch {}/{}: loss {:.6}", epoch + 1, config.epochs, mean);
        epoch_losses.push(mean);
    }
    debug!("trained {} parameters", model.parameter_count());
    Ok(TrainOutcome {
        model,
        optimizer,
        epoch_losses,
    })
}

/// Positive-class probabilities per unit for each sentence, in evaluation
/// mode. Returns one vector per sentence.
pub fn predict_all(
    model: &BiGru,
    sentences: &[&AnnotatedSentence],
    archive: &EmbeddingArchive,
    task: Task,
) -> Result<Vec<Vec<f64>>> {
    let inputs = gather_inputs(sentences, archive)?;
    inputs.iter().map(|x| model.predict_positive(x, task)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synthetic_corpus, SyntheticCorpusConfig};
    use crate::embeddings::synthetic_provider;

    fn setup() -> (Vec<AnnotatedSentence>, EmbeddingArchive) {
        let corpus = synthetic_corpus(&SyntheticCorpusConfig {
            sentences: 40,
            expressions: 4,
            min_len: 4,
            max_len: 7,
            ..Default::default()
        });
        let archive = synthetic_provider(&corpus, 6, 3, Some(2.0));
        (corpus, archive)
    }

    fn small() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            hidden: 5,
            batch_size: 8,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let (corpus, archive) = setup();
        let refs: Vec<_> = corpus.iter().collect();
        let cfg = TrainConfig { epochs: 0, ..small() };
        let out = train(&refs, &archive, Task::Sentence, &cfg).unwrap();
        assert_eq!(out.model, BiGru::glorot(6, 5, 0.5, 11));
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let (corpus, archive) = setup();
        let refs: Vec<_> = corpus.iter().collect();
        for task in [Task::Token, Task::Sentence] {
            let a = train(&refs, &archive, task, &small()).unwrap();
            let b = train(&refs, &archive, task, &small()).unwrap();
            assert_eq!(a.model, b.model);
            assert_eq!(a.epoch_losses, b.epoch_losses);
            assert!(a.epoch_losses.iter().all(|l| l.is_finite()));
            let c = train(&refs, &archive, task, &TrainConfig { seed: 12, ..small() }).unwrap();
            assert_ne!(a.model, c.model);
        }
    }

    #[test]
    fn missing_embeddings_are_listed() {
        let (corpus, _) = setup();
        let (_, archive) = {
            let part: Vec<_> = corpus[..30].to_vec();
            let a = synthetic_provider(&part, 6, 3, None);
            (part, a)
        };
        let refs: Vec<_> = corpus.iter().collect();
        match train(&refs, &archive, Task::Token, &small()) {
            Err(Error::MissingEmbeddings(ids)) => assert_eq!(ids.len(), 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { rho: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { dropout: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn divergent_training_aborts() {
        let (corpus, archive) = setup();
        let refs: Vec<_> = corpus.iter().collect();
        let cfg = TrainConfig { learning_rate: f64::MAX, ..small() };
        let err = train(&refs, &archive, Task::Sentence, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)), "{err}");
    }
}
