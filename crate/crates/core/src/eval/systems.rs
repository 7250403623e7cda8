//! The classifiers an experiment can compare, behind one fit/score
//! interface.

use crate::baseline::{default_all_positive, default_majority, DefaultClassifier, SvmBaseline, SvmParams};
use crate::corpus::AnnotatedSentence;
use crate::embeddings::EmbeddingArchive;
use crate::ensemble::{fit_mm, stack_latents, vote, MixtureEnsemble, MmConfig};
use crate::error::{Error, Result};
use crate::model::{gather_inputs, train, unit_labels, BiGru, Task, TrainConfig};

use super::metrics::ConfusionCounts;

/// A system to be trained and evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Majority,
    AllPositive,
    Svm(SvmParams),
    Gru(TrainConfig),
    /// Unweighted majority vote of the members' decisions.
    Vote(Vec<SystemSpec>),
    /// Gaussian-mixture combination of the members' probabilities.
    Mixture { members: Vec<SystemSpec>, config: MmConfig },
}

impl SystemSpec {
    pub fn name(&self) -> String {
        let list = |m: &[SystemSpec]| m.iter().map(SystemSpec::name).collect::<Vec<_>>().join("+");
        match self {
            SystemSpec::Majority => "majority".into(),
            SystemSpec::AllPositive => "all-positive".into(),
            SystemSpec::Svm(_) => "svm".into(),
            SystemSpec::Gru(_) => "gru".into(),
            SystemSpec::Vote(m) => format!("vote({})", list(m)),
            SystemSpec::Mixture { members, .. } => format!("mm({})", list(members)),
        }
    }
}

/// A trained system.
#[derive(Debug, Clone)]
pub enum FittedSystem {
    Constant(DefaultClassifier),
    Svm(SvmBaseline),
    Gru(Box<BiGru>),
    Vote(Vec<FittedSystem>),
    Mixture {
        members: Vec<FittedSystem>,
        ensemble: MixtureEnsemble,
    },
}

/// Positive decision for a positive-class probability. Ties go to the
/// positive class.
pub fn decide(p: f64) -> bool {
    p >= 0.5
}

/// Gold unit labels, concatenated over sentences.
pub fn gold_units(sentences: &[&AnnotatedSentence], task: Task) -> Vec<bool> {
    sentences.iter().flat_map(|s| unit_labels(s, task)).collect()
}

pub fn fit_system(
    spec: &SystemSpec,
    train_set: &[&AnnotatedSentence],
    archive: &EmbeddingArchive,
    task: Task,
) -> Result<FittedSystem> {
    if train_set.is_empty() {
        return Err(Error::invalid("cannot fit a system on an empty training set"));
    }
    Ok(match spec {
        SystemSpec::Majority => FittedSystem::Constant(default_majority(&gold_units(train_set, task))),
        SystemSpec::AllPositive => FittedSystem::Constant(default_all_positive()),
        SystemSpec::Svm(p) => FittedSystem::Svm(SvmBaseline::fit(train_set, task, p)?),
        SystemSpec::Gru(cfg) => FittedSystem::Gru(Box::new(train(train_set, archive, task, cfg)?.model)),
        SystemSpec::Vote(members) => FittedSystem::Vote(
            members
                .iter()
                .map(|m| fit_system(m, train_set, archive, task))
                .collect::<Result<_>>()?,
        ),
        SystemSpec::Mixture { members, config } => {
            let fitted: Vec<FittedSystem> = members
                .iter()
                .map(|m| fit_system(m, train_set, archive, task))
                .collect::<Result<_>>()?;
            // Densities are fitted on the members' own training-set outputs.
            let per_member: Vec<Vec<f64>> = fitted
                .iter()
                .map(|f| Ok(f.scores(train_set, archive, task)?.concat()))
                .collect::<Result<_>>()?;
            let ensemble = fit_mixture_from_scores(&per_member, &gold_units(train_set, task), config)?;
            FittedSystem::Mixture {
                members: fitted,
                ensemble,
            }
        }
    })
}

/// `per_member[m][i]` is member `m`'s positive probability for unit `i`.
pub fn fit_mixture_from_scores(per_member: &[Vec<f64>], labels: &[bool], config: &MmConfig) -> Result<MixtureEnsemble> {
    fit_mm(&latents(per_member)?, labels, config)
}

/// Posterior positive probability per unit.
pub fn mixture_scores(ensemble: &MixtureEnsemble, per_member: &[Vec<f64>]) -> Result<Vec<f64>> {
    latents(per_member)?
        .iter()
        .map(|u| Ok(ensemble.posterior(u)?[1]))
        .collect()
}

/// 1 where the member majority says positive, else 0.
pub fn vote_scores(per_member: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = check_member_lengths(per_member)?;
    Ok((0..n)
        .map(|i| {
            let votes: Vec<bool> = per_member.iter().map(|m| decide(m[i])).collect();
            if vote(&votes) {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

fn check_member_lengths(per_member: &[Vec<f64>]) -> Result<usize> {
    let n = per_member
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("an ensemble needs at least one member"))?;
    if per_member.iter().any(|m| m.len() != n) {
        return Err(Error::Shape("ensemble members scored different numbers of units".into()));
    }
    Ok(n)
}

fn latents(per_member: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = check_member_lengths(per_member)?;
    Ok((0..n)
        .map(|i| stack_latents(&per_member.iter().map(|m| m[i]).collect::<Vec<_>>()))
        .collect())
}

/// Restores per-sentence structure of a flat score vector.
fn regroup(flat: Vec<f64>, shape: &[usize]) -> Vec<Vec<f64>> {
    let mut it = flat.into_iter();
    shape.iter().map(|&n| it.by_ref().take(n).collect()).collect()
}

impl FittedSystem {
    /// Positive-class probability for every unit of every sentence. Constant
    /// and SVM systems give 0 or 1.
    pub fn scores(
        &self,
        sentences: &[&AnnotatedSentence],
        archive: &EmbeddingArchive,
        task: Task,
    ) -> Result<Vec<Vec<f64>>> {
        let shape: Vec<usize> = sentences
            .iter()
            .map(|s| if task == Task::Token { s.len() } else { 1 })
            .collect();
        let hard = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            FittedSystem::Constant(c) => Ok(shape.iter().map(|&n| vec![hard(c.label()); n]).collect()),
            FittedSystem::Svm(b) => Ok(sentences
                .iter()
                .map(|s| b.predict(s).into_iter().map(hard).collect())
                .collect()),
            FittedSystem::Gru(model) => {
                let inputs = gather_inputs(sentences, archive)?;
                inputs.iter().map(|x| model.predict_positive(x, task)).collect()
            }
            FittedSystem::Vote(members) => {
                let per_member = self.member_scores(members, sentences, archive, task)?;
                Ok(regroup(vote_scores(&per_member)?, &shape))
            }
            FittedSystem::Mixture { members, ensemble } => {
                let per_member = self.member_scores(members, sentences, archive, task)?;
                Ok(regroup(mixture_scores(ensemble, &per_member)?, &shape))
            }
        }
    }

    fn member_scores(
        &self,
        members: &[FittedSystem],
        sentences: &[&AnnotatedSentence],
        archive: &EmbeddingArchive,
        task: Task,
    ) -> Result<Vec<Vec<f64>>> {
        members
            .iter()
            .map(|m| Ok(m.scores(sentences, archive, task)?.concat()))
            .collect()
    }

    /// Confusion counts on `sentences` over every unit.
    pub fn evaluate(
        &self,
        sentences: &[&AnnotatedSentence],
        archive: &EmbeddingArchive,
        task: Task,
    ) -> Result<ConfusionCounts> {
        let scores = self.scores(sentences, archive, task)?;
        let mut c = ConfusionCounts::new(task);
        for (s, sc) in sentences.iter().zip(&scores) {
            for (y, &p) in unit_labels(s, task).into_iter().zip(sc) {
                c.record(decide(p), y);
            }
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::agreed;
    use crate::embeddings::synthetic_provider;

    #[test]
    fn names() {
        let s = SystemSpec::Mixture {
            members: vec![SystemSpec::Gru(TrainConfig::default()), SystemSpec::Svm(SvmParams::default())],
            config: MmConfig::default(),
        };
        assert_eq!(s.name(), "mm(gru+svm)");
        assert_eq!(SystemSpec::Vote(vec![SystemSpec::Majority; 3]).name(), "vote(majority+majority+majority)");
    }

    #[test]
    fn constant_systems() {
        let corpus = vec![agreed("a", "e", true), agreed("b", "e", false), agreed("c", "e", false)];
        let refs: Vec<_> = corpus.iter().collect();
        let archive = synthetic_provider(&corpus, 4, 1, None);
        let maj = fit_system(&SystemSpec::Majority, &refs, &archive, Task::Sentence).unwrap();
        let c = maj.evaluate(&refs, &archive, Task::Sentence).unwrap();
        assert_eq!((c.tn, c.fn_), (2, 1));
        let pos = fit_system(&SystemSpec::AllPositive, &refs, &archive, Task::Token).unwrap();
        let c = pos.evaluate(&refs, &archive, Task::Token).unwrap();
        assert_eq!(c.total(), 12);
        assert_eq!(c.tp, 2);
    }

    #[test]
    fn unanimous_members_pass_through_vote() {
        let a = vec![0.9, 0.2, 0.6];
        assert_eq!(vote_scores(&[a.clone(), a.clone(), a]).unwrap(), vec![1.0, 0.0, 1.0]);
        assert!(vote_scores(&[vec![0.1], vec![]]).is_err());
    }
}
