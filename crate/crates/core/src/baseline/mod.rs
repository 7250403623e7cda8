//! Non-neural reference classifiers: a tf-idf linear SVM and the two
//! constant "default" classifiers.

mod svm;
mod tfidf;

use serde::{Deserialize, Serialize};

pub use svm::{train_svm, LinearSvm, SvmParams};
pub use tfidf::{build_tfidf, token_window, SparseVec, TfIdfVocabulary};

use crate::corpus::AnnotatedSentence;
use crate::error::Result;
use crate::model::{unit_labels, Task};

/// Tokens on each side of the target in token-task windows.
pub const WINDOW: usize = 3;

/// Constant classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefaultClassifier {
    /// Most frequent training label.
    Majority(bool),
    AllPositive,
}

impl DefaultClassifier {
    pub fn label(self) -> bool {
        match self {
            DefaultClassifier::Majority(y) => y,
            DefaultClassifier::AllPositive => true,
        }
    }
}

/// Majority label of `train_labels`; ties (including no labels) go to the
/// positive class.
pub fn default_majority(train_labels: &[bool]) -> DefaultClassifier {
    let pos = train_labels.iter().filter(|&&y| y).count();
    DefaultClassifier::Majority(2 * pos >= train_labels.len())
}

pub fn default_all_positive() -> DefaultClassifier {
    DefaultClassifier::AllPositive
}

/// One bag of words per predicted unit: the whole sentence, or the
/// `WINDOW`-token neighbourhood of each token.
pub fn unit_documents(sentence: &AnnotatedSentence, task: Task) -> Vec<Vec<String>> {
    let lower: Vec<String> = sentence.tokens.iter().map(|t| t.to_lowercase()).collect();
    match task {
        Task::Sentence => vec![lower],
        Task::Token => (0..lower.len())
            .map(|i| token_window(&lower, i, WINDOW).to_vec())
            .collect(),
    }
}

/// tf-idf features feeding a linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBaseline {
    pub task: Task,
    pub vocabulary: TfIdfVocabulary,
    pub svm: LinearSvm,
}

impl SvmBaseline {
    pub fn fit(sentences: &[&AnnotatedSentence], task: Task, params: &SvmParams) -> Result<Self> {
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for s in sentences {
            docs.extend(unit_documents(s, task));
            labels.extend(unit_labels(s, task));
        }
        let vocabulary = build_tfidf(&docs)?;
        let features: Vec<SparseVec> = docs.iter().map(|d| vocabulary.transform(d)).collect();
        let svm = train_svm(&features, &labels, vocabulary.len(), params)?;
        Ok(SvmBaseline { task, vocabulary, svm })
    }

    pub fn predict(&self, sentence: &AnnotatedSentence) -> Vec<bool> {
        unit_documents(sentence, self.task)
            .iter()
            .map(|d| self.svm.predict(&self.vocabulary.transform(d)))
            .collect()
    }
}
