//! Smoothed tf-idf over token lists.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out = SparseVec::default();
        for (i, v) in pairs {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out
    }

    pub fn dense(values: &[f64]) -> Self {
        SparseVec {
            indices: (0..values.len()).collect(),
            values: values.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| w[i] * v).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SparseVec {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Largest index plus one.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfVocabulary {
    terms: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    idf: Vec<f64>,
    documents: usize,
}

/// Learns the vocabulary and document frequencies of `documents`.
pub fn build_tfidf<S: AsRef<str>>(documents: &[Vec<S>]) -> Result<TfIdfVocabulary> {
    if documents.is_empty() {
        return Err(Error::invalid("cannot build tf-idf from an empty corpus"));
    }
    let mut terms = HashMap::new();
    let mut document_frequency = Vec::new();
    for doc in documents {
        let distinct: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for t in distinct {
            let next = terms.len();
            let idx = *terms.entry(t.to_string()).or_insert(next);
            if idx == document_frequency.len() {
                document_frequency.push(0);
            }
            document_frequency[idx] += 1;
        }
    }
    let n = documents.len() as f64;
    let idf = document_frequency
        .iter()
        .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
        .collect();
    Ok(TfIdfVocabulary {
        terms,
        document_frequency,
        idf,
        documents: documents.len(),
    })
}

impl TfIdfVocabulary {
    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.terms.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.index(term).map(|i| self.document_frequency[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index(term).map(|i| self.idf[i])
    }

    /// L2-normalised `count · idf` vector; unknown terms are dropped. A
    /// document with no known terms maps to the zero vector.
    pub fn transform<S: AsRef<str>>(&self, document: &[S]) -> SparseVec {
        let pairs = document
            .iter()
            .filter_map(|t| self.index(t.as_ref()))
            .map(|i| (i, self.idf[i]))
            .collect();
        let mut v = SparseVec::from_pairs(pairs);
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Tokens `index − k ..= index + k`, clipped to the sentence.
pub fn token_window<S>(tokens: &[S], index: usize, k: usize) -> &[S] {
    let lo = index.saturating_sub(k);
    let hi = (index + k + 1).min(tokens.len());
    &tokens[lo..hi]
}
