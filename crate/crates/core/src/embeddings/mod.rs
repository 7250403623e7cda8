//! Frozen contextual embeddings.
//!
//! Vectors are produced outside this crate by a pretrained language model and
//! stored word-aligned in an [`EmbeddingArchive`]. Nothing here updates them.

mod archive;
mod synthetic;

use std::collections::HashMap;

use crate::corpus::AnnotatedSentence;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use archive::{archive_file_size, decode_archive, encode_archive, open_archive, write_archive, MAGIC, VERSION};
pub use synthetic::{synthetic_provider, token_base_vector};

/// Word-aligned vectors of one sentence, `tokens × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    pub sentence_id: String,
    dim: usize,
    vectors: Vec<f32>,
    /// Word index → first subtoken row, kept when the rows were selected from
    /// subword vectors. Not persisted: archives hold aligned vectors only.
    pub alignment: Option<Vec<usize>>,
}

impl SentenceEmbedding {
    pub fn new(sentence_id: impl Into<String>, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if !vectors.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of width {dim}",
                vectors.len()
            )));
        }
        let sentence_id = sentence_id.into();
        if let Some(bad) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sentence {sentence_id}, row {}",
                bad / dim
            )));
        }
        Ok(SentenceEmbedding {
            sentence_id,
            dim,
            vectors,
            alignment: None,
        })
    }

    /// Narrows a `T × D` matrix to 32-bit storage.
    pub fn from_matrix(sentence_id: impl Into<String>, m: &Matrix) -> Result<Self> {
        let vectors = m.as_slice().iter().map(|&v| v as f32).collect();
        SentenceEmbedding::new(sentence_id, m.cols(), vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.vectors[t * self.dim..(t + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.vectors
    }

    /// Upcasts to a 64-bit matrix for the model.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.tokens(),
            self.dim,
            self.vectors.iter().map(|&v| v as f64).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingArchive {
    dim: usize,
    pub provider_tag: String,
    entries: Vec<SentenceEmbedding>,
    index: HashMap<String, usize>,
}

impl EmbeddingArchive {
    pub fn new(dim: usize, provider_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingArchive {
            dim,
            provider_tag: provider_tag.into(),
            entries: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn push(&mut self, entry: SentenceEmbedding) -> Result<()> {
        if entry.dim != self.dim {
            return Err(Error::Shape(format!(
                "sentence {} has dim {} but the archive has dim {}",
                entry.sentence_id, entry.dim, self.dim
            )));
        }
        if self.index.contains_key(&entry.sentence_id) {
            return Err(Error::invalid(format!(
                "duplicate sentence id {}",
                entry.sentence_id
            )));
        }
        self.index.insert(entry.sentence_id.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SentenceEmbedding] {
        &self.entries
    }

    pub fn get(&self, sentence_id: &str) -> Option<&SentenceEmbedding> {
        self.index.get(sentence_id).map(|&i| &self.entries[i])
    }

    /// Every sentence must have an entry whose row count equals its token
    /// count. Missing ids are reported together.
    pub fn validate_against<'a>(
        &self,
        sentences: impl IntoIterator<Item = &'a AnnotatedSentence>,
    ) -> Result<()> {
        let mut missing = Vec::new();
        for s in sentences {
            match self.get(&s.id) {
                None => missing.push(s.id.clone()),
                Some(e) if e.tokens() != s.tokens.len() => {
                    return Err(Error::Shape(format!(
                        "sentence {} has {} tokens but {} embedding rows",
                        s.id,
                        s.tokens.len(),
                        e.tokens()
                    )))
                }
                Some(_) => {}
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingEmbeddings(missing))
        }
    }
}

/// Equal-weight mean of layer matrices.
pub fn average_layers(layers: &[Matrix]) -> Result<Matrix> {
    let first = layers
        .first()
        .ok_or_else(|| Error::invalid("no layers to average"))?;
    let (rows, cols) = (first.rows(), first.cols());
    let mut out = Matrix::zeros(rows, cols);
    for (k, layer) in layers.iter().enumerate() {
        if layer.rows() != rows || layer.cols() != cols {
            return Err(Error::Shape(format!(
                "layer {k} is {}x{}, expected {rows}x{cols}",
                layer.rows(),
                layer.cols()
            )));
        }
        for (o, v) in out.as_mut_slice().iter_mut().zip(layer.as_slice()) {
            *o += v;
        }
    }
    let n = layers.len() as f64;
    out.as_mut_slice().iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

/// Selects, for every word, the vector of its first subtoken.
pub fn align_first_subtoken(subtokens: &Matrix, word_to_subtokens: &[Vec<usize>]) -> Result<Matrix> {
    let mut out = Matrix::zeros(word_to_subtokens.len(), subtokens.cols());
    for (w, pieces) in word_to_subtokens.iter().enumerate() {
        let &first = pieces
            .first()
            .ok_or_else(|| Error::invalid(format!("word {w} maps to no subtokens")))?;
        if let Some(&bad) = pieces.iter().find(|&&i| i >= subtokens.rows()) {
            return Err(Error::invalid(format!(
                "word {w} maps to subtoken {bad}, but only {} exist",
                subtokens.rows()
            )));
        }
        out.row_mut(w).copy_from_slice(subtokens.row(first));
    }
    Ok(out)
}
