//! Deterministic stand-in for a pretrained embedding model.
//!
//! Each surface form maps to a fixed pseudo-Gaussian vector derived from
//! `(surface, seed)`. With a planted signal of magnitude `m`, idiomatic tokens
//! get a fixed offset of `±m` on every coordinate (seed-derived signs) and
//! tokens within three positions of an idiomatic token get half of it.

use crate::corpus::AnnotatedSentence;
use crate::linalg::Matrix;
use crate::rng::{fnv1a, mix64, substream_seed};

use super::{EmbeddingArchive, SentenceEmbedding};

const CONTEXT_WINDOW: usize = 3;

fn unit_interval(bits: u64) -> f64 {
    // 53 random mantissa bits, shifted away from zero.
    ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn gaussian_vector(key: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let a = mix64(key ^ mix64(2 * j as u64 + 1));
            let b = mix64(a ^ 0xA076_1D64_78BD_642F);
            let (u1, u2) = (unit_interval(a), unit_interval(b));
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

/// The signal-free vector of a surface form.
pub fn token_base_vector(surface: &str, dim: usize, seed: u64) -> Vec<f64> {
    gaussian_vector(mix64(fnv1a(surface.as_bytes()) ^ substream_seed(seed, "synthetic-token")), dim)
}

fn signal_offset(dim: usize, seed: u64, magnitude: f64) -> Vec<f64> {
    gaussian_vector(substream_seed(seed, "synthetic-signal"), dim)
        .into_iter()
        .map(|x| magnitude.copysign(x))
        .collect()
}

pub fn synthetic_provider(
    corpus: &[AnnotatedSentence],
    dim: usize,
    seed: u64,
    planted_signal: Option<f64>,
) -> EmbeddingArchive {
    assert!(dim >= 2, "synthetic embeddings need dim >= 2");
    let magnitude = planted_signal.unwrap_or(0.0);
    let tag = format!("synthetic(dim={dim},seed={seed},signal={magnitude})");
    let offset = signal_offset(dim, seed, magnitude);
    let mut archive = EmbeddingArchive::new(dim, tag).expect("dim is positive");
    for s in corpus {
        let idiomatic: Vec<usize> = (0..s.len()).filter(|&t| s.token_labels[t].is_idiomatic()).collect();
        let mut m = Matrix::zeros(s.len(), dim);
        for (t, surface) in s.tokens.iter().enumerate() {
            let mut v = token_base_vector(surface, dim, seed);
            let distance = idiomatic.iter().map(|&i| i.abs_diff(t)).min();
            let scale = match distance {
                Some(0) => 1.0,
                Some(d) if d <= CONTEXT_WINDOW => 0.5,
                _ => 0.0,
            };
            if scale > 0.0 && magnitude != 0.0 {
                for (x, o) in v.iter_mut().zip(&offset) {
                    *x += scale * o;
                }
            }
            m.row_mut(t).copy_from_slice(&v);
        }
        let entry = SentenceEmbedding::from_matrix(s.id.clone(), &m).expect("finite synthetic values");
        archive.push(entry).expect("corpus ids must be unique");
    }
    archive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synthetic_corpus, SyntheticCorpusConfig};

    fn small() -> Vec<AnnotatedSentence> {
        synthetic_corpus(&SyntheticCorpusConfig {
            sentences: 40,
            ..SyntheticCorpusConfig::default()
        })
    }

    #[test]
    fn deterministic() {
        let c = small();
        assert_eq!(synthetic_provider(&c, 8, 3, Some(2.0)), synthetic_provider(&c, 8, 3, Some(2.0)));
        assert_ne!(synthetic_provider(&c, 8, 3, None), synthetic_provider(&c, 8, 4, None));
    }

    #[test]
    fn zero_signal_depends_on_surface_only() {
        let c = small();
        let a = synthetic_provider(&c, 8, 1, Some(0.0));
        for s in &c {
            let e = a.get(&s.id).unwrap();
            for (t, surface) in s.tokens.iter().enumerate() {
                let base: Vec<f32> = token_base_vector(surface, 8, 1).iter().map(|&v| v as f32).collect();
                assert_eq!(e.row(t), &base[..]);
            }
        }
    }

    #[test]
    fn planted_offset_shifts_every_coordinate() {
        let c = small();
        let plain = synthetic_provider(&c, 16, 9, None);
        let planted = synthetic_provider(&c, 16, 9, Some(2.0));
        let s = c.iter().find(|s| s.is_idiomatic()).unwrap();
        let t = s.token_labels.iter().position(|l| l.is_idiomatic()).unwrap();
        let (a, b) = (plain.get(&s.id).unwrap().row(t), planted.get(&s.id).unwrap().row(t));
        for (x, y) in a.iter().zip(b) {
            assert!(((y - x).abs() - 2.0).abs() < 1e-5, "{x} {y}");
        }
        let literal = c.iter().find(|s| !s.is_idiomatic()).unwrap();
        assert_eq!(plain.get(&literal.id), planted.get(&literal.id));
    }

    #[test]
    fn base_vectors_look_standard_normal() {
        let mut xs = Vec::new();
        for w in 0..2000 {
            xs.extend(token_base_vector(&format!("w{w}"), 4, 0));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05 && (var - 1.0).abs() < 0.08, "{mean} {var}");
    }
}
