//! Deterministic toy corpora for desk-scale experiments.

use rand::Rng;

use super::{AnnotatedSentence, AnnotatorLabel, TokenLabel};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusConfig {
    pub sentences: usize,
    pub expressions: usize,
    /// Probability that a sentence uses its expression idiomatically.
    pub idiomatic_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub filler_vocab: usize,
    pub language: String,
    pub seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        SyntheticCorpusConfig {
            sentences: 1_000,
            expressions: 20,
            idiomatic_rate: 0.5,
            min_len: 8,
            max_len: 16,
            filler_vocab: 400,
            language: "xx".to_owned(),
            seed: 0,
        }
    }
}

/// Sentence `i` carries expression `i mod expressions`; expressions have two
/// or three words, embedded at a random position among filler words.
pub fn synthetic_corpus(config: &SyntheticCorpusConfig) -> Vec<AnnotatedSentence> {
    assert!(config.expressions >= 1 && config.filler_vocab >= 1);
    let mut rng = rng::substream(config.seed, "synthetic-corpus");
    let expressions: Vec<Vec<String>> = (0..config.expressions)
        .map(|e| {
            let words = 2 + e % 2;
            (0..words).map(|w| format!("x{e}{}", (b'a' + w as u8) as char)).collect()
        })
        .collect();
    (0..config.sentences)
        .map(|i| {
            let expr = &expressions[i % config.expressions];
            let len = rng
                .gen_range(config.min_len..=config.max_len.max(config.min_len))
                .max(expr.len());
            let start = rng.gen_range(0..=len - expr.len());
            let idiomatic = rng.gen_bool(config.idiomatic_rate);
            let mut tokens = Vec::with_capacity(len);
            let mut labels = Vec::with_capacity(len);
            for t in 0..len {
                if (start..start + expr.len()).contains(&t) {
                    tokens.push(expr[t - start].clone());
                    labels.push(if idiomatic {
                        TokenLabel::Idiomatic
                    } else {
                        TokenLabel::LiteralExpr
                    });
                } else {
                    tokens.push(format!("w{}", rng.gen_range(0..config.filler_vocab)));
                    labels.push(TokenLabel::Outside);
                }
            }
            let ann = if idiomatic {
                AnnotatorLabel::Yes
            } else {
                AnnotatorLabel::No
            };
            AnnotatedSentence::new(
                format!("syn-{i:05}"),
                config.language.clone(),
                tokens,
                expr.join(" "),
                labels,
                ann,
                ann,
            )
            .expect("labels match tokens")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::compute_stats;

    #[test]
    fn shape_and_determinism() {
        let cfg = SyntheticCorpusConfig::default();
        let a = synthetic_corpus(&cfg);
        assert_eq!(a, synthetic_corpus(&cfg));
        let stats = compute_stats(&a);
        assert_eq!(stats.sentences, 1_000);
        assert_eq!(stats.expressions, 20);
        let rate = stats.idiomatic_sentences as f64 / 1_000.0;
        assert!((rate - 0.5).abs() < 0.06, "{rate}");
    }
}
