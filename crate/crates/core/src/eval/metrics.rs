//! Confusion counts, accuracy and positive-class F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Task;

/// Counts with IDIOMATIC as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub level: Task,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(level: Task) -> Self {
        ConfusionCounts {
            level,
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
        }
    }

    /// Counts of a constant classifier on `positives` positive and
    /// `negatives` negative units.
    pub fn constant(predict_positive: bool, positives: usize, negatives: usize, level: Task) -> Self {
        let mut c = ConfusionCounts::new(level);
        if predict_positive {
            c.tp = positives;
            c.fp = negatives;
        } else {
            c.fn_ = positives;
            c.tn = negatives;
        }
        c
    }

    pub fn record(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }

    pub fn gold_positive(&self) -> usize {
        self.tp + self.fn_
    }

    /// `(tp + tn) / total`; 0 on an empty set.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `2tp / (2tp + fp + fn)`; 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn score(predictions: &[bool], gold: &[bool], level: Task) -> Result<ConfusionCounts> {
    if predictions.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    let mut c = ConfusionCounts::new(level);
    for (&p, &g) in predictions.iter().zip(gold) {
        c.record(p, g);
    }
    Ok(c)
}

/// F1 of the all-positive classifier at positive prevalence `p`.
pub fn all_positive_f1(p: f64) -> f64 {
    2.0 * p / (1.0 + p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        let y = [true, false, true, false];
        let c = score(&y, &y, Task::Token).unwrap();
        assert_eq!((c.accuracy(), c.f1()), (1.0, 1.0));
        let c = ConfusionCounts { level: Task::Sentence, tp: 1, fp: 1, fn_: 1, tn: 7 };
        assert!((c.accuracy() - 0.8).abs() < 1e-15);
        assert_eq!(c.f1(), 0.5);
        assert_eq!(ConfusionCounts::new(Task::Token).f1(), 0.0);
        assert!(score(&[true], &[], Task::Token).is_err());
    }

    #[test]
    fn constant_counts() {
        let c = ConfusionCounts::constant(true, 3, 7, Task::Token);
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (3, 7, 0, 0));
        assert!((c.f1() - all_positive_f1(0.3)).abs() < 1e-15);
        let c = ConfusionCounts::constant(false, 3, 7, Task::Token);
        assert!((c.accuracy() - 0.7).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn order_does_not_matter(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..60), rot in 0usize..60) {
            let (p, g): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
            let a = score(&p, &g, Task::Token).unwrap();
            let mut shifted = pairs.clone();
            if !shifted.is_empty() {
                let k = rot % shifted.len();
                shifted.rotate_left(k);
                shifted.reverse();
            }
            let (p2, g2): (Vec<bool>, Vec<bool>) = shifted.into_iter().unzip();
            prop_assert_eq!(a, score(&p2, &g2, Task::Token).unwrap());
            prop_assert!((0.0..=1.0).contains(&a.accuracy()) && (0.0..=1.0).contains(&a.f1()));
        }
    }
}
