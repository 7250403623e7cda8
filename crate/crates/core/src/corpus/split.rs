//! Train / test / dev partitions.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{indices_by_expression, AnnotatedSentence};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Random,
    /// Random within each sentence label, so label proportions carry over.
    Stratified,
    ExpressionDisjoint,
    LeaveOneExpressionOut,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::Random => "random",
            SplitMode::Stratified => "stratified",
            SplitMode::ExpressionDisjoint => "expression_disjoint",
            SplitMode::LeaveOneExpressionOut => "leave_one_expression_out",
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "random" => Ok(SplitMode::Random),
            "stratified" => Ok(SplitMode::Stratified),
            "expression_disjoint" | "disjoint" => Ok(SplitMode::ExpressionDisjoint),
            "leave_one_expression_out" | "loo" => Ok(SplitMode::LeaveOneExpressionOut),
            other => Err(Error::invalid(format!("unknown split mode `{other}`"))),
        }
    }
}

/// Sentence ids of each part, each list in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub dev: Vec<String>,
    pub mode: SplitMode,
}

impl DataSplit {
    fn from_assignment(sentences: &[AnnotatedSentence], part: &[u8], mode: SplitMode) -> Self {
        let mut split = DataSplit {
            train: Vec::new(),
            test: Vec::new(),
            dev: Vec::new(),
            mode,
        };
        for (s, &p) in sentences.iter().zip(part) {
            match p {
                0 => split.train.push(s.id.clone()),
                1 => split.test.push(s.id.clone()),
                _ => split.dev.push(s.id.clone()),
            }
        }
        split
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len() + self.dev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that the parts are pairwise disjoint and cover `sentences`.
    pub fn validate(&self, sentences: &[AnnotatedSentence]) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.test).chain(&self.dev) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("sentence {id} appears in two parts")));
            }
        }
        let corpus: HashSet<&str> = sentences.iter().map(|s| s.id.as_str()).collect();
        if corpus != seen {
            return Err(Error::invalid("split does not cover the corpus exactly"));
        }
        Ok(())
    }

    /// The expression strings present in both train and test.
    pub fn shared_expressions(&self, sentences: &[AnnotatedSentence]) -> Vec<String> {
        let by_id: HashMap<&str, &str> = sentences
            .iter()
            .map(|s| (s.id.as_str(), s.expression.as_str()))
            .collect();
        let train: HashSet<&str> = self.train.iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        let mut shared: Vec<String> = self
            .test
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .filter(|e| train.contains(e))
            .map(str::to_owned)
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        shared.sort();
        shared
    }

    /// Materialises the three parts.
    pub fn select<'a>(
        &self,
        sentences: &'a [AnnotatedSentence],
    ) -> (Vec<&'a AnnotatedSentence>, Vec<&'a AnnotatedSentence>, Vec<&'a AnnotatedSentence>) {
        let by_id: HashMap<&str, &AnnotatedSentence> =
            sentences.iter().map(|s| (s.id.as_str(), s)).collect();
        let pick = |ids: &[String]| ids.iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        (pick(&self.train), pick(&self.test), pick(&self.dev))
    }
}

fn check_unique_ids(sentences: &[AnnotatedSentence]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in sentences {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::invalid(format!("duplicate sentence id {}", s.id)));
        }
    }
    Ok(())
}

fn check_ratios(ratios: (f64, f64, f64)) -> Result<()> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios must be non-negative and sum to 1, got {a}:{b}:{c}"
        )));
    }
    Ok(())
}

/// Part sizes for `n` items: train and test are rounded, dev takes the rest.
fn part_sizes(n: usize, (train, test, _): (f64, f64, f64)) -> (usize, usize) {
    let n_train = ((train * n as f64).round() as usize).min(n);
    let n_test = ((test * n as f64).round() as usize).min(n - n_train);
    (n_train, n_test)
}

fn assign_shuffled(indices: &mut [usize], ratios: (f64, f64, f64), rng: &mut rng::StreamRng, part: &mut [u8]) {
    indices.shuffle(rng);
    let (n_train, n_test) = part_sizes(indices.len(), ratios);
    for (k, &i) in indices.iter().enumerate() {
        part[i] = if k < n_train {
            0
        } else if k < n_train + n_test {
            1
        } else {
            2
        };
    }
}

/// Uniform random split with `(train, test, dev)` fractions.
pub fn split_random(sentences: &[AnnotatedSentence], ratios: (f64, f64, f64), seed: u64) -> Result<DataSplit> {
    check_ratios(ratios)?;
    check_unique_ids(sentences)?;
    let mut part = vec![0u8; sentences.len()];
    let mut idx: Vec<usize> = (0..sentences.len()).collect();
    assign_shuffled(&mut idx, ratios, &mut rng::substream(seed, "split"), &mut part);
    Ok(DataSplit::from_assignment(sentences, &part, SplitMode::Random))
}

/// Random split applied separately to idiomatic and literal sentences.
pub fn split_stratified(sentences: &[AnnotatedSentence], ratios: (f64, f64, f64), seed: u64) -> Result<DataSplit> {
    check_ratios(ratios)?;
    check_unique_ids(sentences)?;
    let mut part = vec![0u8; sentences.len()];
    let mut rng = rng::substream(seed, "split");
    let (mut idiomatic, mut literal): (Vec<usize>, Vec<usize>) =
        (0..sentences.len()).partition(|&i| sentences[i].is_idiomatic());
    assign_shuffled(&mut idiomatic, ratios, &mut rng, &mut part);
    assign_shuffled(&mut literal, ratios, &mut rng, &mut part);
    Ok(DataSplit::from_assignment(sentences, &part, SplitMode::Stratified))
}

/// Partitions expressions between train and test so that no expression
/// occurs on both sides. Expressions are visited largest first (seeded
/// shuffle breaks ties) and each goes to test when that moves the test
/// sentence count closer to `test_fraction · N`. Dev is left empty.
pub fn split_expression_disjoint(
    sentences: &[AnnotatedSentence],
    test_fraction: f64,
    seed: u64,
) -> Result<DataSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    check_unique_ids(sentences)?;
    let groups = indices_by_expression(sentences);
    if groups.len() < 2 {
        return Err(Error::invalid("an expression-disjoint split needs at least 2 expressions"));
    }
    let mut order: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    order.shuffle(&mut rng::substream(seed, "split"));
    order.sort_by_key(|e| std::cmp::Reverse(e.1.len()));

    let target = test_fraction * sentences.len() as f64;
    let mut to_test = vec![false; order.len()];
    let mut test_count = 0usize;
    for (k, (_, idx)) in order.iter().enumerate() {
        let with = (test_count + idx.len()) as f64;
        if (with - target).abs() < (test_count as f64 - target).abs() {
            to_test[k] = true;
            test_count += idx.len();
        }
    }
    // Both sides must hold at least one expression; the smallest one moves.
    if !to_test.iter().any(|&t| t) {
        to_test[order.len() - 1] = true;
    } else if to_test.iter().all(|&t| t) {
        to_test[order.len() - 1] = false;
    }

    let mut part = vec![0u8; sentences.len()];
    for ((_, idx), &test) in order.iter().zip(&to_test) {
        for &i in idx {
            part[i] = u8::from(test);
        }
    }
    let split = DataSplit::from_assignment(sentences, &part, SplitMode::ExpressionDisjoint);
    debug_assert!(split.shared_expressions(sentences).is_empty());
    Ok(split)
}

/// Test = every sentence of `expression`; train = all other sentences.
pub fn split_leave_one_expression_out(sentences: &[AnnotatedSentence], expression: &str) -> Result<DataSplit> {
    check_unique_ids(sentences)?;
    let part: Vec<u8> = sentences.iter().map(|s| u8::from(s.expression == expression)).collect();
    let n_test = part.iter().filter(|&&p| p == 1).count();
    if n_test == 0 {
        return Err(Error::invalid(format!("expression `{expression}` not in corpus")));
    }
    if n_test == sentences.len() {
        return Err(Error::invalid("leave-one-expression-out needs at least 2 expressions"));
    }
    Ok(DataSplit::from_assignment(sentences, &part, SplitMode::LeaveOneExpressionOut))
}

/// Writes `# mode = ...` followed by `[train]`, `[test]` and `[dev]` sections,
/// one id per line.
pub fn write_split(split: &DataSplit, mut w: impl Write) -> Result<()> {
    writeln!(w, "# mode = {}", split.mode)?;
    for (name, ids) in [("train", &split.train), ("test", &split.test), ("dev", &split.dev)] {
        writeln!(w, "[{name}]")?;
        for id in ids {
            writeln!(w, "{id}")?;
        }
    }
    Ok(())
}

pub fn read_split(r: impl BufRead) -> Result<DataSplit> {
    let mut split = DataSplit {
        train: Vec::new(),
        test: Vec::new(),
        dev: Vec::new(),
        mode: SplitMode::Random,
    };
    let mut section: Option<u8> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "mode" {
                    split.mode = v.parse()?;
                }
            }
            continue;
        }
        section = match line {
            "[train]" => Some(0),
            "[test]" => Some(1),
            "[dev]" => Some(2),
            id => {
                let target = match section {
                    Some(0) => &mut split.train,
                    Some(1) => &mut split.test,
                    Some(2) => &mut split.dev,
                    _ => return Err(Error::parse(i + 1, "id outside of a section")),
                };
                target.push(id.to_owned());
                section
            }
        };
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::agreed;
    use super::*;
    use proptest::prelude::*;

    fn corpus(n: usize, expressions: usize) -> Vec<AnnotatedSentence> {
        (0..n)
            .map(|i| agreed(&format!("s{i}"), &format!("e{}", i % expressions), i % 4 != 0))
            .collect()
    }

    #[test]
    fn published_split_sizes() {
        let c = corpus(29_400, 75);
        let split = split_random(&c, (0.63, 0.30, 0.07), 1).unwrap();
        assert_eq!((split.train.len(), split.test.len(), split.dev.len()), (18_522, 8_820, 2_058));
        split.validate(&c).unwrap();
    }

    #[test]
    fn all_train_and_determinism() {
        let c = corpus(10, 2);
        let split = split_random(&c, (1.0, 0.0, 0.0), 5).unwrap();
        assert_eq!(split.train.len(), 10);
        assert_eq!(split_random(&c, (0.5, 0.3, 0.2), 5).unwrap(), split_random(&c, (0.5, 0.3, 0.2), 5).unwrap());
        assert!(split_random(&c, (0.5, 0.3, 0.3), 5).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut c = corpus(4, 2);
        c[1].id = c[0].id.clone();
        assert!(split_random(&c, (0.5, 0.5, 0.0), 1).is_err());
    }

    #[test]
    fn two_expressions_split_whole() {
        let c = corpus(20, 2);
        let split = split_expression_disjoint(&c, 0.5, 3).unwrap();
        let (train, test, _) = split.select(&c);
        let te: HashSet<_> = test.iter().map(|s| &s.expression).collect();
        let tr: HashSet<_> = train.iter().map(|s| &s.expression).collect();
        assert_eq!((te.len(), tr.len()), (1, 1));
        assert!(te.is_disjoint(&tr));
        assert!(split_expression_disjoint(&corpus(5, 1), 0.5, 3).is_err());
    }

    #[test]
    fn disjoint_fraction_on_skewed_expression_sizes() {
        // 75 expressions with Zipf-like sizes totalling 29,400 sentences.
        let weights: Vec<f64> = (1..=75).map(|r| 1.0 / (r as f64).powf(0.8)).collect();
        let total: f64 = weights.iter().sum();
        let mut sizes: Vec<usize> = weights.iter().map(|w| (w / total * 29_400.0).floor() as usize).collect();
        let missing = 29_400 - sizes.iter().sum::<usize>();
        sizes[0] += missing;
        let mut c = Vec::new();
        for (e, &n) in sizes.iter().enumerate() {
            for k in 0..n {
                c.push(agreed(&format!("e{e}-{k}"), &format!("e{e}"), k % 5 != 0));
            }
        }
        for seed in 0..5 {
            let split = split_expression_disjoint(&c, 0.30, seed).unwrap();
            let frac = split.test.len() as f64 / c.len() as f64;
            assert!((frac - 0.30).abs() <= 0.05, "seed {seed}: {frac}");
            assert!(split.shared_expressions(&c).is_empty());
        }
    }

    #[test]
    fn leave_one_out() {
        let c = corpus(30, 3);
        let split = split_leave_one_expression_out(&c, "e1").unwrap();
        let (train, test, dev) = split.select(&c);
        assert!(test.iter().all(|s| s.expression == "e1"));
        assert!(train.iter().all(|s| s.expression != "e1"));
        assert_eq!((train.len(), test.len(), dev.len()), (20, 10, 0));
        assert!(split_leave_one_expression_out(&c, "nope").is_err());
    }

    #[test]
    fn stratified_keeps_even_labels_even() {
        let c: Vec<_> = (0..70).map(|i| agreed(&i.to_string(), "e", i % 2 == 0)).collect();
        let split = split_stratified(&c, (0.7, 0.3, 0.0), 11).unwrap();
        let (_, test, _) = split.select(&c);
        let pos = test.iter().filter(|s| s.is_idiomatic()).count();
        assert_eq!(pos * 2, test.len());
    }

    #[test]
    fn split_file_round_trip() {
        let c = corpus(12, 3);
        let split = split_random(&c, (0.5, 0.25, 0.25), 2).unwrap();
        let mut buf = Vec::new();
        write_split(&split, &mut buf).unwrap();
        assert_eq!(read_split(&buf[..]).unwrap(), split);
    }

    proptest! {
        #[test]
        fn random_split_partitions(n in 0usize..200, seed in 0u64..50, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (a, b) = if a + b > 1.0 { (a / (a + b), b / (a + b)) } else { (a, b) };
            let c = corpus(n, 4);
            let split = split_random(&c, (a, b, (1.0 - a - b).max(0.0)), seed).unwrap();
            split.validate(&c).unwrap();
            prop_assert!((split.train.len() as f64 - a * n as f64).abs() <= 1.0);
            prop_assert!((split.test.len() as f64 - b * n as f64).abs() <= 1.0);
        }

        #[test]
        fn disjoint_split_never_shares(n in 4usize..200, e in 2usize..12, seed in 0u64..50, f in 0.05f64..0.95) {
            let c = corpus(n, e.min(n));
            let split = split_expression_disjoint(&c, f, seed).unwrap();
            split.validate(&c).unwrap();
            prop_assert!(split.shared_expressions(&c).is_empty());
            prop_assert!(!split.train.is_empty() && !split.test.is_empty());
        }
    }
}
