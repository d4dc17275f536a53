//! Windowed co-occurrence counts and the Dice, cosine and Euclidean (L2)
//! distributional similarity measures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::substitution::WordScores;

/// Symmetric context window: `radius` tokens on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    radius: usize,
}

impl WindowSpec {
    pub fn new(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { radius: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordContexts {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl WordContexts {
    fn add(&mut self, context: &str) {
        *self.counts.entry(context.to_string()).or_default() += 1;
        self.total += 1;
    }

    fn merge(&mut self, other: WordContexts) {
        for (c, n) in other.counts {
            *self.counts.entry(c).or_default() += n;
        }
        self.total += other.total;
    }

    /// `P(c|x)` for every stored context, in context order.
    fn probabilities<F: Scalar>(&self) -> impl Iterator<Item = (&str, F)> + '_ {
        let total = F::of(self.total as f64);
        self.counts
            .iter()
            .map(move |(c, &n)| (c.as_str(), F::of(n as f64) / total))
    }
}

/// Per-target context counts. Only targets seen at least once are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextCounts {
    words: BTreeMap<String, WordContexts>,
}

impl ContextCounts {
    pub fn get(&self, word: &str) -> Option<&WordContexts> {
        self.words.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.keys().map(String::as_str)
    }

    fn merge(mut self, other: ContextCounts) -> ContextCounts {
        for (w, ctx) in other.words {
            self.words.entry(w).or_default().merge(ctx);
        }
        self
    }
}

fn count_line(line: &str, targets: &BTreeSet<String>, radius: usize) -> ContextCounts {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let mut out = ContextCounts::default();
    for (i, tok) in toks.iter().enumerate() {
        if !targets.contains(*tok) {
            continue;
        }
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(toks.len().saturating_sub(1));
        let entry = out.words.entry(tok.to_string()).or_default();
        for (j, ctx) in toks.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                entry.add(ctx);
            }
        }
    }
    out.words.retain(|_, c| c.total > 0);
    out
}

/// Counts context tokens within `window` of every target occurrence. Windows
/// never cross line boundaries; lines are counted in parallel and merged.
pub fn count_contexts(corpus: &str, targets: &BTreeSet<String>, window: WindowSpec) -> ContextCounts {
    corpus
        .par_lines()
        .map(|line| count_line(line, targets, window.radius))
        .reduce(ContextCounts::default, ContextCounts::merge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionalMeasure {
    Dice,
    Cosine,
    /// Raw Euclidean distance between conditional context distributions.
    L2,
}

impl FromStr for DistributionalMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dice" => Ok(Self::Dice),
            "cosine" => Ok(Self::Cosine),
            "l2" | "l2_raw" => Ok(Self::L2),
            other => Err(Error::InvalidParameter {
                name: "measure",
                reason: format!("unknown distributional measure {other:?}"),
            }),
        }
    }
}

impl fmt::Display for DistributionalMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dice => "dice",
            Self::Cosine => "cosine",
            Self::L2 => "l2",
        })
    }
}

fn dice<F: Scalar>(x: &WordContexts, y: &WordContexts) -> F {
    let shared = x.counts.keys().filter(|c| y.counts.contains_key(*c)).count();
    F::of(2.0 * shared as f64) / F::of((x.counts.len() + y.counts.len()) as f64)
}

fn cosine<F: Scalar>(x: &WordContexts, y: &WordContexts) -> F {
    let py: BTreeMap<&str, F> = y.probabilities().collect();
    let mut dot = F::zero();
    let mut nx = F::zero();
    for (c, p) in x.probabilities::<F>() {
        nx = nx + p * p;
        if let Some(&q) = py.get(c) {
            dot = dot + p * q;
        }
    }
    let ny: F = py.values().map(|&q| q * q).sum();
    dot / (nx * ny).sqrt()
}

fn l2<F: Scalar>(x: &WordContexts, y: &WordContexts) -> F {
    let mut diff: BTreeMap<&str, F> = x.probabilities().collect();
    for (c, q) in y.probabilities::<F>() {
        let e = diff.entry(c).or_insert_with(F::zero);
        *e = *e - q;
    }
    diff.values().map(|&d| d * d).sum::<F>().sqrt()
}

/// Raw measure value for two words that both occur in `counts`.
pub fn distributional_similarity<F: Scalar>(
    measure: DistributionalMeasure,
    x: &str,
    y: &str,
    counts: &ContextCounts,
) -> Result<F> {
    let cx = counts.get(x).ok_or_else(|| Error::UnknownWord(x.to_string()))?;
    let cy = counts.get(y).ok_or_else(|| Error::UnknownWord(y.to_string()))?;
    Ok(match measure {
        DistributionalMeasure::Dice => dice(cx, cy),
        DistributionalMeasure::Cosine => cosine(cx, cy),
        DistributionalMeasure::L2 => l2(cx, cy),
    })
}

/// Maps raw L2 distances sharing a fixed first word onto `[0, 1]` as
/// `1 - d / max d`. A group whose maximum is zero maps entirely to 1.
pub fn l2_rescale<F: Scalar>(raw: &[F]) -> Vec<F> {
    let max = raw.iter().copied().fold(F::zero(), F::max);
    if max <= F::zero() {
        return vec![F::one(); raw.len()];
    }
    raw.iter().map(|&d| (F::one() - d / max).max(F::zero())).collect()
}

/// Key used to find a vocabulary entry in the corpus counts: annotated words
/// (`surface%concept`) are counted by surface.
fn corpus_form(word: &str) -> &str {
    word.split_once('%').map_or(word, |(s, _)| s)
}

/// Builds the symmetric word-score table over `vocabulary`, storing all
/// `k(k+1)/2` unordered pairs including self-pairs.
///
/// Words missing from the corpus score 1 with themselves and 0 with anything
/// else. L2 distances are rescaled per word; an unordered pair is normalized
/// by the larger of its two words' maxima so the table stays symmetric.
pub fn build_word_scores<F: Scalar>(
    counts: &ContextCounts,
    vocabulary: &[String],
    measure: DistributionalMeasure,
) -> WordScores<F> {
    let mut vocab: Vec<&str> = vocabulary.iter().map(String::as_str).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let seen: Vec<bool> = vocab.iter().map(|w| counts.contains(corpus_form(w))).collect();

    let raw = |i: usize, j: usize| -> F {
        distributional_similarity(measure, corpus_form(vocab[i]), corpus_form(vocab[j]), counts)
            .expect("both words seen")
    };

    let pairs: Vec<(usize, usize)> = (0..vocab.len())
        .flat_map(|i| (i..vocab.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<F> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                F::one()
            } else if !(seen[i] && seen[j]) {
                F::zero()
            } else {
                raw(i, j)
            }
        })
        .collect();

    let values = if measure == DistributionalMeasure::L2 {
        // per-word maxima over seen partners
        let mut row_max = vec![F::zero(); vocab.len()];
        for (&(i, j), &v) in pairs.iter().zip(&values) {
            if i != j && seen[i] && seen[j] {
                row_max[i] = row_max[i].max(v);
                row_max[j] = row_max[j].max(v);
            }
        }
        pairs
            .iter()
            .zip(&values)
            .map(|(&(i, j), &v)| {
                if i == j || !(seen[i] && seen[j]) {
                    v
                } else {
                    let max = row_max[i].max(row_max[j]);
                    l2_rescale(&[v, max])[0]
                }
            })
            .collect()
    } else {
        values
    };

    let mut table = WordScores::new();
    for (&(i, j), v) in pairs.iter().zip(values) {
        table.insert(vocab[i], vocab[j], v);
    }
    table
}
