//! Token substitution scores for the alignment kernels.
//!
//! Words are compared through a stored symmetric score table; two edges score
//! 1 when name and direction agree and 0 otherwise; a word never matches an
//! edge. Every token scores 1 against itself.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parse_err, Error, Result};
use crate::format::fmt_real;
use crate::scalar::Scalar;
use crate::sequence::Token;

const MATRIX_HEADER: &str = "#subst-matrix v1";

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Symmetric table of word-pair scores keyed by unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WordScores<F> {
    entries: BTreeMap<(String, String), F>,
}

impl<F: Scalar> Default for WordScores<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> WordScores<F> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Inserts or overwrites the score for the unordered pair `{a, b}`.
    pub fn insert(&mut self, a: &str, b: &str, score: F) {
        let (a, b) = ordered(a, b);
        self.entries.insert((a.to_string(), b.to_string()), score);
    }

    pub fn get(&self, a: &str, b: &str) -> Option<F> {
        let (a, b) = ordered(a, b);
        self.entries.get(&(a.to_string(), b.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, F)> {
        self.entries.iter().map(|((a, b), &v)| (a.as_str(), b.as_str(), v))
    }
}

/// Word-pair scores plus the fixed rules for edges and mixed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionMatrix<F> {
    words: WordScores<F>,
}

impl<F: Scalar> SubstitutionMatrix<F> {
    /// Matrix in which only identical tokens match.
    pub fn exact_match() -> Self {
        Self {
            words: WordScores::new(),
        }
    }

    /// Wraps a word table. Self-pairs are dropped (they always score 1);
    /// scores outside `[0, 1]` are rejected.
    pub fn build(word_scores: WordScores<F>) -> Result<Self> {
        let mut words = WordScores::<F>::new();
        for (a, b, v) in word_scores.iter() {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::ScoreOutOfRange {
                    a: a.into(),
                    b: b.into(),
                    score: v.as_f64(),
                });
            }
            if a != b {
                words.insert(a, b, v);
            }
        }
        Ok(Self { words })
    }

    /// Stored word scores (self-pairs excluded).
    pub fn word_scores(&self) -> &WordScores<F> {
        &self.words
    }

    /// Score between two word keys; unstored distinct pairs score 0.
    pub fn word_score(&self, a: &str, b: &str) -> F {
        if a == b {
            F::one()
        } else {
            self.words.get(a, b).unwrap_or_else(F::zero)
        }
    }

    pub fn lookup(&self, a: &Token, b: &Token) -> F {
        match (a, b) {
            (Token::Word { .. }, Token::Word { .. }) => self.word_score(&a.key(), &b.key()),
            (Token::Edge { .. }, Token::Edge { .. }) if a == b => F::one(),
            _ => F::zero(),
        }
    }

    /// Writes the matrix as `#subst-matrix v1` followed by one
    /// `word_a <TAB> word_b <TAB> score` line per stored pair.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MATRIX_HEADER}")?;
        for (a, b, v) in self.words.iter() {
            writeln!(out, "{a}\t{b}\t{}", fmt_real(v))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = WordScores::<F>::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, score] = fields[..] else {
                return Err(parse_err(lineno, "expected word_a<TAB>word_b<TAB>score"));
            };
            if a.is_empty() || b.is_empty() {
                return Err(parse_err(lineno, "empty word"));
            }
            let v: F = score
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid score {score:?}")))?;
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::ScoreOutOfRange {
                    a: a.into(),
                    b: b.into(),
                    score: v.as_f64(),
                });
            }
            if a == b {
                continue;
            }
            if let Some(prev) = words.get(a, b) {
                if prev != v {
                    return Err(Error::ConflictingScore {
                        a: a.into(),
                        b: b.into(),
                        first: prev.as_f64(),
                        second: v.as_f64(),
                    });
                }
            }
            words.insert(a, b, v);
        }
        Ok(Self { words })
    }
}

/// Independent uniform `[0, 1)` score for every unordered pair of distinct
/// words, drawn in sorted pair order from a seeded stream.
pub fn random_matrix<F: Scalar>(vocabulary: &[String], seed: u64) -> SubstitutionMatrix<F> {
    let mut vocab: Vec<&str> = vocabulary.iter().map(String::as_str).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = WordScores::<F>::new();
    for i in 0..vocab.len() {
        for j in i + 1..vocab.len() {
            words.insert(vocab[i], vocab[j], F::of(rng.gen::<f64>()));
        }
    }
    SubstitutionMatrix { words }
}
