//! Seeded synthetic fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use pathalign::sequence::{Direction, Label, LabeledInstance, PathSequence, Token};
use pathalign::substitution::{SubstitutionMatrix, WordScores};
use pathalign::Dataset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLUSTERS: usize = 4;
pub const SYNONYMS: usize = 6;
pub const FILLERS: usize = 40;
const EDGES: [&str; 4] = ["nsubj", "dobj", "prep", "amod"];

pub struct Synthetic {
    pub dataset: Dataset,
    pub vocabulary: Vec<String>,
    /// High scores within a synonym cluster, low elsewhere.
    pub informative: SubstitutionMatrix<f64>,
}

fn synonym(c: usize, i: usize) -> String {
    format!("c{c}s{i}")
}

pub fn vocabulary() -> Vec<String> {
    let mut v: Vec<String> = (0..CLUSTERS)
        .flat_map(|c| (0..SYNONYMS).map(move |i| synonym(c, i)))
        .chain((0..FILLERS).map(|i| format!("f{i}")))
        .collect();
    v.sort();
    v
}

fn cluster_of(w: &str) -> Option<usize> {
    w.strip_prefix('c')?.split('s').next()?.parse().ok()
}

pub fn informative_matrix(seed: u64) -> SubstitutionMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let vocab = vocabulary();
    let mut scores = WordScores::new();
    for (i, a) in vocab.iter().enumerate() {
        for b in &vocab[i + 1..] {
            let same = cluster_of(a).is_some() && cluster_of(a) == cluster_of(b);
            let v = if same {
                rng.gen_range(0.7..1.0)
            } else {
                rng.gen_range(0.0..0.2)
            };
            scores.insert(a, b, v);
        }
    }
    SubstitutionMatrix::build(scores).expect("scores lie in [0, 1]")
}

fn edge(rng: &mut ChaCha8Rng) -> Token {
    let dir = if rng.gen_bool(0.5) {
        Direction::Up
    } else {
        Direction::Down
    };
    Token::edge(EDGES[rng.gen_range(0..EDGES.len())], dir)
}

fn path(rng: &mut ChaCha8Rng, motif: [usize; 3]) -> PathSequence {
    let mut words = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        words.push(format!("f{}", rng.gen_range(0..FILLERS)));
    }
    for c in motif {
        words.push(synonym(c, rng.gen_range(0..SYNONYMS)));
    }
    for _ in 0..rng.gen_range(0..=2) {
        words.push(format!("f{}", rng.gen_range(0..FILLERS)));
    }
    let mut tokens = Vec::new();
    for (k, w) in words.into_iter().enumerate() {
        if k > 0 {
            tokens.push(edge(rng));
        }
        tokens.push(Token::word(w));
    }
    PathSequence::new(tokens)
}

/// `n` instances, 40% positive. Positives carry the motif clusters (0, 1, 2)
/// in order; negatives a decoy sharing only two of them.
pub fn synonym_dataset(n: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decoys = [[0, 3, 2], [3, 1, 2], [0, 1, 3], [2, 1, 0]];
    let instances = (0..n)
        .map(|i| {
            let positive = rng.gen_bool(0.4);
            let motif = if positive {
                [0, 1, 2]
            } else {
                decoys[rng.gen_range(0..decoys.len())]
            };
            LabeledInstance {
                id: format!("s{i}"),
                label: if positive { Label::Positive } else { Label::Negative },
                path: path(&mut rng, motif),
            }
        })
        .collect();
    Synthetic {
        dataset: Dataset::new(instances).expect("unique ids"),
        vocabulary: vocabulary(),
        informative: informative_matrix(seed),
    }
}

const WIDE_FILLERS: usize = 200;

/// Words-only paths of fixed length 6 over a large filler pool, so lengths
/// carry no signal and fillers rarely match exactly. Weakly related filler
/// pairs dominate the alignment count, which favours a larger `beta`.
pub fn fixed_length_dataset(n: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decoys = [[0, 3, 2], [3, 1, 2], [0, 1, 3], [2, 1, 0]];
    let instances = (0..n)
        .map(|i| {
            let positive = rng.gen_bool(0.4);
            let motif = if positive {
                [0, 1, 2]
            } else {
                decoys[rng.gen_range(0..decoys.len())]
            };
            let mut slots: Vec<usize> = (0..6).collect();
            slots.shuffle(&mut rng);
            let mut chosen = slots[..3].to_vec();
            chosen.sort_unstable();
            let mut words: Vec<String> = (0..6).map(|_| format!("g{}", rng.gen_range(0..WIDE_FILLERS))).collect();
            for (slot, c) in chosen.into_iter().zip(motif) {
                words[slot] = synonym(c, rng.gen_range(0..SYNONYMS));
            }
            LabeledInstance {
                id: format!("w{i}"),
                label: if positive { Label::Positive } else { Label::Negative },
                path: PathSequence::new(words.into_iter().map(Token::word).collect()),
            }
        })
        .collect();
    let mut vocabulary: Vec<String> = (0..CLUSTERS)
        .flat_map(|c| (0..SYNONYMS).map(move |i| synonym(c, i)))
        .chain((0..WIDE_FILLERS).map(|i| format!("g{i}")))
        .collect();
    vocabulary.sort();
    let mut scores = WordScores::new();
    let mut mrng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    for (i, a) in vocabulary.iter().enumerate() {
        for b in &vocabulary[i + 1..] {
            let same = cluster_of(a).is_some() && cluster_of(a) == cluster_of(b);
            let v = if same {
                mrng.gen_range(0.7..1.0)
            } else {
                mrng.gen_range(0.0..0.4)
            };
            scores.insert(a, b, v);
        }
    }
    Synthetic {
        dataset: Dataset::new(instances).expect("unique ids"),
        vocabulary,
        informative: SubstitutionMatrix::build(scores).expect("scores lie in [0, 1]"),
    }
}
