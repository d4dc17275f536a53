//! Tokens, dependency-path sequences and labeled datasets, plus the
//! line-oriented instance file format.
//!
//! One instance per line:
//!
//! ```text
//! id <TAB> label <TAB> token token ... [<TAB> feats feats ...]
//! ```
//!
//! `label` is `0` or `1`. A token written `<name` is an edge traversed up
//! toward the governor, `>name` an edge traversed down; anything else is a
//! word, optionally annotated with a taxonomy concept as `word%concept`.
//! The optional fourth field carries one `|`-separated feature group per
//! token for the shortest-path kernel. Lines starting with `#` are comments.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{parse_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Toward the governor (`<`).
    Up,
    /// Toward the dependent (`>`).
    Down,
}

impl Direction {
    fn marker(self) -> char {
        match self {
            Direction::Up => '<',
            Direction::Down => '>',
        }
    }
}

/// One element of a dependency path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Word { surface: String, concept: Option<String> },
    Edge { name: String, direction: Direction },
}

fn check_atom(text: &str, what: &str, full: &str) -> Result<()> {
    if text.is_empty() {
        return Err(Error::InvalidToken {
            token: full.to_string(),
            reason: format!("empty {what}"),
        });
    }
    if text.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken {
            token: full.to_string(),
            reason: format!("{what} contains whitespace"),
        });
    }
    Ok(())
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Token::Word {
            surface: surface.into(),
            concept: None,
        }
    }

    pub fn annotated(surface: impl Into<String>, concept: impl Into<String>) -> Self {
        Token::Word {
            surface: surface.into(),
            concept: Some(concept.into()),
        }
    }

    pub fn edge(name: impl Into<String>, direction: Direction) -> Self {
        Token::Edge {
            name: name.into(),
            direction,
        }
    }

    pub fn is_word(&self) -> bool {
        matches!(self, Token::Word { .. })
    }

    pub fn surface(&self) -> &str {
        match self {
            Token::Word { surface, .. } => surface,
            Token::Edge { name, .. } => name,
        }
    }

    pub fn concept(&self) -> Option<&str> {
        match self {
            Token::Word { concept, .. } => concept.as_deref(),
            Token::Edge { .. } => None,
        }
    }

    pub fn direction(&self) -> Option<Direction> {
        match self {
            Token::Edge { direction, .. } => Some(*direction),
            Token::Word { .. } => None,
        }
    }

    /// Identity string used for exact matching and substitution lookups: the
    /// encoded form of the token.
    pub fn key(&self) -> String {
        self.to_string()
    }

    fn validate(&self) -> Result<()> {
        let full = self.to_string();
        match self {
            Token::Word { surface, concept } => {
                check_atom(surface, "surface", &full)?;
                if surface.starts_with(['<', '>']) || surface.contains('%') {
                    return Err(Error::InvalidToken {
                        token: full,
                        reason: "word surface may not start with '<'/'>' or contain '%'".into(),
                    });
                }
                if let Some(c) = concept {
                    check_atom(c, "concept", &full)?;
                }
            }
            Token::Edge { name, .. } => check_atom(name, "edge name", &full)?,
        }
        Ok(())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word {
                surface,
                concept: Some(c),
            } => write!(f, "{surface}%{c}"),
            Token::Word { surface, .. } => f.write_str(surface),
            Token::Edge { name, direction } => write!(f, "{}{name}", direction.marker()),
        }
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = if let Some(name) = s.strip_prefix('<') {
            Token::edge(name, Direction::Up)
        } else if let Some(name) = s.strip_prefix('>') {
            Token::edge(name, Direction::Down)
        } else {
            match s.split_once('%') {
                Some((surface, concept)) => Token::annotated(surface, concept),
                None => Token::word(s),
            }
        };
        token.validate()?;
        Ok(token)
    }
}

/// Feature set attached to a single path position.
pub type FeatureSet = Vec<String>;

/// An ordered token sequence, optionally with per-token feature sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathSequence {
    pub tokens: Vec<Token>,
    pub features: Option<Vec<FeatureSet>>,
}

impl PathSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens, features: None }
    }

    pub fn with_features(tokens: Vec<Token>, features: Vec<FeatureSet>) -> Result<Self> {
        if features.len() != tokens.len() {
            return Err(Error::DimensionMismatch {
                expected: tokens.len(),
                actual: features.len(),
            });
        }
        Ok(Self {
            tokens,
            features: Some(features),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Feature set at `i`; falls back to `{key}` when no features were given.
    pub fn features_at(&self, i: usize) -> Vec<String> {
        match &self.features {
            Some(f) => f[i].clone(),
            None => vec![self.tokens[i].key()],
        }
    }
}

impl FromStr for PathSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = s.split_whitespace().map(Token::from_str).collect::<Result<Vec<_>>>()?;
        Ok(PathSequence::new(tokens))
    }
}

impl fmt::Display for PathSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` / `-1` as used by the SVM.
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    fn file_code(self) -> char {
        match self {
            Label::Positive => '1',
            Label::Negative => '0',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInstance {
    pub id: String,
    pub label: Label,
    pub path: PathSequence,
}

/// Instances in file order. Immutable once parsed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    instances: Vec<LabeledInstance>,
}

impl Dataset {
    pub fn new(instances: Vec<LabeledInstance>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, inst) in instances.iter().enumerate() {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId {
                    line: i + 1,
                    id: inst.id.clone(),
                });
            }
        }
        Ok(Self { instances })
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledInstance> {
        self.instances.iter()
    }

    pub fn positive_count(&self) -> usize {
        self.instances.iter().filter(|i| i.label == Label::Positive).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.id.clone()).collect()
    }

    pub fn paths(&self) -> Vec<&PathSequence> {
        self.instances.iter().map(|i| &i.path).collect()
    }

    /// Distinct word tokens (by key), sorted.
    pub fn word_vocabulary(&self) -> Vec<Token> {
        let mut words: Vec<Token> = self
            .instances
            .iter()
            .flat_map(|i| i.path.tokens.iter())
            .filter(|t| t.is_word())
            .cloned()
            .collect();
        words.sort();
        words.dedup();
        words
    }

    /// Concatenation of two datasets; ids must stay unique.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut all = self.instances.clone();
        all.extend(other.instances.iter().cloned());
        Dataset::new(all)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a LabeledInstance;
    type IntoIter = std::slice::Iter<'a, LabeledInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<LabeledInstance> {
    let mut fields = line.split('\t');
    let id = fields.next().unwrap_or_default();
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(parse_err(lineno, format!("invalid id {id:?}")));
    }
    let label = match fields.next() {
        Some("1") => Label::Positive,
        Some("0") => Label::Negative,
        Some(other) => return Err(parse_err(lineno, format!("unknown label {other:?}"))),
        None => return Err(parse_err(lineno, "missing label field")),
    };
    let path: PathSequence = fields
        .next()
        .unwrap_or_default()
        .parse()
        .map_err(|e: Error| parse_err(lineno, e.to_string()))?;
    let path = match fields.next() {
        None => path,
        Some(feats) => {
            let groups: Vec<FeatureSet> = feats
                .split_whitespace()
                .map(|g| g.split('|').filter(|f| !f.is_empty()).map(String::from).collect())
                .collect();
            PathSequence::with_features(path.tokens, groups)
                .map_err(|_| parse_err(lineno, "feature group count does not match token count"))?
        }
    };
    if fields.next().is_some() {
        return Err(parse_err(lineno, "too many fields"));
    }
    Ok(LabeledInstance {
        id: id.to_string(),
        label,
        path,
    })
}

/// Parses an instance stream. Blank lines and `#` comments are skipped.
pub fn parse_instances<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let inst = parse_line(trimmed, lineno)?;
        if !seen.insert(inst.id.clone()) {
            return Err(Error::DuplicateId {
                line: lineno,
                id: inst.id,
            });
        }
        instances.push(inst);
    }
    Ok(Dataset { instances })
}

pub fn parse_instances_str(text: &str) -> Result<Dataset> {
    parse_instances(text.as_bytes())
}

pub fn write_instances<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for inst in ds {
        write!(out, "{}\t{}\t{}", inst.id, inst.label.file_code(), inst.path)?;
        if let Some(features) = &inst.path.features {
            let groups: Vec<String> = features.iter().map(|g| g.join("|")).collect();
            write!(out, "\t{}", groups.join(" "))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Replaces the surfaces of the addressed word tokens with `label_text`
/// (e.g. `PROTEIN`), dropping their concept annotations.
///
/// `positions[i]` lists token indices for the i-th instance.
pub fn relabel_arguments(ds: &Dataset, positions: &[Vec<usize>], label_text: &str) -> Result<Dataset> {
    if positions.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.len(),
            actual: positions.len(),
        });
    }
    let replacement = Token::word(label_text);
    replacement.validate()?;
    let mut instances = Vec::with_capacity(ds.len());
    for (inst, idxs) in ds.iter().zip(positions) {
        let mut inst = inst.clone();
        for &p in idxs {
            let tok = inst.path.tokens.get_mut(p).ok_or_else(|| Error::InvalidPosition {
                instance: inst.id.clone(),
                position: p,
                reason: "is out of range".into(),
            })?;
            if !tok.is_word() {
                return Err(Error::InvalidPosition {
                    instance: inst.id.clone(),
                    position: p,
                    reason: format!("addresses edge token {tok}"),
                });
            }
            *tok = replacement.clone();
        }
        instances.push(inst);
    }
    Ok(Dataset { instances })
}
