//! Single-rooted concept taxonomy with occurrence counts and five relatedness
//! measures: Wu-Palmer (`wup`), Leacock-Chodorow (`lch`), Resnik (`res`),
//! Jiang-Conrath (`jcn`) and Lin (`lin`).
//!
//! Depth counts nodes (the root has depth 1), path lengths count edges,
//! logarithms are natural, and `p(c)` is the share of all occurrences that
//! fall on `c` or any of its descendants.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{parse_err, Error, Result};
use crate::scalar::Scalar;
use crate::substitution::WordScores;

#[derive(Debug, Clone)]
pub struct Taxonomy {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    direct: Vec<u64>,
    propagated: Vec<u64>,
    root: usize,
    max_depth: usize,
}

/// One taxonomy file row: concept, parent (`None` for the root), count.
pub type TaxonomyEntry = (String, Option<String>, u64);

impl Taxonomy {
    pub fn from_entries(entries: Vec<TaxonomyEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidTaxonomy("empty taxonomy".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (id, _, _)) in entries.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidTaxonomy(format!("duplicate concept {id}")));
            }
        }
        let mut parent = Vec::with_capacity(entries.len());
        let mut roots = Vec::new();
        for (i, (id, p, _)) in entries.iter().enumerate() {
            match p {
                None => {
                    roots.push(i);
                    parent.push(None);
                }
                Some(p) => {
                    let pi = *index
                        .get(p)
                        .ok_or_else(|| Error::InvalidTaxonomy(format!("parent {p} of {id} is not defined")))?;
                    parent.push(Some(pi));
                }
            }
        }
        let root = match roots[..] {
            [r] => r,
            _ => {
                return Err(Error::InvalidTaxonomy(format!(
                    "expected exactly one root, found {}",
                    roots.len()
                )))
            }
        };

        // depths by walking to the nearest resolved ancestor
        let n = entries.len();
        let mut depth = vec![0usize; n];
        depth[root] = 1;
        for start in 0..n {
            let mut chain = Vec::new();
            let mut cur = start;
            while depth[cur] == 0 {
                chain.push(cur);
                if chain.len() > n {
                    return Err(Error::InvalidTaxonomy(format!("cycle through {}", entries[start].0)));
                }
                cur = parent[cur].expect("non-root has a parent");
            }
            let mut d = depth[cur];
            for &c in chain.iter().rev() {
                d += 1;
                depth[c] = d;
            }
        }

        let direct: Vec<u64> = entries.iter().map(|e| e.2).collect();
        let mut propagated = direct.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(depth[i]));
        for &i in &order {
            if let Some(p) = parent[i] {
                propagated[p] += propagated[i];
            }
        }
        let max_depth = depth.iter().copied().max().unwrap_or(1);

        Ok(Self {
            ids: entries.into_iter().map(|e| e.0).collect(),
            index,
            parent,
            depth,
            direct,
            propagated,
            root,
            max_depth,
        })
    }

    /// Reads `concept <TAB> parent_or_- <TAB> count` lines.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, parent, count] = fields[..] else {
                return Err(parse_err(lineno, "expected concept<TAB>parent<TAB>count"));
            };
            if id.is_empty() {
                return Err(parse_err(lineno, "empty concept id"));
            }
            let count: u64 = count
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid count {count:?}")))?;
            let parent = (parent != "-").then(|| parent.to_string());
            entries.push((id.to_string(), parent, count));
        }
        Self::from_entries(entries)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, id) in self.ids.iter().enumerate() {
            let parent = self.parent[i].map_or("-", |p| self.ids[p].as_str());
            writeln!(out, "{id}\t{parent}\t{}", self.direct[i])?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> &str {
        &self.ids[self.root]
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    fn idx(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownConcept(id.to_string()))
    }

    pub fn depth(&self, id: &str) -> Result<usize> {
        Ok(self.depth[self.idx(id)?])
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn lcs_idx(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("deeper node has parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("deeper node has parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root");
            b = self.parent[b].expect("non-root");
        }
        a
    }

    /// Deepest concept subsuming both arguments (inclusive).
    pub fn lcs(&self, c1: &str, c2: &str) -> Result<&str> {
        let l = self.lcs_idx(self.idx(c1)?, self.idx(c2)?);
        Ok(&self.ids[l])
    }

    /// Shortest path length in edges.
    pub fn path_len(&self, c1: &str, c2: &str) -> Result<usize> {
        let (a, b) = (self.idx(c1)?, self.idx(c2)?);
        let l = self.lcs_idx(a, b);
        Ok(self.depth[a] + self.depth[b] - 2 * self.depth[l])
    }

    pub fn propagated_count(&self, id: &str) -> Result<u64> {
        Ok(self.propagated[self.idx(id)?])
    }

    pub fn probability(&self, id: &str) -> Result<f64> {
        let i = self.idx(id)?;
        Ok(self.propagated[i] as f64 / self.propagated[self.root] as f64)
    }

    fn ln_p<F: Scalar>(&self, i: usize) -> Result<F> {
        let total = self.propagated[self.root];
        if self.propagated[i] == 0 || total == 0 {
            return Err(Error::ZeroProbability(self.ids[i].clone()));
        }
        Ok((F::of(self.propagated[i] as f64) / F::of(total as f64)).ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaxonomyMeasure {
    Wup,
    Lch,
    Res,
    Jcn,
    Lin,
}

impl TaxonomyMeasure {
    pub const ALL: [TaxonomyMeasure; 5] = [Self::Wup, Self::Lch, Self::Res, Self::Jcn, Self::Lin];
}

impl FromStr for TaxonomyMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wup" => Ok(Self::Wup),
            "lch" => Ok(Self::Lch),
            "res" => Ok(Self::Res),
            "jcn" => Ok(Self::Jcn),
            "lin" => Ok(Self::Lin),
            other => Err(Error::InvalidParameter {
                name: "measure",
                reason: format!("unknown taxonomy measure {other:?}"),
            }),
        }
    }
}

impl fmt::Display for TaxonomyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Wup => "wup",
            Self::Lch => "lch",
            Self::Res => "res",
            Self::Jcn => "jcn",
            Self::Lin => "lin",
        })
    }
}

/// Raw relatedness score. `jcn` is returned exactly as the formula reads,
/// which behaves like a distance (0 for identical concepts).
pub fn taxonomy_similarity<F: Scalar>(measure: TaxonomyMeasure, t: &Taxonomy, c1: &str, c2: &str) -> Result<F> {
    let (a, b) = (t.idx(c1)?, t.idx(c2)?);
    let l = t.lcs_idx(a, b);
    let two = F::of(2.0);
    let dep = |i: usize| F::of(t.depth[i] as f64);
    Ok(match measure {
        TaxonomyMeasure::Wup => {
            let up_a = F::of((t.depth[a] - t.depth[l]) as f64);
            let up_b = F::of((t.depth[b] - t.depth[l]) as f64);
            two * dep(l) / (up_a + up_b + two * dep(l))
        }
        TaxonomyMeasure::Lch => {
            // identical concepts would give ln(0); treat them as one edge apart
            let len = (t.depth[a] + t.depth[b] - 2 * t.depth[l]).max(1);
            -(F::of(len as f64) / (two * F::of(t.max_depth as f64))).ln()
        }
        TaxonomyMeasure::Res => -t.ln_p::<F>(l)?,
        TaxonomyMeasure::Jcn => two * t.ln_p::<F>(l)? - (t.ln_p::<F>(a)? + t.ln_p::<F>(b)?),
        TaxonomyMeasure::Lin => {
            let num = two * t.ln_p::<F>(l)?;
            let den = t.ln_p::<F>(a)? + t.ln_p::<F>(b)?;
            if den == F::zero() {
                // both concepts are the root
                F::one()
            } else {
                num / den
            }
        }
    })
}

/// Squashes a population of raw scores onto `[0, 1]`: `wup` is kept as is,
/// `lch`, `res` and `lin` are divided by the population maximum, and `jcn` is
/// mapped to `1 - v / max`. Pairs of identical concepts always map to 1.
pub fn normalize_measure<F: Scalar>(measure: TaxonomyMeasure, population: &[(&str, &str, F)]) -> Result<Vec<F>> {
    if population.is_empty() {
        return Err(Error::InvalidParameter {
            name: "population",
            reason: "empty".into(),
        });
    }
    let max = population.iter().map(|p| p.2).fold(F::zero(), F::max);
    Ok(population
        .iter()
        .map(|&(c1, c2, v)| {
            if c1 == c2 || (measure != TaxonomyMeasure::Wup && max <= F::zero()) {
                return F::one();
            }
            let s = match measure {
                TaxonomyMeasure::Wup => v,
                TaxonomyMeasure::Jcn => F::one() - v / max,
                _ => v / max,
            };
            s.max(F::zero()).min(F::one())
        })
        .collect())
}

/// Normalized measure scores for every unordered pair of annotated words.
/// `words` holds `(word key, concept id)`.
pub fn taxonomy_word_scores<F: Scalar>(
    t: &Taxonomy,
    words: &[(String, String)],
    measure: TaxonomyMeasure,
) -> Result<WordScores<F>> {
    let mut raw = Vec::new();
    for i in 0..words.len() {
        for j in i..words.len() {
            let (c1, c2) = (words[i].1.as_str(), words[j].1.as_str());
            raw.push((i, j, c1, c2, taxonomy_similarity::<F>(measure, t, c1, c2)?));
        }
    }
    let mut table = WordScores::new();
    if raw.is_empty() {
        return Ok(table);
    }
    let population: Vec<(&str, &str, F)> = raw.iter().map(|r| (r.2, r.3, r.4)).collect();
    let scores = normalize_measure(measure, &population)?;
    for (r, s) in raw.iter().zip(scores) {
        table.insert(&words[r.0].0, &words[r.1].0, s);
    }
    Ok(table)
}
