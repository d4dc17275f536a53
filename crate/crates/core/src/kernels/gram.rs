//! Gram matrices over datasets: parallel construction, cosine normalization,
//! spectrum diagnostics and the text file format.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{parse_err, Error, Result};
use crate::format::fmt_real;
use crate::kernels::baselines::{gap_weighted_kernel, shortest_path_kernel, SubsequenceParams};
use crate::kernels::local_alignment::{la_from_factors, AlignParams};
use crate::scalar::Scalar;
use crate::sequence::{Dataset, PathSequence, Token};
use crate::substitution::SubstitutionMatrix;

const GRAM_HEADER: &str = "#gram v1";

/// Dense symmetric kernel matrix in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<F> {
    ids: Vec<String>,
    values: Vec<F>,
    normalized: bool,
}

impl<F: Scalar> GramMatrix<F> {
    /// Builds from row-major values; `values.len()` must be `ids.len()^2`.
    pub fn from_values(ids: Vec<String>, values: Vec<F>, normalized: bool) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        Ok(Self {
            ids,
            values,
            normalized,
        })
    }

    /// Builds from nested rows with generated ids `0..n`.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::from_values(ids, rows.concat(), false)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.len()).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Principal submatrix over `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> GramMatrix<F> {
        let values = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| self.get(i, j)))
            .collect();
        GramMatrix {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            values,
            normalized: self.normalized,
        }
    }

    /// Kernel values between row `i` and each of `columns`.
    pub fn row_at(&self, i: usize, columns: &[usize]) -> Vec<F> {
        columns.iter().map(|&j| self.get(i, j)).collect()
    }

    pub fn scaled(&self, factor: F) -> GramMatrix<F> {
        GramMatrix {
            ids: self.ids.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
            normalized: false,
        }
    }

    /// Writes the header, `n`, the ids, then the lower triangle one row per
    /// line.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{GRAM_HEADER} normalized={}", u8::from(self.normalized))?;
        writeln!(out, "{}", self.len())?;
        for id in &self.ids {
            writeln!(out, "{id}")?;
        }
        for i in 0..self.len() {
            let row: Vec<String> = (0..=i).map(|j| fmt_real(self.get(i, j))).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?.trim_end_matches('\r').to_string())),
                None => Err(parse_err(0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (ln, header) = next("header")?;
        let normalized = match header.strip_prefix(GRAM_HEADER).map(str::trim) {
            Some("normalized=1") => true,
            Some("normalized=0") => false,
            _ => return Err(parse_err(ln, format!("bad gram header {header:?}"))),
        };
        let (ln, count) = next("size")?;
        let n: usize = count
            .trim()
            .parse()
            .map_err(|_| parse_err(ln, format!("invalid size {count:?}")))?;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(next("instance id")?.1);
        }
        let mut values = vec![F::zero(); n * n];
        for i in 0..n {
            let (ln, row) = next("matrix row")?;
            let parsed: Vec<F> = row
                .split_whitespace()
                .map(|v| {
                    v.parse::<F>()
                        .map_err(|_| parse_err(ln, format!("invalid value {v:?}")))
                })
                .collect::<Result<_>>()?;
            if parsed.len() != i + 1 {
                return Err(parse_err(
                    ln,
                    format!("expected {} values, got {}", i + 1, parsed.len()),
                ));
            }
            for (j, v) in parsed.into_iter().enumerate() {
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        GramMatrix::from_values(ids, values, normalized)
    }
}

/// A kernel over path sequences, evaluated through a per-dataset prepared
/// form so repeated evaluations avoid string handling.
pub trait PathKernel<F: Scalar>: Sync {
    type Prepared: Sync;

    fn prepare(&self, paths: &[&PathSequence]) -> Self::Prepared;

    fn eval(&self, prepared: &Self::Prepared, i: usize, j: usize) -> F;
}

/// Token interning shared by the prepared forms.
#[derive(Debug, Default)]
struct Interner {
    ids: HashMap<String, u32>,
    tokens: Vec<Token>,
}

impl Interner {
    fn intern(&mut self, t: &Token) -> u32 {
        let key = t.key();
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.ids.insert(key, id);
        self.tokens.push(t.clone());
        id
    }

    fn encode(&mut self, paths: &[&PathSequence]) -> Vec<Vec<u32>> {
        paths
            .iter()
            .map(|p| p.tokens.iter().map(|t| self.intern(t)).collect())
            .collect()
    }
}

/// Local alignment kernel backed by a substitution matrix.
#[derive(Debug, Clone)]
pub struct LaKernel<'a, F> {
    pub subst: &'a SubstitutionMatrix<F>,
    pub params: AlignParams<F>,
}

/// `exp(beta * d')` for interned token pairs.
pub enum PairFactors<F> {
    Dense { size: usize, table: Vec<F> },
    Sparse { diag: F, nonzero: HashMap<(u32, u32), F> },
}

const DENSE_LIMIT: usize = 2048;

impl<F: Scalar> PairFactors<F> {
    fn factor(&self, a: u32, b: u32) -> F {
        match self {
            PairFactors::Dense { size, table } => table[a as usize * size + b as usize],
            PairFactors::Sparse { diag, nonzero } => {
                if a == b {
                    *diag
                } else {
                    let k = if a < b { (a, b) } else { (b, a) };
                    nonzero.get(&k).copied().unwrap_or_else(F::one)
                }
            }
        }
    }
}

pub struct PreparedLa<F> {
    seqs: Vec<Vec<u32>>,
    factors: PairFactors<F>,
}

impl<F: Scalar> PathKernel<F> for LaKernel<'_, F> {
    type Prepared = PreparedLa<F>;

    fn prepare(&self, paths: &[&PathSequence]) -> PreparedLa<F> {
        let mut interner = Interner::default();
        let seqs = interner.encode(paths);
        let tokens = &interner.tokens;
        let v = tokens.len();
        let beta = self.params.beta;
        let factors = if v <= DENSE_LIMIT {
            let mut table = vec![F::one(); v * v];
            for a in 0..v {
                for b in a..v {
                    let f = (beta * self.subst.lookup(&tokens[a], &tokens[b])).exp();
                    table[a * v + b] = f;
                    table[b * v + a] = f;
                }
            }
            PairFactors::Dense { size: v, table }
        } else {
            let keys = &interner.ids;
            let mut nonzero = HashMap::new();
            for (a, b, s) in self.subst.word_scores().iter() {
                if let (Some(&ia), Some(&ib)) = (keys.get(a), keys.get(b)) {
                    if s > F::zero() {
                        let k = if ia < ib { (ia, ib) } else { (ib, ia) };
                        nonzero.insert(k, (beta * s).exp());
                    }
                }
            }
            PairFactors::Sparse {
                diag: beta.exp(),
                nonzero,
            }
        };
        PreparedLa { seqs, factors }
    }

    fn eval(&self, p: &PreparedLa<F>, i: usize, j: usize) -> F {
        let (x, y) = (&p.seqs[i], &p.seqs[j]);
        la_from_factors(x.len(), y.len(), |a, b| p.factors.factor(x[a], y[b]), &self.params)
    }
}

/// Shortest-path product kernel on per-token feature sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShortestPathKernel;

impl<F: Scalar> PathKernel<F> for ShortestPathKernel {
    type Prepared = Vec<Vec<Vec<u32>>>;

    fn prepare(&self, paths: &[&PathSequence]) -> Self::Prepared {
        let mut ids: HashMap<String, u32> = HashMap::new();
        paths
            .iter()
            .map(|p| {
                (0..p.len())
                    .map(|i| {
                        let mut set: Vec<u32> = p
                            .features_at(i)
                            .into_iter()
                            .map(|f| {
                                let next = ids.len() as u32;
                                *ids.entry(f).or_insert(next)
                            })
                            .collect();
                        set.sort_unstable();
                        set.dedup();
                        set
                    })
                    .collect()
            })
            .collect()
    }

    fn eval(&self, p: &Self::Prepared, i: usize, j: usize) -> F {
        shortest_path_kernel(&p[i], &p[j])
    }
}

/// Gap-weighted subsequence kernel over tokens.
#[derive(Debug, Clone, Copy)]
pub struct GapWeightedKernel<F> {
    pub params: SubsequenceParams<F>,
}

impl<F: Scalar> PathKernel<F> for GapWeightedKernel<F> {
    type Prepared = Vec<Vec<u32>>;

    fn prepare(&self, paths: &[&PathSequence]) -> Self::Prepared {
        Interner::default().encode(paths)
    }

    fn eval(&self, p: &Self::Prepared, i: usize, j: usize) -> F {
        gap_weighted_kernel(&p[i], &p[j], &self.params)
    }
}

fn assemble<F: Scalar>(n: usize, rows: Vec<Vec<F>>) -> Vec<F> {
    let mut values = vec![F::zero(); n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    values
}

/// Evaluates the upper triangle in parallel and mirrors it. Every entry is
/// computed exactly once, so the result does not depend on thread count.
pub fn compute_gram<F: Scalar, K: PathKernel<F>>(ds: &Dataset, kernel: &K) -> GramMatrix<F> {
    let paths = ds.paths();
    let prepared = kernel.prepare(&paths);
    let n = paths.len();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.eval(&prepared, i, j)).collect())
        .collect();
    GramMatrix {
        ids: ds.ids(),
        values: assemble(n, rows),
        normalized: false,
    }
}

/// Sequential double loop over the upper triangle; reference for
/// [`compute_gram`].
pub fn compute_gram_sequential<F: Scalar, K: PathKernel<F>>(ds: &Dataset, kernel: &K) -> GramMatrix<F> {
    let paths = ds.paths();
    let prepared = kernel.prepare(&paths);
    let n = paths.len();
    let mut values = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&prepared, i, j);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    GramMatrix {
        ids: ds.ids(),
        values,
        normalized: false,
    }
}

/// Kernel rows between each `test` instance and every `train` instance,
/// plus the self-kernels of both sides (needed to normalize the rows).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossKernel<F> {
    pub rows: Vec<Vec<F>>,
    pub train_diag: Vec<F>,
    pub test_diag: Vec<F>,
}

impl<F: Scalar> CrossKernel<F> {
    /// Normalizes every row with the self-kernels; errors on a non-positive
    /// self-kernel.
    pub fn normalized(&self, test_ids: &[String], train_ids: &[String]) -> Result<Vec<Vec<F>>> {
        for (id, &d) in train_ids
            .iter()
            .zip(&self.train_diag)
            .chain(test_ids.iter().zip(&self.test_diag))
        {
            if !(d > F::zero()) {
                return Err(Error::NonPositiveDiagonal {
                    id: id.clone(),
                    value: d.as_f64(),
                });
            }
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.test_diag)
            .map(|(row, &dt)| {
                row.iter()
                    .zip(&self.train_diag)
                    .map(|(&k, &dr)| k / (dt * dr).sqrt())
                    .collect()
            })
            .collect())
    }
}

pub fn cross_kernel<F: Scalar, K: PathKernel<F>>(train: &Dataset, test: &Dataset, kernel: &K) -> CrossKernel<F> {
    let mut paths = train.paths();
    paths.extend(test.paths());
    let prepared = kernel.prepare(&paths);
    let nt = train.len();
    let rows = (0..test.len())
        .into_par_iter()
        .map(|t| (0..nt).map(|r| kernel.eval(&prepared, r, nt + t)).collect())
        .collect();
    let train_diag = (0..nt).into_par_iter().map(|r| kernel.eval(&prepared, r, r)).collect();
    let test_diag = (0..test.len())
        .into_par_iter()
        .map(|t| kernel.eval(&prepared, nt + t, nt + t))
        .collect();
    CrossKernel {
        rows,
        train_diag,
        test_diag,
    }
}

/// `k(x, y) / sqrt(k(x, x) k(y, y))`, with the diagonal set to exactly 1.
pub fn normalize_gram<F: Scalar>(g: &GramMatrix<F>) -> Result<GramMatrix<F>> {
    let diag = g.diagonal();
    for (id, &d) in g.ids.iter().zip(&diag) {
        if !(d > F::zero()) {
            return Err(Error::NonPositiveDiagonal {
                id: id.clone(),
                value: d.as_f64(),
            });
        }
    }
    let n = g.len();
    let mut values = g.values.clone();
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                F::one()
            } else {
                g.get(i, j) / (diag[i] * diag[j]).sqrt()
            };
        }
    }
    Ok(GramMatrix {
        ids: g.ids.clone(),
        values,
        normalized: true,
    })
}

pub const DEFAULT_EIGEN_BOUND: usize = 2000;

/// Smallest eigenvalue of the (symmetric) matrix, computed in `f64`.
pub fn min_eigenvalue<F: Scalar>(g: &GramMatrix<F>, max_size: usize) -> Result<f64> {
    let n = g.len();
    if n > max_size {
        return Err(Error::InvalidParameter {
            name: "gram size",
            reason: format!("{n} exceeds the dense eigensolver bound {max_size}"),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "gram size",
            reason: "empty matrix".into(),
        });
    }
    let m = DMatrix::from_fn(n, n, |i, j| g.get(i, j).as_f64());
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
