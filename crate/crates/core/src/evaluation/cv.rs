use rayon::prelude::*;

use super::folds::{derive_seed, kfold_split, FoldPlan};
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::scalar::Scalar;
use crate::sequence::Label;
use crate::svm::{train, DecisionFunction, TrainConfig};

const INNER_FOLDS: usize = 3;

/// `2^-6, 2^-4, ..., 2^12`.
pub fn default_c_grid<F: Scalar>() -> Vec<F> {
    (0..10).map(|i| F::of(2f64.powi(-6 + 2 * i))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult<F> {
    pub fold: usize,
    /// Selected C; `None` when the training portion had a single class and
    /// the constant classifier was used.
    pub c: Option<F>,
    pub metrics: Metrics,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult<F> {
    pub folds: Vec<FoldResult<F>>,
    /// Micro-average: pooled counts over all folds.
    pub aggregate: Metrics,
}

impl<F> CvResult<F> {
    pub fn fold_f_scores(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.f_score).collect()
    }

    pub fn single_class_folds(&self) -> Vec<usize> {
        self.folds.iter().filter(|f| f.c.is_none()).map(|f| f.fold).collect()
    }
}

pub(crate) enum Fitted<F> {
    Svm(DecisionFunction<F>),
    Constant(Label),
}

pub(crate) struct Fit<F> {
    pub model: Fitted<F>,
    pub converged: bool,
}

pub(crate) fn fit<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    idx: &[usize],
    c: F,
    cfg: &TrainConfig<F>,
) -> Result<Fit<F>> {
    let sub_labels: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
    let first = sub_labels.first().copied().unwrap_or(Label::Negative);
    if sub_labels.iter().all(|&l| l == first) {
        return Ok(Fit {
            model: Fitted::Constant(first),
            converged: true,
        });
    }
    let model = train(&g.select(idx), &sub_labels, &TrainConfig { c, ..*cfg })?;
    Ok(Fit {
        converged: model.converged,
        model: Fitted::Svm(model.decision_function()),
    })
}

impl<F: Scalar> Fitted<F> {
    /// Positive predictions for `rows`, given kernel rows against the
    /// training instances.
    pub(crate) fn predict_rows<'r>(&self, rows: impl Iterator<Item = Vec<F>> + 'r) -> Result<Vec<bool>> {
        match self {
            Fitted::Constant(l) => Ok(rows.map(|_| *l == Label::Positive).collect()),
            Fitted::Svm(f) => rows.map(|r| Ok(f.predict(&r)?.0 == Label::Positive)).collect(),
        }
    }
}

fn evaluate<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    train_idx: &[usize],
    test_idx: &[usize],
    c: F,
    cfg: &TrainConfig<F>,
) -> Result<(Metrics, bool)> {
    let fit = fit(g, labels, train_idx, c, cfg)?;
    let predicted = fit
        .model
        .predict_rows(test_idx.iter().map(|&t| g.row_at(t, train_idx)))?;
    let gold: Vec<bool> = test_idx.iter().map(|&t| labels[t] == Label::Positive).collect();
    Ok((Metrics::from_predictions(&gold, &predicted), fit.converged))
}

fn check_grid<F: Scalar>(grid: &[F]) -> Result<Vec<F>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "c_grid",
            reason: "must not be empty".into(),
        });
    }
    if let Some(bad) = grid.iter().find(|c| !(**c > F::zero() && c.is_finite())) {
        return Err(Error::InvalidParameter {
            name: "c_grid",
            reason: format!("C must be positive, got {bad}"),
        });
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    sorted.dedup();
    Ok(sorted)
}

/// Picks C by inner 3-fold cross-validation on the instances `idx`, pooling
/// counts over inner folds and maximizing F; ties go to the smaller C. Inner
/// folds are drawn over the instances sorted by id, so the choice does not
/// depend on instance order.
pub fn select_c<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    idx: &[usize],
    grid: &[F],
    cfg: &TrainConfig<F>,
    seed: u64,
) -> Result<F> {
    let grid = check_grid(grid)?;
    if grid.len() == 1 || idx.len() < 2 {
        return Ok(grid[0]);
    }
    let mut by_id = idx.to_vec();
    by_id.sort_by(|&a, &b| g.ids()[a].cmp(&g.ids()[b]));
    let plan = kfold_split(by_id.len(), INNER_FOLDS.min(by_id.len()), seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..plan.k)
        .map(|f| {
            let pick = |v: Vec<usize>| v.into_iter().map(|p| by_id[p]).collect::<Vec<_>>();
            (pick(plan.train_indices(f)), pick(plan.test_indices(f)))
        })
        .collect();
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &c in &grid {
        let mut pooled = Metrics::default();
        for (tr, te) in &splits {
            pooled = pooled + evaluate(g, labels, tr, te, c, cfg)?.0;
        }
        if pooled.f_score > best.1 {
            best = (c, pooled.f_score);
        }
    }
    Ok(best.0)
}

/// k-fold cross-validation over a precomputed Gram. Folds run in parallel;
/// each selects its own C on its training portion.
pub fn cross_validate<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    plan: &FoldPlan,
    c_grid: &[F],
    cfg: &TrainConfig<F>,
) -> Result<CvResult<F>> {
    for len in [labels.len(), plan.len()] {
        if len != g.len() {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                actual: len,
            });
        }
    }
    check_grid(c_grid)?;
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let (tr, te) = (plan.train_indices(fold), plan.test_indices(fold));
            let single = tr.iter().all(|&i| labels[i] == labels[tr[0]]);
            let c = select_c(g, labels, &tr, c_grid, cfg, derive_seed(plan.seed, fold as u64))?;
            let (metrics, converged) = evaluate(g, labels, &tr, &te, c, cfg)?;
            Ok(FoldResult {
                fold,
                c: (!single).then_some(c),
                metrics,
                converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = folds.iter().map(|f| f.metrics).sum();
    Ok(CvResult { folds, aggregate })
}
