use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cv::{cross_validate, fit, select_c, CvResult};
use super::folds::{derive_seed, FoldPlan};
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::kernels::{compute_gram, normalize_gram, AlignParams, LaKernel, PathKernel};
use crate::scalar::Scalar;
use crate::sequence::{Dataset, Label};
use crate::substitution::SubstitutionMatrix;
use crate::svm::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell<F> {
    pub params: AlignParams<F>,
    pub result: CvResult<F>,
}

impl<F: Scalar> SweepCell<F> {
    /// `beta=<b> gaps=<open>/<extend>`.
    pub fn name(&self) -> String {
        format!(
            "beta={} gaps={}/{}",
            self.params.beta, self.params.gap_open, self.params.gap_extend
        )
    }
}

/// Cross-validates the normalized LA kernel for every `(beta, (open,
/// extend))` combination, beta-major, all on the same fold plan.
#[allow(clippy::too_many_arguments)]
pub fn parameter_sweep<F: Scalar>(
    ds: &Dataset,
    subst: &SubstitutionMatrix<F>,
    beta_grid: &[F],
    gap_grid: &[(F, F)],
    plan: &FoldPlan,
    c_grid: &[F],
    cfg: &TrainConfig<F>,
) -> Result<Vec<SweepCell<F>>> {
    if beta_grid.is_empty() || gap_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "beta and gap grids must not be empty".into(),
        });
    }
    let cells: Vec<AlignParams<F>> = beta_grid
        .iter()
        .flat_map(|&b| gap_grid.iter().map(move |&(o, e)| (b, o, e)))
        .map(|(b, o, e)| AlignParams::new(b, o, e))
        .collect::<Result<_>>()?;
    let labels = ds.labels();
    cells
        .into_par_iter()
        .map(|params| {
            let kernel = LaKernel { subst, params };
            let g = normalize_gram(&compute_gram(ds, &kernel))?;
            let result = cross_validate(&g, &labels, plan, c_grid, cfg)?;
            Ok(SweepCell { params, result })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint<F> {
    pub size: usize,
    /// `None` when the prefix held a single class.
    pub c: Option<F>,
    pub metrics: Metrics,
}

/// Trains on growing seeded prefixes of `train` and scores each model on
/// the whole of `test`. The kernel is evaluated once over both sets.
#[allow(clippy::too_many_arguments)]
pub fn learning_curve<F: Scalar, K: PathKernel<F>>(
    train: &Dataset,
    test: &Dataset,
    kernel: &K,
    normalize: bool,
    sizes: &[usize],
    seed: u64,
    c_grid: &[F],
    cfg: &TrainConfig<F>,
) -> Result<Vec<CurvePoint<F>>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: "must be strictly ascending".into(),
        });
    }
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > train.len()) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            reason: format!("size {bad} outside 1..={}", train.len()),
        });
    }
    let all = train.concat(test)?;
    let mut g = compute_gram(&all, kernel);
    if normalize {
        g = normalize_gram(&g)?;
    }
    let labels = all.labels();
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_idx: Vec<usize> = (train.len()..all.len()).collect();
    let gold: Vec<bool> = test_idx.iter().map(|&t| labels[t] == Label::Positive).collect();
    sizes
        .par_iter()
        .map(|&size| {
            let mut idx = order[..size].to_vec();
            idx.sort_unstable();
            let single = idx.iter().all(|&i| labels[i] == labels[idx[0]]);
            let c = select_c(&g, &labels, &idx, c_grid, cfg, derive_seed(seed, size as u64))?;
            let model = fit(&g, &labels, &idx, c, cfg)?.model;
            let predicted = model.predict_rows(test_idx.iter().map(|&t| g.row_at(t, &idx)))?;
            Ok(CurvePoint {
                size,
                c: (!single).then_some(c),
                metrics: Metrics::from_predictions(&gold, &predicted),
            })
        })
        .collect()
}

/// TSV report: `cell <TAB> precision <TAB> recall <TAB> f_score`.
pub fn write_report<W: Write>(rows: &[(String, Metrics)], mut out: W) -> Result<()> {
    writeln!(out, "cell\tprecision\trecall\tf_score")?;
    for (cell, m) in rows {
        writeln!(out, "{cell}\t{}\t{}\t{}", m.precision, m.recall, m.f_score)?;
    }
    Ok(())
}
