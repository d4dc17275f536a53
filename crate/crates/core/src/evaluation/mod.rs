//! Experimental protocol: fold plans, metrics, cross-validation with nested
//! C selection, paired t-tests, parameter sweeps and learning curves.

mod cv;
mod folds;
mod metrics;
mod protocols;
mod ttest;

pub use cv::{cross_validate, default_c_grid, select_c, CvResult, FoldResult};
pub use folds::{derive_seed, kfold_split, stratified_kfold_split, FoldPlan};
pub use metrics::Metrics;
pub use protocols::{learning_curve, parameter_sweep, write_report, CurvePoint, SweepCell};
pub use ttest::{paired_ttest, TTest};
