//! Sequence kernels and Gram matrices.

pub mod alignment;
pub mod baselines;
pub mod gram;
pub mod local_alignment;

pub use alignment::{match_mismatch, nw_score, nw_table, sw_score, sw_score_affine, sw_table, AlignmentTable};
pub use baselines::{gap_weighted_kernel, shortest_path_kernel, SubsequenceParams};
pub use gram::{
    compute_gram, compute_gram_sequential, cross_kernel, min_eigenvalue, normalize_gram, CrossKernel,
    GapWeightedKernel, GramMatrix, LaKernel, PathKernel, ShortestPathKernel, DEFAULT_EIGEN_BOUND,
};
pub use local_alignment::{la_kernel, la_kernel_bruteforce, AlignParams};
