//! Comparison kernels: the shortest-path product kernel and the
//! gap-weighted subsequence kernel over token sequences.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn shared<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter()
        .enumerate()
        .filter(|(i, f)| !a[..*i].contains(f) && b.contains(f))
        .count()
}

/// Product over positions of the number of shared features; 0 when the
/// paths differ in length.
pub fn shortest_path_kernel<T, S, F>(x: &[S], y: &[S]) -> F
where
    T: PartialEq,
    S: AsRef<[T]>,
    F: Scalar,
{
    if x.len() != y.len() {
        return F::zero();
    }
    x.iter()
        .zip(y)
        .map(|(a, b)| F::of(shared(a.as_ref(), b.as_ref()) as f64))
        .fold(F::one(), |acc, v| acc * v)
}

/// Subsequence length and decay for [`gap_weighted_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsequenceParams<F> {
    pub length: usize,
    pub lambda: F,
}

impl<F: Scalar> Default for SubsequenceParams<F> {
    fn default() -> Self {
        Self {
            length: 4,
            lambda: F::of(0.5),
        }
    }
}

impl<F: Scalar> SubsequenceParams<F> {
    pub fn new(length: usize, lambda: F) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: "must be at least 1".into(),
            });
        }
        if !(lambda > F::zero() && lambda <= F::one()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must lie in (0, 1], got {lambda}"),
            });
        }
        Ok(Self { length, lambda })
    }
}

/// Inner product of length-`n` gapped subsequence features, each occurrence
/// weighted by `lambda^span` in both sequences. `O(n |x| |y|)`.
pub fn gap_weighted_kernel<A: PartialEq, F: Scalar>(x: &[A], y: &[A], params: &SubsequenceParams<F>) -> F {
    let n = params.length;
    let lambda = params.lambda;
    let (p, q) = (x.len(), y.len());
    if p < n || q < n {
        return F::zero();
    }
    let lambda2 = lambda * lambda;
    let cols = q + 1;
    // prefix kernel K'_{l}(x[..i], y[..j]) for the current l
    let mut kp = vec![F::one(); (p + 1) * cols];
    for _ in 1..n {
        let mut next = vec![F::zero(); (p + 1) * cols];
        for i in 1..=p {
            let mut kpp = F::zero();
            for j in 1..=q {
                kpp = lambda * kpp;
                if x[i - 1] == y[j - 1] {
                    kpp = kpp + lambda2 * kp[(i - 1) * cols + j - 1];
                }
                next[i * cols + j] = lambda * next[(i - 1) * cols + j] + kpp;
            }
        }
        kp = next;
    }
    let mut k = F::zero();
    for i in 1..=p {
        for j in 1..=q {
            if x[i - 1] == y[j - 1] {
                k = k + lambda2 * kp[(i - 1) * cols + j - 1];
            }
        }
    }
    k
}
