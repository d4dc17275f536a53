//! Smith-Waterman and Needleman-Wunsch alignment scores with a uniform gap
//! cost, generic over the score type so integer examples stay exact.

use num_traits::Num;

use crate::scalar::Scalar;

/// Filled dynamic-programming table, `(|x|+1) x (|y|+1)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTable<T> {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<T>,
}

impl<T: Copy> AlignmentTable<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.cells[i * self.cols + j]
    }

    /// Row `i` without its border cell.
    pub fn row(&self, i: usize) -> &[T] {
        &self.cells[i * self.cols + 1..(i + 1) * self.cols]
    }
}

/// Substitution function scoring `matched` for equal elements and
/// `mismatched` otherwise.
pub fn match_mismatch<A: PartialEq, T: Copy>(matched: T, mismatched: T) -> impl Fn(&A, &A) -> T {
    move |a, b| if a == b { matched } else { mismatched }
}

fn max2<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

fn fill<A, T, S>(x: &[A], y: &[A], subst: S, gap: T, local: bool) -> AlignmentTable<T>
where
    T: Num + Copy + PartialOrd,
    S: Fn(&A, &A) -> T,
{
    let cols = y.len() + 1;
    let mut cells = vec![T::zero(); (x.len() + 1) * cols];
    if !local {
        for j in 1..cols {
            cells[j] = cells[j - 1] - gap;
        }
        for i in 1..=x.len() {
            cells[i * cols] = cells[(i - 1) * cols] - gap;
        }
    }
    for i in 1..=x.len() {
        for j in 1..=y.len() {
            let diag = cells[(i - 1) * cols + j - 1] + subst(&x[i - 1], &y[j - 1]);
            let up = cells[(i - 1) * cols + j] - gap;
            let left = cells[i * cols + j - 1] - gap;
            let mut best = max2(diag, max2(up, left));
            if local {
                best = max2(best, T::zero());
            }
            cells[i * cols + j] = best;
        }
    }
    AlignmentTable {
        rows: x.len() + 1,
        cols,
        cells,
    }
}

/// Smith-Waterman table with zero first row and column.
pub fn sw_table<A, T, S>(x: &[A], y: &[A], subst: S, gap: T) -> AlignmentTable<T>
where
    T: Num + Copy + PartialOrd,
    S: Fn(&A, &A) -> T,
{
    fill(x, y, subst, gap, true)
}

/// Needleman-Wunsch table with gap-penalized borders (`-i*G`, `-j*G`).
pub fn nw_table<A, T, S>(x: &[A], y: &[A], subst: S, gap: T) -> AlignmentTable<T>
where
    T: Num + Copy + PartialOrd,
    S: Fn(&A, &A) -> T,
{
    fill(x, y, subst, gap, false)
}

/// Best local alignment score: the largest cell of the SW table (never
/// negative).
pub fn sw_score<A, T, S>(x: &[A], y: &[A], subst: S, gap: T) -> T
where
    T: Num + Copy + PartialOrd,
    S: Fn(&A, &A) -> T,
{
    sw_table(x, y, subst, gap).cells.into_iter().fold(T::zero(), max2)
}

/// Global score: the largest value in the last row or last column of the NW
/// table. Zero when either sequence is empty.
pub fn nw_score<A, T, S>(x: &[A], y: &[A], subst: S, gap: T) -> T
where
    T: Num + Copy + PartialOrd,
    S: Fn(&A, &A) -> T,
{
    if x.is_empty() || y.is_empty() {
        return T::zero();
    }
    let t = nw_table(x, y, subst, gap);
    let last_row = t.row(x.len()).iter().copied();
    let last_col = (1..t.rows).map(|i| t.get(i, y.len()));
    let mut it = last_row.chain(last_col);
    let first = it.next().expect("non-empty");
    it.fold(first, max2)
}

/// Smith-Waterman score with affine gaps: a run of `l` gaps costs
/// `open + extend * (l - 1)`. This is the max-plus counterpart of the local
/// alignment kernel recurrence, so `ln(k) / beta` converges to it.
pub fn sw_score_affine<A, F, S>(x: &[A], y: &[A], subst: S, open: F, extend: F) -> F
where
    F: Scalar,
    S: Fn(&A, &A) -> F,
{
    let m = y.len();
    let neg = F::neg_infinity();
    let mut best = F::zero();
    let (mut pm, mut px, mut py) = (vec![neg; m + 1], vec![neg; m + 1], vec![neg; m + 1]);
    for xi in x {
        let (mut cm, mut cx, mut cy) = (vec![neg; m + 1], vec![neg; m + 1], vec![neg; m + 1]);
        for j in 1..=m {
            let prev = F::zero().max(pm[j - 1]).max(px[j - 1]).max(py[j - 1]);
            cm[j] = subst(xi, &y[j - 1]) + prev;
            cx[j] = (pm[j] - open).max(px[j] - extend);
            cy[j] = (cm[j - 1] - open).max(cx[j - 1] - open).max(cy[j - 1] - extend);
            best = best.max(cm[j]);
        }
        pm = cm;
        px = cx;
        py = cy;
    }
    best
}
