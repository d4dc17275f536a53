//! Local alignment (LA) kernel: the sum of `exp(beta * s(pi))` over every
//! local alignment `pi` of two sequences, where `s` adds the substitution
//! scores of aligned pairs and subtracts `open + extend * (l - 1)` for each
//! internal gap run of length `l`. The empty alignment contributes 1.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignParams<F> {
    pub beta: F,
    pub gap_open: F,
    pub gap_extend: F,
}

impl<F: Scalar> Default for AlignParams<F> {
    fn default() -> Self {
        Self {
            beta: F::one(),
            gap_open: F::of(1.2),
            gap_extend: F::of(0.2),
        }
    }
}

impl<F: Scalar> AlignParams<F> {
    pub fn new(beta: F, gap_open: F, gap_extend: F) -> Result<Self> {
        let p = Self {
            beta,
            gap_open,
            gap_extend,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: F| {
            if v.is_finite() && v >= F::zero() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                })
            }
        };
        check("beta", self.beta)?;
        check("gap_open", self.gap_open)?;
        check("gap_extend", self.gap_extend)
    }

    /// Non-fatal parameter concerns; an extension cost above the opening cost
    /// makes long gaps relatively cheaper to split.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gap_extend > self.gap_open {
            out.push(format!(
                "gap extension {} exceeds gap opening {}",
                self.gap_extend, self.gap_open
            ));
        }
        out
    }

    fn open_factor(&self) -> F {
        (-self.beta * self.gap_open).exp()
    }

    fn extend_factor(&self) -> F {
        (-self.beta * self.gap_extend).exp()
    }
}

/// LA kernel over sequences of length `n` and `m` given the pair factors
/// `exp(beta * d(x_i, y_j))`.
///
/// Three states per cell: `m` sums alignments ending by aligning `x_i` with
/// `y_j`; `gx` those whose last aligned pair is followed by a gap run in `x`;
/// `gy` those followed by a gap run in `y` (possibly after one in `x`).
/// Allowing y-gaps after x-gaps but not the reverse counts each alignment
/// once.
pub(crate) fn la_from_factors<F, P>(n: usize, m: usize, pair: P, params: &AlignParams<F>) -> F
where
    F: Scalar,
    P: Fn(usize, usize) -> F,
{
    if n == 0 || m == 0 {
        return F::one();
    }
    let open = params.open_factor();
    let extend = params.extend_factor();
    let zero = F::zero();
    let mut pm = vec![zero; m + 1];
    let mut px = vec![zero; m + 1];
    let mut py = vec![zero; m + 1];
    let mut cm = vec![zero; m + 1];
    let mut cx = vec![zero; m + 1];
    let mut cy = vec![zero; m + 1];
    let mut total = zero;
    for i in 0..n {
        for j in 1..=m {
            let mm = pair(i, j - 1) * (F::one() + pm[j - 1] + px[j - 1] + py[j - 1]);
            let gx = open * pm[j] + extend * px[j];
            let gy = open * (cm[j - 1] + cx[j - 1]) + extend * cy[j - 1];
            cm[j] = mm;
            cx[j] = gx;
            cy[j] = gy;
            total = total + mm;
        }
        std::mem::swap(&mut pm, &mut cm);
        std::mem::swap(&mut px, &mut cx);
        std::mem::swap(&mut py, &mut cy);
    }
    F::one() + total
}

/// LA kernel value; always at least 1.
pub fn la_kernel<A, F, S>(x: &[A], y: &[A], subst: S, params: &AlignParams<F>) -> F
where
    F: Scalar,
    S: Fn(&A, &A) -> F,
{
    let beta = params.beta;
    la_from_factors(x.len(), y.len(), |i, j| (beta * subst(&x[i], &y[j])).exp(), params)
}

/// Reference LA value by explicit enumeration of all strictly increasing
/// index pairings. Exponential; intended for checking short sequences.
pub fn la_kernel_bruteforce<A, F, S>(x: &[A], y: &[A], subst: S, params: &AlignParams<F>, max_len: usize) -> Result<F>
where
    F: Scalar,
    S: Fn(&A, &A) -> F,
{
    for len in [x.len(), y.len()] {
        if len > max_len {
            return Err(Error::SequenceTooLong { len, bound: max_len });
        }
    }
    let gap = |l: usize| -> F {
        if l == 0 {
            F::zero()
        } else {
            params.gap_open + params.gap_extend * F::of((l - 1) as f64)
        }
    };

    // extend an alignment whose last aligned pair is (i, j) with score s
    #[allow(clippy::too_many_arguments)]
    fn walk<A, F: Scalar>(
        x: &[A],
        y: &[A],
        last: (usize, usize),
        score: F,
        subst: &dyn Fn(&A, &A) -> F,
        gap: &dyn Fn(usize) -> F,
        beta: F,
        acc: &mut F,
    ) {
        for i in last.0 + 1..x.len() {
            for j in last.1 + 1..y.len() {
                let s = score + subst(&x[i], &y[j]) - gap(i - last.0 - 1) - gap(j - last.1 - 1);
                *acc = *acc + (beta * s).exp();
                walk(x, y, (i, j), s, subst, gap, beta, acc);
            }
        }
    }

    let mut acc = F::one();
    for i in 0..x.len() {
        for j in 0..y.len() {
            let s = subst(&x[i], &y[j]);
            acc = acc + (params.beta * s).exp();
            walk(x, y, (i, j), s, &subst, &gap, params.beta, &mut acc);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn exact(a: &char, b: &char) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn empty_sequence_gives_one() {
        let p = AlignParams::default();
        assert_eq!(la_kernel(&[], &['a', 'b'], exact, &p), 1.0);
        assert_eq!(la_kernel(&['a'], &[], exact, &p), 1.0);
        assert_eq!(la_kernel_bruteforce(&['a'], &[], exact, &p, 8).unwrap(), 1.0);
    }

    #[test]
    fn closed_form_fixtures() {
        let p = AlignParams::default();
        assert_relative_eq!(la_kernel(&['a'], &['a'], exact, &p), 1.0 + E, max_relative = 1e-12);
        let expected = 5.0 + 4.0 * E + 0.8f64.exp();
        let dp = la_kernel(&['a', 'b', 'c'], &['a', 'c'], exact, &p);
        let bf = la_kernel_bruteforce(&['a', 'b', 'c'], &['a', 'c'], exact, &p, 8).unwrap();
        assert_relative_eq!(dp, expected, max_relative = 1e-12);
        assert_relative_eq!(bf, expected, max_relative = 1e-12);
    }

    #[test]
    fn bruteforce_bound() {
        let p = AlignParams::<f64>::default();
        let long = vec!['a'; 9];
        assert!(la_kernel_bruteforce(&long, &['a'], exact, &p, 8).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(AlignParams::new(-1.0, 1.2, 0.2).is_err());
        assert!(AlignParams::new(1.0, f64::NAN, 0.2).is_err());
        let p = AlignParams::new(1.0, 0.2, 1.0).unwrap();
        assert_eq!(p.warnings().len(), 1);
        assert!(AlignParams::<f64>::default().warnings().is_empty());
    }

    fn random_fixture(rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>, [[f64; 5]; 5]) {
        let mut s = [[0.0; 5]; 5];
        for a in 0..5 {
            s[a][a] = 1.0;
            for b in a + 1..5 {
                let v = rng.gen::<f64>();
                s[a][b] = v;
                s[b][a] = v;
            }
        }
        let lx = rng.gen_range(0..=6);
        let ly = rng.gen_range(0..=6);
        let x = (0..lx).map(|_| rng.gen_range(0..5)).collect();
        let y = (0..ly).map(|_| rng.gen_range(0..5)).collect();
        (x, y, s)
    }

    #[test]
    fn dp_matches_bruteforce_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..120 {
            let (x, y, s) = random_fixture(&mut rng);
            let beta = [0.5, 1.0, 2.0][k % 3];
            let (o, e) = [(1.2, 0.2), (1.0, 1.0)][k % 2];
            let p = AlignParams::new(beta, o, e).unwrap();
            let sub = |a: &usize, b: &usize| s[*a][*b];
            let dp = la_kernel(&x, &y, sub, &p);
            let bf = la_kernel_bruteforce(&x, &y, sub, &p, 8).unwrap();
            assert!(((dp - bf) / bf).abs() <= 1e-9, "{dp} vs {bf}");
            assert_relative_eq!(dp, la_kernel(&y, &x, sub, &p), max_relative = 1e-12);
            assert!(dp >= 1.0);
        }
    }

    #[test]
    fn monotone_in_gaps_and_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (x, y, s) = random_fixture(&mut rng);
            let base = AlignParams::default();
            let sub = |a: &usize, b: &usize| s[*a][*b];
            let k0 = la_kernel(&x, &y, sub, &base);
            let more_open = AlignParams { gap_open: 1.5, ..base };
            let more_ext = AlignParams {
                gap_extend: 0.5,
                ..base
            };
            assert!(la_kernel(&x, &y, sub, &more_open) <= k0 * (1.0 + 1e-12));
            assert!(la_kernel(&x, &y, sub, &more_ext) <= k0 * (1.0 + 1e-12));
            let (a, b) = (rng.gen_range(0..5), rng.gen_range(0..5));
            let mut bumped = s;
            bumped[a][b] += 0.3;
            if a != b {
                bumped[b][a] += 0.3;
            }
            let k1 = la_kernel(&x, &y, |p: &usize, q: &usize| bumped[*p][*q], &base);
            assert!(k1 >= k0 * (1.0 - 1e-12));
        }
    }
}
