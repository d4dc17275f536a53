//! C-SVM on a precomputed kernel matrix.
//!
//! The dual `min 1/2 a'Qa - e'a` s.t. `y'a = 0`, `0 <= a_i <= C_i` with
//! `Q_ij = y_i y_j K_ij` is solved by pairwise updates, choosing the maximal
//! violating `i` and the `j` with the best second-order gain. Pairs whose
//! curvature is not positive (indefinite kernels) use a tiny fixed curvature
//! and are clipped to the box, so training still terminates.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{parse_err, Error, Result};
use crate::format::fmt_real;
use crate::kernels::GramMatrix;
use crate::scalar::Scalar;
use crate::sequence::Label;

const MODEL_HEADER: &str = "#svm-model v1";
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassWeighting {
    #[default]
    None,
    /// `C_i = C / P(class of i)`.
    InverseClassProbability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<F> {
    pub c: F,
    pub class_weighting: ClassWeighting,
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: F,
    /// Upper bound on pair updates; `None` scales with the problem size.
    pub max_iterations: Option<usize>,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            c: F::one(),
            class_weighting: ClassWeighting::None,
            tolerance: F::of(1e-6),
            max_iterations: None,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn with_c(c: F) -> Self {
        Self { c, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > F::zero() && self.c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "C",
                reason: format!("must be positive, got {}", self.c),
            });
        }
        if !(self.tolerance > F::zero()) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: format!("must be positive, got {}", self.tolerance),
            });
        }
        Ok(())
    }

    /// Per-instance box bounds.
    pub fn upper_bounds(&self, labels: &[Label]) -> Vec<F> {
        let n = F::of(labels.len() as f64);
        let pos = labels.iter().filter(|&&l| l == Label::Positive).count();
        let p_pos = F::of(pos as f64) / n;
        let p_neg = F::one() - p_pos;
        labels
            .iter()
            .map(|l| match (self.class_weighting, l) {
                (ClassWeighting::None, _) => self.c,
                (ClassWeighting::InverseClassProbability, Label::Positive) => self.c / p_pos,
                (ClassWeighting::InverseClassProbability, Label::Negative) => self.c / p_neg,
            })
            .collect()
    }
}

/// Linear decision function over training instances:
/// `f(x) = sum_i coef_i k(x_i, x) + bias`, with `coef_i = alpha_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionFunction<F> {
    pub ids: Vec<String>,
    pub coef: Vec<F>,
    pub bias: F,
}

impl<F: Scalar> DecisionFunction<F> {
    pub fn decision(&self, kernel_row: &[F]) -> Result<F> {
        if kernel_row.len() != self.coef.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coef.len(),
                actual: kernel_row.len(),
            });
        }
        Ok(self
            .coef
            .iter()
            .zip(kernel_row)
            .fold(self.bias, |acc, (&c, &k)| acc + c * k))
    }

    /// Class and decision value. A decision of exactly 0 is negative.
    pub fn predict(&self, kernel_row: &[F]) -> Result<(Label, F)> {
        let d = self.decision(kernel_row)?;
        Ok((
            if d > F::zero() {
                Label::Positive
            } else {
                Label::Negative
            },
            d,
        ))
    }

    /// Writes the model header, optional `#meta key=value` lines, the bias
    /// and one `id <TAB> coef` line per training instance.
    pub fn save<W: Write>(&self, mut out: W, meta: &BTreeMap<String, String>) -> Result<()> {
        writeln!(out, "{MODEL_HEADER}")?;
        for (k, v) in meta {
            writeln!(out, "#meta {k}={v}")?;
        }
        writeln!(out, "bias\t{}", fmt_real(self.bias))?;
        for (id, c) in self.ids.iter().zip(&self.coef) {
            writeln!(out, "{id}\t{}", fmt_real(*c))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<(Self, BTreeMap<String, String>)> {
        let mut meta = BTreeMap::new();
        let mut bias = None;
        let mut ids = Vec::new();
        let mut coef = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches('\r');
            if lineno == 1 {
                if line != MODEL_HEADER {
                    return Err(parse_err(lineno, format!("bad model header {line:?}")));
                }
                continue;
            }
            if let Some(kv) = line.strip_prefix("#meta ") {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| parse_err(lineno, "metadata must be key=value"))?;
                meta.insert(k.to_string(), v.to_string());
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(lineno, "expected key<TAB>value"))?;
            let v: F = value
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid number {value:?}")))?;
            if key == "bias" && bias.is_none() && ids.is_empty() {
                bias = Some(v);
            } else {
                ids.push(key.to_string());
                coef.push(v);
            }
        }
        let bias = bias.ok_or_else(|| parse_err(0, "model has no bias line"))?;
        Ok((Self { ids, coef, bias }, meta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<F> {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub alpha: Vec<F>,
    pub upper_bounds: Vec<F>,
    pub bias: F,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub kkt_residual: F,
    pub converged: bool,
}

fn sign<F: Scalar>(l: Label) -> F {
    match l {
        Label::Positive => F::one(),
        Label::Negative => -F::one(),
    }
}

impl<F: Scalar> TrainedModel<F> {
    pub fn support_ids(&self) -> Vec<&str> {
        self.ids
            .iter()
            .zip(&self.alpha)
            .filter(|(_, &a)| a > F::zero())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn decision_function(&self) -> DecisionFunction<F> {
        DecisionFunction {
            ids: self.ids.clone(),
            coef: self
                .alpha
                .iter()
                .zip(&self.labels)
                .map(|(&a, &l)| a * sign::<F>(l))
                .collect(),
            bias: self.bias,
        }
    }

    pub fn decision(&self, kernel_row: &[F]) -> Result<F> {
        self.decision_function().decision(kernel_row)
    }

    pub fn predict(&self, kernel_row: &[F]) -> Result<(Label, F)> {
        self.decision_function().predict(kernel_row)
    }

    /// `sum_i alpha_i y_i`, zero at a feasible point.
    pub fn equality_residual(&self) -> F {
        self.alpha
            .iter()
            .zip(&self.labels)
            .map(|(&a, &l)| a * sign::<F>(l))
            .sum()
    }
}

struct Solver<'a, F> {
    k: &'a GramMatrix<F>,
    y: Vec<F>,
    alpha: Vec<F>,
    grad: Vec<F>,
    ub: Vec<F>,
}

impl<F: Scalar> Solver<'_, F> {
    fn q(&self, i: usize, j: usize) -> F {
        self.y[i] * self.y[j] * self.k.get(i, j)
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > F::zero() {
            self.alpha[t] < self.ub[t]
        } else {
            self.alpha[t] > F::zero()
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > F::zero() {
            self.alpha[t] > F::zero()
        } else {
            self.alpha[t] < self.ub[t]
        }
    }

    /// Working pair and the current KKT violation.
    fn select(&self) -> (Option<(usize, usize)>, F) {
        let n = self.y.len();
        let tau = F::of(TAU);
        let mut gmax = F::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmax2 = F::neg_infinity();
        let mut best = F::infinity();
        let mut j_sel = None;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !self.in_low(t) {
                    continue;
                }
                let yg = self.y[t] * self.grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > F::zero() {
                    let mut a = self.k.get(i, i) + self.k.get(t, t) - F::of(2.0) * self.k.get(i, t);
                    if a <= F::zero() {
                        a = tau;
                    }
                    let obj = -(b * b) / a;
                    if obj < best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let violation = if i_sel.is_some() && gmax2.is_finite() {
            gmax + gmax2
        } else {
            F::zero()
        };
        (i_sel.zip(j_sel), violation)
    }

    fn update(&mut self, i: usize, j: usize) {
        let tau = F::of(TAU);
        let (ci, cj) = (self.ub[i], self.ub[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = qii + qjj + F::of(2.0) * qij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai = ai + delta;
            aj = aj + delta;
            if diff > F::zero() {
                if aj < F::zero() {
                    aj = F::zero();
                    ai = diff;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = qii + qjj - F::of(2.0) * qij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai = ai - delta;
            aj = aj + delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < F::zero() {
                aj = F::zero();
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.grad.len() {
            self.grad[t] = self.grad[t] + self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    fn bias(&self) -> F {
        let mut ub = F::infinity();
        let mut lb = F::neg_infinity();
        let mut free_sum = F::zero();
        let mut free = 0usize;
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            let positive = self.y[t] > F::zero();
            if self.alpha[t] >= self.ub[t] {
                if positive {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.alpha[t] <= F::zero() {
                if positive {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum = free_sum + yg;
            }
        }
        let rho = if free > 0 {
            free_sum / F::of(free as f64)
        } else {
            (ub + lb) / F::of(2.0)
        };
        // avoid a negative zero in model files
        F::zero() - rho
    }

    /// Dual objective `sum a - 1/2 a'Qa` (to be maximized).
    fn dual_objective(&self) -> F {
        self.alpha
            .iter()
            .zip(&self.grad)
            .map(|(&a, &g)| a - a * (g + F::one()) / F::of(2.0))
            .sum()
    }
}

fn train_inner<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    cfg: &TrainConfig<F>,
    mut trace: Option<&mut Vec<F>>,
) -> Result<TrainedModel<F>> {
    cfg.validate()?;
    if labels.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            actual: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let n = labels.len();
    let mut s = Solver {
        k: g,
        y: labels.iter().map(|&l| sign(l)).collect(),
        alpha: vec![F::zero(); n],
        grad: vec![-F::one(); n],
        ub: cfg.upper_bounds(labels),
    };
    let max_iter = cfg.max_iterations.unwrap_or_else(|| (100 * n).max(1_000_000));
    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    if let Some(t) = trace.as_deref_mut() {
        t.push(s.dual_objective());
    }
    loop {
        let (pair, violation) = s.select();
        residual = violation;
        match pair {
            Some((i, j)) if violation >= cfg.tolerance => {
                if iterations >= max_iter {
                    break;
                }
                s.update(i, j);
                iterations += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(s.dual_objective());
                }
            }
            _ => {
                converged = true;
                break;
            }
        }
    }
    Ok(TrainedModel {
        ids: g.ids().to_vec(),
        labels: labels.to_vec(),
        bias: s.bias(),
        alpha: s.alpha,
        upper_bounds: s.ub,
        iterations,
        kkt_residual: residual.max(F::zero()),
        converged,
    })
}

/// Trains on a precomputed Gram. A run that hits the iteration bound still
/// returns its model with `converged == false`.
pub fn train<F: Scalar>(g: &GramMatrix<F>, labels: &[Label], cfg: &TrainConfig<F>) -> Result<TrainedModel<F>> {
    train_inner(g, labels, cfg, None)
}

/// Like [`train`], also returning the dual objective after every update.
pub fn train_traced<F: Scalar>(
    g: &GramMatrix<F>,
    labels: &[Label],
    cfg: &TrainConfig<F>,
) -> Result<(TrainedModel<F>, Vec<F>)> {
    let mut trace = Vec::new();
    let model = train_inner(g, labels, cfg, Some(&mut trace))?;
    Ok((model, trace))
}

/// Maximal violation of the KKT conditions of `model` on its own Gram:
/// free multipliers need `y_i f(x_i) = 1`, those at zero `>= 1`, those at
/// the bound `<= 1`.
pub fn kkt_violation<F: Scalar>(model: &TrainedModel<F>, g: &GramMatrix<F>) -> Result<F> {
    let f = model.decision_function();
    let mut worst = F::zero();
    for i in 0..g.len() {
        let margin = sign::<F>(model.labels[i]) * f.decision(g.row(i))?;
        let a = model.alpha[i];
        let v = if a <= F::zero() {
            (F::one() - margin).max(F::zero())
        } else if a >= model.upper_bounds[i] {
            (margin - F::one()).max(F::zero())
        } else {
            (margin - F::one()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Writes one `<+1|-1> 0:<serial> 1:<k> ... n:<k>` line per instance.
pub fn export_precomputed<F: Scalar, W: Write>(g: &GramMatrix<F>, labels: &[Label], mut out: W) -> Result<()> {
    if labels.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            actual: labels.len(),
        });
    }
    for (i, label) in labels.iter().enumerate() {
        let tag = match label {
            Label::Positive => "+1",
            Label::Negative => "-1",
        };
        write!(out, "{tag} 0:{}", i + 1)?;
        for (j, v) in g.row(i).iter().enumerate() {
            write!(out, " {}:{}", j + 1, fmt_real(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the precomputed-kernel format back (ids are the serial numbers).
pub fn parse_precomputed<F: Scalar, R: BufRead>(reader: R) -> Result<(GramMatrix<F>, Vec<Label>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        labels.push(match fields.next() {
            Some("+1") | Some("1") => Label::Positive,
            Some("-1") => Label::Negative,
            other => return Err(parse_err(lineno, format!("bad label {other:?}"))),
        });
        let mut row = Vec::new();
        for (pos, field) in fields.enumerate() {
            let (k, v) = field
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("bad entry {field:?}")))?;
            if k.parse::<usize>().ok() != Some(pos) {
                return Err(parse_err(lineno, format!("unexpected index {k}")));
            }
            if pos == 0 {
                ids.push(v.to_string());
            } else {
                row.push(
                    v.parse::<F>()
                        .map_err(|_| parse_err(lineno, format!("bad value {v:?}")))?,
                );
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(parse_err(bad + 1, format!("expected {n} kernel values")));
    }
    Ok((GramMatrix::from_values(ids, rows.concat(), false)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gram(rows: &[Vec<f64>]) -> GramMatrix<f64> {
        GramMatrix::from_rows(rows).unwrap()
    }

    use Label::{Negative as N, Positive as P};

    #[test]
    fn two_point_analytic() {
        let g = gram(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = train(&g, &[P, N], &TrainConfig::with_c(1.0)).unwrap();
        assert_eq!(m.alpha, vec![1.0, 1.0]);
        assert_eq!(m.bias, 0.0);
        assert!(m.converged);
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), (P, 1.0));
        assert_eq!(m.predict(&[0.0, 1.0]).unwrap().0, N);
        assert_eq!(m.decision(&[0.0, 0.0]).unwrap(), m.bias);
        assert!(m.predict(&[1.0]).is_err());
        assert_eq!(m.support_ids(), vec!["0", "1"]);
    }

    #[test]
    fn zero_decision_is_negative() {
        let f = DecisionFunction {
            ids: vec!["a".into()],
            coef: vec![1.0],
            bias: 0.0,
        };
        assert_eq!(f.predict(&[0.0]).unwrap().0, N);
    }

    #[test]
    fn rejects_bad_input() {
        let g = gram(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            train(&g, &[P, P], &TrainConfig::default()),
            Err(Error::SingleClass)
        ));
        assert!(train(&g, &[P], &TrainConfig::default()).is_err());
        assert!(train(&g, &[P, N], &TrainConfig::with_c(0.0)).is_err());
    }

    #[test]
    fn inverse_class_bounds() {
        let labels: Vec<Label> = (0..10).map(|i| if i < 6 { P } else { N }).collect();
        let cfg = TrainConfig {
            c: 2.0,
            class_weighting: ClassWeighting::InverseClassProbability,
            ..TrainConfig::default()
        };
        let ub = cfg.upper_bounds(&labels);
        assert_relative_eq!(ub[0], 2.0 / 0.6, max_relative = 1e-15);
        assert_relative_eq!(ub[9], 2.0 / 0.4, max_relative = 1e-15);
    }

    #[test]
    fn duplicate_instance_keeps_signs() {
        let base = gram(&[vec![1.0, 0.2, 0.1], vec![0.2, 1.0, 0.3], vec![0.1, 0.3, 1.0]]);
        let labels = [P, N, N];
        let m = train(&base, &labels, &TrainConfig::with_c(10.0)).unwrap();
        let dup = gram(&[
            vec![1.0, 0.2, 0.1, 1.0],
            vec![0.2, 1.0, 0.3, 0.2],
            vec![0.1, 0.3, 1.0, 0.1],
            vec![1.0, 0.2, 0.1, 1.0],
        ]);
        let m2 = train(&dup, &[P, N, N, P], &TrainConfig::with_c(10.0)).unwrap();
        for i in 0..3 {
            let a = m.decision(base.row(i)).unwrap();
            let b = m2.decision(dup.row(i)).unwrap();
            assert_eq!(a > 0.0, b > 0.0);
        }
    }

    #[test]
    fn indefinite_kernel_terminates() {
        let g = gram(&[
            vec![1.0, 2.0, 0.5, 0.1],
            vec![2.0, 1.0, 0.3, 0.4],
            vec![0.5, 0.3, 1.0, 2.0],
            vec![0.1, 0.4, 2.0, 1.0],
        ]);
        let cfg = TrainConfig {
            max_iterations: Some(10_000),
            ..TrainConfig::with_c(1.0)
        };
        let m = train(&g, &[P, P, N, N], &cfg).unwrap();
        assert!(m
            .alpha
            .iter()
            .zip(&m.upper_bounds)
            .all(|(&a, &u)| (0.0..=u).contains(&a)));
        assert!(m.equality_residual().abs() < 1e-9);
    }

    #[test]
    fn export_format() {
        let g = gram(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut buf = Vec::new();
        export_precomputed(&g, &[P, N], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "+1 0:1 1:1 2:0\n-1 0:2 1:0 2:1\n"
        );
        let (back, labels) = parse_precomputed::<f64, _>(&buf[..]).unwrap();
        assert_eq!(labels, vec![P, N]);
        assert_eq!(back.row(0), g.row(0));
        let mut empty = Vec::new();
        export_precomputed(&gram(&[]), &[], &mut empty).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn export_keeps_full_precision() {
        let v = [1.0 / 3.0, std::f64::consts::PI, 1e-300, 123456.78901234568];
        let g = gram(&[vec![v[0], v[1]], vec![v[1], v[3]]]);
        let mut buf = Vec::new();
        export_precomputed(&g, &[P, N], &mut buf).unwrap();
        let (back, _) = parse_precomputed::<f64, _>(&buf[..]).unwrap();
        assert_eq!(back.row(0), g.row(0));
        assert_eq!(back.row(1), g.row(1));
    }

    #[test]
    fn model_file_roundtrip() {
        let g = gram(&[vec![1.0, 0.3, 0.1], vec![0.3, 1.0, 0.2], vec![0.1, 0.2, 1.0]]);
        let m = train(&g, &[P, N, P], &TrainConfig::with_c(1.0)).unwrap();
        let f = m.decision_function();
        let meta = BTreeMap::from([("kernel".to_string(), "la".to_string())]);
        let mut buf = Vec::new();
        f.save(&mut buf, &meta).unwrap();
        let (back, meta_back) = DecisionFunction::<f64>::load(&buf[..]).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta_back, meta);
    }
}
