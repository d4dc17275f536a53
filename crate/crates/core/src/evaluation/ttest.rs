use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
    pub significant: bool,
}

/// Two-tailed paired t-test on `a - b`. Zero-variance differences give an
/// infinite `t` and `p = 0`, unless every difference is zero (`t = 0`,
/// `p = 1`).
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("need at least 2 paired scores, got {n}"),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(TTest {
        t,
        p,
        df,
        significant: p <= SIGNIFICANCE_LEVEL,
    })
}
