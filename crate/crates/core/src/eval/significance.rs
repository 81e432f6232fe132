use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    /// Mean of `a - b` over its standard error.
    pub t: f64,
    /// Two-sided p-value with `n - 1` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    /// Set when the differences have zero variance: `t` is 0 (all differences
    /// zero, `p = 1`) or infinite (constant non-zero shift, `p = 0`).
    pub degenerate: bool,
}

/// Two-sided paired t-test on aligned samples.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooFewPairs(n));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let spread = diffs.iter().fold(0.0f64, |m, d| m.max((d - mean).abs()));

    // differences equal up to rounding
    if spread <= 1e-12 * scale || scale == 0.0 {
        return Ok(if scale == 0.0 {
            PairedTTest {
                t: 0.0,
                p_value: 1.0,
                n,
                degenerate: true,
            }
        } else {
            PairedTTest {
                t: f64::INFINITY.copysign(mean),
                p_value: 0.0,
                n,
                degenerate: true,
            }
        });
    }

    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("degrees of freedom positive");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(PairedTTest {
        t,
        p_value,
        n,
        degenerate: false,
    })
}
