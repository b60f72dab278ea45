//! Pearson correlation between ablation effect and prevalence.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{EvalError, QueryDifference};
use crate::Scalar;

/// Two-sided p below this is reported as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult<T> {
    pub r: T,
    pub n: usize,
    /// `r * sqrt((n - 2) / (1 - r^2))`; infinite when |r| = 1.
    pub t: T,
    pub p_value: T,
}

impl<T: Scalar> CorrelationResult<T> {
    pub fn significant(&self) -> bool {
        self.p_value.as_f64() < SIGNIFICANCE_LEVEL
    }
}

/// Pearson r with a two-sided p-value from Student's t on n - 2 degrees of
/// freedom.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<CorrelationResult<T>, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Invalid(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(EvalError::Invalid(format!("need at least 3 pairs, got {n}")));
    }
    let nf = T::of(n as f64);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx.is_zero() || syy.is_zero() {
        return Err(EvalError::UndefinedCorrelation);
    }
    let r = (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one());
    let df = (n - 2) as f64;
    let rf = r.as_f64();
    let (t, p) = if rf.abs() == 1.0 || df == 0.0 {
        (rf.signum() * f64::INFINITY, if rf.abs() == 1.0 { 0.0 } else { 1.0 })
    } else {
        let t = rf * (df / (1.0 - rf * rf)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (t, (2.0 * dist.cdf(-t.abs())).min(1.0))
    };
    Ok(CorrelationResult {
        r,
        n,
        t: T::of(t),
        p_value: T::of(p),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceScore {
    pub query_id: u32,
    pub score: u8,
    #[serde(default)]
    pub evidence_urls: Vec<String>,
}

/// One (difference, prevalence) observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedObservation {
    pub query_id: u32,
    pub difference: i64,
    pub prevalence: u8,
}

/// Join differences with prevalence scores on query id (control excluded
/// by the caller via `ablation_effect`) and correlate them.
pub fn prevalence_correlation<T: Scalar>(
    differences: &[QueryDifference],
    prevalence: &[PrevalenceScore],
    control: Option<u32>,
) -> Result<(CorrelationResult<T>, Vec<PairedObservation>), EvalError> {
    if let Some(s) = prevalence.iter().find(|s| s.score > 10) {
        return Err(EvalError::Invalid(format!("prevalence for query {} is {}, above 10", s.query_id, s.score)));
    }
    let mut pairs = Vec::new();
    for d in differences.iter().filter(|d| Some(d.query_id) != control) {
        let p = prevalence
            .iter()
            .find(|s| s.query_id == d.query_id)
            .ok_or_else(|| EvalError::Invalid(format!("no prevalence score for query {}", d.query_id)))?;
        pairs.push(PairedObservation {
            query_id: d.query_id,
            difference: d.difference,
            prevalence: p.score,
        });
    }
    let x: Vec<T> = pairs.iter().map(|p| T::of(p.difference as f64)).collect();
    let y: Vec<T> = pairs.iter().map(|p| T::of(p.prevalence as f64)).collect();
    Ok((pearson(&x, &y)?, pairs))
}
