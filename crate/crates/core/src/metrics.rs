//! Scoring, trend statistics and operation counters.
//!
//! All statistics are generic over the float type; the crate root exposes
//! `f64` aliases for everyday use.

use std::collections::BTreeSet;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventPair;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {xs} x values vs {ys} y values")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("value at index {index} must be strictly positive")]
    NonPositive { index: usize },
    #[error("value at index {index} is not finite")]
    NotFinite { index: usize },
}

/// Work done by one detector family during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Tick and merge applications on any clock.
    pub clock_updates: u64,
    /// Clock words piggybacked on outbound broadcasts and messages.
    pub stamp_words_sent: u64,
    /// Candidate pairs examined by the detection step.
    pub pair_checks: u64,
    /// Driver notifications handled (starts, ends, sends, receives).
    pub events_processed: u64,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.clock_updates += rhs.clock_updates;
        self.stamp_words_sent += rhs.stamp_words_sent;
        self.pair_checks += rhs.pair_checks;
        self.events_processed += rhs.events_processed;
    }
}

impl OpCounters {
    /// Clock words sent per processed notification.
    pub fn words_per_event(&self) -> f64 {
        if self.events_processed == 0 {
            0.0
        } else {
            self.stamp_words_sent as f64 / self.events_processed as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginStats<F> {
    pub min: F,
    pub max: F,
    pub mean: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport<F> {
    pub recall: F,
    pub precision: F,
    pub true_pairs: usize,
    pub detected_pairs: usize,
    pub false_negatives: usize,
    /// Signed wall overlap (µs) of the pairs that were missed.
    pub overlap_margin_stats: Option<MarginStats<F>>,
}

fn ratio<F: Float + FromPrimitive>(num: usize, den: usize) -> F {
    if den == 0 {
        F::one()
    } else {
        F::from_usize(num).unwrap() / F::from_usize(den).unwrap()
    }
}

/// Recall and precision of `detected` against `truth`.
///
/// Empty denominators score 1. `margin` reports the signed overlap of a
/// missed pair in microseconds; pass `|_| None` to skip margin statistics.
pub fn score<F, M>(
    detected: &BTreeSet<EventPair>,
    truth: &BTreeSet<EventPair>,
    margin: M,
) -> AccuracyReport<F>
where
    F: Float + FromPrimitive,
    M: Fn(&EventPair) -> Option<i64>,
{
    let hits = detected.intersection(truth).count();
    let margins: Vec<F> = truth
        .difference(detected)
        .filter_map(margin)
        .map(|m| F::from_i64(m).unwrap())
        .collect();
    let overlap_margin_stats = if margins.is_empty() {
        None
    } else {
        let (mean, _) = mean_std(&margins);
        Some(MarginStats {
            min: margins.iter().copied().fold(F::infinity(), F::min),
            max: margins.iter().copied().fold(F::neg_infinity(), F::max),
            mean,
        })
    };
    AccuracyReport {
        recall: ratio(hits, truth.len()),
        precision: ratio(hits, detected.len()),
        true_pairs: truth.len(),
        detected_pairs: detected.len(),
        false_negatives: truth.len() - hits,
        overlap_margin_stats,
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std<F: Float + FromPrimitive>(xs: &[F]) -> (F, F) {
    if xs.is_empty() {
        return (F::zero(), F::zero());
    }
    let n = F::from_usize(xs.len()).unwrap();
    let mean = xs.iter().copied().fold(F::zero(), |a, b| a + b) / n;
    if xs.len() < 2 {
        return (mean, F::zero());
    }
    let ss = xs
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .fold(F::zero(), |a, b| a + b);
    (mean, (ss / (n - F::one())).sqrt())
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks<F: Float + FromPrimitive>(xs: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("ranks of NaN"));
    let mut ranks = vec![F::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end share rank (start+1 + end) / 2
        let avg = F::from_usize(start + 1 + end).unwrap() / F::from_f64(2.0).unwrap();
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson<F: Float + FromPrimitive>(xs: &[F], ys: &[F]) -> F {
    let (mx, _) = mean_std(xs);
    let (my, _) = mean_std(ys);
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    if sxx == F::zero() || syy == F::zero() {
        return F::zero();
    }
    sxy / (sxx * syy).sqrt()
}

fn check_finite<F: Float>(xs: &[F]) -> Result<(), MetricsError> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(MetricsError::NotFinite { index }),
        None => Ok(()),
    }
}

/// Spearman rank correlation of `ys` against `xs`.
///
/// A constant series has no trend and yields 0.
pub fn trend<F: Float + FromPrimitive>(xs: &[F], ys: &[F]) -> Result<F, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(MetricsError::TooFewPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    check_finite(xs)?;
    check_finite(ys)?;
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Constant,
    Linear,
    Quadratic,
    Unclassified,
}

/// Slope bands used to name a growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBands {
    pub constant_below: f64,
    pub linear: (f64, f64),
    pub quadratic: (f64, f64),
}

impl Default for GrowthBands {
    fn default() -> Self {
        Self {
            constant_below: 0.3,
            linear: (0.7, 1.3),
            quadratic: (1.7, 2.3),
        }
    }
}

impl GrowthBands {
    pub fn classify(&self, slope: f64) -> GrowthClass {
        if slope < self.constant_below {
            GrowthClass::Constant
        } else if (self.linear.0..=self.linear.1).contains(&slope) {
            GrowthClass::Linear
        } else if (self.quadratic.0..=self.quadratic.1).contains(&slope) {
            GrowthClass::Quadratic
        } else {
            GrowthClass::Unclassified
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit<F> {
    pub slope: F,
    pub class: GrowthClass,
}

/// Least-squares slope of `ln(count)` against `ln(size)`.
pub fn complexity_fit<F: Float + FromPrimitive>(
    sizes: &[F],
    counts: &[F],
    bands: &GrowthBands,
) -> Result<GrowthFit<F>, MetricsError> {
    if sizes.len() != counts.len() {
        return Err(MetricsError::LengthMismatch {
            xs: sizes.len(),
            ys: counts.len(),
        });
    }
    if sizes.len() < 3 {
        return Err(MetricsError::TooFewPoints {
            needed: 3,
            got: sizes.len(),
        });
    }
    for (index, (&s, &c)) in sizes.iter().zip(counts).enumerate() {
        if s.is_nan() || c.is_nan() || s <= F::zero() || c <= F::zero() {
            return Err(MetricsError::NonPositive { index });
        }
    }
    check_finite(sizes)?;
    check_finite(counts)?;
    let lx: Vec<F> = sizes.iter().map(|s| s.ln()).collect();
    let ly: Vec<F> = counts.iter().map(|c| c.ln()).collect();
    let (mx, _) = mean_std(&lx);
    let (my, _) = mean_std(&ly);
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    for (&x, &y) in lx.iter().zip(&ly) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    let slope = if sxx == F::zero() { F::zero() } else { sxy / sxx };
    Ok(GrowthFit {
        slope,
        class: bands.classify(slope.to_f64().unwrap_or(f64::NAN)),
    })
}
