//! Sentiment aggregation.
//!
//! Confidences are summed as fixed-point integers so the result does not
//! depend on record order, then combined as `2 / (1 + N/P) - 1`, which equals
//! `(P - N) / (P + N)` and is built only from operations that are monotone
//! under rounding.

use serde::{Deserialize, Serialize};

/// One signed, weighted opinion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weighted {
    pub polarity: i8,
    pub confidence: f64,
}

/// Aggregation strategy for a set of records sharing a key.
pub trait Aggregator: Send + Sync {
    /// `None` for an empty input.
    fn aggregate(&self, records: &[Weighted]) -> Option<f64>;
}

const SCALE: f64 = (1u64 << 52) as f64;

fn fixed(c: f64) -> u128 {
    if c.is_nan() || c <= 0.0 {
        0
    } else {
        (c.min(1.0) * SCALE).round() as u128
    }
}

/// Confidence-weighted mean of polarities.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightedMean;

impl Aggregator for WeightedMean {
    fn aggregate(&self, records: &[Weighted]) -> Option<f64> {
        if records.is_empty() {
            return None;
        }
        let (mut pos, mut neg) = (0u128, 0u128);
        for r in records {
            match r.polarity.signum() {
                1 => pos += fixed(r.confidence),
                -1 => neg += fixed(r.confidence),
                _ => {}
            }
        }
        Some(match (pos, neg) {
            (0, 0) => 0.0,
            (0, _) => -1.0,
            (p, n) => 2.0 / (1.0 + n as f64 / p as f64) - 1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(polarity: i8, confidence: f64) -> Weighted {
        Weighted { polarity, confidence }
    }

    #[test]
    fn formula_examples() {
        let s = WeightedMean.aggregate(&[w(1, 0.8), w(-1, 0.4)]).unwrap();
        assert!((s - (0.8 - 0.4) / 1.2).abs() < 1e-12);
        assert_eq!(WeightedMean.aggregate(&[w(1, 1.0), w(1, 1.0)]), Some(1.0));
        assert_eq!(WeightedMean.aggregate(&[w(-1, 0.3)]), Some(-1.0));
        assert_eq!(WeightedMean.aggregate(&[]), None);
        assert_eq!(WeightedMean.aggregate(&[w(1, 0.0)]), Some(0.0));
    }

    #[test]
    fn order_does_not_matter() {
        let a = [w(1, 0.1), w(-1, 0.7), w(1, 0.2), w(1, 1.0 / 3.0)];
        let mut b = a;
        b.reverse();
        assert_eq!(WeightedMean.aggregate(&a), WeightedMean.aggregate(&b));
    }
}
