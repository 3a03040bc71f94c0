//! Fuzzy intersection and union operators, plus defuzzifier selection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TNorm {
    Min,
    Product,
}

impl TNorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Min => a.min(b),
            TNorm::Product => a * b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TConorm {
    Max,
    ProbabilisticSum,
}

impl TConorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TConorm::Max => a.max(b),
            TConorm::ProbabilisticSum => a + b - a * b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defuzz {
    Centroid,
    MeanOfMaxima,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_elements() {
        for t in [TNorm::Min, TNorm::Product] {
            assert_eq!(t.apply(0.37, 1.0), 0.37);
            assert_eq!(t.apply(1.0, 0.37), 0.37);
        }
        for s in [TConorm::Max, TConorm::ProbabilisticSum] {
            assert_eq!(s.apply(0.37, 0.0), 0.37);
        }
    }

    #[test]
    fn point_values() {
        assert_eq!(TNorm::Product.apply(0.5, 0.5), 0.25);
        assert_eq!(TNorm::Min.apply(0.3, 0.7), 0.3);
        assert_eq!(TConorm::ProbabilisticSum.apply(0.5, 0.5), 0.75);
        assert_eq!(TConorm::Max.apply(0.3, 0.7), 0.7);
    }

    proptest! {
        #[test]
        fn norm_ordering_and_commutativity(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            for t in [TNorm::Min, TNorm::Product] {
                let v = t.apply(a, b);
                prop_assert!(v <= a.min(b) + 1e-15);
                prop_assert!((v - t.apply(b, a)).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&v));
            }
            for s in [TConorm::Max, TConorm::ProbabilisticSum] {
                let v = s.apply(a, b);
                prop_assert!(v >= a.max(b) - 1e-15);
                prop_assert!((v - s.apply(b, a)).abs() < 1e-15);
                prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
            }
        }

        #[test]
        fn norms_are_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let (lo, hi) = if b <= c { (b, c) } else { (c, b) };
            for t in [TNorm::Min, TNorm::Product] {
                prop_assert!(t.apply(a, lo) <= t.apply(a, hi) + 1e-15);
            }
            for s in [TConorm::Max, TConorm::ProbabilisticSum] {
                prop_assert!(s.apply(a, lo) <= s.apply(a, hi) + 1e-15);
            }
        }
    }
}
