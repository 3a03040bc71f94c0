//! Parameterized membership functions and their parameter gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership function shapes. Invariants: triangular a ≤ b ≤ c,
/// trapezoidal a ≤ b ≤ c ≤ d, gaussian sigma > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfKind {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
    Gaussian { center: f64, sigma: f64 },
    Logistic { center: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFn {
    pub kind: MfKind,
    pub label: String,
}

impl MembershipFn {
    pub fn new(kind: MfKind, label: impl Into<String>) -> Result<Self> {
        let mf = MembershipFn {
            kind,
            label: label.into(),
        };
        mf.validate()?;
        Ok(mf)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            MfKind::Triangular { a, b, c } => {
                a.is_finite() && b.is_finite() && c.is_finite() && a <= b && b <= c
            }
            MfKind::Trapezoidal { a, b, c, d } => {
                [a, b, c, d].iter().all(|v| v.is_finite()) && a <= b && b <= c && c <= d
            }
            MfKind::Gaussian { center, sigma } => {
                center.is_finite() && sigma.is_finite() && sigma > 0.0
            }
            MfKind::Logistic { center, slope } => center.is_finite() && slope.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "membership function {:?} violates its parameter ordering",
                self.kind
            )))
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            MfKind::Triangular { .. } => 3,
            MfKind::Trapezoidal { .. } => 4,
            MfKind::Gaussian { .. } | MfKind::Logistic { .. } => 2,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            MfKind::Triangular { a, b, c } => vec![a, b, c],
            MfKind::Trapezoidal { a, b, c, d } => vec![a, b, c, d],
            MfKind::Gaussian { center, sigma } => vec![center, sigma],
            MfKind::Logistic { center, slope } => vec![center, slope],
        }
    }

    /// Same shape family and label with new parameters; fails if the new
    /// parameters violate the shape invariants.
    pub fn with_params(&self, p: &[f64]) -> Result<MembershipFn> {
        if p.len() != self.param_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let kind = match self.kind {
            MfKind::Triangular { .. } => MfKind::Triangular {
                a: p[0],
                b: p[1],
                c: p[2],
            },
            MfKind::Trapezoidal { .. } => MfKind::Trapezoidal {
                a: p[0],
                b: p[1],
                c: p[2],
                d: p[3],
            },
            MfKind::Gaussian { .. } => MfKind::Gaussian {
                center: p[0],
                sigma: p[1],
            },
            MfKind::Logistic { .. } => MfKind::Logistic {
                center: p[0],
                slope: p[1],
            },
        };
        MembershipFn::new(kind, self.label.clone())
    }
}

/// Membership degree of `x`, always in [0, 1].
pub fn mf_eval(mf: &MembershipFn, x: f64) -> f64 {
    match mf.kind {
        MfKind::Triangular { a, b, c } => {
            if x <= a || x >= c {
                // Degenerate apexes still peak at 1.
                if x == b {
                    1.0
                } else {
                    0.0
                }
            } else if x < b {
                (x - a) / (b - a)
            } else if x > b {
                (c - x) / (c - b)
            } else {
                1.0
            }
        }
        MfKind::Trapezoidal { a, b, c, d } => {
            if x >= b && x <= c {
                1.0
            } else if x <= a || x >= d {
                0.0
            } else if x < b {
                (x - a) / (b - a)
            } else {
                (d - x) / (d - c)
            }
        }
        MfKind::Gaussian { center, sigma } => {
            let z = (x - center) / sigma;
            (-0.5 * z * z).exp()
        }
        MfKind::Logistic { center, slope } => 1.0 / (1.0 + (-slope * (x - center)).exp()),
    }
}

/// dμ/dparam at `x`, in `params()` order. Kinks of the piecewise-linear
/// shapes take subgradient 0.
pub fn mf_param_grad(mf: &MembershipFn, x: f64) -> Vec<f64> {
    match mf.kind {
        MfKind::Triangular { a, b, c } => {
            if x > a && x < b {
                let d = b - a;
                vec![(x - b) / (d * d), -(x - a) / (d * d), 0.0]
            } else if x > b && x < c {
                let d = c - b;
                vec![0.0, (c - x) / (d * d), (x - b) / (d * d)]
            } else {
                vec![0.0; 3]
            }
        }
        MfKind::Trapezoidal { a, b, c, d } => {
            if x > a && x < b {
                let w = b - a;
                vec![(x - b) / (w * w), -(x - a) / (w * w), 0.0, 0.0]
            } else if x > c && x < d {
                let w = d - c;
                vec![0.0, 0.0, (d - x) / (w * w), (x - c) / (w * w)]
            } else {
                vec![0.0; 4]
            }
        }
        MfKind::Gaussian { center, sigma } => {
            let mu = mf_eval(mf, x);
            let diff = x - center;
            vec![
                mu * diff / (sigma * sigma),
                mu * diff * diff / (sigma * sigma * sigma),
            ]
        }
        MfKind::Logistic { center, slope } => {
            let mu = mf_eval(mf, x);
            let common = mu * (1.0 - mu);
            vec![-slope * common, (x - center) * common]
        }
    }
}
