use serde::{Deserialize, Serialize};

use crate::cost::{CostFn, TailRule};
use crate::error::{Error, Result};
use crate::numeric::{csum, CompensatedSum};

pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A pmf over Z (finite table or two-sided geometric) or a product pmf over Z^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum NoiseDistribution {
    /// `probs[j]` is the mass at `offset + j`.
    #[serde(rename = "finite")]
    Finite1D { offset: i64, probs: Vec<f64> },
    /// p_k = ((1 - lambda) / (1 + lambda)) * lambda^|k|.
    #[serde(rename = "geometric")]
    GeometricLaplace { lambda: f64 },
    #[serde(rename = "product")]
    Product { axes: Vec<NoiseDistribution> },
}

/// Expected cost together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub value: f64,
    pub error_bound: f64,
}

/// Checks the invariants of `dist` and hands it back.
pub fn validate_distribution(dist: NoiseDistribution) -> Result<NoiseDistribution> {
    dist.validate()?;
    Ok(dist)
}

impl NoiseDistribution {
    pub fn finite(offset: i64, probs: Vec<f64>) -> Self {
        NoiseDistribution::Finite1D { offset, probs }
    }

    pub fn point_mass() -> Self {
        Self::finite(0, vec![1.0])
    }

    pub fn geometric(lambda: f64) -> Self {
        NoiseDistribution::GeometricLaplace { lambda }
    }

    pub fn product(axes: Vec<NoiseDistribution>) -> Self {
        NoiseDistribution::Product { axes }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseDistribution::Finite1D { offset, probs } => {
                if probs.is_empty() {
                    return Err(Error::NotNormalized {
                        sum: 0.0,
                        deviation: 1.0,
                    });
                }
                for (j, &p) in probs.iter().enumerate() {
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::NegativeProbability {
                            index: offset + j as i64,
                            value: p,
                        });
                    }
                }
                let sum = csum(probs.iter().copied());
                let deviation = (sum - 1.0).abs();
                if deviation > NORMALIZATION_TOL {
                    return Err(Error::NotNormalized { sum, deviation });
                }
                Ok(())
            }
            NoiseDistribution::GeometricLaplace { lambda } => {
                if *lambda > 0.0 && *lambda < 1.0 {
                    Ok(())
                } else {
                    Err(Error::LambdaOutOfRange(*lambda))
                }
            }
            NoiseDistribution::Product { axes } => {
                if axes.is_empty() {
                    return Err(Error::InvalidParams("product needs at least one axis".into()));
                }
                for a in axes {
                    if matches!(a, NoiseDistribution::Product { .. }) {
                        return Err(Error::InvalidParams("product axes must be one-dimensional".into()));
                    }
                    a.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            NoiseDistribution::Product { axes } => axes.len(),
            _ => 1,
        }
    }

    /// One-dimensional mass at `k`; product distributions are rejected.
    pub fn pmf(&self, k: i64) -> f64 {
        match self {
            NoiseDistribution::Finite1D { offset, probs } => {
                let j = k - offset;
                if j < 0 || j >= probs.len() as i64 {
                    0.0
                } else {
                    probs[j as usize]
                }
            }
            NoiseDistribution::GeometricLaplace { lambda } => {
                geometric_norm(*lambda) * lambda.powf(k.unsigned_abs() as f64)
            }
            NoiseDistribution::Product { axes } if axes.len() == 1 => axes[0].pmf(k),
            NoiseDistribution::Product { .. } => panic!("pmf() called on a multi-dimensional product"),
        }
    }

    /// Joint mass at a point of Z^d.
    pub fn joint_pmf(&self, point: &[i64]) -> f64 {
        match self {
            NoiseDistribution::Product { axes } => {
                assert_eq!(axes.len(), point.len(), "point dimension");
                axes.iter().zip(point).map(|(a, &k)| a.pmf(k)).product()
            }
            _ => {
                assert_eq!(point.len(), 1, "point dimension");
                self.pmf(point[0])
            }
        }
    }

    /// Inclusive support range of a finite 1-D pmf, ignoring zero edges.
    pub fn finite_support(&self) -> Option<(i64, i64)> {
        match self {
            NoiseDistribution::Finite1D { offset, probs } => {
                let first = probs.iter().position(|&p| p > 0.0)?;
                let last = probs.iter().rposition(|&p| p > 0.0)?;
                Some((offset + first as i64, offset + last as i64))
            }
            _ => None,
        }
    }

    /// Mirror image p_k -> p_{-k}.
    pub fn reflect(&self) -> Self {
        match self {
            NoiseDistribution::Finite1D { offset, probs } => {
                let mut p = probs.clone();
                p.reverse();
                NoiseDistribution::Finite1D {
                    offset: -(offset + probs.len() as i64 - 1),
                    probs: p,
                }
            }
            NoiseDistribution::GeometricLaplace { .. } => self.clone(),
            NoiseDistribution::Product { axes } => NoiseDistribution::Product {
                axes: axes.iter().map(|a| a.reflect()).collect(),
            },
        }
    }

    pub fn expected_cost(&self, cost: &CostFn) -> Result<f64> {
        Ok(self.expected_cost_estimate(cost)?.value)
    }

    /// Expected cost plus an absolute error bound (rounding and series truncation).
    pub fn expected_cost_estimate(&self, cost: &CostFn) -> Result<CostEstimate> {
        cost.validate()?;
        match self {
            NoiseDistribution::Finite1D { offset, probs } => {
                let mut s = CompensatedSum::new();
                for (j, &p) in probs.iter().enumerate() {
                    if p != 0.0 {
                        s.add(p * cost.axis(offset + j as i64)?);
                    }
                }
                let v = s.value();
                Ok(CostEstimate {
                    value: v,
                    error_bound: 4.0 * f64::EPSILON * v.abs(),
                })
            }
            NoiseDistribution::GeometricLaplace { lambda } => geometric_cost(*lambda, cost),
            NoiseDistribution::Product { axes } => {
                let mut v = CompensatedSum::new();
                let mut e = 0.0;
                for a in axes {
                    let c = a.expected_cost_estimate(cost)?;
                    v.add(c.value);
                    e += c.error_bound;
                }
                Ok(CostEstimate {
                    value: v.value(),
                    error_bound: e,
                })
            }
        }
    }
}

/// (1 - lambda) / (1 + lambda)
pub fn geometric_norm(lambda: f64) -> f64 {
    (1.0 - lambda) / (1.0 + lambda)
}

const SERIES_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: u64 = 100_000_000;

fn geometric_cost(lambda: f64, cost: &CostFn) -> Result<CostEstimate> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let c = geometric_norm(lambda);
    let rounding = |v: f64| CostEstimate {
        value: v,
        error_bound: 8.0 * f64::EPSILON * v.abs(),
    };
    match cost {
        CostFn::L1 | CostFn::Power { m: 1 } => {
            Ok(rounding(2.0 * lambda / ((1.0 - lambda) * (1.0 + lambda))))
        }
        CostFn::L2 | CostFn::Power { m: 2 } => {
            let q = 1.0 - lambda;
            Ok(rounding(2.0 * lambda / (q * q)))
        }
        CostFn::Power { m } => {
            let m = *m as i32;
            let mut s = CompensatedSum::new();
            let mut w = 2.0 * c;
            let mut k: u64 = 1;
            loop {
                w *= lambda;
                s.add(w * (k as f64).powi(m));
                let next = k + 1;
                let tail_mass = 2.0 * c * lambda.powf(next as f64) / (1.0 - lambda);
                let ratio = lambda * (1.0 + 1.0 / next as f64).powi(m);
                if tail_mass < SERIES_TOL && ratio < 1.0 {
                    let t_next = w * lambda * (next as f64).powi(m);
                    let tail = t_next / (1.0 - ratio);
                    if tail < SERIES_TOL * s.value().abs().max(1.0) {
                        let v = s.value();
                        return Ok(CostEstimate {
                            value: v,
                            error_bound: tail + 8.0 * f64::EPSILON * v.abs(),
                        });
                    }
                }
                k = next;
                if k > SERIES_MAX_TERMS {
                    return Err(Error::DivergentCost(format!(
                        "series for |k|^{m} under lambda = {lambda} did not converge within {SERIES_MAX_TERMS} terms"
                    )));
                }
            }
        }
        CostFn::Table { values, tail } => {
            if *tail == TailRule::Error {
                return Err(Error::TableOutOfRange(values.len() as u64));
            }
            let mut s = CompensatedSum::new();
            for (k, &v) in values.iter().enumerate().skip(1) {
                s.add(2.0 * c * lambda.powi(k as i32) * v);
            }
            let len = values.len() as f64;
            let last = *values.last().expect("nonempty table");
            s.add(last * 2.0 * c * lambda.powf(len) / (1.0 - lambda));
            Ok(rounding(s.value()))
        }
    }
}
