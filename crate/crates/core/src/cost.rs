use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a `Table` cost does for |k| past the last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    #[default]
    Error,
    HoldLast,
}

/// Symmetric nondecreasing loss on integers, evaluated on |k|.
///
/// Multi-dimensional points are scored coordinate-additively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CostFn {
    L1,
    L2,
    Power {
        m: u32,
    },
    Table {
        values: Vec<f64>,
        #[serde(default)]
        tail: TailRule,
    },
}

impl CostFn {
    pub fn table(values: Vec<f64>) -> Self {
        CostFn::Table {
            values,
            tail: TailRule::Error,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostFn::L1 | CostFn::L2 => Ok(()),
            CostFn::Power { m } => {
                if *m == 0 {
                    Err(Error::InvalidCost("power exponent must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            CostFn::Table { values, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidCost("table is empty".into()));
                }
                if values[0] != 0.0 {
                    return Err(Error::InvalidCost("table value at 0 must be 0".into()));
                }
                for (i, w) in values.windows(2).enumerate() {
                    if !w[1].is_finite() || w[1] < w[0] {
                        return Err(Error::InvalidCost(format!(
                            "table must be finite and nondecreasing (entry {})",
                            i + 1
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Loss of a scalar noise value.
    pub fn axis(&self, k: i64) -> Result<f64> {
        let a = k.unsigned_abs();
        match self {
            CostFn::L1 => Ok(a as f64),
            CostFn::L2 => {
                let x = a as f64;
                Ok(x * x)
            }
            CostFn::Power { m } => Ok((a as f64).powi(*m as i32)),
            CostFn::Table { values, tail } => match values.get(a as usize) {
                Some(v) => Ok(*v),
                None => match tail {
                    TailRule::Error => Err(Error::TableOutOfRange(a)),
                    TailRule::HoldLast => Ok(*values.last().expect("nonempty table")),
                },
            },
        }
    }

    /// Coordinate-additive loss of a point in Z^d.
    pub fn value(&self, point: &[i64]) -> Result<f64> {
        let mut s = 0.0;
        for &k in point {
            s += self.axis(k)?;
        }
        Ok(s)
    }

    /// Polynomial degree when the cost is a pure power of |k|.
    pub fn degree(&self) -> Option<u32> {
        match self {
            CostFn::L1 => Some(1),
            CostFn::L2 => Some(2),
            CostFn::Power { m } => Some(*m),
            CostFn::Table { .. } => None,
        }
    }

    pub fn is_l1(&self) -> bool {
        self.degree() == Some(1)
    }

    pub fn is_l2(&self) -> bool {
        self.degree() == Some(2)
    }

    /// Short label used in CSV output and on the command line.
    pub fn label(&self) -> String {
        match self {
            CostFn::L1 => "l1".into(),
            CostFn::L2 => "l2".into(),
            CostFn::Power { m } => format!("power:{m}"),
            CostFn::Table { .. } => "table".into(),
        }
    }
}
