//! Region of (false alarm, missed detection) pairs any test must respect under (epsilon, delta)-DP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRegion {
    pub epsilon: f64,
    pub delta: f64,
    /// Lower boundary polyline, ordered by increasing p_fa.
    pub vertices: Vec<(f64, f64)>,
}

/// Always returns three vertices; the middle one is kept even when collinear.
pub fn tradeoff_region(epsilon: f64, delta: f64) -> Result<TradeoffRegion> {
    if !(epsilon >= 0.0) || epsilon.is_infinite() {
        return Err(Error::InvalidParams(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParams(format!("delta must lie in [0, 1], got {delta}")));
    }
    let top = 1.0 - delta;
    let mid = top / (1.0 + epsilon.exp());
    Ok(TradeoffRegion {
        epsilon,
        delta,
        vertices: vec![(0.0, top), (mid, mid), (top, 0.0)],
    })
}

impl TradeoffRegion {
    pub fn contains(&self, p_fa: f64, p_md: f64) -> bool {
        point_feasible(self, p_fa, p_md)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("p_fa,p_md\n");
        for &(x, y) in &self.vertices {
            s.push_str(&format!(
                "{},{}\n",
                crate::numeric::fmt_sig(x),
                crate::numeric::fmt_sig(y)
            ));
        }
        s
    }
}

const SLACK: f64 = 1e-12;

pub fn point_feasible(region: &TradeoffRegion, p_fa: f64, p_md: f64) -> bool {
    let e = region.epsilon.exp();
    let rhs = 1.0 - region.delta;
    p_fa + e * p_md >= rhs - SLACK && e * p_fa + p_md >= rhs - SLACK
}
