//! Closed-form and certificate-backed bounds on the minimal expected cost.

use serde::{Deserialize, Serialize};

use crate::certificates::{self, verify_certificate};
use crate::cost::CostFn;
use crate::distribution::NoiseDistribution;
use crate::error::{Error, Result};
use crate::lp;
use crate::mechanisms::uniform_half_width;
use crate::numeric::{positive_integer, CompensatedSum};
use crate::params::PrivacyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ZeroDeltaTheorem,
    EpsDeltaCertificate,
    MultiL1ZeroDeltaTheorem,
    MultiL2ZeroDeltaTheorem,
    MultiL1EpsDeltaCertificate,
    MultiL2EpsDeltaCertificate,
    LinearProgram,
    UniformMechanism,
    LaplaceMechanism,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ZeroDeltaTheorem => "zero_delta_theorem",
            Method::EpsDeltaCertificate => "eps_delta_certificate",
            Method::MultiL1ZeroDeltaTheorem => "multi_l1_zero_delta_theorem",
            Method::MultiL2ZeroDeltaTheorem => "multi_l2_zero_delta_theorem",
            Method::MultiL1EpsDeltaCertificate => "multi_l1_eps_delta_certificate",
            Method::MultiL2EpsDeltaCertificate => "multi_l2_eps_delta_certificate",
            Method::LinearProgram => "linear_program",
            Method::UniformMechanism => "uniform_mechanism",
            Method::LaplaceMechanism => "laplace_mechanism",
        }
    }
}

/// A lower or upper bound; when `preconditions_ok` is false the value is not certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub value: f64,
    pub kind: BoundKind,
    pub method: Method,
    pub preconditions_ok: bool,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn upper(value: f64, method: Method, notes: Vec<String>) -> Self {
        Self {
            value,
            kind: BoundKind::Upper,
            method,
            preconditions_ok: true,
            notes,
        }
    }
}

fn half_inverse(delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1], got {delta}")));
    }
    let x = 1.0 / (2.0 * delta);
    positive_integer(x).ok_or_else(|| Error::IntegralityViolated {
        what: "1/(2 delta)".into(),
        value: x,
        nearest_delta: 1.0 / (2.0 * x.round().max(1.0)),
    })
}

/// 2 delta sum_{i<1/(2 delta)} L(1 + i Delta), with the cost growth condition checked.
pub fn lb_zero_delta(cost: &CostFn, sensitivity: u32, delta: f64) -> Result<BoundReport> {
    cost.validate()?;
    PrivacyParams::one_dim(0.0, delta, sensitivity)?;
    let m = half_inverse(delta)? as i64;
    let dl = sensitivity as i64;
    let mut s = CompensatedSum::new();
    for i in 0..m {
        s.add(cost.axis(1 + i * dl)?);
    }
    let value = s.value() / m as f64;
    let mut rhs = CompensatedSum::new();
    rhs.add(cost.axis(1)?);
    for i in 1..=m {
        rhs.add(cost.axis(1 + i * dl)?);
        rhs.add(-cost.axis(i * dl)?);
    }
    let lhs = cost.axis(1 + m * dl)?;
    let condition = lhs >= 2.0 * rhs.value();
    let mut notes = vec![format!("1/(2 delta) = {m}")];
    if !condition {
        notes.push(format!(
            "growth condition fails: L(1 + Delta/(2 delta)) = {lhs} < {}; value is not a certified lower bound",
            2.0 * rhs.value()
        ));
    }
    Ok(BoundReport {
        value,
        kind: BoundKind::Lower,
        method: Method::ZeroDeltaTheorem,
        preconditions_ok: condition,
        notes,
    })
}

/// Expected cost of the uniform mechanism, 2 sum_{i<M} (delta/Delta) L(i) + (delta/Delta) L(M), M = Delta/(2 delta).
pub fn ub_uniform_1d(cost: &CostFn, sensitivity: u32, delta: f64) -> Result<BoundReport> {
    cost.validate()?;
    PrivacyParams::one_dim(0.0, delta, sensitivity)?;
    let m = uniform_half_width(sensitivity, delta)? as i64;
    let mut s = CompensatedSum::new();
    for i in 1..m {
        s.add(2.0 * cost.axis(i)?);
    }
    s.add(cost.axis(m)?);
    let value = s.value() / (2 * m) as f64;
    Ok(BoundReport::upper(value, Method::UniformMechanism, vec![format!("Delta/(2 delta) = {m}")]))
}

/// Parameters of the (epsilon, delta) series bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsDeltaSeriesParams {
    pub a: f64,
    pub b: f64,
    /// Real solution of sum_{k<n} a b^k = 1/2 (infinite when delta = 0).
    pub n_star: f64,
}

impl EpsDeltaSeriesParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        PrivacyParams::one_dim(epsilon, delta, 1)?.validate_nontrivial()?;
        let b = (-epsilon).exp();
        let a = (delta + epsilon.exp_m1() / 2.0) * b;
        let n_star = if epsilon == 0.0 {
            1.0 / (2.0 * delta)
        } else if delta == 0.0 {
            f64::INFINITY
        } else {
            let one_minus_b = -(-epsilon).exp_m1();
            (-(one_minus_b / (2.0 * a))).ln_1p() / b.ln()
        };
        Ok(Self { a, b, n_star })
    }

    /// 2 sum_{k<n} a b^k L(1 + k Delta)
    pub fn series(&self, cost: &CostFn, sensitivity: u32, n: u64) -> Result<f64> {
        let mut s = CompensatedSum::new();
        let mut w = 2.0 * self.a;
        for k in 0..n {
            s.add(w * cost.axis(1 + (k * sensitivity as u64) as i64)?);
            w *= self.b;
        }
        Ok(s.value())
    }
}

/// Largest n tried by [`lb_eps_delta`].
fn n_cap(sensitivity: u32, epsilon: f64, delta: f64) -> u64 {
    let by_memory = (certificates::MAX_AXIS_WEIGHTS as u64 / 2) / sensitivity as u64;
    if delta == 0.0 {
        // keep the certificate support inside the default LP truncation
        let big_n = lp::default_truncation(sensitivity, epsilon, 0.0);
        ((big_n - 1) / sensitivity as u64 + 1).min(by_memory)
    } else {
        by_memory
    }
}

/// Truncation lengths n tried for the (epsilon, delta) certificate: floor(n*), ceil(n*), ceil(n*) + 1.
pub fn eps_delta_candidates(sensitivity: u32, epsilon: f64, delta: f64) -> Result<Vec<u64>> {
    let sp = EpsDeltaSeriesParams::new(epsilon, delta)?;
    let cap = n_cap(sensitivity, epsilon, delta).max(2);
    let clip = |x: f64| -> u64 {
        if x.is_finite() {
            (x.max(2.0).min(cap as f64)) as u64
        } else {
            cap
        }
    };
    let mut c = vec![clip(sp.n_star.floor()), clip(sp.n_star.ceil()), clip(sp.n_star.ceil() + 1.0)];
    c.dedup();
    Ok(c)
}

/// Best verified (epsilon, delta) certificate objective over n near n*.
pub fn lb_eps_delta(cost: &CostFn, sensitivity: u32, epsilon: f64, delta: f64) -> Result<BoundReport> {
    cost.validate()?;
    let params = PrivacyParams::one_dim(epsilon, delta, sensitivity)?;
    params.validate_nontrivial()?;
    let sp = EpsDeltaSeriesParams::new(epsilon, delta)?;
    let candidates = eps_delta_candidates(sensitivity, epsilon, delta)?;
    let mut best: Option<(f64, u64)> = None;
    let mut notes = vec![format!("n* = {}", sp.n_star)];
    for &n in &candidates {
        let cert = match certificates::build_cert_eps_delta_1d(cost, sensitivity, epsilon, delta, n) {
            Ok(c) => c,
            Err(e) => {
                notes.push(format!("n = {n}: {e}"));
                continue;
            }
        };
        let rep = verify_certificate(&cert, cost, &params)?;
        notes.push(format!(
            "n = {n}: objective {}, worst violation {:e}{}",
            rep.objective,
            rep.worst_violation,
            if rep.feasible { "" } else { " (rejected)" }
        ));
        if rep.feasible && best.map_or(true, |(v, _)| rep.objective > v) {
            best = Some((rep.objective, n));
        }
    }
    if let Some((value, n)) = best {
        notes.push(format!("certified with n = {n}"));
        return Ok(BoundReport {
            value,
            kind: BoundKind::Lower,
            method: Method::EpsDeltaCertificate,
            preconditions_ok: true,
            notes,
        });
    }
    let big_n = lp::default_truncation(sensitivity, epsilon, delta);
    if big_n <= lp::MAX_TRUNCATION {
        let mut r = lp::lp_lower_bound(cost, &params, Some(big_n))?;
        notes.push("no candidate certificate verified; fell back to the relaxed LP".into());
        r.notes.splice(0..0, notes);
        return Ok(r);
    }
    Err(Error::NoFeasibleCertificate(notes.join("; ")))
}

fn laplace_lambda(sensitivity: u32, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonZero);
    }
    Ok((-epsilon / sensitivity as f64).exp())
}

/// Expected cost of the discrete Laplacian mechanism with lambda = exp(-epsilon/Delta).
pub fn ub_laplace(cost: &CostFn, sensitivity: u32, epsilon: f64) -> Result<BoundReport> {
    ub_laplace_multi(cost, 1, sensitivity, epsilon)
}

pub fn ub_laplace_multi(cost: &CostFn, dims: u32, sensitivity: u32, epsilon: f64) -> Result<BoundReport> {
    cost.validate()?;
    if sensitivity == 0 || dims == 0 {
        return Err(Error::InvalidParams("dims and sensitivity must be >= 1".into()));
    }
    let lambda = laplace_lambda(sensitivity, epsilon)?;
    let t = epsilon / sensitivity as f64;
    let per_axis = match cost {
        CostFn::L1 | CostFn::Power { m: 1 } => 2.0 * lambda / -(-2.0 * t).exp_m1(),
        CostFn::L2 | CostFn::Power { m: 2 } => {
            let q = -(-t).exp_m1();
            2.0 * lambda / (q * q)
        }
        other => NoiseDistribution::geometric(lambda).expected_cost(other)?,
    };
    Ok(BoundReport::upper(
        dims as f64 * per_axis,
        Method::LaplaceMechanism,
        vec![format!("lambda = {lambda}")],
    ))
}

fn l1_or_l2(cost: &CostFn) -> Result<bool> {
    if cost.is_l1() {
        Ok(true)
    } else if cost.is_l2() {
        Ok(false)
    } else {
        Err(Error::Unsupported("multi-dimensional bounds need the l1 or l2 cost".into()))
    }
}

/// Zero-delta multi-dimensional lower bounds for l1 and l2.
pub fn lb_multi_zero_delta(cost: &CostFn, dims: u32, sensitivity: u32, delta: f64) -> Result<BoundReport> {
    PrivacyParams::new(0.0, delta, sensitivity, dims)?.validate_nontrivial()?;
    let d = dims as f64;
    let dl = sensitivity as f64;
    if l1_or_l2(cost)? {
        let (value, ok, notes) = match half_inverse(delta) {
            Ok(m) => (
                d * dl * m as f64 / 2.0 - (dl - 1.0) * d / 2.0,
                true,
                vec![format!("1/(2 delta) = {m}")],
            ),
            Err(e) => (
                d * dl / (4.0 * delta) - (dl - 1.0) * d / 2.0,
                false,
                vec![format!("{e}; value is not certified")],
            ),
        };
        Ok(BoundReport {
            value,
            kind: BoundKind::Lower,
            method: Method::MultiL1ZeroDeltaTheorem,
            preconditions_ok: ok,
            notes,
        })
    } else {
        let m = half_inverse(delta)? as f64;
        let value = d * dl * dl * m * m / 3.0
            + d * dl * (1.0 - dl) * m / 2.0
            + (1.0 - dl) * d / 2.0
            + d * dl * dl / 6.0;
        Ok(BoundReport {
            value,
            kind: BoundKind::Lower,
            method: Method::MultiL2ZeroDeltaTheorem,
            preconditions_ok: true,
            notes: vec![format!("1/(2 delta) = {m}")],
        })
    }
}

/// Expected cost of the product uniform mechanism: d times the 1-D value.
pub fn ub_uniform_multi(cost: &CostFn, dims: u32, sensitivity: u32, delta: f64) -> Result<BoundReport> {
    PrivacyParams::new(0.0, delta, sensitivity, dims)?;
    let d = dims as f64;
    let m = uniform_half_width(sensitivity, delta)? as f64;
    let value = if cost.is_l1() {
        d * m / 2.0
    } else if cost.is_l2() {
        d * m * m / 3.0 + d / 6.0
    } else {
        d * ub_uniform_1d(cost, sensitivity, delta)?.value
    };
    Ok(BoundReport::upper(value, Method::UniformMechanism, vec![format!("Delta/(2 delta) = {m}")]))
}

/// Certificate bound for the (beta, beta) relaxation, beta = max(epsilon, delta).
pub fn lb_multi_eps_delta(
    cost: &CostFn,
    dims: u32,
    sensitivity: u32,
    epsilon: f64,
    delta: f64,
) -> Result<BoundReport> {
    let params = PrivacyParams::new(epsilon, delta, sensitivity, dims)?;
    params.validate_nontrivial()?;
    let beta = params.beta();
    let (cert, method) = if l1_or_l2(cost)? {
        (
            certificates::build_cert_multi_eps_delta_l1(dims, sensitivity, beta)?,
            Method::MultiL1EpsDeltaCertificate,
        )
    } else {
        (
            certificates::build_cert_multi_eps_delta_l2(dims, sensitivity, beta)?,
            Method::MultiL2EpsDeltaCertificate,
        )
    };
    let rep = verify_certificate(&cert, cost, &params)?;
    if !rep.feasible {
        return Err(Error::NoFeasibleCertificate(format!(
            "worst violation {:e} at {}",
            rep.worst_violation, rep.worst_constraint
        )));
    }
    let mut notes = vec![format!("beta = {beta}")];
    notes.extend(cert.notes);
    Ok(BoundReport {
        value: rep.objective,
        kind: BoundKind::Lower,
        method,
        preconditions_ok: true,
        notes,
    })
}

/// Best certified lower bound, best upper bound and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub cost: String,
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: u32,
    pub dims: u32,
    pub v_lb: Option<f64>,
    pub lb_method: Option<String>,
    pub v_ub_uniform: Option<f64>,
    pub v_ub_laplace: Option<f64>,
    pub v_ub_min: Option<f64>,
    pub ratio: Option<f64>,
    pub lower: Option<BoundReport>,
    pub upper: Option<BoundReport>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

/// Collects every applicable bound; with `lp_fallback`, a one-dimensional LP
/// supplies the lower bound when no certified closed form applies.
pub fn gap_report_with(cost: &CostFn, params: &PrivacyParams, lp_fallback: bool) -> Result<GapReport> {
    cost.validate()?;
    params.validate_nontrivial()?;
    let PrivacyParams {
        epsilon,
        delta,
        sensitivity,
        dims,
    } = *params;
    let mut flags: Vec<String> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut lowers: Vec<BoundReport> = Vec::new();
    let mut record = |r: Result<BoundReport>, what: &str, flags: &mut Vec<String>, notes: &mut Vec<String>| {
        match r {
            Ok(b) => {
                if !b.preconditions_ok {
                    notes.push(format!("{what}: {} not certified", b.value));
                }
                lowers.push(b);
            }
            Err(Error::IntegralityViolated { .. }) => {
                if !flags.iter().any(|f| f == "integrality") {
                    flags.push("integrality".into());
                }
            }
            Err(e) => notes.push(format!("{what}: {e}")),
        }
    };
    let pure_l = cost.is_l1() || cost.is_l2();
    if dims == 1 {
        if epsilon == 0.0 {
            record(lb_zero_delta(cost, sensitivity, delta), "zero-delta theorem", &mut flags, &mut notes);
        }
        record(lb_eps_delta(cost, sensitivity, epsilon, delta), "eps-delta certificate", &mut flags, &mut notes);
    } else if pure_l {
        if epsilon == 0.0 {
            record(
                lb_multi_zero_delta(cost, dims, sensitivity, delta),
                "multi zero-delta theorem",
                &mut flags,
                &mut notes,
            );
        }
    } else {
        notes.push("multi-dimensional lower bounds need the l1 or l2 cost".into());
    }
    if pure_l {
        record(
            lb_multi_eps_delta(cost, dims, sensitivity, epsilon, delta),
            "beta certificate",
            &mut flags,
            &mut notes,
        );
    }
    let mut lower = lowers
        .iter()
        .filter(|b| b.preconditions_ok)
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .cloned();
    if lower.is_none() && lp_fallback && dims == 1 {
        match lp::lp_lower_bound(cost, params, None) {
            Ok(b) => lower = Some(b),
            Err(e) => notes.push(format!("LP fallback: {e}")),
        }
    }
    if lower.is_none() {
        flags.push("lb_uncertified".into());
    } else if let Some(b) = &lower {
        if b.method == Method::LinearProgram && !b.preconditions_ok {
            flags.push("lp_truncation_suspect".into());
        }
    }

    let uniform = if delta > 0.0 {
        let r = if dims == 1 {
            ub_uniform_1d(cost, sensitivity, delta)
        } else {
            ub_uniform_multi(cost, dims, sensitivity, delta)
        };
        match r {
            Ok(b) => Some(b),
            Err(Error::IntegralityViolated { .. }) => {
                if !flags.iter().any(|f| f == "integrality") {
                    flags.push("integrality".into());
                }
                None
            }
            Err(e) => {
                notes.push(format!("uniform mechanism: {e}"));
                None
            }
        }
    } else {
        None
    };
    let laplace = if epsilon > 0.0 {
        match ub_laplace_multi(cost, dims, sensitivity, epsilon) {
            Ok(b) => Some(b),
            Err(e) => {
                notes.push(format!("Laplacian mechanism: {e}"));
                None
            }
        }
    } else {
        None
    };
    let upper = [&uniform, &laplace]
        .into_iter()
        .flatten()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .cloned();
    let v_lb = lower.as_ref().map(|b| b.value);
    let v_ub_min = upper.as_ref().map(|b| b.value);
    let ratio = match (v_lb, v_ub_min) {
        (Some(l), Some(u)) if l > 0.0 => Some(u / l),
        _ => None,
    };
    Ok(GapReport {
        cost: cost.label(),
        epsilon,
        delta,
        sensitivity,
        dims,
        v_lb,
        lb_method: lower.as_ref().map(|b| b.method.tag().to_string()),
        v_ub_uniform: uniform.as_ref().map(|b| b.value),
        v_ub_laplace: laplace.as_ref().map(|b| b.value),
        v_ub_min,
        ratio,
        lower,
        upper,
        flags,
        notes,
    })
}

pub fn gap_report(cost: &CostFn, params: &PrivacyParams) -> Result<GapReport> {
    gap_report_with(cost, params, true)
}
