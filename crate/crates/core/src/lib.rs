//! Discrete noise-adding mechanisms for (epsilon, delta)-differential privacy.
//!
//! The crate builds the uniform and discrete Laplacian mechanisms, checks the
//! privacy constraint of arbitrary integer pmfs, evaluates closed-form lower and
//! upper bounds on the minimal expected cost, constructs explicit dual
//! certificates for those lower bounds, and solves the truncated relaxed linear
//! programs that serve as a numerical oracle.

pub mod bounds;
pub mod certificates;
pub mod cli;
pub mod cost;
pub mod distribution;
pub mod error;
pub mod hypotest;
pub mod lp;
pub mod mechanisms;
pub mod numeric;
pub mod params;
pub mod privacy;
pub mod sweep;

pub use bounds::{BoundKind, BoundReport, GapReport, Method};
pub use certificates::{CertificateReport, DualCertificate, Regime};
pub use cost::{CostFn, TailRule};
pub use distribution::NoiseDistribution;
pub use error::{Error, Result};
pub use params::PrivacyParams;
pub use privacy::PrivacyReport;
