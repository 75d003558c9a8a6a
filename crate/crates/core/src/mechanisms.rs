//! The uniform and discrete Laplacian mechanisms, and reproducible sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Geometric};

use crate::distribution::{geometric_norm, NoiseDistribution};
use crate::error::{Error, Result};
use crate::numeric::{positive_integer, CompensatedSum};
use crate::params::PrivacyParams;

/// Half-width Delta/(2 delta) of the uniform mechanism, which must be a positive integer.
pub fn uniform_half_width(sensitivity: u32, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "the uniform mechanism needs 0 < delta <= 1, got {delta}"
        )));
    }
    let ratio = sensitivity as f64 / (2.0 * delta);
    positive_integer(ratio).ok_or_else(|| {
        let m = ratio.round().max(1.0);
        Error::IntegralityViolated {
            what: "Delta/(2 delta)".into(),
            value: ratio,
            nearest_delta: sensitivity as f64 / (2.0 * m),
        }
    })
}

/// Uniform noise on [-Delta/(2 delta), Delta/(2 delta) - 1], each cell of mass delta/Delta.
pub fn uniform_mechanism_1d(params: &PrivacyParams) -> Result<NoiseDistribution> {
    params.validate()?;
    let m = uniform_half_width(params.sensitivity, params.delta)?;
    let width = 2 * m;
    Ok(NoiseDistribution::finite(
        -(m as i64),
        vec![1.0 / width as f64; width as usize],
    ))
}

/// Product of `dims` identical 1-D uniform axes (the 1-D pmf itself when dims = 1).
pub fn uniform_mechanism_multi(params: &PrivacyParams) -> Result<NoiseDistribution> {
    let axis = uniform_mechanism_1d(params)?;
    if params.dims == 1 {
        return Ok(axis);
    }
    Ok(NoiseDistribution::product(vec![axis; params.dims as usize]))
}

/// Discrete Laplacian with lambda = exp(-epsilon/Delta), per axis.
pub fn discrete_laplace(params: &PrivacyParams) -> Result<NoiseDistribution> {
    params.validate()?;
    if params.epsilon <= 0.0 {
        return Err(Error::EpsilonZero);
    }
    let lambda = (-params.epsilon / params.sensitivity as f64).exp();
    let axis = NoiseDistribution::geometric(lambda);
    if params.dims == 1 {
        Ok(axis)
    } else {
        Ok(NoiseDistribution::product(vec![axis; params.dims as usize]))
    }
}

/// `n` draws of dimension `dims`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub seed: u64,
    pub dims: usize,
    pub values: Vec<i64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[i64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn draws(&self) -> impl Iterator<Item = &[i64]> {
        self.values.chunks(self.dims)
    }

    /// One CSV row of `dims` integers per draw.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 4);
        for d in self.draws() {
            for (j, v) in d.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

enum AxisSampler {
    Table { offset: i64, cdf: Vec<f64>, last: usize },
    Geometric { zero_mass: f64, magnitude: Geometric },
}

impl AxisSampler {
    fn new(dist: &NoiseDistribution) -> Result<Self> {
        match dist {
            NoiseDistribution::Finite1D { offset, probs } => {
                let mut s = CompensatedSum::new();
                let cdf = probs
                    .iter()
                    .map(|&p| {
                        s.add(p);
                        s.value()
                    })
                    .collect();
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                Ok(AxisSampler::Table {
                    offset: *offset,
                    cdf,
                    last,
                })
            }
            NoiseDistribution::GeometricLaplace { lambda } => Ok(AxisSampler::Geometric {
                zero_mass: geometric_norm(*lambda),
                magnitude: Geometric::new(1.0 - lambda)
                    .map_err(|e| Error::InvalidParams(e.to_string()))?,
            }),
            NoiseDistribution::Product { .. } => {
                Err(Error::InvalidParams("nested product distribution".into()))
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> i64 {
        match self {
            AxisSampler::Table { offset, cdf, last } => {
                let u: f64 = rng.random();
                let j = cdf.partition_point(|&c| c <= u).min(*last);
                offset + j as i64
            }
            AxisSampler::Geometric {
                zero_mass,
                magnitude,
            } => {
                let u: f64 = rng.random();
                if u < *zero_mass {
                    return 0;
                }
                let m = 1 + magnitude.sample(rng) as i64;
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            }
        }
    }
}

/// `n` independent draws from `dist`, reproducible from `seed` (ChaCha20).
pub fn sample(dist: &NoiseDistribution, seed: u64, n: usize) -> Result<SampleBatch> {
    dist.validate()?;
    let samplers = match dist {
        NoiseDistribution::Product { axes } => {
            axes.iter().map(AxisSampler::new).collect::<Result<Vec<_>>>()?
        }
        other => vec![AxisSampler::new(other)?],
    };
    let dims = samplers.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * dims);
    for _ in 0..n {
        for s in &samplers {
            values.push(s.sample(&mut rng));
        }
    }
    Ok(SampleBatch { seed, dims, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostFn;

    fn p(eps: f64, delta: f64, sens: u32, dims: u32) -> PrivacyParams {
        PrivacyParams::new(eps, delta, sens, dims).unwrap()
    }

    #[test]
    fn uniform_examples() {
        let u = uniform_mechanism_1d(&p(0.0, 0.25, 1, 1)).unwrap();
        assert_eq!(u, NoiseDistribution::finite(-2, vec![0.25; 4]));
        let u = uniform_mechanism_1d(&p(0.0, 0.05, 2, 1)).unwrap();
        assert_eq!(u.finite_support(), Some((-20, 19)));
        assert_eq!(u.pmf(0), 0.025);
        match uniform_mechanism_1d(&p(0.0, 0.2, 3, 1)) {
            Err(Error::IntegralityViolated { value, .. }) => assert!((value - 7.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_multi_examples() {
        let u = uniform_mechanism_multi(&p(0.0, 0.25, 1, 2)).unwrap();
        assert_eq!(u.joint_pmf(&[-2, 1]), 0.0625);
        assert_eq!(u.joint_pmf(&[2, 1]), 0.0);
        let a = uniform_mechanism_multi(&p(0.0, 0.05, 2, 1)).unwrap();
        assert_eq!(a, uniform_mechanism_1d(&p(0.0, 0.05, 2, 1)).unwrap());
        match uniform_mechanism_multi(&p(0.0, 0.05, 1, 3)).unwrap() {
            NoiseDistribution::Product { axes } => {
                assert_eq!(axes.len(), 3);
                for a in axes {
                    assert_eq!(a.finite_support(), Some((-10, 9)));
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn laplace_examples() {
        let l = discrete_laplace(&p(1.0, 0.0, 1, 1)).unwrap();
        match l {
            NoiseDistribution::GeometricLaplace { lambda } => {
                assert!((lambda - 0.36787944).abs() < 1e-8)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(l, discrete_laplace(&p(2.0, 0.0, 2, 1)).unwrap());
        assert_eq!(discrete_laplace(&p(0.0, 0.1, 1, 1)), Err(Error::EpsilonZero));
        assert_eq!(discrete_laplace(&p(1.0, 0.0, 1, 3)).unwrap().dims(), 3);
    }

    #[test]
    fn sampling_is_deterministic() {
        let u = uniform_mechanism_1d(&p(0.0, 0.05, 1, 1)).unwrap();
        let a = sample(&u, 42, 1000).unwrap();
        let b = sample(&u, 42, 1000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample(&u, 43, 1000).unwrap());
        assert!(a.values.iter().all(|&v| (-10..10).contains(&v)));
        let pm = sample(&NoiseDistribution::point_mass(), 9, 5).unwrap();
        assert_eq!(pm.values, vec![0; 5]);
    }

    #[test]
    fn product_sampling_shape() {
        let d = discrete_laplace(&p(1.0, 0.0, 1, 3)).unwrap();
        let s = sample(&d, 1, 10).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.draw(3).len(), 3);
        assert_eq!(s.to_csv().lines().count(), 10);
    }

    #[test]
    fn uniform_cost_matches_corollaries() {
        for sens in 1..=3u32 {
            for &delta in &[0.25, 0.05] {
                let u = uniform_mechanism_1d(&p(0.0, delta, sens, 1)).unwrap();
                let d = sens as f64;
                let l1 = u.expected_cost(&CostFn::L1).unwrap();
                assert!((l1 - d / (4.0 * delta)).abs() <= 1e-12);
                let l2 = u.expected_cost(&CostFn::L2).unwrap();
                assert!((l2 - (d * d / (12.0 * delta * delta) + 1.0 / 6.0)).abs() <= 1e-9);
            }
        }
    }
}
