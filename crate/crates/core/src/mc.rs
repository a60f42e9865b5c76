//! Monte Carlo estimates and the replica runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stream::{component_index, derive_stream, RandomStream};

/// Point estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Replicas stopped by the event cap; their partial integrals are included.
    #[serde(default)]
    pub truncated: usize,
    /// Worst-case magnitude of the integral mass lost to truncation.
    #[serde(default)]
    pub tail_bound: f64,
}

impl MCEstimate {
    /// Sample mean and standard error of the mean. Summation is sequential, so
    /// the result depends only on the order of `samples`.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        // `+ 0.0` turns a negative zero into a positive one
        let mean = samples.iter().sum::<f64>() / n as f64 + 0.0;
        let se = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        MCEstimate { estimate: mean, std_error: se, replicas: n, seed, truncated: 0, tail_bound: 0.0 }
    }

    /// Exact zero, for estimators whose integrand vanishes identically.
    pub fn zero(replicas: usize, seed: u64) -> Self {
        MCEstimate { estimate: 0.0, std_error: 0.0, replicas, seed, truncated: 0, tail_bound: 0.0 }
    }

    /// `|estimate - target| <= sigmas * SE`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.estimate - target).abs() <= sigmas * self.std_error
    }
}

/// Stream components. Each estimator (or each part of a composite estimator)
/// owns one, so that its replicas never share streams with another part.
pub mod component {
    pub const CHAIN: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const SURVIVAL: u64 = 3;
    pub const DELTA_H: u64 = 4;
    pub const DELTA2_H: u64 = 5;
    pub const H: u64 = 6;
    pub const STEIN_IMMIGRATION: u64 = 7;
    pub const STEIN_TARGET: u64 = 8;
    pub const BERNOULLI_P: u64 = 9;
    pub const BERNOULLI_Q: u64 = 10;
    pub const CALIBRATION_P: u64 = 11;
    pub const CALIBRATION_Q: u64 = 12;
    /// Scenario generation in the verification pipelines.
    pub const SCENARIO: u64 = 13;
    /// Death terms of the Stein residual use `STEIN_DEATH + i` for the `i`-th point.
    pub const STEIN_DEATH: u64 = 1 << 12;
}

/// Runs `replicas` independent replicas, replica `r` on stream
/// `(seed, component_index(component, r))`. The output keeps replica order
/// whatever the thread schedule.
pub fn replicate<T, F>(seed: u64, component: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream) -> T + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = derive_stream(seed, component_index(component, r));
            f(&mut stream)
        })
        .collect()
}
