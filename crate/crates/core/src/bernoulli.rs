//! Conditional Bernoulli process versus conditional Poisson process.
//!
//! `Ξ = Σ_{i<=n} X_i δ_{i/n}` with iid `X_i ~ Bernoulli(p)`, conditioned on at
//! least one point, is compared in `d̄2` with `Po^(1)(Λ_bold)` for
//! `Λ_bold(dx) = np dx` on `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{component, replicate, MCEstimate};
use crate::metrics::d2_bar_empirical;
use crate::simulate::{sample_many, Law};
use crate::space::GroundSpace;

/// The two explicit bounds on `d̄2(L(Ξ^(1)), Po^(1)(Λ_bold))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernoulliBounds {
    pub bound1: f64,
    /// Only defined when `np > 3`.
    pub bound2: Option<f64>,
}

impl BernoulliBounds {
    /// The sharper of the available bounds.
    pub fn best(&self) -> f64 {
        self.bound2.map_or(self.bound1, |b2| b2.min(self.bound1))
    }
}

fn check(n: usize, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

pub fn bernoulli_bound(n: usize, p: f64) -> Result<BernoulliBounds> {
    check(n, p)?;
    let nf = n as f64;
    let lambda = nf * p;
    // 1 / (1 - (1-p)^n)
    let prefactor = 1.0 / -(nf * (-p).ln_1p()).exp_m1();
    let xz = (1.0 / (2.0 * nf) + p / 2.0).min(1.0 / (3.0 * lambda).sqrt());
    let denom = (((nf - 1.0) * p * (1.0 - p)).sqrt()).max(0.5);
    let bound1 = prefactor * (xz + (p + 2.0 * p * (0.95 + lambda.ln().max(0.0))) / denom);
    let bound2 = (lambda > 3.0).then(|| {
        prefactor * (xz + (p + nf * p * p * (0.95 + lambda.ln())) / ((lambda - 1.0) * denom))
    });
    Ok(BernoulliBounds { bound1, bound2 })
}

/// Estimator bias measured as the distance between two independent sample
/// sets of one law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub mean: MCEstimate,
    /// `mean + 3 SE`.
    pub allowance: f64,
}

/// Mean over `replicas` of `d2_bar_empirical(P, P')` for independent sets `P`,
/// `P'` of `samples` draws each. Replica `r` draws both sets, `P` first, from
/// its own stream.
pub fn self_distance_calibration(
    law: &Law,
    space: &GroundSpace,
    samples: usize,
    replicas: usize,
    seed: u64,
) -> Result<Calibration> {
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples per set"));
    }
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 calibration replicas"));
    }
    law.validate(space)?;
    let distances = replicate(seed, component::CALIBRATION_P, replicas, |s| -> Result<f64> {
        let p = (0..samples).map(|_| law.sample(space, s)).collect::<Result<Vec<_>>>()?;
        let q = (0..samples).map(|_| law.sample(space, s)).collect::<Result<Vec<_>>>()?;
        Ok(d2_bar_empirical(&p, &q, space)?.estimate)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mean = MCEstimate::from_samples(&distances, seed);
    let allowance = mean.estimate + 3.0 * mean.std_error;
    Ok(Calibration { mean, allowance })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernoulliReport {
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub bound1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound2: Option<f64>,
    pub d2_estimate: f64,
    pub allowance: f64,
    pub pass: bool,
    /// Every available bound exceeds 1, the trivial bound on `d̄2`.
    pub vacuous: bool,
    pub samples: usize,
    pub calibration_replicas: usize,
    pub seed: u64,
    pub upward_biased: bool,
}

/// Draws `samples` configurations of `Ξ^(1)` and of `Po^(1)(np dx)`, estimates
/// their `d̄2` distance and checks it against the bounds plus the calibrated
/// estimator bias.
pub fn run_experiment(
    n: usize,
    p: f64,
    samples: usize,
    calibration_replicas: usize,
    seed: u64,
) -> Result<BernoulliReport> {
    check(n, p)?;
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let lambda = n as f64 * p;
    let space = GroundSpace::unit_interval(lambda)?;
    let bounds = bernoulli_bound(n, p)?;
    let xi = sample_many(&Law::Bernoulli { n, p, m: 1 }, &space, samples, seed, component::BERNOULLI_P)?;
    let po = Law::ConditionalPoisson { m: 1 };
    let pi = sample_many(&po, &space, samples, seed, component::BERNOULLI_Q)?;
    let d2 = d2_bar_empirical(&xi, &pi, &space)?;
    let calibration = self_distance_calibration(&po, &space, samples, calibration_replicas, seed)?;
    let best = bounds.best();
    Ok(BernoulliReport {
        n,
        p,
        lambda,
        bound1: bounds.bound1,
        bound2: bounds.bound2,
        d2_estimate: d2.estimate,
        allowance: calibration.allowance,
        pass: d2.estimate <= best + calibration.allowance,
        vacuous: best > 1.0,
        samples,
        calibration_replicas,
        seed,
        upward_biased: d2.upward_biased,
    })
}
