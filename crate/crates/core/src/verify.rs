//! Verification pipelines: Monte Carlo estimates checked against closed forms
//! and bounds. Each returns a flat table of rows plus an overall verdict.

use serde::Serialize;

use crate::bounds::{
    first_diff_bound, first_diff_bound_nonuniform, p_survival_analytic, p_survival_upper_bound,
    second_diff_bound, second_diff_bound_nonuniform,
};
use crate::coupling::{estimate_delta2_h, estimate_delta_h, estimate_p_survival, stein_residual, TestFunction};
use crate::error::{Error, Result};
use crate::mc::{component, MCEstimate};
use crate::simulate::sample_conditional_poisson;
use crate::space::{Configuration, GroundSpace, Point};
use crate::stream::{derive_stream, component_index, RandomStream};

/// Standard errors of slack allowed in every check.
pub const SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub scenario: String,
    pub estimate: f64,
    pub se: f64,
    /// The closed-form target (`p-survival`, `stein`) or upper bound (`delta-bounds`).
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pipeline: &'static str,
    pub lambda: f64,
    pub m: usize,
    pub replicas: usize,
    pub seed: u64,
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
}

impl VerifyReport {
    fn new(pipeline: &'static str, lambda: f64, m: usize, replicas: usize, seed: u64, rows: Vec<VerifyRow>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        VerifyReport { pipeline, lambda, m, replicas, seed, rows, pass }
    }
}

fn two_sided(scenario: String, est: &MCEstimate, target: f64) -> VerifyRow {
    VerifyRow {
        scenario,
        estimate: est.estimate,
        se: est.std_error,
        bound: target,
        pass: est.within(target, SIGMAS),
    }
}

fn dominated(scenario: String, est: &MCEstimate, bound: f64) -> VerifyRow {
    VerifyRow {
        scenario,
        estimate: est.estimate,
        se: est.std_error,
        bound,
        pass: est.estimate.abs() <= bound + SIGMAS * est.std_error,
    }
}

/// `p_{Λ,k}` under `Z^(m)` against the closed form; also checks the closed
/// form against `min(k/Λ, k/(k+1))`.
pub fn verify_p_survival(lambda: f64, m: usize, k: usize, replicas: usize, seed: u64) -> Result<VerifyReport> {
    let est = estimate_p_survival(lambda, k, m, replicas, seed)?;
    let exact = p_survival_analytic(lambda, k as u64)?;
    let mut row = two_sided(format!("p-survival k={k}"), &est, exact);
    row.pass &= exact <= p_survival_upper_bound(lambda, k as u64);
    Ok(VerifyReport::new("p-survival", lambda, m, replicas, seed, vec![row]))
}

fn spread_configuration(k: usize, space: &GroundSpace, stream: &mut RandomStream) -> Configuration {
    Configuration::from_locations((0..k).map(|_| space.sample_location(stream)))
}

fn scenario_stream(seed: u64) -> RandomStream {
    derive_stream(seed, component_index(component::SCENARIO, 0))
}

/// Stein residual of the count-only test function at one configuration of each
/// size in `xi_sizes`, locations drawn from the normalised intensity.
pub fn verify_stein(
    lambda: f64,
    m: usize,
    xi_sizes: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let space = GroundSpace::unit_interval(lambda)?;
    let f = TestFunction::count_ramp();
    let mut s = scenario_stream(seed);
    let mut rows = Vec::with_capacity(xi_sizes.len());
    for &k in xi_sizes {
        let xi = spread_configuration(k, &space, &mut s);
        let r = stein_residual(&f, &xi, m, &space, replicas, s.next_u64())?;
        rows.push(two_sided(format!("stein |xi|={k}"), &r.residual, 0.0));
    }
    Ok(VerifyReport::new("stein", lambda, m, replicas, seed, rows))
}

/// A first- and second-difference scenario: test function, base configuration
/// and the added points.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub f: TestFunction,
    pub xi: Configuration,
    pub alpha: Point,
    pub beta: Point,
    pub seed: u64,
}

fn test_function(i: usize, space: &GroundSpace) -> TestFunction {
    let mut lib = TestFunction::library(space);
    lib.push(TestFunction::count_ramp());
    lib.swap_remove(i % lib.len())
}

/// `count` scenarios with `ξ ~ Po^(m)`, then one per size in `sizes` with `ξ`
/// of that size. All randomness comes from `seed`.
pub fn delta_scenarios(
    space: &GroundSpace,
    m: usize,
    count: usize,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<(Scenario, Option<usize>)>> {
    let mut s = scenario_stream(seed);
    let mut out = Vec::with_capacity(count + sizes.len());
    for i in 0..count + sizes.len() {
        let fixed = i.checked_sub(count).map(|j| sizes[j]);
        let xi = match fixed {
            Some(k) => spread_configuration(k, space, &mut s),
            None => sample_conditional_poisson(space, m, &mut s)?,
        };
        let alpha = space.sample_location(&mut s);
        let beta = space.sample_location(&mut s);
        // fixed sizes skip the first library entry, constant once m >= 1
        let fi = if i < count { i } else { i - count + 1 };
        out.push((Scenario { f: test_function(fi, space), xi, alpha, beta, seed: s.next_u64() }, fixed));
    }
    Ok(out)
}

/// MC estimates of `Δh` and `Δ²h` checked against the uniform bounds on
/// `count` stationary scenarios and against the size-dependent bounds (for
/// `m >= 1`) on one scenario per entry of `sizes`.
pub fn verify_delta_bounds(
    lambda: f64,
    m: usize,
    count: usize,
    sizes: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<VerifyReport> {
    if let Some(&k) = sizes.iter().find(|&&k| k < m) {
        return Err(Error::invalid(format!("configuration size {k} below the floor m = {m}")));
    }
    if m == 0 && !sizes.is_empty() {
        return Err(Error::invalid("size-dependent bounds need m >= 1"));
    }
    let space = GroundSpace::unit_interval(lambda)?;
    let first = first_diff_bound(lambda, m as u64)?.value;
    let second = second_diff_bound(lambda, m as u64)?.value;
    let mut rows = Vec::new();
    for (i, (sc, fixed)) in delta_scenarios(&space, m, count, sizes, seed)?.into_iter().enumerate() {
        let (b1, b2, tag) = match fixed {
            Some(k) => (
                first_diff_bound_nonuniform(lambda, m as u64, k as u64)?.value,
                second_diff_bound_nonuniform(lambda, m as u64, k as u64)?.value,
                format!("nonuniform |xi|={k}"),
            ),
            None => (first, second, format!("uniform #{i} |xi|={}", sc.xi.len())),
        };
        let label = sc.f.label();
        let d1 = estimate_delta_h(&sc.f, &sc.xi, &sc.alpha, m, &space, replicas, sc.seed)?;
        rows.push(dominated(format!("delta_h {tag} f={label}"), &d1, b1));
        let d2 = estimate_delta2_h(&sc.f, &sc.xi, &sc.alpha, &sc.beta, m, &space, replicas, sc.seed)?;
        rows.push(dominated(format!("delta2_h {tag} f={label}"), &d2, b2));
    }
    Ok(VerifyReport::new("delta-bounds", lambda, m, replicas, seed, rows))
}
