//! Coupled Monte Carlo estimators of the Stein solution and its differences.
//!
//! With `h(ξ) = -∫ E[f(Z_ξ(t)) - π(f)] dt`, a difference such as
//! `h(ξ + δ_α) - h(ξ)` equals `-E ∫ [f(X_t) - f(Y_t)] dt` for any coupling of
//! the two chains, and the integrand vanishes once they coalesce. Each replica
//! integrates the piecewise-constant integrand exactly, jump by jump.

use serde::Serialize;

use super::{CoupledChains, TestFunction, EVENT_CAP, MAX_TRUNCATED_FRACTION};
use crate::error::{Error, Result};
use crate::mc::{component, replicate, MCEstimate};
use crate::simulate::{sample_conditional_poisson, Law};
use crate::space::{Configuration, GroundSpace, Point, PointId};
use crate::stream::RandomStream;

pub use crate::bounds::p_survival_analytic;

/// Fewest replicas accepted by [`estimate_p_survival`].
pub const MIN_SURVIVAL_REPLICAS: usize = 100;

#[derive(Clone, Copy, Debug)]
struct Replica {
    integral: f64,
    time: f64,
    truncated: bool,
}

/// Integrates `Σ_c weights[c]·f(chain c)` until `done` holds or the event cap
/// is reached.
fn integrate(
    chains: &mut CoupledChains,
    f: &TestFunction,
    space: &GroundSpace,
    weights: &[f64],
    done: impl Fn(&CoupledChains) -> bool,
    stream: &mut RandomStream,
) -> Replica {
    let eval = |chains: &CoupledChains, c: usize| match f {
        TestFunction::CountOnly(g) => g.eval(chains.count(c)),
        _ => f.eval_points(&chains.locations_of(c), space),
    };
    let mut values: Vec<f64> = (0..chains.len()).map(|c| eval(chains, c)).collect();
    let mut integral = 0.0f64;
    while !done(chains) {
        if chains.jumps() >= EVENT_CAP {
            return Replica { integral, time: chains.time(), truncated: true };
        }
        let start = chains.time();
        let e = chains.step(stream);
        let integrand: f64 = weights.iter().zip(&values).map(|(w, v)| w * v).sum();
        integral += (e.time - start) * integrand;
        for (c, v) in values.iter_mut().enumerate() {
            if e.mask & (1 << c) != 0 {
                *v = eval(chains, c);
            }
        }
    }
    Replica { integral, time: chains.time(), truncated: false }
}

/// Turns replica integrals into an estimate of `-E ∫ integrand`.
fn finish(replicas: &[Replica], seed: u64, integrand_bound: f64) -> Result<MCEstimate> {
    let n = replicas.len();
    let flagged = replicas.iter().filter(|r| r.truncated).count();
    if flagged as f64 > MAX_TRUNCATED_FRACTION * n as f64 {
        return Err(Error::CouplingTruncated { flagged, replicas: n, cap: EVENT_CAP });
    }
    let samples: Vec<f64> = replicas.iter().map(|r| -r.integral).collect();
    let mut est = MCEstimate::from_samples(&samples, seed);
    if flagged > 0 {
        let done: Vec<f64> = replicas.iter().filter(|r| !r.truncated).map(|r| r.time).collect();
        let mean_time = done.iter().sum::<f64>() / done.len().max(1) as f64;
        est.truncated = flagged;
        est.tail_bound = flagged as f64 / n as f64 * integrand_bound * mean_time;
    }
    Ok(est)
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas < 2 {
        return Err(Error::invalid("need at least 2 replicas"));
    }
    Ok(())
}

fn check_floor(xi: &Configuration, m: usize) -> Result<()> {
    if xi.len() < m {
        return Err(Error::invalid(format!("|ξ| = {} is below the floor m = {m}", xi.len())));
    }
    Ok(())
}

fn tagged(xi: &Configuration, extra: &[&Point]) -> Vec<(PointId, Point)> {
    let first = xi.next_id().0;
    extra.iter().enumerate().map(|(i, p)| (PointId(first + i as u64), (*p).clone())).collect()
}

fn plus(xi: &Configuration, points: &[&(PointId, Point)]) -> Configuration {
    let mut out = xi.clone();
    for (id, p) in points {
        out.push(*id, p.clone());
    }
    out
}

fn pair_replica(
    f: &TestFunction,
    xi: &Configuration,
    alpha: &Point,
    m: usize,
    space: &GroundSpace,
    stream: &mut RandomStream,
) -> Replica {
    let a = &tagged(xi, &[alpha])[0];
    let start = [plus(xi, &[a]), xi.clone()];
    let mut chains = CoupledChains::new(space, &start, &[m, m]).expect("validated inputs");
    integrate(&mut chains, f, space, &[1.0, -1.0], |c| c.coalesced(), stream)
}

/// `Δh(ξ; α) = h(ξ + δ_α) - h(ξ)`.
pub fn estimate_delta_h(
    f: &TestFunction,
    xi: &Configuration,
    alpha: &Point,
    m: usize,
    space: &GroundSpace,
    replicas: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_replicas(replicas)?;
    check_floor(xi, m)?;
    f.validate(space)?;
    space.check_configuration(xi)?;
    space.check_point(alpha)?;
    let runs = replicate(seed, component::DELTA_H, replicas, |s| pair_replica(f, xi, alpha, m, space, s));
    finish(&runs, seed, 1.0)
}

/// `Δ²h(ξ; α, β) = h(ξ + δ_α + δ_β) - h(ξ + δ_α) - h(ξ + δ_β) + h(ξ)`.
///
/// The four chains run until chains 1, 2 and 3, 4 agree pairwise, or 1, 3 and
/// 2, 4 do; from then on the integrand is identically zero.
#[allow(clippy::too_many_arguments)]
pub fn estimate_delta2_h(
    f: &TestFunction,
    xi: &Configuration,
    alpha: &Point,
    beta: &Point,
    m: usize,
    space: &GroundSpace,
    replicas: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_replicas(replicas)?;
    check_floor(xi, m)?;
    f.validate(space)?;
    space.check_configuration(xi)?;
    space.check_point(alpha)?;
    space.check_point(beta)?;
    if alpha == beta {
        return Err(Error::invalid("α and β must differ"));
    }
    let extra = tagged(xi, &[alpha, beta]);
    let (a, b) = (&extra[0], &extra[1]);
    let start = [plus(xi, &[a, b]), plus(xi, &[a]), plus(xi, &[b]), xi.clone()];
    let runs = replicate(seed, component::DELTA2_H, replicas, |s| {
        let mut chains = CoupledChains::new(space, &start, &[m; 4]).expect("validated inputs");
        let done = |c: &CoupledChains| (c.agree(0, 1) && c.agree(2, 3)) || (c.agree(0, 2) && c.agree(1, 3));
        integrate(&mut chains, f, space, &[1.0, -1.0, -1.0, 1.0], done, s)
    });
    finish(&runs, seed, 2.0)
}

fn check_conditional(space: &GroundSpace, m: usize) -> Result<()> {
    Law::ConditionalPoisson { m }.validate(space)
}

/// `h(ξ)` up to an additive constant: the chain from `ξ` is coupled with a
/// partner started from `Po^(m)`, so the estimate is `h(ξ) - E h(W)`.
pub fn estimate_h(
    f: &TestFunction,
    xi: &Configuration,
    m: usize,
    space: &GroundSpace,
    replicas: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_replicas(replicas)?;
    check_floor(xi, m)?;
    check_conditional(space, m)?;
    f.validate(space)?;
    space.check_configuration(xi)?;
    let runs = replicate(seed, component::H, replicas, |s| {
        let w = sample_conditional_poisson(space, m, s).expect("validated law");
        let first = xi.next_id().0;
        let mut partner = Configuration::empty();
        for (i, p) in w.locations().enumerate() {
            partner.push(PointId(first + i as u64), p.clone());
        }
        let mut chains = CoupledChains::new(space, &[xi.clone(), partner], &[m, m]).expect("validated inputs");
        integrate(&mut chains, f, space, &[1.0, -1.0], |c| c.coalesced(), s)
    });
    finish(&runs, seed, 1.0)
}

/// Generator applied to the estimated Stein solution, minus `f(ξ) - π(f)`.
#[derive(Clone, Debug, Serialize)]
pub struct SteinResidual {
    /// `A h(ξ) - (f(ξ) - π(f))`; its standard error combines all parts in quadrature.
    pub residual: MCEstimate,
    /// `Λ E_α Δh(ξ; α)` with `α` drawn from the normalised intensity.
    pub immigration_term: MCEstimate,
    /// `Σ_{x∈ξ} -Δh(ξ - δ_x; x)`; absent when `|ξ| = m`.
    pub death_term: Option<MCEstimate>,
    /// `f(ξ) - π(f)` with `π(f)` estimated from direct `Po^(m)` draws.
    pub target: MCEstimate,
}

fn scaled(e: &MCEstimate, c: f64) -> MCEstimate {
    MCEstimate {
        estimate: c * e.estimate,
        std_error: c.abs() * e.std_error,
        tail_bound: c.abs() * e.tail_bound,
        ..e.clone()
    }
}

/// Checks the Stein equation `A h(ξ) = f(ξ) - π(f)` at `ξ`.
pub fn stein_residual(
    f: &TestFunction,
    xi: &Configuration,
    m: usize,
    space: &GroundSpace,
    replicas: usize,
    seed: u64,
) -> Result<SteinResidual> {
    check_replicas(replicas)?;
    check_floor(xi, m)?;
    check_conditional(space, m)?;
    f.validate(space)?;
    space.check_configuration(xi)?;
    let lambda = space.total_mass();

    let runs = replicate(seed, component::STEIN_IMMIGRATION, replicas, |s| {
        let alpha = space.sample_location(s);
        pair_replica(f, xi, &alpha, m, space, s)
    });
    let immigration_term = scaled(&finish(&runs, seed, 1.0)?, lambda);

    let death_term = if xi.len() > m {
        let mut parts = Vec::with_capacity(xi.len());
        for (i, x) in xi.points().iter().enumerate() {
            let mut rest = xi.clone();
            rest.remove_id(x.id);
            let comp = component::STEIN_DEATH + i as u64;
            let runs = replicate(seed, comp, replicas, |s| {
                let start = [xi.clone(), rest.clone()];
                let mut chains = CoupledChains::new(space, &start, &[m, m]).expect("validated inputs");
                integrate(&mut chains, f, space, &[1.0, -1.0], |c| c.coalesced(), s)
            });
            parts.push(scaled(&finish(&runs, seed, 1.0)?, -1.0));
        }
        Some(MCEstimate {
            estimate: parts.iter().map(|p| p.estimate).sum(),
            std_error: parts.iter().map(|p| p.std_error * p.std_error).sum::<f64>().sqrt(),
            replicas,
            seed,
            truncated: parts.iter().map(|p| p.truncated).sum(),
            tail_bound: parts.iter().map(|p| p.tail_bound).sum(),
        })
    } else {
        None
    };

    let f_xi = f.eval(xi, space);
    let diffs = replicate(seed, component::STEIN_TARGET, replicas, |s| {
        let w = sample_conditional_poisson(space, m, s).expect("validated law");
        f_xi - f.eval(&w, space)
    });
    let target = MCEstimate::from_samples(&diffs, seed);

    let death = death_term.as_ref().map_or(0.0, |d| d.estimate);
    let death_se = death_term.as_ref().map_or(0.0, |d| d.std_error);
    let residual = MCEstimate {
        estimate: immigration_term.estimate + death - target.estimate,
        std_error: (immigration_term.std_error.powi(2) + death_se.powi(2) + target.std_error.powi(2)).sqrt(),
        replicas,
        seed,
        truncated: immigration_term.truncated + death_term.as_ref().map_or(0, |d| d.truncated),
        tail_bound: immigration_term.tail_bound + death_term.as_ref().map_or(0.0, |d| d.tail_bound),
    };
    Ok(SteinResidual { residual, immigration_term, death_term, target })
}

/// Whether the added point survives until the chain from `k + 1` points first
/// returns to `k`. Only the count and the fate of the added point matter, so
/// this runs the embedded jump chain on `(count, alive)` with the added point
/// kept at index 0.
fn survives(lambda: f64, k: usize, m: usize, stream: &mut RandomStream) -> bool {
    let mut n = k + 1;
    loop {
        let rate = lambda + if n > m { n as f64 } else { 0.0 };
        if stream.uniform() * rate < lambda {
            n += 1;
            continue;
        }
        if stream.below(n) == 0 {
            return false;
        }
        n -= 1;
        if n == k {
            return true;
        }
    }
}

/// Monte Carlo estimate of `p_{Λ,k}` under `Z^(m)`, `m <= k`.
pub fn estimate_p_survival(lambda: f64, k: usize, m: usize, replicas: usize, seed: u64) -> Result<MCEstimate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("intensity must be positive and finite, got {lambda}")));
    }
    if m > k {
        return Err(Error::invalid(format!("floor m = {m} exceeds k = {k}")));
    }
    if replicas < MIN_SURVIVAL_REPLICAS {
        return Err(Error::invalid(format!(
            "need at least {MIN_SURVIVAL_REPLICAS} replicas, got {replicas}"
        )));
    }
    let hits = replicate(seed, component::SURVIVAL, replicas, |s| {
        if survives(lambda, k, m, s) { 1.0 } else { 0.0 }
    });
    Ok(MCEstimate::from_samples(&hits, seed))
}
