//! Closed-form Stein factors for conditional Poisson process approximation.
//!
//! Several of the bounds come as a list of alternatives, some valid only in a
//! large-intensity regime (`Λ > m + 2`). Every operation here evaluates all
//! alternatives whose hypothesis holds and returns the smallest, together with
//! the name of the expression that attained it.
//!
//! Logarithms are natural; `log⁺ x = max(0, ln x)`.

use serde::Serialize;

use crate::error::{Error, Result};

// Poisson tails

/// `ln j!`, exact summation below 256 and a Stirling series above.
pub fn ln_factorial(j: u64) -> f64 {
    if j < 256 {
        (2..=j).map(|i| (i as f64).ln()).sum()
    } else {
        let n = j as f64;
        let inv = 1.0 / n;
        let inv2 = inv * inv;
        n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln()
            + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
    }
}

/// `ln Po(Λ){j}`.
pub fn ln_poisson_pmf(lambda: f64, j: u64) -> f64 {
    -lambda + j as f64 * lambda.ln() - ln_factorial(j)
}

/// `Σ_{j>k} Po(Λ){j} / Po(Λ){k}` for `k > Λ`, where the terms decrease
/// geometrically fast enough to sum directly.
fn upper_tail_excess(lambda: f64, k: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut term = 1.0f64;
    let mut j = k;
    loop {
        j += 1;
        term *= lambda / j as f64;
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term <= 1e-18 * (1.0 + sum) {
            return sum;
        }
    }
}

fn head_sum(lambda: f64, k: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..k {
        let y = ln_poisson_pmf(lambda, j).exp() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("intensity must be positive and finite, got {lambda}")))
    }
}

/// `ln F̄(k)` with `F̄(k) = Σ_{j>=k} Po(Λ){j}`; usable deep in the tail where
/// `F̄` itself underflows.
pub fn ln_poisson_tail(lambda: f64, k: i64) -> Result<f64> {
    check_lambda(lambda)?;
    if k <= 0 {
        return Ok(0.0);
    }
    let k = k as u64;
    if k as f64 > lambda {
        Ok(ln_poisson_pmf(lambda, k) + upper_tail_excess(lambda, k).ln_1p())
    } else {
        Ok((-head_sum(lambda, k)).ln_1p())
    }
}

/// Upper Poisson tail `F̄(k) = Σ_{j>=k} Po(Λ){j}`, with `F̄(k) = 1` for `k <= 0`
/// (so `F̄(-1) = 1` by convention).
pub fn poisson_tail(lambda: f64, k: i64) -> Result<f64> {
    Ok(ln_poisson_tail(lambda, k)?.exp())
}

/// `F̄(k-1) / F̄(k)`, stable even when both tails underflow.
pub fn poisson_tail_ratio(lambda: f64, k: i64) -> Result<f64> {
    check_lambda(lambda)?;
    if k <= 0 {
        return Ok(1.0);
    }
    let ku = k as u64;
    if ku as f64 > lambda {
        // F̄(k-1) = F̄(k) + Po{k-1} and Po{k-1}/Po{k} = k/Λ
        let s = 1.0 + upper_tail_excess(lambda, ku);
        Ok(1.0 + (k as f64 / lambda) / s)
    } else {
        Ok((ln_poisson_tail(lambda, k - 1)? - ln_poisson_tail(lambda, k)?).exp())
    }
}

/// Probability that an added point survives until the conditioned chain,
/// started from `k + 1` points, first returns to `k` points:
/// `1 - (F̄(k-1)/F̄(k) - k/Λ)`.
pub fn p_survival_analytic(lambda: f64, k: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    if kf > lambda {
        // Same identity rearranged as (k/Λ)(S-1)/S, free of cancellation.
        let excess = upper_tail_excess(lambda, k);
        Ok(kf / lambda * excess / (1.0 + excess))
    } else {
        Ok(1.0 - (poisson_tail_ratio(lambda, k as i64)? - kf / lambda))
    }
}

/// The survival bound `min(k/Λ, k/(k+1))`.
pub fn p_survival_upper_bound(lambda: f64, k: u64) -> f64 {
    let kf = k as f64;
    (kf / lambda).min(kf / (kf + 1.0))
}

// Stein factors

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Unconditional first-difference constant `min(1, (0.95 + log⁺Λ)/Λ)`.
pub fn unconditional_first_diff(lambda: f64) -> f64 {
    (1.0f64).min((0.95 + log_plus(lambda)) / lambda)
}

/// `K1 = min(1/m, (0.95 + log⁺Λ)/Λ)`; at `m = 0` the unconditional constant
/// with 1 in place of `1/m`.
pub fn k1(lambda: f64, m: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if m == 0 {
        return Ok(unconditional_first_diff(lambda));
    }
    Ok((1.0 / m as f64).min((0.95 + log_plus(lambda)) / lambda))
}

/// `K2 = 2 ln Λ / Λ` when `Λ >= 1.76`, else `1/(m+1)`.
pub fn k2(lambda: f64, m: u64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(if lambda >= 1.76 { 2.0 * lambda.ln() / lambda } else { 1.0 / (m as f64 + 1.0) })
}

/// `L1 = (1 - e^{-(k∧Λ)}) / (k∧Λ)`, with limit value 1 at `k∧Λ = 0`.
pub fn l1(lambda: f64, k: u64) -> Result<f64> {
    check_lambda(lambda)?;
    let x = (k as f64).min(lambda);
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(-(-x).exp_m1() / x)
}

/// `L2 = min(1/(k∧Λ), 1.09/(k+1) + 1/Λ)`.
pub fn l2(lambda: f64, k: u64) -> Result<f64> {
    check_lambda(lambda)?;
    let x = (k as f64).min(lambda);
    let second = 1.09 / (k as f64 + 1.0) + 1.0 / lambda;
    Ok(if x == 0.0 { second } else { (1.0 / x).min(second) })
}

/// A bound value and the expression that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub expression: &'static str,
}

fn min_of(candidates: &[Option<(f64, &'static str)>]) -> Bound {
    let (value, expression) = candidates
        .iter()
        .flatten()
        .copied()
        .fold((f64::INFINITY, ""), |best, c| if c.0 < best.0 { c } else { best });
    Bound { value, expression }
}

/// Whether the large-intensity alternatives apply.
pub fn large_lambda_regime(lambda: f64, m: u64) -> bool {
    lambda > m as f64 + 2.0
}

/// Uniform bound on `‖Δh‖`.
pub fn first_diff_bound(lambda: f64, m: u64) -> Result<Bound> {
    check_lambda(lambda)?;
    if m == 0 {
        return Ok(Bound { value: unconditional_first_diff(lambda), expression: "unconditional" });
    }
    let k1 = k1(lambda, m)?;
    let mf = m as f64;
    let general = 1.0 / lambda + (mf + 1.0) * k1;
    let large = large_lambda_regime(lambda, m)
        .then(|| 1.0 / (lambda * (lambda - mf)) + lambda / (lambda - mf) * k1);
    Ok(min_of(&[Some((general, "general")), large.map(|v| (v, "large-lambda"))]))
}

/// Uniform bound on `‖Δ²h‖`.
///
/// At `m = 0` this falls back to twice the unconditional first-difference
/// constant.
pub fn second_diff_bound(lambda: f64, m: u64) -> Result<Bound> {
    check_lambda(lambda)?;
    if m == 0 {
        return Ok(Bound {
            value: 2.0 * unconditional_first_diff(lambda),
            expression: "twice-unconditional",
        });
    }
    let k1 = k1(lambda, m)?;
    let k2 = k2(lambda, m)?;
    let mf = m as f64;
    let twice_first = 2.0 / lambda + 2.0 * (mf + 1.0) * k1;
    let coupled = (4.0 * mf + 3.0) * (mf + 3.0)
        / ((mf + 3.0) * (2.0 * mf + 2.0) * lambda + 2.0 * lambda * lambda)
        + 4.0 * mf * (mf + 1.0) * (mf + 3.0) / ((mf + 3.0) * (2.0 * mf + 2.0) + 2.0 * lambda) * k1
        + k2;
    let large = large_lambda_regime(lambda, m);
    let twice_first_large =
        large.then(|| 2.0 / (lambda * (lambda - mf)) + 2.0 * lambda / (lambda - mf) * k1);
    let coupled_large = large.then(|| {
        (3.0 * lambda + mf) / (lambda * (lambda - mf) * (lambda + mf))
            + 4.0 * lambda * mf / ((lambda - mf) * (lambda + mf)) * k1
            + k2
    });
    Ok(min_of(&[
        Some((twice_first, "twice-first")),
        Some((coupled, "coupled")),
        twice_first_large.map(|v| (v, "twice-first-large-lambda")),
        coupled_large.map(|v| (v, "coupled-large-lambda")),
    ]))
}

fn check_nonuniform(m: u64, k: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("non-uniform bounds need m >= 1"));
    }
    if k < m {
        return Err(Error::invalid(format!("configuration size {k} is below the floor m = {m}")));
    }
    Ok(())
}

/// Configuration-dependent bound on `|Δh(ξ; α)|` for `|ξ| = k`.
pub fn first_diff_bound_nonuniform(lambda: f64, m: u64, k: u64) -> Result<Bound> {
    check_lambda(lambda)?;
    check_nonuniform(m, k)?;
    let l1 = l1(lambda, k)?;
    let mf = m as f64;
    let pre = (mf + 1.0) / (k as f64 + 1.0);
    let general = pre * (1.0 / lambda + mf * l1) + l1;
    let large = large_lambda_regime(lambda, m)
        .then(|| pre * (1.0 / (lambda * (lambda - mf)) + mf / (lambda - mf) * l1) + l1);
    Ok(min_of(&[Some((general, "general")), large.map(|v| (v, "large-lambda"))]))
}

/// Configuration-dependent bound on `|Δ²h(ξ; α, β)|` for `|ξ| = k`.
///
/// The second alternative keeps the placement of `Λ` in its two denominators
/// exactly as it is usually displayed for the non-uniform case, which differs
/// from the uniform second-difference expression.
pub fn second_diff_bound_nonuniform(lambda: f64, m: u64, k: u64) -> Result<Bound> {
    check_lambda(lambda)?;
    check_nonuniform(m, k)?;
    let l1 = l1(lambda, k)?;
    let l2 = l2(lambda, k)?;
    let mf = m as f64;
    let kf = k as f64;
    let pre1 = (2.0 * mf + 2.0) / (kf + 1.0);
    let pre2 = (mf + 2.0) * (mf + 1.0) / ((kf + 2.0) * (kf + 1.0));
    let twice_first = pre1 * (1.0 / lambda + mf * l1) + 2.0 * l1;
    let coupled = pre2
        * ((4.0 * mf + 3.0) * (mf + 3.0) / ((mf + 3.0) * (2.0 * mf + 2.0) + 2.0 * lambda)
            + 4.0 * mf * (mf + 1.0) * (mf + 3.0)
                / ((mf + 3.0) * (2.0 * mf + 2.0) * lambda + 2.0 * lambda * lambda)
                * l1)
        + l2;
    let large = large_lambda_regime(lambda, m);
    let twice_first_large = large
        .then(|| pre1 * (1.0 / (lambda * (lambda - mf)) + mf / (lambda - mf) * l1) + 2.0 * l1);
    let coupled_large = large.then(|| {
        pre2 * ((3.0 * lambda + mf) / (lambda * (lambda - mf) * (lambda + mf))
            + 4.0 * lambda * mf / ((lambda - mf) * (lambda + mf)) * l1)
            + l2
    });
    Ok(min_of(&[
        Some((twice_first, "twice-first")),
        Some((coupled, "coupled")),
        twice_first_large.map(|v| (v, "twice-first-large-lambda")),
        coupled_large.map(|v| (v, "coupled-large-lambda")),
    ]))
}

/// Every Stein factor for one `(Λ, m)` and optionally one configuration size.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SteinBounds {
    pub lambda: f64,
    pub m: u64,
    pub xi_size: Option<u64>,
    pub k1: f64,
    pub k2: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub first_diff: f64,
    pub second_diff: f64,
    pub first_diff_non_uniform: Option<f64>,
    pub second_diff_non_uniform: Option<f64>,
    /// `Λ > m + 2`: the large-intensity alternatives were considered.
    pub large_lambda_regime: bool,
    pub winners: Winners,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Winners {
    pub first_diff: &'static str,
    pub second_diff: &'static str,
    pub first_diff_non_uniform: Option<&'static str>,
    pub second_diff_non_uniform: Option<&'static str>,
}

impl SteinBounds {
    pub fn evaluate(lambda: f64, m: u64, xi_size: Option<u64>) -> Result<Self> {
        check_lambda(lambda)?;
        let first = first_diff_bound(lambda, m)?;
        let second = second_diff_bound(lambda, m)?;
        let (l1v, l2v, first_nu, second_nu) = match xi_size {
            Some(k) => {
                let nu = if m >= 1 {
                    Some((
                        first_diff_bound_nonuniform(lambda, m, k)?,
                        second_diff_bound_nonuniform(lambda, m, k)?,
                    ))
                } else {
                    None
                };
                (Some(l1(lambda, k)?), Some(l2(lambda, k)?), nu.map(|n| n.0), nu.map(|n| n.1))
            }
            None => (None, None, None, None),
        };
        Ok(SteinBounds {
            lambda,
            m,
            xi_size,
            k1: k1(lambda, m)?,
            k2: k2(lambda, m)?,
            l1: l1v,
            l2: l2v,
            first_diff: first.value,
            second_diff: second.value,
            first_diff_non_uniform: first_nu.map(|b| b.value),
            second_diff_non_uniform: second_nu.map(|b| b.value),
            large_lambda_regime: m >= 1 && large_lambda_regime(lambda, m),
            winners: Winners {
                first_diff: first.expression,
                second_diff: second.expression,
                first_diff_non_uniform: first_nu.map(|b| b.expression),
                second_diff_non_uniform: second_nu.map(|b| b.expression),
            },
        })
    }
}
