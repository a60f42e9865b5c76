//! The `d̄1` matching distance between configurations and its lift `d̄2`
//! between point-process laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Configuration, GroundSpace, Point};
use crate::transport::{solve_assignment, solve_balanced_transport, CostMatrix};

/// Size cap for the exhaustive oracle.
pub const BRUTEFORCE_CAP: usize = 8;

/// `d̄1(ξ, η)`: with `n = max(|ξ|, |η|)`, the optimal matching cost of the
/// smaller configuration into the larger plus one per unmatched point, all
/// divided by `n`. Zero when both are empty.
pub fn d1_bar(xi: &Configuration, eta: &Configuration, space: &GroundSpace) -> Result<f64> {
    space.check_configuration(xi)?;
    space.check_configuration(eta)?;
    Ok(d1_bar_unchecked(xi, eta, space))
}

pub(crate) fn d1_bar_unchecked(xi: &Configuration, eta: &Configuration, space: &GroundSpace) -> f64 {
    let a: Vec<&Point> = xi.locations().collect();
    let b: Vec<&Point> = eta.locations().collect();
    d1_bar_points(&a, &b, space)
}

/// `d̄1` between two location lists already known to lie in `space`.
fn canonical_key(points: &[&Point]) -> Vec<u64> {
    let mut key: Vec<u64> = points.iter().flat_map(|p| p.coords().iter().map(|c| c.to_bits())).collect();
    key.sort_unstable();
    key.extend(points.iter().flat_map(|p| p.coords().iter().map(|c| c.to_bits())));
    key
}

pub(crate) fn d1_bar_points(a: &[&Point], b: &[&Point], space: &GroundSpace) -> f64 {
    let (small, large) = match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => (a, b),
        std::cmp::Ordering::Greater => (b, a),
        // equal sizes: fixed orientation so swapping arguments repeats the same computation
        std::cmp::Ordering::Equal => {
            if canonical_key(a) <= canonical_key(b) {
                (a, b)
            } else {
                (b, a)
            }
        }
    };
    let n = large.len();
    let m = small.len();
    if n == 0 {
        return 0.0;
    }
    if m == 0 {
        return 1.0;
    }
    let costs = CostMatrix::from_fn(m, n, |i, j| space.distance_unchecked(small[i], large[j]))
        .expect("ground metric bounded by 1");
    let matching = solve_assignment(&costs).expect("non-empty");
    let mut terms: Vec<f64> = matching.pairs.iter().map(|&(i, j)| costs.get(i, j)).collect();
    terms.sort_by(f64::total_cmp);
    let matched: f64 = terms.iter().sum();
    ((matched + (n - m) as f64) / n as f64).min(1.0)
}

/// `d̄1` by exhaustive search over all injections of the smaller configuration
/// into the larger. Oracle for [`d1_bar`].
pub fn d1_bar_bruteforce(xi: &Configuration, eta: &Configuration, space: &GroundSpace) -> Result<f64> {
    space.check_configuration(xi)?;
    space.check_configuration(eta)?;
    let (small, large) = if xi.len() <= eta.len() { (xi, eta) } else { (eta, xi) };
    let n = large.len();
    let m = small.len();
    if n > BRUTEFORCE_CAP {
        return Err(Error::SizeCap { size: n, cap: BRUTEFORCE_CAP });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let small: Vec<_> = small.locations().collect();
    let large: Vec<_> = large.locations().collect();
    let mut used = vec![false; n];
    let mut best = f64::INFINITY;
    fn rec(
        i: usize,
        acc: f64,
        small: &[&Point],
        large: &[&Point],
        used: &mut [bool],
        best: &mut f64,
        space: &GroundSpace,
    ) {
        if i == small.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..large.len() {
            if !used[j] {
                used[j] = true;
                let d = space.distance_unchecked(small[i], large[j]);
                rec(i + 1, acc + d, small, large, used, best, space);
                used[j] = false;
            }
        }
    }
    rec(0, 0.0, &small, &large, &mut used, &mut best, space);
    Ok((best + (n - m) as f64) / n as f64)
}

/// Empirical `d̄2` estimate.
///
/// This is the exact transport distance with ground cost `d̄1` between the two
/// empirical measures; it overestimates the distance between the underlying
/// laws on average, which `upward_biased` records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D2Estimate {
    pub estimate: f64,
    /// Sample size per side.
    pub n: usize,
    pub seed: Option<u64>,
    #[serde(default = "yes")]
    pub upward_biased: bool,
}

fn yes() -> bool {
    true
}

impl D2Estimate {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Pairwise `d̄1` cost matrix between two sample lists, filled row-parallel.
pub fn d1_cost_matrix(
    samples_p: &[Configuration],
    samples_q: &[Configuration],
    space: &GroundSpace,
) -> Result<CostMatrix> {
    for xi in samples_p.iter().chain(samples_q) {
        space.check_configuration(xi)?;
    }
    let rows: Vec<Vec<f64>> = samples_p
        .par_iter()
        .map(|xi| samples_q.iter().map(|eta| d1_bar_unchecked(xi, eta, space)).collect())
        .collect();
    CostMatrix::new(samples_p.len(), samples_q.len(), rows.concat())
}

/// Transport estimate of `d̄2` between the empirical laws of two equally sized
/// sample lists.
pub fn d2_bar_empirical(
    samples_p: &[Configuration],
    samples_q: &[Configuration],
    space: &GroundSpace,
) -> Result<D2Estimate> {
    if samples_p.len() != samples_q.len() {
        return Err(Error::UnequalSamples { p: samples_p.len(), q: samples_q.len() });
    }
    if samples_p.is_empty() {
        return Err(Error::invalid("need at least one sample per side"));
    }
    let costs = d1_cost_matrix(samples_p, samples_q, space)?;
    let plan = solve_balanced_transport(&costs)?;
    Ok(D2Estimate {
        estimate: plan.mean_cost.clamp(0.0, 1.0),
        n: samples_p.len(),
        seed: None,
        upward_biased: true,
    })
}
