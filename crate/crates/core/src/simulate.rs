//! Exact samplers for the point-process laws and the event-driven simulator of
//! the conditioned immigration-death chain `Z^(m)`.
//!
//! In state `ξ` the chain waits an `Exp(Λ + |ξ|·1{|ξ|>m})` time, then
//! immigrates a fresh point with probability `Λ / (Λ + |ξ|·1{|ξ|>m})` and
//! otherwise kills a uniformly chosen point. Draws are consumed in the fixed
//! order holding time, event type, victim index or location; the type draw is
//! made even at the floor where immigration is certain.

use serde::{Deserialize, Serialize};

use crate::bounds::{ln_poisson_pmf, ln_poisson_tail};
use crate::error::{Error, Result};
use crate::mc::replicate;
use crate::space::{Configuration, GroundSpace, Point, PointId};
use crate::stream::RandomStream;

/// Rejection samplers refuse when the acceptance probability drops below this.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Immigration,
    Death,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub id: PointId,
    /// Location of the immigrant or of the point that died.
    pub location: Point,
}

/// Sample path of a conditioned immigration-death chain on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub lambda: f64,
    /// The count floor `m`.
    pub floor: usize,
}

impl Trajectory {
    /// State just after every event with time `<= t`.
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut state = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            apply(&mut state, e);
        }
        state
    }

    pub fn terminal(&self) -> Configuration {
        self.state_at(f64::INFINITY)
    }

    /// `(time, count)` at time 0 and after every event.
    pub fn count_path(&self) -> Vec<(f64, usize)> {
        let mut n = self.initial.len();
        let mut out = Vec::with_capacity(self.events.len() + 1);
        out.push((0.0, n));
        for e in &self.events {
            match e.kind {
                EventKind::Immigration => n += 1,
                EventKind::Death => n -= 1,
            }
            out.push((e.time, n));
        }
        out
    }

    pub fn terminal_count(&self) -> usize {
        self.count_path().last().map_or(0, |&(_, n)| n)
    }

    /// Checks the structural invariants: strictly increasing times within
    /// `(0, horizon]`, deaths of live points only, fresh immigrant tags, no
    /// visit below the floor and no death at the floor.
    pub fn validate(&self) -> Result<()> {
        let mut state = self.initial.clone();
        let mut last = 0.0f64;
        let mut seen: std::collections::HashSet<PointId> = state.ids().collect();
        if state.len() < self.floor {
            return Err(Error::invalid("initial configuration below the count floor"));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.time <= last || e.time.is_nan() || e.time > self.horizon {
                return Err(Error::invalid(format!("event {i}: time {} out of order", e.time)));
            }
            last = e.time;
            match e.kind {
                EventKind::Immigration => {
                    if !seen.insert(e.id) {
                        return Err(Error::invalid(format!("event {i}: tag {} reused", e.id.0)));
                    }
                }
                EventKind::Death => {
                    if !state.contains_id(e.id) {
                        return Err(Error::invalid(format!("event {i}: death of a dead point")));
                    }
                    if state.len() <= self.floor {
                        return Err(Error::invalid(format!("event {i}: death at the count floor")));
                    }
                }
            }
            apply(&mut state, e);
        }
        Ok(())
    }
}

fn apply(state: &mut Configuration, e: &Event) {
    match e.kind {
        EventKind::Immigration => state.push(e.id, e.location.clone()),
        EventKind::Death => {
            state.remove_id(e.id);
        }
    }
}

/// One step of `Z^(m)`; holds the current state and the tag counter.
#[derive(Clone, Debug)]
pub struct CidChain<'a> {
    space: &'a GroundSpace,
    floor: usize,
    state: Configuration,
    time: f64,
    next_id: u64,
}

impl<'a> CidChain<'a> {
    pub fn new(space: &'a GroundSpace, initial: Configuration, floor: usize) -> Result<Self> {
        space.check_configuration(&initial)?;
        if initial.len() < floor {
            return Err(Error::invalid(format!(
                "initial configuration has {} points, below the floor m = {floor}",
                initial.len()
            )));
        }
        let next_id = initial.next_id().0;
        Ok(CidChain { space, floor, state: initial, time: 0.0, next_id })
    }

    pub fn state(&self) -> &Configuration {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_rate(&self) -> f64 {
        let n = self.state.len();
        self.space.total_mass() + if n > self.floor { n as f64 } else { 0.0 }
    }

    /// Advances to the next event unless it falls after `horizon`, in which
    /// case the clock moves to `horizon` and `None` is returned.
    pub fn step(&mut self, horizon: f64, stream: &mut RandomStream) -> Option<Event> {
        let rate = self.total_rate();
        let t = self.time + stream.exponential(rate);
        if t > horizon {
            self.time = horizon;
            return None;
        }
        self.time = t;
        let immigrate = stream.uniform() * rate < self.space.total_mass();
        let event = if immigrate {
            let location = self.space.sample_location(stream);
            let id = PointId(self.next_id);
            self.next_id += 1;
            self.state.push(id, location.clone());
            Event { time: t, kind: EventKind::Immigration, id, location }
        } else {
            let victim = self.state.remove_at(stream.below(self.state.len()));
            Event { time: t, kind: EventKind::Death, id: victim.id, location: victim.location }
        };
        Some(event)
    }
}

/// Simulates `Z^(m)` from `xi0` on `[0, horizon]`.
pub fn simulate_cid_chain(
    xi0: &Configuration,
    m: usize,
    horizon: f64,
    space: &GroundSpace,
    stream: &mut RandomStream,
) -> Result<Trajectory> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    let mut chain = CidChain::new(space, xi0.clone(), m)?;
    let mut events = Vec::new();
    while let Some(e) = chain.step(horizon, stream) {
        events.push(e);
    }
    Ok(Trajectory { initial: xi0.clone(), events, horizon, lambda: space.total_mass(), floor: m })
}

fn place(space: &GroundSpace, count: u64, stream: &mut RandomStream) -> Configuration {
    Configuration::from_locations((0..count).map(|_| space.sample_location(stream)))
}

/// A draw from `Po(Λ_bold)`.
pub fn sample_poisson_process(space: &GroundSpace, stream: &mut RandomStream) -> Configuration {
    let n = stream.poisson(space.total_mass());
    place(space, n, stream)
}

/// A draw from `Po^(m)(Λ_bold)`, the Poisson process conditioned on at least `m`
/// points, by rejection on the count.
pub fn sample_conditional_poisson(
    space: &GroundSpace,
    m: usize,
    stream: &mut RandomStream,
) -> Result<Configuration> {
    let lambda = space.total_mass();
    if m > 0 {
        let acceptance = ln_poisson_tail(lambda, m as i64)?.exp();
        if acceptance < MIN_ACCEPTANCE {
            return Err(Error::RejectionTooRare { acceptance, threshold: MIN_ACCEPTANCE });
        }
    }
    let n = loop {
        let n = stream.poisson(lambda);
        if n >= m as u64 {
            break n;
        }
    };
    Ok(place(space, n, stream))
}

/// `Po^(m)(Λ_bold)(|ξ| = j)`: the Poisson pmf restricted to `j >= m` and
/// renormalised by `F̄(m)`.
pub fn conditional_poisson_count_pmf(lambda: f64, m: usize, j: usize) -> Result<f64> {
    let tail = ln_poisson_tail(lambda, m as i64)?;
    if j < m {
        return Ok(0.0);
    }
    Ok((ln_poisson_pmf(lambda, j as u64) - tail).exp())
}

/// Count law of `Po^(m)` tabulated up to where the remaining mass is negligible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountPmf {
    pub lambda: f64,
    pub m: usize,
    /// `probs[i]` is the mass at `m + i`.
    pub probs: Vec<f64>,
}

impl CountPmf {
    pub fn conditional_poisson(lambda: f64, m: usize) -> Result<Self> {
        let mut probs = Vec::new();
        let mut j = m;
        loop {
            let p = conditional_poisson_count_pmf(lambda, m, j)?;
            probs.push(p);
            j += 1;
            if j as f64 > lambda && p < 1e-18 {
                break;
            }
        }
        Ok(CountPmf { lambda, m, probs })
    }

    pub fn prob(&self, j: usize) -> f64 {
        if j < self.m {
            return 0.0;
        }
        self.probs.get(j - self.m).copied().unwrap_or(0.0)
    }

    /// Total variation distance to the empirical law of `counts`.
    pub fn tv_to_empirical(&self, counts: &[usize]) -> f64 {
        total_variation(counts, |j| self.prob(j), self.m + self.probs.len())
    }
}

/// `0.5 Σ_j |p̂(j) - p(j)|` for the empirical law of `counts` against `pmf`,
/// where `pmf` is negligible from `support_end` on.
pub fn total_variation(counts: &[usize], pmf: impl Fn(usize) -> f64, support_end: usize) -> f64 {
    let top = counts.iter().copied().max().unwrap_or(0).max(support_end);
    let mut hist = vec![0u64; top + 1];
    for &c in counts {
        hist[c] += 1;
    }
    let n = counts.len() as f64;
    0.5 * hist.iter().enumerate().map(|(j, &h)| (h as f64 / n - pmf(j)).abs()).sum::<f64>()
}

fn ln_binomial_pmf(n: u64, p: f64, j: u64) -> f64 {
    use crate::bounds::ln_factorial;
    ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
        + j as f64 * p.ln()
        + (n - j) as f64 * (-p).ln_1p()
}

/// `P(Bin(n, p) = j | Bin(n, p) >= m)`.
pub fn conditional_binomial_count_pmf(n: usize, p: f64, m: usize, j: usize) -> Result<f64> {
    check_bernoulli(n, p, m)?;
    if j < m || j > n {
        return Ok(0.0);
    }
    Ok((ln_binomial_pmf(n as u64, p, j as u64)).exp() / binomial_tail(n, p, m))
}

/// `P(Bin(n, p) >= m)`.
fn binomial_tail(n: usize, p: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m == 1 {
        return -((n as f64) * (-p).ln_1p()).exp_m1();
    }
    let head: f64 = (0..m as u64).map(|j| ln_binomial_pmf(n as u64, p, j).exp()).sum();
    (1.0 - head).max(0.0)
}

fn check_bernoulli(n: usize, p: f64, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if m > n {
        return Err(Error::invalid(format!("conditioning on {m} points out of n = {n}")));
    }
    Ok(())
}

/// Indicators of the conditioned Bernoulli trials, by rejection.
fn conditioned_indicators(n: usize, p: f64, m: usize, stream: &mut RandomStream) -> Result<Vec<usize>> {
    check_bernoulli(n, p, m)?;
    let acceptance = binomial_tail(n, p, m);
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::RejectionTooRare { acceptance, threshold: MIN_ACCEPTANCE });
    }
    loop {
        let fired: Vec<usize> = (1..=n).filter(|_| stream.bernoulli(p)).collect();
        if fired.len() >= m {
            return Ok(fired);
        }
    }
}

/// Bernoulli process `Σ X_i δ_{i/n}` conditioned on at least `m` points.
pub fn sample_bernoulli_process(
    n: usize,
    p: f64,
    m: usize,
    stream: &mut RandomStream,
) -> Result<Configuration> {
    let fired = conditioned_indicators(n, p, m, stream)?;
    Ok(Configuration::from_scalars(&fired.iter().map(|&i| i as f64 / n as f64).collect::<Vec<_>>()))
}

/// Binomial process `Σ X_i δ_{T_i}` with iid uniform `T_i`, conditioned on at
/// least `m` points. The indicators consume the same draws as in
/// [`sample_bernoulli_process`], so both share a count at matched streams.
pub fn sample_binomial_process(
    n: usize,
    p: f64,
    m: usize,
    stream: &mut RandomStream,
) -> Result<Configuration> {
    let fired = conditioned_indicators(n, p, m, stream)?;
    let xs: Vec<f64> = fired.iter().map(|_| stream.uniform()).collect();
    Ok(Configuration::from_scalars(&xs))
}

/// A point-process law the samplers can draw from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Law {
    Poisson,
    #[serde(rename = "cpoisson")]
    ConditionalPoisson { m: usize },
    Bernoulli { n: usize, p: f64, m: usize },
    Binomial { n: usize, p: f64, m: usize },
}

impl Law {
    /// Draws one configuration. Poisson laws use `space`; the Bernoulli and
    /// binomial laws live on `[0, 1]` and ignore it.
    pub fn sample(&self, space: &GroundSpace, stream: &mut RandomStream) -> Result<Configuration> {
        match *self {
            Law::Poisson => Ok(sample_poisson_process(space, stream)),
            Law::ConditionalPoisson { m } => sample_conditional_poisson(space, m, stream),
            Law::Bernoulli { n, p, m } => sample_bernoulli_process(n, p, m, stream),
            Law::Binomial { n, p, m } => sample_binomial_process(n, p, m, stream),
        }
    }

    /// Checks parameters once, before any replica runs.
    pub fn validate(&self, space: &GroundSpace) -> Result<()> {
        match *self {
            Law::Poisson => Ok(()),
            Law::ConditionalPoisson { m } => {
                let acceptance = ln_poisson_tail(space.total_mass(), m as i64)?.exp();
                if m > 0 && acceptance < MIN_ACCEPTANCE {
                    return Err(Error::RejectionTooRare { acceptance, threshold: MIN_ACCEPTANCE });
                }
                Ok(())
            }
            Law::Bernoulli { n, p, m } | Law::Binomial { n, p, m } => {
                check_bernoulli(n, p, m)?;
                let acceptance = binomial_tail(n, p, m);
                if acceptance < MIN_ACCEPTANCE {
                    return Err(Error::RejectionTooRare { acceptance, threshold: MIN_ACCEPTANCE });
                }
                Ok(())
            }
        }
    }
}

/// `count` independent draws, draw `r` on stream `(seed, component_index(component, r))`.
pub fn sample_many(
    law: &Law,
    space: &GroundSpace,
    count: usize,
    seed: u64,
    component: u64,
) -> Result<Vec<Configuration>> {
    law.validate(space)?;
    replicate(seed, component, count, |s| law.sample(space, s)).into_iter().collect()
}
