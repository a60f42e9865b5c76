//! Synchronized coupling of several conditioned immigration-death chains.
//!
//! All chains see the same immigrations (same time, same location, same new
//! tag). Every tag carries one unit-rate death clock shared by all chains; when
//! it rings, the point dies in each chain that holds it and is above its own
//! count floor. Chains at their floor ignore the clock. Viewed alone, each
//! chain is therefore an exact `Z^(m)` with its own floor `m`.
//!
//! The clocks are realised by thinning: the coupled process jumps at rate
//! `Λ + |U|`, with `U` the tags alive in at least one chain above its floor,
//! and a jump is an immigration with probability `Λ / (Λ + |U|)`, otherwise the
//! death clock of a uniform member of `U`. Draw order per jump is holding time,
//! type, then victim index or location.

mod estimators;
mod testfn;

pub use estimators::*;
pub use testfn::{CountRamp, TestFunction};

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{Event, EventKind, Trajectory};
use crate::space::{Configuration, GroundSpace, Point, PointId};
use crate::stream::RandomStream;

/// Safety cap on the number of jumps of one coupled replica.
pub const EVENT_CAP: u64 = 10_000;

/// Largest tolerated fraction of replicas stopped by [`EVENT_CAP`].
pub const MAX_TRUNCATED_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledEvent {
    pub time: f64,
    pub kind: EventKind,
    pub id: PointId,
    /// Bit `c` is set when chain `c` changed.
    pub mask: u32,
}

/// Snapshot of a coupled simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    pub chains: Vec<Configuration>,
    /// Tags present in every chain.
    pub matched: Vec<PointId>,
    /// Tags present in some but not all chains.
    pub unmatched: Vec<PointId>,
    pub time: f64,
    pub coalesced: bool,
}

#[derive(Clone, Debug)]
pub struct CoupledChains<'a> {
    space: &'a GroundSpace,
    floors: Vec<usize>,
    /// Sorted tags of each chain.
    chains: Vec<Vec<PointId>>,
    locations: HashMap<PointId, Point>,
    next_id: u64,
    time: f64,
    jumps: u64,
    union: Vec<PointId>,
}

impl<'a> CoupledChains<'a> {
    /// Chains start from `initial`; a tag that appears in several chains must
    /// carry the same location everywhere.
    pub fn new(space: &'a GroundSpace, initial: &[Configuration], floors: &[usize]) -> Result<Self> {
        if initial.len() != floors.len() || initial.is_empty() || initial.len() > 32 {
            return Err(Error::invalid("need between 1 and 32 chains, one floor per chain"));
        }
        let mut locations: HashMap<PointId, Point> = HashMap::new();
        let mut chains = Vec::with_capacity(initial.len());
        for (xi, &floor) in initial.iter().zip(floors) {
            space.check_configuration(xi)?;
            if xi.len() < floor {
                return Err(Error::invalid(format!(
                    "chain starts with {} points, below its floor {floor}",
                    xi.len()
                )));
            }
            let mut ids = Vec::with_capacity(xi.len());
            for p in xi.points() {
                match locations.get(&p.id) {
                    Some(loc) if *loc != p.location => {
                        return Err(Error::invalid(format!(
                            "tag {} has different locations in different chains",
                            p.id.0
                        )))
                    }
                    Some(_) => {}
                    None => {
                        locations.insert(p.id, p.location.clone());
                    }
                }
                ids.push(p.id);
            }
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid("duplicate tag within a chain"));
            }
            chains.push(ids);
        }
        let next_id = locations.keys().map(|id| id.0 + 1).max().unwrap_or(0);
        Ok(CoupledChains {
            space,
            floors: floors.to_vec(),
            chains,
            locations,
            next_id,
            time: 0.0,
            jumps: 0,
            union: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn ids(&self, chain: usize) -> &[PointId] {
        &self.chains[chain]
    }

    pub fn count(&self, chain: usize) -> usize {
        self.chains[chain].len()
    }

    pub fn location(&self, id: PointId) -> &Point {
        &self.locations[&id]
    }

    pub fn locations_of(&self, chain: usize) -> Vec<&Point> {
        self.chains[chain].iter().map(|id| &self.locations[id]).collect()
    }

    pub fn configuration(&self, chain: usize) -> Configuration {
        let mut xi = Configuration::empty();
        for &id in &self.chains[chain] {
            xi.push(id, self.locations[&id].clone());
        }
        xi
    }

    /// Whether chains `a` and `b` hold the same tags.
    pub fn agree(&self, a: usize, b: usize) -> bool {
        self.chains[a] == self.chains[b]
    }

    /// All chains hold the same tags.
    pub fn coalesced(&self) -> bool {
        self.chains.windows(2).all(|w| w[0] == w[1])
    }

    pub fn snapshot(&self) -> CoupledState {
        let mut all: Vec<PointId> = self.chains.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        let (matched, unmatched) =
            all.into_iter().partition(|id| self.chains.iter().all(|c| c.binary_search(id).is_ok()));
        CoupledState {
            chains: (0..self.len()).map(|c| self.configuration(c)).collect(),
            matched,
            unmatched,
            time: self.time,
            coalesced: self.coalesced(),
        }
    }

    fn rebuild_union(&mut self) {
        self.union.clear();
        for (ids, &floor) in self.chains.iter().zip(&self.floors) {
            if ids.len() > floor {
                self.union.extend_from_slice(ids);
            }
        }
        self.union.sort_unstable();
        self.union.dedup();
    }

    /// One jump of the coupled process.
    pub fn step(&mut self, stream: &mut RandomStream) -> CoupledEvent {
        self.step_until(f64::INFINITY, stream).expect("unbounded horizon")
    }

    /// One jump, unless it would fall after `horizon`; then the clock moves to
    /// `horizon` and nothing else changes.
    pub fn step_until(&mut self, horizon: f64, stream: &mut RandomStream) -> Option<CoupledEvent> {
        self.rebuild_union();
        let lambda = self.space.total_mass();
        let rate = lambda + self.union.len() as f64;
        let t = self.time + stream.exponential(rate);
        if t > horizon {
            self.time = horizon;
            return None;
        }
        self.time = t;
        self.jumps += 1;
        if stream.uniform() * rate < lambda {
            let location = self.space.sample_location(stream);
            let id = PointId(self.next_id);
            self.next_id += 1;
            self.locations.insert(id, location);
            for ids in &mut self.chains {
                ids.push(id);
            }
            let mask = if self.len() == 32 { u32::MAX } else { (1u32 << self.len()) - 1 };
            Some(CoupledEvent { time: t, kind: EventKind::Immigration, id, mask })
        } else {
            let victim = self.union[stream.below(self.union.len())];
            let mut mask = 0u32;
            for (c, (ids, &floor)) in self.chains.iter_mut().zip(&self.floors).enumerate() {
                if ids.len() > floor {
                    if let Ok(pos) = ids.binary_search(&victim) {
                        ids.remove(pos);
                        mask |= 1 << c;
                    }
                }
            }
            Some(CoupledEvent { time: t, kind: EventKind::Death, id: victim, mask })
        }
    }
}

/// Output of [`simulate_coupled_pair`].
#[derive(Clone, Debug)]
pub struct CoupledPairRun {
    /// Chain from `ξ + δ_α`.
    pub x: Trajectory,
    /// Chain from `ξ`.
    pub y: Trajectory,
    /// `None` when the event cap stopped the run first.
    pub coalescence_time: Option<f64>,
    pub truncated: bool,
    pub final_state: CoupledState,
}

fn chain_event(chains: &CoupledChains, e: &CoupledEvent) -> Event {
    Event { time: e.time, kind: e.kind, id: e.id, location: chains.location(e.id).clone() }
}

/// Runs `X = Z^(m)` from `ξ + δ_α` and `Y = Z^(m)` from `ξ` under the
/// synchronized coupling until they coalesce, and further until `horizon` if
/// one is given.
pub fn simulate_coupled_pair(
    xi: &Configuration,
    alpha: &Point,
    m: usize,
    horizon: Option<f64>,
    space: &GroundSpace,
    stream: &mut RandomStream,
) -> Result<CoupledPairRun> {
    space.check_point(alpha)?;
    let x0 = xi.with_point(alpha.clone());
    let mut chains = CoupledChains::new(space, &[x0.clone(), xi.clone()], &[m, m])?;
    let mut x_events = Vec::new();
    let mut y_events = Vec::new();
    let mut coalescence_time = None;
    let mut truncated = false;
    let horizon = horizon.unwrap_or(0.0);
    loop {
        if coalescence_time.is_none() && chains.coalesced() {
            coalescence_time = Some(chains.time());
        }
        let limit = match coalescence_time {
            Some(_) if chains.time() >= horizon => break,
            Some(_) => horizon,
            None if chains.jumps() >= EVENT_CAP => {
                truncated = true;
                break;
            }
            None => f64::INFINITY,
        };
        let Some(e) = chains.step_until(limit, stream) else { break };
        if e.mask & 1 != 0 {
            x_events.push(chain_event(&chains, &e));
        }
        if e.mask & 2 != 0 {
            y_events.push(chain_event(&chains, &e));
        }
    }
    let end = chains.time();
    let lambda = space.total_mass();
    Ok(CoupledPairRun {
        x: Trajectory { initial: x0, events: x_events, horizon: end, lambda, floor: m },
        y: Trajectory { initial: xi.clone(), events: y_events, horizon: end, lambda, floor: m },
        coalescence_time,
        truncated,
        final_state: chains.snapshot(),
    })
}

/// Counts of the triple `(Z_ξ^(m), Z_ξ^(0), Z_∅^(0))` after every jump.
#[derive(Clone, Debug, Serialize)]
pub struct DominationPath {
    pub times: Vec<f64>,
    pub counts: Vec<[usize; 3]>,
    /// Tag sets nested as `Z_∅^(0) ⊆ Z_ξ^(0) ⊆ Z_ξ^(m)` at every jump.
    pub nested: bool,
}

impl DominationPath {
    pub fn dominated(&self) -> bool {
        self.counts.iter().all(|c| c[0] >= c[1] && c[1] >= c[2])
    }
}

fn subset(a: &[PointId], b: &[PointId]) -> bool {
    a.iter().all(|id| b.binary_search(id).is_ok())
}

/// Runs the domination triple on `[0, horizon]`.
pub fn simulate_domination_triple(
    xi: &Configuration,
    m: usize,
    horizon: f64,
    space: &GroundSpace,
    stream: &mut RandomStream,
) -> Result<DominationPath> {
    let mut chains =
        CoupledChains::new(space, &[xi.clone(), xi.clone(), Configuration::empty()], &[m, 0, 0])?;
    let mut times = vec![0.0];
    let mut counts = vec![[chains.count(0), chains.count(1), chains.count(2)]];
    let mut nested = subset(chains.ids(2), chains.ids(1)) && subset(chains.ids(1), chains.ids(0));
    while let Some(e) = chains.step_until(horizon, stream) {
        times.push(e.time);
        counts.push([chains.count(0), chains.count(1), chains.count(2)]);
        nested &= subset(chains.ids(2), chains.ids(1)) && subset(chains.ids(1), chains.ids(0));
    }
    Ok(DominationPath { times, counts, nested })
}
