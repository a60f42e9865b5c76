//! JSON and JSONL formats.
//!
//! * Configuration: `{"points": [[x1, ...], [x2, ...], ...]}`. Tags are not
//!   written; loading tags the points `0, 1, 2, ...`.
//! * Sample files: JSONL, one configuration object per line.
//! * Trajectories: JSONL, one object per line with `lambda`, `floor`,
//!   `horizon`, `initial` as `[[tag, [coords]], ...]` and `events` as
//!   `[[time, "immigration" | "death", tag, [coords]], ...]`.
//!
//! Floats are written in the shortest form that parses back to the same
//! 64-bit value, so re-serialisation is byte-stable.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{Event, EventKind, Trajectory};
use crate::space::{Configuration, Point, PointId, TaggedPoint};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationWire {
    points: Vec<Vec<f64>>,
}

type EventWire = (f64, EventKind, u64, Vec<f64>);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryWire {
    lambda: f64,
    floor: usize,
    horizon: f64,
    initial: Vec<(u64, Vec<f64>)>,
    events: Vec<EventWire>,
}

fn point_from(coords: Vec<f64>, line: usize) -> Result<Point> {
    if coords.is_empty() {
        return Err(Error::Parse { line, message: "point with no coordinates".into() });
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::Parse { line, message: "non-finite coordinate".into() });
    }
    Ok(Point::new(coords))
}

fn parse_error(line: usize) -> impl Fn(serde_json::Error) -> Error {
    move |e| Error::Parse { line, message: e.to_string() }
}

pub fn configuration_to_json(xi: &Configuration) -> String {
    let wire = ConfigurationWire { points: xi.locations().map(|p| p.coords().to_vec()).collect() };
    serde_json::to_string(&wire).expect("plain data")
}

fn configuration_from_line(text: &str, line: usize) -> Result<Configuration> {
    let wire: ConfigurationWire = serde_json::from_str(text).map_err(parse_error(line))?;
    let dim = wire.points.first().map(|p| p.len());
    if wire.points.iter().any(|p| Some(p.len()) != dim) {
        return Err(Error::Parse { line, message: "points of mixed dimension".into() });
    }
    let points = wire.points.into_iter().map(|c| point_from(c, line)).collect::<Result<Vec<_>>>()?;
    Ok(Configuration::from_locations(points))
}

/// Parses a configuration document (errors report line 1).
pub fn configuration_from_json(text: &str) -> Result<Configuration> {
    configuration_from_line(text, 1)
}

pub fn read_configuration(path: &std::path::Path) -> Result<Configuration> {
    configuration_from_json(&std::fs::read_to_string(path)?)
}

/// One configuration per line.
pub fn write_samples(out: &mut impl Write, samples: &[Configuration]) -> Result<()> {
    for xi in samples {
        writeln!(out, "{}", configuration_to_json(xi))?;
    }
    Ok(())
}

/// Reads a JSONL sample file. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn read_samples(input: impl BufRead) -> Result<Vec<Configuration>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(configuration_from_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    let wire = TrajectoryWire {
        lambda: traj.lambda,
        floor: traj.floor,
        horizon: traj.horizon,
        initial: traj.initial.points().iter().map(|p| (p.id.0, p.location.coords().to_vec())).collect(),
        events: traj
            .events
            .iter()
            .map(|e| (e.time, e.kind, e.id.0, e.location.coords().to_vec()))
            .collect(),
    };
    serde_json::to_string(&wire).expect("plain data")
}

fn trajectory_from_line(text: &str, line: usize) -> Result<Trajectory> {
    let wire: TrajectoryWire = serde_json::from_str(text).map_err(parse_error(line))?;
    let initial = wire
        .initial
        .into_iter()
        .map(|(id, c)| Ok(TaggedPoint { id: PointId(id), location: point_from(c, line)? }))
        .collect::<Result<Vec<_>>>()?;
    let initial = Configuration::from_tagged(initial).map_err(|e| Error::Parse { line, message: e.to_string() })?;
    let events = wire
        .events
        .into_iter()
        .map(|(time, kind, id, c)| Ok(Event { time, kind, id: PointId(id), location: point_from(c, line)? }))
        .collect::<Result<Vec<_>>>()?;
    let traj = Trajectory { initial, events, horizon: wire.horizon, lambda: wire.lambda, floor: wire.floor };
    traj.validate().map_err(|e| Error::Parse { line, message: e.to_string() })?;
    Ok(traj)
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    trajectory_from_line(text, 1)
}

pub fn write_trajectories(out: &mut impl Write, trajectories: &[Trajectory]) -> Result<()> {
    for t in trajectories {
        writeln!(out, "{}", trajectory_to_json(t))?;
    }
    Ok(())
}

pub fn read_trajectories(input: impl BufRead) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(trajectory_from_line(&line, i + 1)?);
    }
    Ok(out)
}

/// Pretty JSON for reports, newline-terminated.
pub fn report_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("plain data");
    s.push('\n');
    s
}
