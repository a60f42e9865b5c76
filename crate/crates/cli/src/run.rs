use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use condpp::bernoulli::run_experiment;
use condpp::bounds::SteinBounds;
use condpp::io::{read_configuration, read_samples, report_json, write_samples, write_trajectories};
use condpp::mc::{component, replicate};
use condpp::metrics::{d1_bar, d2_bar_empirical};
use condpp::simulate::{sample_many, simulate_cid_chain, Law};
use condpp::verify::{verify_delta_bounds, verify_p_survival, verify_stein, VerifyReport};
use condpp::{Configuration, GroundSpace, Point};

use crate::args::*;

pub enum Outcome {
    Ok,
    /// A verification ran but did not pass.
    Failed,
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn sink(out: Option<&Path>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn json_only(format: Format, what: &str) -> Res<()> {
    if format == Format::Csv {
        return Err(format!("{what} is nested; csv output is only available for flat tables").into());
    }
    Ok(())
}

fn write_csv<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Res<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn emit<T: Serialize>(format: Format, out: Option<&Path>, json: &T, rows: &dyn Fn(&mut dyn Write) -> Res<()>) -> Res<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => w.write_all(report_json(json).as_bytes())?,
        Format::Csv => rows(&mut *w)?,
    }
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Res<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| format!("{}: {e}", path.display()))?))
}

fn with_path<T>(path: &Path, r: condpp::Result<T>) -> Res<T> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Space matching the dimension of the given configurations (unit mass; the
/// metric does not depend on it).
fn space_for<'a>(configs: impl IntoIterator<Item = &'a Configuration>) -> Res<GroundSpace> {
    let mut dims = configs.into_iter().flat_map(|c| c.locations().map(Point::dimension));
    let d = dims.next().unwrap_or(1);
    if dims.any(|x| x != d) {
        return Err("configurations of different dimensions".into());
    }
    Ok(if d == 1 { GroundSpace::unit_interval(1.0)? } else { GroundSpace::unit_cube(d, 1.0)? })
}

fn cube(dim: usize, lambda: f64) -> condpp::Result<GroundSpace> {
    if dim == 1 {
        GroundSpace::unit_interval(lambda)
    } else {
        GroundSpace::unit_cube(dim, lambda)
    }
}

pub fn dispatch(cli: &Cli) -> Res<Outcome> {
    let format = cli.format;
    match &cli.command {
        Command::Simulate(a) => simulate(format, a),
        Command::Sample(a) => sample(format, a),
        Command::Distance(d) => distance(format, d),
        Command::Bounds(a) => bounds(format, a),
        Command::Verify(a) => verify(format, a),
        Command::Bernoulli(a) => bernoulli(format, a),
    }
}

fn simulate(format: Format, a: &SimulateArgs) -> Res<Outcome> {
    json_only(format, "a trajectory")?;
    let space = cube(a.dim, a.lambda)?;
    let initial = match &a.initial {
        Some(p) => with_path(p, read_configuration(p))?,
        None => Configuration::from_locations(
            (0..a.m).map(|i| Point::new(vec![(i as f64 + 0.5) / a.m as f64; a.dim])),
        ),
    };
    if a.replicas == 0 {
        return Err("--replicas must be at least 1".into());
    }
    // validates before any replica runs
    simulate_cid_chain(&initial, a.m, 0.0, &space, &mut condpp::derive_stream(a.seed.seed, 0))?;
    let trajectories = replicate(a.seed.seed, component::CHAIN, a.replicas, |s| {
        simulate_cid_chain(&initial, a.m, a.t, &space, s)
    })
    .into_iter()
    .collect::<condpp::Result<Vec<_>>>()?;
    let mut w = sink(a.out.as_deref())?;
    write_trajectories(&mut w, &trajectories)?;
    w.flush()?;
    Ok(Outcome::Ok)
}

fn sample(format: Format, a: &SampleArgs) -> Res<Outcome> {
    json_only(format, "a configuration")?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("--{name} is required for this law"));
    let (law, lambda) = match a.law {
        LawName::Poisson => {
            if a.m != 0 {
                return Err("--m applies to cpoisson, bernoulli and binomial; use --law cpoisson".into());
            }
            (Law::Poisson, need(a.lambda, "lambda")?)
        }
        LawName::Cpoisson => (Law::ConditionalPoisson { m: a.m }, need(a.lambda, "lambda")?),
        LawName::Bernoulli | LawName::Binomial => {
            let n = a.n.ok_or("--n is required for this law")?;
            let p = need(a.p, "p")?;
            if a.dim != 1 {
                return Err("bernoulli and binomial processes live on [0, 1]".into());
            }
            let law = if a.law == LawName::Bernoulli {
                Law::Bernoulli { n, p, m: a.m }
            } else {
                Law::Binomial { n, p, m: a.m }
            };
            (law, 1.0)
        }
    };
    let space = cube(a.dim, lambda)?;
    let samples = sample_many(&law, &space, a.count, a.seed.seed, component::SAMPLE)?;
    let mut w = sink(a.out.as_deref())?;
    write_samples(&mut w, &samples)?;
    w.flush()?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct D1Out {
    d1: f64,
}

#[derive(Serialize)]
struct D2Out {
    estimate: f64,
    n: usize,
    seed: u64,
    upward_biased: bool,
}

fn distance(format: Format, d: &DistanceCommand) -> Res<Outcome> {
    match d {
        DistanceCommand::D1 { a, b } => {
            let x = with_path(a, read_configuration(a))?;
            let y = with_path(b, read_configuration(b))?;
            let space = space_for([&x, &y])?;
            let out = D1Out { d1: d1_bar(&x, &y, &space)? };
            let rows = |w: &mut dyn Write| write_csv(w, std::slice::from_ref(&out));
            emit(format, None, &out, &rows)?;
        }
        DistanceCommand::D2 { p, q, seed, out } => {
            let sp = with_path(p, read_samples(open(p)?))?;
            let sq = with_path(q, read_samples(open(q)?))?;
            let space = space_for(sp.iter().chain(&sq))?;
            let est = d2_bar_empirical(&sp, &sq, &space)?;
            let res = D2Out { estimate: est.estimate, n: est.n, seed: seed.seed, upward_biased: est.upward_biased };
            let rows = |w: &mut dyn Write| write_csv(w, std::slice::from_ref(&res));
            emit(format, out.as_deref(), &res, &rows)?;
        }
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct BoundsRow {
    lambda: f64,
    m: u64,
    xi_size: Option<u64>,
    k1: f64,
    k2: f64,
    l1: Option<f64>,
    l2: Option<f64>,
    first_diff: f64,
    first_diff_winner: &'static str,
    second_diff: f64,
    second_diff_winner: &'static str,
    first_diff_non_uniform: Option<f64>,
    second_diff_non_uniform: Option<f64>,
    large_lambda_regime: bool,
}

impl From<&SteinBounds> for BoundsRow {
    fn from(b: &SteinBounds) -> Self {
        BoundsRow {
            lambda: b.lambda,
            m: b.m,
            xi_size: b.xi_size,
            k1: b.k1,
            k2: b.k2,
            l1: b.l1,
            l2: b.l2,
            first_diff: b.first_diff,
            first_diff_winner: b.winners.first_diff,
            second_diff: b.second_diff,
            second_diff_winner: b.winners.second_diff,
            first_diff_non_uniform: b.first_diff_non_uniform,
            second_diff_non_uniform: b.second_diff_non_uniform,
            large_lambda_regime: b.large_lambda_regime,
        }
    }
}

fn bounds(format: Format, a: &BoundsArgs) -> Res<Outcome> {
    let mut all = Vec::new();
    for &lambda in &a.lambda {
        for &m in &a.m {
            all.push(SteinBounds::evaluate(lambda, m, a.xi_size)?);
        }
    }
    let rows = |w: &mut dyn Write| write_csv(w, &all.iter().map(BoundsRow::from).collect::<Vec<_>>());
    if all.len() == 1 {
        emit(format, a.out.as_deref(), &all[0], &rows)?;
    } else {
        emit(format, a.out.as_deref(), &all, &rows)?;
    }
    Ok(Outcome::Ok)
}

fn verify(format: Format, a: &VerifyArgs) -> Res<Outcome> {
    let report: VerifyReport = match a.pipeline {
        Pipeline::PSurvival => {
            if a.xi_size.is_some() {
                return Err("--xi-size does not apply to p-survival; use --k".into());
            }
            verify_p_survival(a.lambda, a.m, a.k.unwrap_or(a.m.max(1)), a.replicas, a.seed.seed)?
        }
        Pipeline::Stein => {
            let sizes = a.xi_size.clone().unwrap_or_else(|| vec![a.m, a.m + 1, a.m + 3]);
            verify_stein(a.lambda, a.m, &sizes, a.replicas, a.seed.seed)?
        }
        Pipeline::DeltaBounds => {
            let sizes = a.xi_size.clone().unwrap_or_else(|| {
                if a.m == 0 { Vec::new() } else { vec![a.m, a.m + 3, a.m + 10] }
            });
            verify_delta_bounds(a.lambda, a.m, a.scenarios, &sizes, a.replicas, a.seed.seed)?
        }
    };
    let rows = |w: &mut dyn Write| write_csv(w, &report.rows);
    emit(format, a.out.as_deref(), &report, &rows)?;
    Ok(if report.pass { Outcome::Ok } else { Outcome::Failed })
}

fn bernoulli(format: Format, a: &BernoulliArgs) -> Res<Outcome> {
    let report = run_experiment(a.n, a.p, a.samples, a.replicas, a.seed.seed)?;
    let rows = |w: &mut dyn Write| write_csv(w, std::slice::from_ref(&report));
    emit(format, a.out.as_deref(), &report, &rows)?;
    Ok(Outcome::Ok)
}
