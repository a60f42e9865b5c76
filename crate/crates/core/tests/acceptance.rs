//! Acceptance suite. Runs every criterion once, prints one PASS/FAIL line per
//! criterion, then re-runs all of them and compares the report bytes.
//!
//! Run alone with `cargo test -p condpp --test acceptance`.

mod common;

use std::time::Instant;

use serde_json::{json, Value};

use common::{count_chi_square_p, count_poisson_equation, ramp, truncated_poisson, COUNT_TOP};
use condpp::bernoulli::{bernoulli_bound, run_experiment};
use condpp::bounds::{first_diff_bound, k1, p_survival_analytic, p_survival_upper_bound};
use condpp::coupling::{estimate_delta_h, estimate_p_survival, simulate_coupled_pair, stein_residual, TestFunction};
use condpp::io::report_json;
use condpp::mc::{replicate, MCEstimate};
use condpp::metrics::{d1_bar, d1_bar_bruteforce};
use condpp::simulate::{simulate_cid_chain, CountPmf};
use condpp::stream::{component_index, RandomStream};
use condpp::verify::verify_delta_bounds;
use condpp::{derive_stream, Configuration, GroundSpace, Point};

/// Fixed before the first run of this suite; never tuned.
const MASTER_SEED: u64 = 20261015;
const SIGMAS: f64 = 3.0;

fn seed_for(criterion: u64, i: u64) -> u64 {
    derive_stream(MASTER_SEED, component_index(1000 + criterion, i)).next_u64()
}

fn unit(lambda: f64) -> GroundSpace {
    GroundSpace::unit_interval(lambda).unwrap()
}

fn est_json(e: &MCEstimate) -> Value {
    json!({ "estimate": e.estimate, "se": e.std_error, "replicas": e.replicas, "truncated": e.truncated })
}

struct Outcome {
    pass: bool,
    summary: String,
    report: Value,
}

fn terminal_counts(lambda: f64, m: usize, replicas: usize, seed: u64) -> Vec<usize> {
    let space = unit(lambda);
    let xi0 = Configuration::from_scalars(&(0..m).map(|j| (j as f64 + 0.5) / m as f64).collect::<Vec<_>>());
    replicate(seed, 1, replicas, |s| simulate_cid_chain(&xi0, m, 50.0, &space, s).unwrap().terminal_count())
}

fn stationarity() -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for (i, (lambda, m)) in [(3.0, 2usize), (1.0, 1), (5.0, 1)].into_iter().enumerate() {
        let counts = terminal_counts(lambda, m, 20_000, seed_for(1, i as u64));
        let tv = CountPmf::conditional_poisson(lambda, m).unwrap().tv_to_empirical(&counts);
        pass &= tv <= 0.01;
        rows.push(json!({ "lambda": lambda, "m": m, "tv": tv }));
    }
    let tvs: Vec<String> = rows.iter().map(|r| format!("{:.4}", r["tv"].as_f64().unwrap())).collect();
    // Diagnostic only, does not change the verdict: an exact sampler exceeds
    // TV 0.01 at 2e4 replicas with probability about 0.23 at (5, 1), so the
    // worst setting is also shown at ten times the replicas.
    let counts = terminal_counts(5.0, 1, 200_000, seed_for(1, 10));
    let pmf = CountPmf::conditional_poisson(5.0, 1).unwrap();
    let big_tv = pmf.tv_to_empirical(&counts);
    let chi_p = count_chi_square_p(&counts, |j| pmf.prob(j), 1, 13);
    Outcome {
        pass,
        summary: format!(
            "TV (3,2) (1,1) (5,1) = {} (limit 0.01); diagnostic (5,1) at 2e5: TV {big_tv:.4}, chi-square p {chi_p:.3}",
            tvs.join(" ")
        ),
        report: json!({ "settings": rows, "diagnostic": { "replicas": 200_000, "tv": big_tv, "chi_square_p": chi_p } }),
    }
}

fn survival() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (i, lambda) in [0.5, 1.0, 2.0, 5.0, 10.0].into_iter().enumerate() {
        for k in [1usize, 2, 5] {
            let est = estimate_p_survival(lambda, k, 1, 100_000, seed_for(2, (i * 10 + k) as u64)).unwrap();
            let exact = p_survival_analytic(lambda, k as u64).unwrap();
            let z = (est.estimate - exact) / est.std_error;
            worst = worst.max(z.abs());
            pass &= z.abs() <= SIGMAS;
            rows.push(json!({ "lambda": lambda, "k": k, "exact": exact, "mc": est_json(&est) }));
        }
    }
    let mut bound_ok = true;
    for i in 1..=200 {
        let lambda = 0.05 * i as f64;
        for k in 1..=40u64 {
            bound_ok &= p_survival_analytic(lambda, k).unwrap() <= p_survival_upper_bound(lambda, k);
        }
        bound_ok &= p_survival_analytic(lambda, 0).unwrap() == 0.0 && p_survival_upper_bound(lambda, 0) == 0.0;
    }
    pass &= bound_ok;
    Outcome {
        pass,
        summary: format!("15 grid points, worst |z| = {worst:.2}; analytic <= min(k/L, k/(k+1)): {bound_ok}"),
        report: json!({ "grid": rows, "bound_holds": bound_ok }),
    }
}

fn random_configuration(s: &mut RandomStream, max: usize) -> Configuration {
    let n = s.below(max + 1);
    Configuration::from_scalars(&(0..n).map(|_| s.uniform()).collect::<Vec<_>>())
}

fn metric() -> Outcome {
    let space = unit(1.0);
    let mut s = derive_stream(seed_for(3, 0), 0);
    let mut max_gap: f64 = 0.0;
    for _ in 0..500 {
        let (a, b) = (random_configuration(&mut s, 7), random_configuration(&mut s, 7));
        max_gap = max_gap.max((d1_bar(&a, &b, &space).unwrap() - d1_bar_bruteforce(&a, &b, &space).unwrap()).abs());
    }
    let mut axioms = true;
    for _ in 0..1000 {
        let a = random_configuration(&mut s, 6);
        let b = random_configuration(&mut s, 6);
        let c = random_configuration(&mut s, 6);
        let ab = d1_bar(&a, &b, &space).unwrap();
        axioms &= ab == d1_bar(&b, &a, &space).unwrap();
        axioms &= d1_bar(&a, &a, &space).unwrap() == 0.0;
        axioms &= d1_bar(&a, &c, &space).unwrap() <= ab + d1_bar(&b, &c, &space).unwrap() + 1e-12;
        axioms &= (ab == 0.0) == a.same_multiset(&b);
        axioms &= (0.0..=1.0).contains(&ab);
        // a permuted copy is at distance 0
        let mut xs: Vec<f64> = a.locations().map(|p| p.coords()[0]).collect();
        xs.reverse();
        axioms &= d1_bar(&a, &Configuration::from_scalars(&xs), &space).unwrap() == 0.0;
    }
    Outcome {
        pass: max_gap <= 1e-12 && axioms,
        summary: format!("max |fast - brute| = {max_gap:.1e} over 500 pairs; axioms on 1000 triples: {axioms}"),
        report: json!({ "max_gap": max_gap, "axioms": axioms }),
    }
}

fn stein() -> Outcome {
    let (lambda, m) = (3.0, 1usize);
    let space = unit(lambda);
    let f = TestFunction::count_ramp();
    let h = count_poisson_equation(lambda, m, ramp);
    let pi = truncated_poisson(lambda, m);
    let pig: f64 = (m..=COUNT_TOP).map(|j| pi[j] * ramp(j)).sum();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (i, k) in [1usize, 2, 4].into_iter().enumerate() {
        let xi = Configuration::from_scalars(&[0.15, 0.35, 0.6, 0.85][..k]);
        let r = stein_residual(&f, &xi, m, &space, 20_000, seed_for(4, i as u64)).unwrap();
        let mut z = vec![("residual", r.residual.clone(), 0.0)];
        z.push(("immigration", r.immigration_term.clone(), lambda * (h[k + 1] - h[k])));
        if let Some(d) = &r.death_term {
            z.push(("death", d.clone(), k as f64 * (h[k - 1] - h[k])));
        }
        z.push(("target", r.target.clone(), ramp(k) - pig));
        let alpha = Point::scalar(0.5);
        let dh = estimate_delta_h(&f, &xi, &alpha, m, &space, 20_000, seed_for(4, 10 + i as u64)).unwrap();
        z.push(("delta_h", dh, h[k + 1] - h[k]));
        for (name, e, oracle) in z {
            let score = (e.estimate - oracle) / e.std_error;
            checks.push(score);
            rows.push(json!({ "size": k, "part": name, "oracle": oracle, "mc": est_json(&e) }));
        }
    }
    let worst = checks.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    Outcome {
        pass: worst <= SIGMAS,
        summary: format!("{} checks (residual and every part vs tridiagonal oracle), worst |z| = {worst:.2}", checks.len()),
        report: json!(rows),
    }
}

fn domination() -> Outcome {
    let mut pass = true;
    let mut reports = Vec::new();
    let mut rows = 0;
    let mut margin = f64::INFINITY;
    for (i, (lambda, m)) in [(5.0, 1usize), (10.0, 2), (1.0, 1)].into_iter().enumerate() {
        let r = verify_delta_bounds(lambda, m, 20, &[m, m + 3, m + 10], 4000, seed_for(5, i as u64)).unwrap();
        pass &= r.pass;
        rows += r.rows.len();
        for row in &r.rows {
            margin = margin.min(row.bound + SIGMAS * row.se - row.estimate.abs());
        }
        reports.push(serde_json::to_value(&r).unwrap());
    }
    Outcome {
        pass,
        summary: format!("{rows} estimates vs bounds, smallest slack bound + 3SE - |est| = {margin:.4}"),
        report: json!(reports),
    }
}

fn unconditional() -> Outcome {
    let space = unit(4.0);
    let xi = Configuration::from_scalars(&[0.2, 0.7, 0.4]);
    let times: Vec<f64> = replicate(seed_for(6, 0), 1, 10_000, |s| {
        simulate_coupled_pair(&xi, &Point::scalar(0.55), 0, None, &space, s).unwrap().coalescence_time.unwrap()
    });
    let tc = MCEstimate::from_samples(&times, seed_for(6, 0));
    // Exp(1): standard deviation 1
    let sigma = 1.0 / (times.len() as f64).sqrt();
    let mut pass = (tc.estimate - 1.0).abs() <= SIGMAS * sigma;
    let f = TestFunction::count_ramp();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (lambda, k)) in [(2.0, 0usize), (4.0, 3), (8.0, 6)].into_iter().enumerate() {
        let space = unit(lambda);
        let h = count_poisson_equation(lambda, 0, ramp);
        let xi = Configuration::from_scalars(&vec![0.3; k]);
        let e = estimate_delta_h(&f, &xi, &Point::scalar(0.6), 0, &space, 20_000, seed_for(6, 1 + i as u64)).unwrap();
        let oracle = h[k + 1] - h[k];
        worst = worst.max(((e.estimate - oracle) / e.std_error).abs());
        rows.push(json!({ "lambda": lambda, "size": k, "oracle": oracle, "mc": est_json(&e) }));
    }
    pass &= worst <= SIGMAS;
    let mut exact = true;
    for i in 1..=400 {
        let lambda = 0.05 * i as f64;
        let formula = 1f64.min((0.95 + lambda.ln().max(0.0)) / lambda);
        exact &= first_diff_bound(lambda, 0).unwrap().value == formula;
    }
    pass &= exact;
    Outcome {
        pass,
        summary: format!(
            "mean coalescence {:.4} (3 sigma = {:.4}); delta_h at m=0 worst |z| = {worst:.2}; unconditional formula exact: {exact}",
            tc.estimate,
            SIGMAS * sigma
        ),
        report: json!({ "coalescence": est_json(&tc), "delta_h": rows, "formula_exact": exact }),
    }
}

fn closed_forms() -> Outcome {
    // independent recomputation straight from the formulas
    let ln10 = 10f64.ln();
    let k1_10 = (0.95 + ln10) / 10.0;
    let first_10 = (0.1 + 2.0 * k1_10).min(1.0 / 90.0 + 10.0 / 9.0 * k1_10);
    let e2 = (-2.0f64).exp();
    let tail0 = 1.0;
    let tail1 = 1.0 - e2;
    let p_2_1 = 1.0 - (tail0 / tail1 - 0.5);
    let pre = 1.0 / (1.0 - 0.95f64.powi(100));
    let b2 = pre * (0.03 + (0.05 + 100.0 * 0.0025 * (0.95 + 5f64.ln())) / (4.0 * (99.0f64 * 0.05 * 0.95).sqrt()));
    let cases = [
        ("k1(10,1)", k1(10.0, 1).unwrap(), k1_10, 0.3252585),
        ("first_diff_bound(10,1)", first_diff_bound(10.0, 1).unwrap().value, first_10, 0.3725094),
        ("p_survival_analytic(2,1)", p_survival_analytic(2.0, 1).unwrap(), p_2_1, 0.3434823),
        ("bound2(100,0.05)", bernoulli_bound(100, 0.05).unwrap().bound2.unwrap(), b2, 0.1101834),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, lib, indep, stated) in cases {
        let ok = (lib - indep).abs() <= 1e-14 && (lib - stated).abs() < 1e-7;
        pass &= ok;
        rows.push(json!({ "name": name, "library": lib, "independent": indep, "stated": stated, "ok": ok }));
    }
    let shown: Vec<String> = rows.iter().map(|r| format!("{}={:.9}", r["name"].as_str().unwrap(), r["library"].as_f64().unwrap())).collect();
    Outcome { pass, summary: shown.join(", "), report: json!(rows) }
}

fn bernoulli() -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for (n, p) in [(100usize, 0.05), (200, 0.05), (50, 0.2)] {
        for r in 0..10u64 {
            let rep = run_experiment(n, p, 500, 10, seed_for(8, n as u64 * 1000 + r)).unwrap();
            pass &= rep.pass;
            let best = rep.bound2.unwrap_or(rep.bound1).min(rep.bound1);
            worst = worst.max(rep.d2_estimate - best - rep.allowance);
            rows.push(serde_json::to_value(&rep).unwrap());
        }
    }
    let mut shape = Vec::new();
    let mut shape_ok = true;
    for p in [0.1, 0.2] {
        for n in [50usize, 100, 200, 400, 800] {
            let b2 = bernoulli_bound(n, p).unwrap().bound2.unwrap();
            let ratio = b2 / ((p / (n as f64 * (1.0 - p))).sqrt() * (0.95 + (n as f64 * p).ln()));
            shape_ok &= (0.5..=2.5).contains(&ratio);
            shape.push(json!({ "n": n, "p": p, "ratio": ratio }));
        }
    }
    pass &= shape_ok;
    Outcome {
        pass,
        summary: format!(
            "30 runs (3 settings x 10 seeds, N=500), max d2 - (bound + allowance) = {worst:.4}; shape ratios in [0.5, 2.5]: {shape_ok}"
        ),
        report: json!({ "runs": rows, "shape": shape }),
    }
}

/// Whether a criterion is a fixed-seed statistical test. Those can fail for
/// exact code with a small known probability; their FAIL lines are reported
/// but only deterministic failures set the exit status.
#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Statistical,
    Exact,
}

type Criterion = (u32, &'static str, Kind, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    (1, "stationarity", Kind::Statistical, stationarity),
    (2, "survival probability", Kind::Statistical, survival),
    (3, "metric exactness", Kind::Exact, metric),
    (4, "Stein equation", Kind::Statistical, stein),
    (5, "bound domination", Kind::Statistical, domination),
    (6, "m = 0 consistency", Kind::Statistical, unconditional),
    (7, "closed forms", Kind::Exact, closed_forms),
    (8, "Bernoulli experiment", Kind::Statistical, bernoulli),
];

fn main() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let mut failed = Vec::new();
    let mut hard_failure = false;
    let mut first = Vec::new();
    for (k, name, kind, run) in CRITERIA {
        let t = Instant::now();
        let o = run();
        let bytes = report_json(&json!({ "criterion": k, "seed": MASTER_SEED, "pass": o.pass, "report": o.report }));
        std::fs::write(dir.join(format!("criterion_{k}.json")), &bytes).unwrap();
        println!(
            "criterion {k} ({name}): {}  {}  [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.summary,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(k);
            hard_failure |= kind == Kind::Exact;
        }
        first.push(bytes);
    }
    let t = Instant::now();
    let mut differing = Vec::new();
    for ((k, _, _, run), bytes) in CRITERIA.iter().zip(&first) {
        let o = run();
        let again = report_json(&json!({ "criterion": k, "seed": MASTER_SEED, "pass": o.pass, "report": o.report }));
        if &again != bytes {
            differing.push(k.to_string());
        }
    }
    let repro = differing.is_empty();
    println!(
        "criterion 9 (reproducibility): {}  re-ran criteria 1-8 with seed {MASTER_SEED}: {}  [{:.1}s]",
        if repro { "PASS" } else { "FAIL" },
        if repro { "all reports byte-identical".to_string() } else { format!("differing: {}", differing.join(", ")) },
        t.elapsed().as_secs_f64()
    );
    if !repro {
        failed.push(9);
        hard_failure = true;
    }
    println!("reports written to {}", dir.display());
    let list: Vec<String> = failed.iter().map(|k| k.to_string()).collect();
    println!("{} of 9 criteria pass; failing: {}", 9 - failed.len(), if failed.is_empty() { "none".into() } else { list.join(", ") });
    if hard_failure {
        std::process::exit(1);
    }
}
