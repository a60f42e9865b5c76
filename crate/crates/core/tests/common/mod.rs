//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Upper end of the truncated count state space.
pub const COUNT_TOP: usize = 200;

/// Stationary law of the count chain on `m..=COUNT_TOP`, built from the ratios
/// `π(j+1)/π(j) = Λ/(j+1)` so nothing underflows before normalisation.
pub fn truncated_poisson(lambda: f64, m: usize) -> Vec<f64> {
    let mut w = vec![0.0; COUNT_TOP + 1];
    // start at the mode to keep the weights in range
    let mode = (lambda.floor() as usize).clamp(m, COUNT_TOP);
    w[mode] = 1.0;
    for j in mode + 1..=COUNT_TOP {
        w[j] = w[j - 1] * lambda / j as f64;
    }
    for j in (m..mode).rev() {
        w[j] = w[j + 1] * (j + 1) as f64 / lambda;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Solves the count-chain Poisson equation
/// `Λ(H(j+1) - H(j)) + j·1{j>m}(H(j-1) - H(j)) = g(j) - π(g)` on `m..=200`
/// (no births out of 200) with `H(m) = 0`, by tridiagonal elimination.
/// Entries below `m` are NaN.
pub fn count_poisson_equation(lambda: f64, m: usize, g: impl Fn(usize) -> f64) -> Vec<f64> {
    let pi = truncated_poisson(lambda, m);
    let pig: f64 = (m..=COUNT_TOP).map(|j| pi[j] * g(j)).sum();
    let n = COUNT_TOP - m + 1;
    let (mut lower, mut diag, mut upper, mut rhs) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    diag[0] = 1.0;
    for r in 1..n {
        let j = m + r;
        let birth = if j < COUNT_TOP { lambda } else { 0.0 };
        let death = j as f64;
        lower[r] = death;
        diag[r] = -(birth + death);
        upper[r] = birth;
        rhs[r] = g(j) - pig;
    }
    // Thomas algorithm
    for r in 1..n {
        let w = lower[r] / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    let mut h = vec![0.0; n];
    h[n - 1] = rhs[n - 1] / diag[n - 1];
    for r in (0..n - 1).rev() {
        h[r] = (rhs[r] - upper[r] * h[r + 1]) / diag[r];
    }
    let mut out = vec![f64::NAN; COUNT_TOP + 1];
    out[m..].copy_from_slice(&h);
    out
}

/// `H(j+1) - H(j)` from the flux identity
/// `Λπ(j)Δ(j) = -Σ_{i>j} π(i)(g(i) - π(g))`.
pub fn flux_differences(lambda: f64, m: usize, g: impl Fn(usize) -> f64) -> Vec<f64> {
    let pi = truncated_poisson(lambda, m);
    let pig: f64 = (m..=COUNT_TOP).map(|j| pi[j] * g(j)).sum();
    let mut out = vec![f64::NAN; COUNT_TOP];
    for (j, slot) in out.iter_mut().enumerate().skip(m) {
        // ratios π(i)/π(j) accumulated in place
        let mut ratio = 1.0;
        let mut sum = 0.0;
        for i in j + 1..=COUNT_TOP {
            ratio *= lambda / i as f64;
            sum += ratio * (g(i) - pig);
        }
        *slot = -sum / lambda;
    }
    out
}

pub fn ramp(j: usize) -> f64 {
    (j as f64 / 10.0).min(1.0)
}

/// Law at time `t` of the count chain with floor `m` started from `start`,
/// truncated at `top`, by uniformisation of the generator.
pub fn transient_count_law(lambda: f64, m: usize, start: usize, t: f64, top: usize) -> Vec<f64> {
    let rate_max = lambda + top as f64;
    let mut p = vec![0.0; top + 1];
    p[start] = 1.0;
    let mut out = vec![0.0; top + 1];
    let mut weight = (-rate_max * t).exp();
    let mut k = 0usize;
    let mut acc = 0.0;
    while acc < 1.0 - 1e-15 && k < 100_000 {
        for j in 0..=top {
            out[j] += weight * p[j];
        }
        acc += weight;
        // one step of the uniformised jump chain
        let mut next = vec![0.0; top + 1];
        for j in 0..=top {
            if p[j] == 0.0 {
                continue;
            }
            let birth = if j < top { lambda } else { 0.0 };
            let death = if j > m { j as f64 } else { 0.0 };
            if j < top {
                next[j + 1] += p[j] * birth / rate_max;
            }
            if j > m {
                next[j - 1] += p[j] * death / rate_max;
            }
            next[j] += p[j] * (1.0 - (birth + death) / rate_max);
        }
        p = next;
        k += 1;
        weight *= rate_max * t / k as f64;
    }
    out
}

/// One row of the tail reference table.
#[derive(Debug, Clone, Copy)]
pub struct TailRow {
    pub lambda: f64,
    pub k: i64,
    pub tail: f64,
    pub ratio: f64,
    pub p_survival: f64,
}

pub fn tail_reference() -> Vec<TailRow> {
    let text = include_str!("../data/tail_ratio_reference.csv");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            TailRow {
                lambda: f[0].parse().unwrap(),
                k: f[1].parse().unwrap(),
                tail: f[2].parse().unwrap(),
                ratio: f[3].parse().unwrap(),
                p_survival: f[4].parse().unwrap(),
            }
        })
        .collect()
}

/// Chi-square goodness-of-fit p-value for uniformity of `xs` on `[0, 1]`.
pub fn uniform_chi_square_p(xs: &[f64], bins: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut counts = vec![0usize; bins];
    for &x in xs {
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = xs.len() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    ChiSquared::new((bins - 1) as f64).unwrap().sf(stat)
}

/// Chi-square goodness-of-fit p-value of `counts` against `pmf` on
/// `from..top` with everything from `top` on pooled into one bin.
pub fn count_chi_square_p(counts: &[usize], pmf: impl Fn(usize) -> f64, from: usize, top: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = counts.len() as f64;
    let mut hist = vec![0usize; top - from + 1];
    for &c in counts {
        hist[c.clamp(from, top) - from] += 1;
    }
    let head: f64 = (from..top).map(&pmf).sum();
    let stat: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let p = if from + i < top { pmf(from + i) } else { 1.0 - head };
            let e = p * n;
            (h as f64 - e).powi(2) / e
        })
        .sum();
    ChiSquared::new((top - from) as f64).unwrap().sf(stat)
}

/// Kolmogorov-Smirnov p-value for uniformity on `[0, 1]` (asymptotic).
pub fn uniform_ks_p(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    // Kolmogorov distribution tail
    let mut p = 0.0;
    for k in 1..200 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
    }
    p.clamp(0.0, 1.0)
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
