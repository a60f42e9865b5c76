mod common;

use common::{mean_var, uniform_chi_square_p, uniform_ks_p};
use condpp::mc::replicate;
use condpp::simulate::{
    conditional_binomial_count_pmf, conditional_poisson_count_pmf, sample_bernoulli_process,
    sample_binomial_process, sample_conditional_poisson, sample_poisson_process, total_variation,
};
use condpp::{Configuration, GroundSpace};

const DRAWS: usize = 100_000;

fn unit(lambda: f64) -> GroundSpace {
    GroundSpace::unit_interval(lambda).unwrap()
}

fn counts(xs: &[Configuration]) -> Vec<f64> {
    xs.iter().map(|x| x.len() as f64).collect()
}

fn scalars(xs: &[Configuration]) -> Vec<f64> {
    xs.iter().flat_map(|x| x.locations().map(|p| p.coords()[0]).collect::<Vec<_>>()).collect()
}

#[test]
fn poisson_counts_have_poisson_moments() {
    let space = unit(4.0);
    let draws = replicate(101, 2, DRAWS, |s| sample_poisson_process(&space, s));
    let (mean, var) = mean_var(&counts(&draws));
    let n = DRAWS as f64;
    // sd of the sample mean is sqrt(4/n); sd of the sample variance is
    // sqrt((μ4 - σ⁴)/n) with μ4 = Λ + 3Λ² for Poisson
    assert!((mean - 4.0).abs() <= 3.0 * (4.0 / n).sqrt(), "mean {mean}");
    assert!((var - 4.0).abs() <= 3.0 * ((4.0 + 48.0 - 16.0) / n).sqrt(), "var {var}");
    assert!(uniform_chi_square_p(&scalars(&draws[..5000]), 20) > 0.001);
}

#[test]
fn tiny_mass_is_almost_always_empty() {
    let space = unit(1e-9);
    let draws = replicate(103, 2, 1000, |s| sample_poisson_process(&space, s));
    assert!(draws.iter().all(|x| x.is_empty()));
}

#[test]
fn conditional_poisson_singleton_probability() {
    let space = unit(1.0);
    let draws = replicate(107, 2, DRAWS, |s| sample_conditional_poisson(&space, 1, s).unwrap());
    assert!(draws.iter().all(|x| !x.is_empty()));
    let hat = draws.iter().filter(|x| x.len() == 1).count() as f64 / DRAWS as f64;
    let e = (-1.0f64).exp();
    let exact = e / (1.0 - e);
    assert!((exact - 0.5819767).abs() < 1e-7);
    assert!((conditional_poisson_count_pmf(1.0, 1, 1).unwrap() - exact).abs() < 1e-15);
    assert!((hat - exact).abs() <= 3.0 * (exact * (1.0 - exact) / DRAWS as f64).sqrt(), "{hat}");
}

#[test]
fn conditional_poisson_at_m0_matches_plain_sampler() {
    let space = unit(2.5);
    let a = replicate(109, 2, 500, |s| sample_poisson_process(&space, s));
    let b = replicate(109, 2, 500, |s| sample_conditional_poisson(&space, 0, s).unwrap());
    assert_eq!(a, b);
}

#[test]
fn conditional_count_pmf_normalises() {
    for (lambda, m) in [(2.0, 1usize), (0.3, 3), (25.0, 10), (1.0, 0)] {
        let total: f64 = (0..400).map(|j| conditional_poisson_count_pmf(lambda, m, j).unwrap()).sum();
        assert!((total - 1.0).abs() <= 1e-12, "λ={lambda} m={m}: {total}");
        assert_eq!(conditional_poisson_count_pmf(lambda, m, m.saturating_sub(1)).unwrap() == 0.0, m > 0);
    }
    assert!(conditional_poisson_count_pmf(0.0, 1, 1).is_err());
}

#[test]
fn rejection_refuses_hopeless_conditioning() {
    let mut s = condpp::derive_stream(1, 1);
    assert!(matches!(
        sample_conditional_poisson(&unit(0.1), 12, &mut s),
        Err(condpp::Error::RejectionTooRare { .. })
    ));
}

#[test]
fn bernoulli_mean_count() {
    let draws = replicate(113, 2, DRAWS, |s| sample_bernoulli_process(100, 0.05, 0, s).unwrap());
    let (mean, _) = mean_var(&counts(&draws));
    assert!((mean - 5.0).abs() <= 3.0 * (4.75 / DRAWS as f64).sqrt(), "{mean}");
    // lattice support
    assert!(draws.iter().flat_map(|x| x.locations()).all(|p| {
        let k = p.coords()[0] * 100.0;
        (k - k.round()).abs() < 1e-9 && k >= 1.0
    }));
}

#[test]
fn conditioned_bernoulli_count_law() {
    let draws = replicate(127, 2, DRAWS, |s| sample_bernoulli_process(100, 0.05, 1, s).unwrap());
    assert!(draws.iter().all(|x| !x.is_empty()));
    let c: Vec<usize> = draws.iter().map(|x| x.len()).collect();
    let tv = total_variation(&c, |j| conditional_binomial_count_pmf(100, 0.05, 1, j).unwrap(), 101);
    assert!(tv <= 0.01, "tv {tv}");
}

#[test]
fn bernoulli_near_one_fills_the_lattice() {
    let mut s = condpp::derive_stream(3, 3);
    assert_eq!(sample_bernoulli_process(30, 1.0 - 1e-12, 0, &mut s).unwrap().len(), 30);
    assert!(sample_bernoulli_process(5, 0.5, 6, &mut s).is_err());
}

#[test]
fn binomial_shares_counts_and_has_uniform_locations() {
    let bern = replicate(131, 2, 10_000, |s| sample_bernoulli_process(10, 0.5, 1, s).unwrap());
    let bin = replicate(131, 2, 10_000, |s| sample_binomial_process(10, 0.5, 1, s).unwrap());
    assert!(bern.iter().zip(&bin).all(|(a, b)| a.len() == b.len()));
    assert!(bin.iter().all(|x| !x.is_empty()));
    // within each count class locations are iid uniform; pool per class
    for j in 1..=10 {
        let pooled: Vec<f64> = scalars(&bin.iter().filter(|x| x.len() == j).cloned().collect::<Vec<_>>());
        if pooled.len() >= 200 {
            assert!(uniform_ks_p(&pooled) > 0.001, "count {j}");
        }
    }
    assert!(uniform_ks_p(&scalars(&bin)) > 0.001);
}
