use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::d1_bar_points;
use crate::space::{Configuration, GroundSpace, Point};

/// `g(j) = min(1, j / width)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountRamp {
    pub width: u32,
}

impl CountRamp {
    pub fn eval(&self, j: usize) -> f64 {
        (j as f64 / self.width as f64).min(1.0)
    }
}

/// Largest count on which count-only functions are validated.
pub const COUNT_CHECK_RANGE: usize = 200;

/// A functional of configurations, Lipschitz with respect to `d̄1`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `f(ξ) = d̄1(ξ, η₀)`.
    DistanceTo(Configuration),
    /// `f(ξ) = g(|ξ|)`.
    CountOnly(CountRamp),
}

impl TestFunction {
    /// The shipped count-only function `g(j) = min(1, j/10)`.
    pub fn count_ramp() -> Self {
        TestFunction::CountOnly(CountRamp { width: 10 })
    }

    /// Reference functions `d̄1(·, η₀)` for `η₀` empty, a single central point
    /// and a five-point lattice along the diagonal.
    pub fn library(space: &GroundSpace) -> Vec<TestFunction> {
        let d = space.dimension();
        let diag = |c: f64| Point::new(std::iter::repeat_n(c, d));
        vec![
            TestFunction::DistanceTo(Configuration::empty()),
            TestFunction::DistanceTo(Configuration::from_locations([diag(0.5)])),
            TestFunction::DistanceTo(Configuration::from_locations(
                [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().map(diag),
            )),
        ]
    }

    /// Checks membership in the Lipschitz class. A count-only `g` must satisfy
    /// `|g(k) - g(j)| <= (k - j)/k` for all `j < k <= 200`, the `d̄1` distance
    /// between nested configurations of those sizes.
    pub fn validate(&self, space: &GroundSpace) -> Result<()> {
        match self {
            TestFunction::Constant(c) if !(0.0..=1.0).contains(c) => {
                Err(Error::invalid(format!("constant {c} outside [0, 1]")))
            }
            TestFunction::Constant(_) => Ok(()),
            TestFunction::DistanceTo(eta) => space.check_configuration(eta),
            TestFunction::CountOnly(g) => {
                if g.width == 0 {
                    return Err(Error::invalid("ramp width must be positive"));
                }
                for k in 1..=COUNT_CHECK_RANGE {
                    for j in 0..k {
                        let step = (g.eval(k) - g.eval(j)).abs();
                        if step > (k - j) as f64 / k as f64 + 1e-15 {
                            return Err(Error::invalid(format!(
                                "count function not Lipschitz between {j} and {k}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, xi: &Configuration, space: &GroundSpace) -> f64 {
        let pts: Vec<&Point> = xi.locations().collect();
        self.eval_points(&pts, space)
    }

    pub fn eval_points(&self, points: &[&Point], space: &GroundSpace) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::DistanceTo(eta) => {
                let reference: Vec<&Point> = eta.locations().collect();
                d1_bar_points(points, &reference, space)
            }
            TestFunction::CountOnly(g) => g.eval(points.len()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TestFunction::Constant(_))
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("constant({c})"),
            TestFunction::DistanceTo(eta) => format!("d1-to-{}-points", eta.len()),
            TestFunction::CountOnly(g) => format!("count-ramp({})", g.width),
        }
    }
}
