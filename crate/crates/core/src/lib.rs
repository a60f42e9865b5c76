//! Simulation, bound evaluation and Monte Carlo verification for Stein's
//! method applied to conditional Poisson point processes.

pub mod bernoulli;
pub mod bounds;
pub mod coupling;
pub mod error;
pub mod io;
pub mod mc;
pub mod metrics;
pub mod simulate;
pub mod space;
pub mod stream;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use mc::MCEstimate;
pub use space::{Configuration, GroundSpace, Point, PointId, TaggedPoint};
pub use stream::{derive_stream, RandomStream};
