//! Ground spaces, intensity measures and configurations.
//!
//! A [`GroundSpace`] pairs a bounded region carrying a metric `d0 <= 1` with a
//! diffuse intensity measure, described by its total mass and a sampler for the
//! normalised measure. A [`Configuration`] is a finite point pattern whose points
//! carry identity tags, so that coupled simulations can follow a particular
//! point across several chains.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::stream::RandomStream;

/// A location in the ground space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(SmallVec<[f64; 2]>);

impl Point {
    pub fn new(coords: impl IntoIterator<Item = f64>) -> Self {
        Point(coords.into_iter().collect())
    }

    pub fn scalar(x: f64) -> Self {
        Point(smallvec::smallvec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Lexicographic total order on coordinates, used for multiset comparison.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

/// A bounded metric space with a sampler for a diffuse probability measure.
///
/// Implementations must return distances in `[0, 1]` that are symmetric, vanish
/// on the diagonal and satisfy the triangle inequality.
pub trait Region: fmt::Debug + Send + Sync {
    /// Short descriptor, e.g. `"[0,1]"`; two spaces are compatible iff their
    /// descriptors agree.
    fn descriptor(&self) -> String;

    fn dimension(&self) -> usize;

    fn contains(&self, x: &Point) -> bool;

    fn distance(&self, x: &Point, y: &Point) -> f64;

    /// One draw from the normalised intensity.
    fn sample(&self, stream: &mut RandomStream) -> Point;

    /// Whether the sampled measure has no atoms. Atomic measures are rejected.
    fn is_diffuse(&self) -> bool {
        true
    }
}

/// `[0, 1]` with `d0(x, y) = |x - y|` and the uniform location law.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitInterval;

impl Region for UnitInterval {
    fn descriptor(&self) -> String {
        "[0,1]".into()
    }

    fn dimension(&self) -> usize {
        1
    }

    fn contains(&self, x: &Point) -> bool {
        x.dimension() == 1 && (0.0..=1.0).contains(&x.coords()[0])
    }

    #[inline]
    fn distance(&self, x: &Point, y: &Point) -> f64 {
        (x.coords()[0] - y.coords()[0]).abs()
    }

    fn sample(&self, stream: &mut RandomStream) -> Point {
        Point::scalar(stream.uniform())
    }
}

/// `[0, 1]^d` with `d0 = min(1, Euclidean)` and the uniform location law.
#[derive(Clone, Copy, Debug)]
pub struct UnitCube {
    pub dim: usize,
}

impl Region for UnitCube {
    fn descriptor(&self) -> String {
        format!("[0,1]^{}", self.dim)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &Point) -> bool {
        x.dimension() == self.dim && x.coords().iter().all(|c| (0.0..=1.0).contains(c))
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let sq: f64 = x
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sq.sqrt().min(1.0)
    }

    fn sample(&self, stream: &mut RandomStream) -> Point {
        Point::new((0..self.dim).map(|_| stream.uniform()))
    }
}

/// Ground space `Γ` together with the intensity measure on it.
#[derive(Clone)]
pub struct GroundSpace {
    region: Arc<dyn Region>,
    total_mass: f64,
}

impl fmt::Debug for GroundSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroundSpace")
            .field("region", &self.region.descriptor())
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

impl GroundSpace {
    pub fn new(region: Arc<dyn Region>, total_mass: f64) -> Result<Self> {
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(Error::invalid(format!(
                "total intensity mass must be positive and finite, got {total_mass}"
            )));
        }
        if !region.is_diffuse() {
            return Err(Error::AtomicIntensity);
        }
        Ok(GroundSpace { region, total_mass })
    }

    /// `[0, 1]` with uniform intensity of the given total mass.
    pub fn unit_interval(total_mass: f64) -> Result<Self> {
        Self::new(Arc::new(UnitInterval), total_mass)
    }

    /// `[0, 1]^dim` with uniform intensity of the given total mass.
    pub fn unit_cube(dim: usize, total_mass: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("cube dimension must be at least 1"));
        }
        Self::new(Arc::new(UnitCube { dim }), total_mass)
    }

    /// Same region, different total mass.
    pub fn with_mass(&self, total_mass: f64) -> Result<Self> {
        Self::new(self.region.clone(), total_mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn region(&self) -> &dyn Region {
        &*self.region
    }

    pub fn descriptor(&self) -> String {
        self.region.descriptor()
    }

    pub fn dimension(&self) -> usize {
        self.region.dimension()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.region.contains(x)
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if self.region.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideSpace {
                point: x.coords().to_vec(),
                space: self.region.descriptor(),
            })
        }
    }

    pub fn check_configuration(&self, xi: &Configuration) -> Result<()> {
        xi.locations().try_for_each(|x| self.check_point(x))
    }

    /// `d0(x, y)`, validated.
    pub fn metric(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let d = self.region.distance(x, y);
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::MetricOutOfRange(d));
        }
        Ok(d)
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        self.region.distance(x, y)
    }

    /// One draw from `Λ_bold / Λ`; advances the stream.
    pub fn sample_location(&self, stream: &mut RandomStream) -> Point {
        self.region.sample(stream)
    }
}

/// Identity tag of a point. Tags are handed out by a monotone counter and never
/// reused within one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub u64);

#[derive(Clone, Debug, PartialEq)]
pub struct TaggedPoint {
    pub id: PointId,
    pub location: Point,
}

/// A finite point configuration `ξ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Configuration {
    points: Vec<TaggedPoint>,
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Tags the locations `0, 1, 2, ...` in order.
    pub fn from_locations(locations: impl IntoIterator<Item = Point>) -> Self {
        let points = locations
            .into_iter()
            .enumerate()
            .map(|(i, location)| TaggedPoint { id: PointId(i as u64), location })
            .collect();
        Configuration { points }
    }

    pub fn from_scalars(xs: &[f64]) -> Self {
        Self::from_locations(xs.iter().map(|&x| Point::scalar(x)))
    }

    /// Builds a configuration from explicitly tagged points; tags must be unique.
    pub fn from_tagged(points: Vec<TaggedPoint>) -> Result<Self> {
        let mut ids: Vec<PointId> = points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate identity tag in configuration"));
        }
        Ok(Configuration { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TaggedPoint] {
        &self.points
    }

    pub fn locations(&self) -> impl ExactSizeIterator<Item = &Point> + '_ {
        self.points.iter().map(|p| &p.location)
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = PointId> + '_ {
        self.points.iter().map(|p| p.id)
    }

    /// Smallest tag strictly above every tag in use.
    pub fn next_id(&self) -> PointId {
        PointId(self.points.iter().map(|p| p.id.0 + 1).max().unwrap_or(0))
    }

    pub fn contains_id(&self, id: PointId) -> bool {
        self.points.iter().any(|p| p.id == id)
    }

    pub fn get(&self, id: PointId) -> Option<&TaggedPoint> {
        self.points.iter().find(|p| p.id == id)
    }

    /// Adds a point; the tag must not be in use.
    pub fn push(&mut self, id: PointId, location: Point) {
        debug_assert!(!self.contains_id(id));
        self.points.push(TaggedPoint { id, location });
    }

    /// Removes and returns the point at `index`, preserving the order of the rest.
    pub fn remove_at(&mut self, index: usize) -> TaggedPoint {
        self.points.remove(index)
    }

    pub fn remove_id(&mut self, id: PointId) -> Option<TaggedPoint> {
        let i = self.points.iter().position(|p| p.id == id)?;
        Some(self.points.remove(i))
    }

    /// `ξ + δ_x` with a fresh tag.
    pub fn with_point(&self, location: Point) -> Self {
        let mut out = self.clone();
        let id = out.next_id();
        out.push(id, location);
        out
    }

    /// Location multiset in canonical (sorted) order.
    pub fn sorted_locations(&self) -> Vec<Point> {
        let mut locs: Vec<Point> = self.locations().cloned().collect();
        locs.sort_by(|a, b| a.total_cmp(b));
        locs
    }

    /// Equality of location multisets, ignoring tags.
    pub fn same_multiset(&self, other: &Configuration) -> bool {
        self.len() == other.len() && self.sorted_locations() == other.sorted_locations()
    }
}
