//! Ground-truth obstacle field, simulated sensing, and the per-agent point
//! clouds built from it.
//!
//! Obstacles are simple polygons, canonicalized to counterclockwise order on
//! construction. Each agent carries its own [`PointCloud`]: everything it has
//! sensed plus, for a leader, the obstacle points it has decoded from the
//! follower's reactions. Clouds only grow, and they deduplicate points to a
//! small grid so repeated scans of the same face stay bounded.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point};
use crate::{Scalar, SimError};

/// Dedup grid resolution for accumulated cloud points (m).
pub const DEDUP_EPS: f64 = 0.01;

/// Cell size of the cloud's range-query index (m).
const QUERY_CELL: f64 = 0.5;

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<F> {
    pub min: [F; 2],
    pub max: [F; 2],
}

impl<F: Scalar> Rect<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.min[0].is_finite()
            && self.min[1].is_finite()
            && self.max[0].is_finite()
            && self.max[1].is_finite()
            && self.min[0] <= self.max[0]
            && self.min[1] <= self.max[1];
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidGeometry(format!(
                "rectangle must have finite min <= max, got min {:?} max {:?}",
                self.min.map(|v| v.to_f64()),
                self.max.map(|v| v.to_f64())
            )))
        }
    }

    pub fn contains(&self, p: Point<F>) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Uniform sample; degenerate rectangles return their single point.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point<F> {
        let x = sample_coord(self.min[0], self.max[0], rng);
        let y = sample_coord(self.min[1], self.max[1], rng);
        [x, y]
    }
}

fn sample_coord<F: Scalar, R: Rng>(lo: F, hi: F, rng: &mut R) -> F {
    if lo == hi {
        return lo;
    }
    let t: f64 = rng.random_range(0.0..1.0);
    lo + (hi - lo) * F::c(t)
}

/// A simple polygon stored counterclockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[F; 2]>", into = "Vec<[F; 2]>")]
#[serde(bound(
    serialize = "F: Scalar + Serialize + Clone",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct Obstacle<F: Scalar> {
    vertices: Vec<Point<F>>,
}

impl<F: Scalar> Obstacle<F> {
    /// Validates and canonicalizes a vertex list: at least three finite
    /// vertices, nonzero area, no self-intersection; clockwise input is
    /// reversed to counterclockwise.
    pub fn new(mut vertices: Vec<Point<F>>) -> Result<Self, SimError> {
        if vertices.len() < 3 {
            return Err(SimError::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(SimError::InvalidGeometry("polygon vertex is not finite".into()));
        }
        let area = geometry::signed_area(&vertices);
        if area == F::zero() {
            return Err(SimError::InvalidGeometry("polygon has zero area".into()));
        }
        if area < F::zero() {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Edges sharing a vertex may touch there; all other pairs must
                // be disjoint for the polygon to be simple.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
                let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                if geometry::segments_intersect(a1, a2, b1, b2) {
                    return Err(SimError::InvalidGeometry(format!(
                        "polygon self-intersects between edges {i} and {j}"
                    )));
                }
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point<F>] {
        &self.vertices
    }

    /// Edges as (start, end) pairs in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point<F>, Point<F>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Point<F>) -> bool {
        geometry::point_in_polygon(p, &self.vertices)
    }

    pub fn translated(&self, delta: Point<F>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| [v[0] + delta[0], v[1] + delta[1]]).collect(),
        }
    }
}

impl<F: Scalar> TryFrom<Vec<[F; 2]>> for Obstacle<F> {
    type Error = SimError;
    fn try_from(vertices: Vec<[F; 2]>) -> Result<Self, SimError> {
        Self::new(vertices)
    }
}

impl<F: Scalar> From<Obstacle<F>> for Vec<[F; 2]> {
    fn from(o: Obstacle<F>) -> Self {
        o.vertices
    }
}

/// Rectangular workspace with the ground-truth obstacle set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Scalar + Serialize + Clone",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct Workspace<F: Scalar> {
    pub bounds: Rect<F>,
    pub obstacles: Vec<Obstacle<F>>,
}

impl<F: Scalar> Workspace<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        self.bounds.validate()?;
        if self.bounds.min[0] == self.bounds.max[0] || self.bounds.min[1] == self.bounds.max[1] {
            return Err(SimError::InvalidGeometry("workspace bounds have zero extent".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            for v in o.vertices() {
                if !self.bounds.contains(*v) {
                    return Err(SimError::InvalidGeometry(format!(
                        "obstacle {i} leaves the workspace at ({}, {})",
                        v[0], v[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the rod between `a` and `b` touches any obstacle or leaves the
    /// workspace. Touching the boundary counts.
    pub fn rod_collides(&self, a: Point<F>, b: Point<F>) -> bool {
        if !self.bounds.contains(a) || !self.bounds.contains(b) {
            return true;
        }
        for o in &self.obstacles {
            if o.contains(a) || o.contains(b) {
                return true;
            }
            for (e1, e2) in o.edges() {
                if geometry::segments_intersect(a, b, e1, e2) {
                    return true;
                }
            }
        }
        false
    }
}

/// Range sensor model: evenly spaced rays swept over a full turn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig<F> {
    /// Maximum detection distance (m).
    pub range: F,
    /// Angular spacing between consecutive rays (rad).
    pub angular_resolution: F,
}

impl<F: Scalar> SensorConfig<F> {
    /// Number of rays in a sweep; errors unless the resolution divides the
    /// full turn to an integer count.
    pub fn ray_count(&self) -> Result<usize, SimError> {
        if !self.range.is_finite() || self.range <= F::zero() {
            return Err(SimError::InvalidParameter {
                what: "sensor",
                why: format!("range must be finite and positive, got {}", self.range),
            });
        }
        if !self.angular_resolution.is_finite() || self.angular_resolution <= F::zero() {
            return Err(SimError::InvalidParameter {
                what: "sensor",
                why: format!("angular resolution must be finite and positive, got {}", self.angular_resolution),
            });
        }
        let exact = F::TAU() / self.angular_resolution;
        let n = exact.round();
        if (exact - n).abs() > F::c(1e-6) || n < F::one() {
            return Err(SimError::InvalidParameter {
                what: "sensor",
                why: format!("angular resolution must divide a full turn, got {} rays", exact),
            });
        }
        Ok(n.to_usize().expect("small ray count"))
    }
}

/// Result of one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan<F> {
    /// First obstacle intersection per ray that found one, in ray order.
    pub hits: Vec<Point<F>>,
    /// The origin itself was inside an obstacle; `hits` is empty then.
    pub origin_inside: bool,
}

/// Casts a full sweep from `origin` and returns the nearest obstacle boundary
/// point along each ray within the sensor range.
pub fn sense<F: Scalar>(
    workspace: &Workspace<F>,
    origin: Point<F>,
    sensor: &SensorConfig<F>,
) -> Result<Scan<F>, SimError> {
    let n = sensor.ray_count()?;
    for o in &workspace.obstacles {
        if o.contains(origin) {
            return Ok(Scan { hits: Vec::new(), origin_inside: true });
        }
    }
    let mut hits = Vec::new();
    let step = F::TAU() / F::c(n as f64);
    for k in 0..n {
        let ang = step * F::c(k as f64);
        let dir = [ang.cos(), ang.sin()];
        let mut best: Option<F> = None;
        for o in &workspace.obstacles {
            for (a, b) in o.edges() {
                if let Some(t) = geometry::ray_segment(origin, dir, a, b, sensor.range) {
                    if best.map_or(true, |cur| t < cur) {
                        best = Some(t);
                    }
                }
            }
        }
        if let Some(t) = best {
            hits.push([origin[0] + t * dir[0], origin[1] + t * dir[1]]);
        }
    }
    Ok(Scan { hits, origin_inside: false })
}

/// How a cloud point got there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    /// Hit returned by the owner's own sensor.
    Sensed,
    /// Decoded by a leader from the follower's reactive input.
    Inferred,
}

/// One accumulated obstacle point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint<F> {
    pub pos: Point<F>,
    pub source: PointSource,
    /// Control period in which the point was added.
    pub step: u32,
}

/// Monotonically growing, grid-deduplicated obstacle point set with a coarse
/// spatial index for range queries.
#[derive(Clone, Debug, Default)]
pub struct PointCloud<F> {
    points: Vec<CloudPoint<F>>,
    occupied: HashSet<(i64, i64)>,
    grid: HashMap<(i64, i64), Vec<u32>>,
}

impl<F: Scalar> PointCloud<F> {
    pub fn new() -> Self {
        Self { points: Vec::new(), occupied: HashSet::new(), grid: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[CloudPoint<F>] {
        &self.points
    }

    /// Consumes the cloud, keeping only the points in insertion order.
    pub fn into_points(self) -> Vec<CloudPoint<F>> {
        self.points
    }

    fn dedup_key(p: Point<F>) -> (i64, i64) {
        let eps = F::c(DEDUP_EPS);
        ((p[0] / eps).floor().to_i64().unwrap_or(0), (p[1] / eps).floor().to_i64().unwrap_or(0))
    }

    fn grid_key(p: Point<F>) -> (i64, i64) {
        let cell = F::c(QUERY_CELL);
        ((p[0] / cell).floor().to_i64().unwrap_or(0), (p[1] / cell).floor().to_i64().unwrap_or(0))
    }

    /// Adds one point unless its dedup cell is already occupied. Returns
    /// whether the point was kept.
    pub fn insert(&mut self, pos: Point<F>, source: PointSource, step: u32) -> bool {
        if !pos[0].is_finite() || !pos[1].is_finite() {
            return false;
        }
        if !self.occupied.insert(Self::dedup_key(pos)) {
            return false;
        }
        let idx = self.points.len() as u32;
        self.points.push(CloudPoint { pos, source, step });
        self.grid.entry(Self::grid_key(pos)).or_default().push(idx);
        true
    }

    /// Adds a batch of points in order; returns how many were kept.
    pub fn accumulate(&mut self, points: &[Point<F>], source: PointSource, step: u32) -> usize {
        points.iter().filter(|p| self.insert(**p, source, step)).count()
    }

    /// Minimum distance from `p` to any point within `cutoff`, if one exists.
    pub fn min_dist_within(&self, p: Point<F>, cutoff: F) -> Option<F> {
        let mut best: Option<F> = None;
        self.for_each_within(p, cutoff, |d, _| {
            if best.map_or(true, |cur| d < cur) {
                best = Some(d);
            }
        });
        best
    }

    /// Indices and distances of all points within `radius` of `p`, in
    /// insertion order.
    pub fn indices_within(&self, p: Point<F>, radius: F) -> Vec<(u32, F)> {
        let mut out = Vec::new();
        self.for_each_within(p, radius, |d, idx| out.push((idx, d)));
        out.sort_by_key(|(idx, _)| *idx);
        out
    }

    fn for_each_within(&self, p: Point<F>, radius: F, mut visit: impl FnMut(F, u32)) {
        if self.points.is_empty() || !radius.is_finite() {
            return;
        }
        let lo = Self::grid_key([p[0] - radius, p[1] - radius]);
        let hi = Self::grid_key([p[0] + radius, p[1] + radius]);
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                let Some(cell) = self.grid.get(&(i, j)) else { continue };
                for &idx in cell {
                    let q = self.points[idx as usize].pos;
                    let d = geometry::dist(p, q);
                    if d <= radius {
                        visit(d, idx);
                    }
                }
            }
        }
    }
}

/// Randomized placement region for one obstacle: the designated vertex is
/// drawn uniformly from `rect` and the whole polygon translates with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementZone<F> {
    /// Index into the workspace obstacle list.
    pub obstacle: usize,
    /// Which vertex of that obstacle lands in the rectangle.
    #[serde(default)]
    pub vertex: usize,
    pub rect: Rect<F>,
}

/// Applies the placement zones to a base workspace, redrawing any placement
/// that would push an obstacle outside the bounds. Draws come from `rng` in
/// zone order, so equal seeds give equal workspaces.
pub fn randomize_obstacles<F: Scalar, R: Rng>(
    base: &Workspace<F>,
    zones: &[PlacementZone<F>],
    rng: &mut R,
) -> Result<Workspace<F>, SimError> {
    const MAX_ATTEMPTS: u32 = 64;
    let mut out = base.clone();
    for zone in zones {
        zone.rect.validate()?;
        let obstacle = base.obstacles.get(zone.obstacle).ok_or_else(|| {
            SimError::InvalidGeometry(format!("placement zone references missing obstacle {}", zone.obstacle))
        })?;
        let anchor = *obstacle.vertices().get(zone.vertex).ok_or_else(|| {
            SimError::InvalidGeometry(format!(
                "placement zone references missing vertex {} of obstacle {}",
                zone.vertex, zone.obstacle
            ))
        })?;
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let target = zone.rect.sample(rng);
            let candidate = obstacle.translated([target[0] - anchor[0], target[1] - anchor[1]]);
            if candidate.vertices().iter().all(|v| base.bounds.contains(*v)) {
                out.obstacles[zone.obstacle] = candidate;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::Placement { obstacle: zone.obstacle, attempts: MAX_ATTEMPTS });
        }
    }
    Ok(out)
}
