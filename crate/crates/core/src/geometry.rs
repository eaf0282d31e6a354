//! Planar primitives shared by sensing and collision checking: orientation
//! tests, segment intersection, point-in-polygon, and ray-segment casting.
//!
//! Touching counts as intersecting throughout; collision checks are meant to
//! be conservative at the boundary.

use crate::Scalar;

pub type Point<F> = [F; 2];

pub fn sub<F: Scalar>(a: Point<F>, b: Point<F>) -> Point<F> {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn cross<F: Scalar>(a: Point<F>, b: Point<F>) -> F {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dot<F: Scalar>(a: Point<F>, b: Point<F>) -> F {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm<F: Scalar>(a: Point<F>) -> F {
    dot(a, a).sqrt()
}

pub fn dist<F: Scalar>(a: Point<F>, b: Point<F>) -> F {
    norm(sub(a, b))
}

/// Sign of the triangle (a, b, c): positive for a counterclockwise turn,
/// negative for clockwise, zero for collinear.
fn orient<F: Scalar>(a: Point<F>, b: Point<F>, c: Point<F>) -> i8 {
    let v = cross(sub(b, a), sub(c, a));
    if v > F::zero() {
        1
    } else if v < F::zero() {
        -1
    } else {
        0
    }
}

/// Whether `p` lies on the closed segment `[a, b]`, assuming the three points
/// are collinear.
fn on_segment<F: Scalar>(a: Point<F>, b: Point<F>, p: Point<F>) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Whether the closed segments `[a1, a2]` and `[b1, b2]` share a point.
pub fn segments_intersect<F: Scalar>(a1: Point<F>, a2: Point<F>, b1: Point<F>, b2: Point<F>) -> bool {
    let o1 = orient(a1, a2, b1);
    let o2 = orient(a1, a2, b2);
    let o3 = orient(b1, b2, a1);
    let o4 = orient(b1, b2, a2);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(a1, a2, b1))
        || (o2 == 0 && on_segment(a1, a2, b2))
        || (o3 == 0 && on_segment(b1, b2, a1))
        || (o4 == 0 && on_segment(b1, b2, a2))
}

/// Even-odd test for `p` against a simple polygon. Points on the boundary are
/// not guaranteed either way; callers pair this with segment tests when the
/// boundary matters.
pub fn point_in_polygon<F: Scalar>(p: Point<F>, vertices: &[Point<F>]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let vi = vertices[i];
        let vj = vertices[j];
        if (vi[1] > p[1]) != (vj[1] > p[1]) {
            let x_cross = vj[0] + (p[1] - vj[1]) / (vi[1] - vj[1]) * (vi[0] - vj[0]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance along the ray `origin + t * dir` (with `dir` unit length) at which
/// it first meets the closed segment `[a, b]`, if it does within `max_range`.
pub fn ray_segment<F: Scalar>(
    origin: Point<F>,
    dir: Point<F>,
    a: Point<F>,
    b: Point<F>,
    max_range: F,
) -> Option<F> {
    let e = sub(b, a);
    let denom = cross(dir, e);
    let ao = sub(a, origin);
    if denom.abs() <= F::epsilon() {
        // Parallel. Collinear overlaps resolve to the nearest endpoint.
        if cross(ao, dir).abs() > F::epsilon() {
            return None;
        }
        let ta = dot(ao, dir);
        let tb = dot(sub(b, origin), dir);
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        if hi < F::zero() || lo > max_range {
            return None;
        }
        return Some(lo.max(F::zero()));
    }
    let t = cross(ao, e) / denom;
    let s = cross(ao, dir) / denom;
    if s >= F::zero() && s <= F::one() && t >= F::zero() && t <= max_range {
        Some(t)
    } else {
        None
    }
}

/// Signed area of a polygon: positive when the vertices wind counterclockwise.
pub fn signed_area<F: Scalar>(vertices: &[Point<F>]) -> F {
    let n = vertices.len();
    let mut acc = F::zero();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += cross(a, b);
    }
    acc / F::two()
}

/// Minimum distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance<F: Scalar>(p: Point<F>, a: Point<F>, b: Point<F>) -> F {
    let e = sub(b, a);
    let len2 = dot(e, e);
    if len2 == F::zero() {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), e) / len2).max(F::zero()).min(F::one());
    dist(p, [a[0] + t * e[0], a[1] + t * e[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn crossing_segments_intersect() {
        assert!(segments_intersect([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }

    #[test]
    fn touching_endpoint_counts_as_intersection() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 5.0]));
    }

    #[test]
    fn collinear_disjoint_segments_do_not_intersect() {
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]));
    }

    #[test]
    fn point_in_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &sq));
        assert!(!point_in_polygon([1.5, 0.5], &sq));
        assert!(!point_in_polygon([-0.1, 0.99], &sq));
    }

    #[test]
    fn point_in_concave_polygon() {
        // L-shape; the notch at (1.5, 1.5) is outside.
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert!(point_in_polygon([0.5, 1.5], &l));
        assert!(point_in_polygon([1.5, 0.5], &l));
        assert!(!point_in_polygon([1.5, 1.5], &l));
    }

    #[test]
    fn ray_hits_facing_segment() {
        let t = ray_segment([0.0, 0.0], [1.0, 0.0], [2.0, -1.0], [2.0, 1.0], 10.0).unwrap();
        assert_abs_diff_eq!(t, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ray_respects_range_and_direction() {
        assert!(ray_segment([0.0, 0.0], [1.0, 0.0], [2.0, -1.0], [2.0, 1.0], 1.5).is_none());
        assert!(ray_segment([0.0, 0.0], [-1.0, 0.0], [2.0, -1.0], [2.0, 1.0], 10.0).is_none());
    }

    #[test]
    fn collinear_ray_returns_near_endpoint() {
        let t = ray_segment([0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [5.0, 0.0], 10.0).unwrap();
        assert_abs_diff_eq!(t, 3.0, epsilon = 1e-12);
        // Origin inside the collinear segment clamps to zero.
        let t = ray_segment([4.0, 0.0], [1.0, 0.0], [3.0, 0.0], [5.0, 0.0], 10.0).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn signed_area_orientation() {
        let ccw = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        let cw = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(signed_area(&ccw) > 0.0);
        assert!(signed_area(&cw) < 0.0);
        assert_abs_diff_eq!(signed_area(&ccw), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        assert_abs_diff_eq!(point_segment_distance([0.0, 1.0], [0.0, 0.0], [2.0, 0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(point_segment_distance([-3.0, 4.0], [0.0, 0.0], [2.0, 0.0]), 5.0, epsilon = 1e-15);
    }
}
