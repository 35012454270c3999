//! Geometric primitives and predicates shared by the planners and the validator.
//!
//! Orientation signs are exact (adaptive-precision evaluation via `robust`).
//! Distances are plain `f64` and compared against a tolerance derived from the
//! bounding-box diameter of the input.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::error::{Error, Result};

/// Relative tolerance; multiplied by the bounding-box diameter.
pub const REL_TOL: f64 = 1e-9;

/// Adjacent edges closer than this angle (radians) count as folded back.
pub const FOLD_BACK_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point { x, y, z }
    }

    pub const fn planar(x: f64, y: f64) -> Self {
        Point { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point) -> Point {
        Point::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction; `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Point {
        Point::new(a[0], a[1], a[2])
    }

    /// Rotate about the line through `origin` with unit direction `axis`
    /// by `angle` radians (right-hand rule).
    pub fn rotate_about(self, origin: Point, axis: Point, angle: f64) -> Point {
        let v = self - origin;
        let (s, c) = angle.sin_cos();
        let rotated = v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
        origin + rotated
    }

    /// Distance from this point to the infinite line through `origin` along unit `axis`.
    pub fn dist_to_line(self, origin: Point, axis: Point) -> f64 {
        let v = self - origin;
        (v - axis * axis.dot(v)).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, s: f64) -> Point {
        Point::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite);
        }
        if a == b {
            return Err(Error::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> Point {
        self.a
    }

    pub fn b(&self) -> Point {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactClass {
    Disjoint,
    SharedEndpoint,
    ProperCrossing,
    Overlap,
    EndpointOnInterior,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Exact sign of the planar orientation of `p, q, r` (z ignored).
/// +1 for a counterclockwise turn.
pub fn orient2d(p: Point, q: Point, r: Point) -> i8 {
    let c = |p: Point| robust::Coord { x: p.x, y: p.y };
    sign(robust::orient2d(c(p), c(q), c(r)))
}

/// Exact sign of `det[q - p, r - p, s - p]`; +1 for a right-handed tetrahedron.
pub fn orient3d(p: Point, q: Point, r: Point, s: Point) -> i8 {
    let c = |p: Point| robust::Coord3D { x: p.x, y: p.y, z: p.z };
    // robust's convention is positive when `s` lies below the plane of a
    // counterclockwise `p, q, r`, which is the opposite sign.
    -sign(robust::orient3d(c(p), c(q), c(r), c(s)))
}

/// Planar orientation for three points, spatial orientation when `s` is given.
pub fn orient(p: Point, q: Point, r: Point, s: Option<Point>) -> Result<i8> {
    let finite = p.is_finite() && q.is_finite() && r.is_finite() && s.map_or(true, |s| s.is_finite());
    if !finite {
        return Err(Error::NonFinite);
    }
    Ok(match s {
        None => orient2d(p, q, r),
        Some(s) => orient3d(p, q, r, s),
    })
}

/// Distance from `p` to the closed segment `a b` (which may be degenerate).
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Minimum distance between closed segments `a0 a1` and `b0 b1`.
///
/// The minimum over the parameter square is attained either at an interior
/// critical point or on the boundary, where it reduces to an
/// endpoint-to-segment distance.
pub fn segment_distance_raw(a0: Point, a1: Point, b0: Point, b1: Point) -> f64 {
    let mut best = point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1));
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let r = a0 - b0;
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let b = d1.dot(d2);
    let c = d1.dot(r);
    let f = d2.dot(r);
    let denom = a * e - b * b;
    if denom > 1e-14 * a * e {
        let s = (b * f - c * e) / denom;
        let t = (a * f - b * c) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            let d = (a0 + d1 * s).dist(b0 + d2 * t);
            best = best.min(d);
        }
    }
    // Rounding leaves a tiny positive distance for touching segments;
    // settle near-contacts with the exact predicates.
    let scale = d1.norm().max(d2.norm()).max(r.norm());
    if best > 0.0 && best <= 1e-12 * scale && segments_touch_exactly(a0, a1, b0, b1) {
        return 0.0;
    }
    best
}

/// Exact contact test for two segments in space: they must be coplanar and
/// touch in each coordinate-plane projection (some projection is injective
/// on their common plane or line, and contact is preserved by all).
fn segments_touch_exactly(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    if orient3d(a0, a1, b0, b1) != 0 {
        return false;
    }
    let drop = |p: Point, k: usize| match k {
        0 => Point::planar(p.y, p.z),
        1 => Point::planar(p.z, p.x),
        _ => Point::planar(p.x, p.y),
    };
    (0..3).all(|k| {
        let (s1, s2) = (Segment { a: drop(a0, k), b: drop(a1, k) }, Segment { a: drop(b0, k), b: drop(b1, k) });
        seg_seg_contact2(&s1, &s2) != ContactClass::Disjoint
    })
}

pub fn seg_seg_distance3(s1: &Segment, s2: &Segment) -> f64 {
    segment_distance_raw(s1.a, s1.b, s2.a, s2.b)
}

/// Exact contact classification of two planar segments (z ignored).
pub fn seg_seg_contact2(s1: &Segment, s2: &Segment) -> ContactClass {
    let (a, b, c, d) = (s1.a, s1.b, s2.a, s2.b);
    let o1 = orient2d(a, b, c);
    let o2 = orient2d(a, b, d);
    let o3 = orient2d(c, d, a);
    let o4 = orient2d(c, d, b);

    let same2 = |p: Point, q: Point| p.x == q.x && p.y == q.y;

    if o1 == 0 && o2 == 0 {
        // Collinear: compare along the dominant axis.
        let use_x = (b.x - a.x).abs() >= (b.y - a.y).abs();
        let key = |p: Point| if use_x { p.x } else { p.y };
        let (lo1, hi1) = minmax(key(a), key(b));
        let (lo2, hi2) = minmax(key(c), key(d));
        let lo = lo1.max(lo2);
        let hi = hi1.min(hi2);
        return if lo > hi {
            ContactClass::Disjoint
        } else if lo < hi {
            ContactClass::Overlap
        } else {
            ContactClass::SharedEndpoint
        };
    }

    if o1 * o2 < 0 && o3 * o4 < 0 {
        return ContactClass::ProperCrossing;
    }

    let on_seg = |p: Point, q0: Point, q1: Point| {
        orient2d(q0, q1, p) == 0
            && p.x >= q0.x.min(q1.x)
            && p.x <= q0.x.max(q1.x)
            && p.y >= q0.y.min(q1.y)
            && p.y <= q0.y.max(q1.y)
    };

    let shared = [(a, c), (a, d), (b, c), (b, d)].iter().any(|&(p, q)| same2(p, q));
    let touching = (o1 == 0 && on_seg(c, a, b))
        || (o2 == 0 && on_seg(d, a, b))
        || (o3 == 0 && on_seg(a, c, d))
        || (o4 == 0 && on_seg(b, c, d));
    if !touching {
        ContactClass::Disjoint
    } else if shared {
        ContactClass::SharedEndpoint
    } else {
        ContactClass::EndpointOnInterior
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Convex hull of planar points as indices in counterclockwise order, starting
/// at the lexicographically least point (x, then y). Points lying on hull
/// edges are dropped; duplicates keep their smallest index.
pub fn convex_hull2(points: &[Point]) -> Result<Vec<usize>> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    if points.len() < 3 {
        return Err(Error::TooFewVertices { needed: 3, got: points.len() });
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(i.cmp(&j))
    });
    idx.dedup_by(|j, i| points[*i].x == points[*j].x && points[*i].y == points[*j].y);
    if idx.len() < 3 {
        return Err(Error::AllCollinear);
    }

    let mut hull: Vec<usize> = Vec::with_capacity(idx.len() + 1);
    for &i in idx.iter() {
        while hull.len() >= 2
            && orient2d(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0
        {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && orient2d(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::AllCollinear);
    }
    Ok(hull)
}

/// Bounding-box diameter of a point set.
pub fn diameter(points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    hi.dist(lo)
}

/// Default distance tolerance for a point set.
pub fn default_tol(points: &[Point]) -> f64 {
    REL_TOL * diameter(points)
}

/// Angle at `v` between `p - v` and `q - v`, in `[0, pi]`.
pub fn joint_angle(p: Point, v: Point, q: Point) -> f64 {
    let a = p - v;
    let b = q - v;
    let c = a.cross(b).norm();
    c.atan2(a.dot(b))
}

/// Clearance between two edges sharing vertex `v`: `p - v` and `v - q`.
/// Zero if they fold back onto each other; otherwise the distance from each
/// far endpoint to the other edge (the shared vertex itself is excluded).
pub fn adjacent_clearance(p: Point, v: Point, q: Point) -> f64 {
    if joint_angle(p, v, q) < FOLD_BACK_ANGLE {
        return 0.0;
    }
    point_segment_distance(p, v, q).min(point_segment_distance(q, v, p))
}

/// Edge `k` of a chain as vertex indices.
pub(crate) fn edge_ends(k: usize, n: usize, closed: bool) -> (usize, usize) {
    if closed {
        (k, (k + 1) % n)
    } else {
        (k, k + 1)
    }
}

pub(crate) fn edge_count(n: usize, closed: bool) -> usize {
    if closed {
        n
    } else {
        n.saturating_sub(1)
    }
}

/// Whether edges `i < j` share a vertex.
pub(crate) fn edges_adjacent(i: usize, j: usize, m: usize, closed: bool) -> bool {
    j == i + 1 || (closed && i == 0 && j == m - 1)
}

/// Clearance of one edge pair (`i < j`), using the adjacent-edge rule when
/// they share a vertex.
pub(crate) fn pair_clearance(verts: &[Point], closed: bool, i: usize, j: usize) -> f64 {
    let n = verts.len();
    let m = edge_count(n, closed);
    let (a0, a1) = edge_ends(i, n, closed);
    let (b0, b1) = edge_ends(j, n, closed);
    if edges_adjacent(i, j, m, closed) {
        if m == 2 && closed {
            // Two-edge closed chain: both ends are shared; treat as folded.
            return 0.0;
        }
        if a1 == b0 {
            adjacent_clearance(verts[a0], verts[a1], verts[b1])
        } else {
            // Wrap-around: edge j ends where edge i starts.
            adjacent_clearance(verts[b0], verts[a0], verts[a1])
        }
    } else {
        segment_distance_raw(verts[a0], verts[a1], verts[b0], verts[b1])
    }
}

/// Minimum clearance over edge pairs accepted by `filter`, with the
/// minimizing pair. `(inf, None)` when no pair qualifies.
pub(crate) fn clearance_filtered<F>(verts: &[Point], closed: bool, filter: F) -> (f64, Option<(usize, usize)>)
where
    F: Fn(usize, usize) -> bool,
{
    let m = edge_count(verts.len(), closed);
    let mut best = f64::INFINITY;
    let mut pair = None;
    for i in 0..m {
        for j in (i + 1)..m {
            if !filter(i, j) {
                continue;
            }
            let d = pair_clearance(verts, closed, i, j);
            if d < best {
                best = d;
                pair = Some((i, j));
            }
        }
    }
    (best, pair)
}

/// Minimum clearance of a chain: distances between non-adjacent edges, plus
/// the adjacent-edge clearance for pairs sharing a vertex. `+inf` for chains
/// with at most one edge.
pub fn min_clearance(config: &ChainConfig) -> f64 {
    clearance_filtered(config.vertices(), config.is_closed(), |_, _| true).0
}

/// Like [`min_clearance`] but also returns the minimizing edge pair.
pub fn min_clearance_with_pair(config: &ChainConfig) -> (f64, Option<(usize, usize)>) {
    clearance_filtered(config.vertices(), config.is_closed(), |_, _| true)
}
