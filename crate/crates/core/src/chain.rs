//! Chain and polygon representation, simplicity, shape classes and
//! orthogonal projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, clearance_filtered, default_tol, diameter, Point};

/// Ordered vertices of a polygonal chain. Closed chains store no duplicate
/// of the first vertex: the closing edge `v[n-1] v[0]` is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    vertices: Vec<Point>,
    closed: bool,
}

/// One length per edge, in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLengths(Vec<f64>);

impl LinkLengths {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Largest relative deviation of `other` from these lengths.
    pub fn max_relative_drift(&self, other: &LinkLengths) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max)
    }
}

/// Vertex range `P[i, j]` (both ends included) or `P(i, j)` (both excluded),
/// traversed forward; wraps around for closed chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubchainRange {
    pub i: usize,
    pub j: usize,
    pub include_i: bool,
    pub include_j: bool,
}

impl SubchainRange {
    pub fn closed_range(i: usize, j: usize) -> Self {
        SubchainRange { i, j, include_i: true, include_j: true }
    }

    pub fn open_range(i: usize, j: usize) -> Self {
        SubchainRange { i, j, include_i: false, include_j: false }
    }

    /// Vertex indices in traversal order.
    pub fn indices(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if self.include_i {
            out.push(self.i);
        }
        let mut k = (self.i + 1) % n;
        while k != self.j {
            out.push(k);
            k = (k + 1) % n;
        }
        if self.include_j {
            out.push(self.j);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCertificate {
    pub direction: [f64; 3],
    pub min_projected_clearance: f64,
    pub min_projected_edge_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub chain: ChainConfig,
    pub certificate: Option<ProjectionCertificate>,
    /// Edge pair responsible for a missing certificate.
    pub witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplicity {
    pub simple: bool,
    pub witness: Option<(usize, usize)>,
    pub clearance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Straight,
    ConvexPlanar,
    Other,
}

/// Projected edges shorter than this fraction of the diameter are rejected.
pub const MIN_PROJECTED_EDGE: f64 = 1e-6;

impl ChainConfig {
    pub fn new(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        make_chain(vertices, closed)
    }

    /// Build without validation; callers guarantee the invariants.
    pub(crate) fn from_raw(vertices: Vec<Point>, closed: bool) -> Self {
        ChainConfig { vertices, closed }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        geom::edge_count(self.vertices.len(), self.closed)
    }

    /// Endpoints of edge `k`.
    pub fn edge(&self, k: usize) -> (Point, Point) {
        let (a, b) = geom::edge_ends(k, self.vertices.len(), self.closed);
        (self.vertices[a], self.vertices[b])
    }

    pub fn link_lengths(&self) -> LinkLengths {
        LinkLengths((0..self.edge_count()).map(|k| {
            let (a, b) = self.edge(k);
            a.dist(b)
        }).collect())
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    pub fn default_tol(&self) -> f64 {
        default_tol(&self.vertices)
    }

    pub fn is_planar_xy(&self) -> bool {
        self.vertices.iter().all(|p| p.z == 0.0)
    }

    pub fn map_vertices<F: Fn(Point) -> Point>(&self, f: F) -> ChainConfig {
        ChainConfig::from_raw(self.vertices.iter().map(|&p| f(p)).collect(), self.closed)
    }
}

/// Validate vertices and build a chain.
pub fn make_chain(vertices: Vec<Point>, closed: bool) -> Result<ChainConfig> {
    let needed = if closed { 3 } else { 2 };
    if vertices.len() < needed {
        return Err(Error::TooFewVertices { needed, got: vertices.len() });
    }
    if vertices.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = vertices.len();
    let m = geom::edge_count(n, closed);
    for k in 0..m {
        let (a, b) = geom::edge_ends(k, n, closed);
        if vertices[a] == vertices[b] {
            return Err(Error::ZeroLengthLink { index: a, next: b });
        }
    }
    Ok(ChainConfig { vertices, closed })
}

/// Simplicity with margin `tol`: no edge pair (adjacent pairs under the
/// fold-back rule) has clearance at or below `tol`.
pub fn is_simple(config: &ChainConfig, tol: Option<f64>) -> Simplicity {
    let tol = tol.unwrap_or_else(|| config.default_tol());
    let (clearance, pair) = clearance_filtered(config.vertices(), config.is_closed(), |_, _| true);
    let simple = clearance > tol;
    Simplicity { simple, witness: if simple { None } else { pair }, clearance }
}

/// Unit normal of a closed polygon by Newell's method.
pub fn newell_normal(points: &[Point]) -> Option<Point> {
    let n = points.len();
    let mut acc = Point::default();
    for k in 0..n {
        let a = points[k];
        let b = points[(k + 1) % n];
        acc = acc + Point::new((a.y - b.y) * (a.z + b.z), (a.z - b.z) * (a.x + b.x), (a.x - b.x) * (a.y + b.y));
    }
    acc.normalized()
}

pub fn shape_classify(config: &ChainConfig, tol: Option<f64>) -> Shape {
    let tol = tol.unwrap_or_else(|| config.default_tol());
    let v = config.vertices();
    if !config.is_closed() {
        let first = v[0];
        let last = v[v.len() - 1];
        let Some(dir) = (last - first).normalized() else {
            return Shape::Other;
        };
        let mut prev = f64::NEG_INFINITY;
        for &p in v {
            if p.dist_to_line(first, dir) > tol {
                return Shape::Other;
            }
            let s = (p - first).dot(dir);
            if s < prev - tol {
                return Shape::Other;
            }
            prev = prev.max(s);
        }
        return Shape::Straight;
    }

    let Some(normal) = newell_normal(v) else {
        return Shape::Other;
    };
    let centroid = v.iter().fold(Point::default(), |a, &p| a + p) / v.len() as f64;
    if v.iter().any(|&p| (p - centroid).dot(normal).abs() > tol) {
        return Shape::Other;
    }
    let n = v.len();
    let mut sign = 0i8;
    let mut turning = 0.0;
    for k in 0..n {
        let prev = v[(k + n - 1) % n];
        let cur = v[k];
        let next = v[(k + 1) % n];
        let d1 = cur - prev;
        let d2 = next - cur;
        let s = d1.cross(d2).dot(normal);
        turning += s.atan2(d1.dot(d2));
        let chord = next - prev;
        let off_line = match chord.normalized() {
            Some(u) => cur.dist_to_line(prev, u),
            None => d1.norm(),
        };
        if off_line <= tol {
            // A straight joint is fine; a fold-back is not.
            if d1.dot(d2) < 0.0 {
                return Shape::Other;
            }
            continue;
        }
        let sg = if s > 0.0 { 1 } else { -1 };
        if sign == 0 {
            sign = sg;
        } else if sign != sg {
            return Shape::Other;
        }
    }
    if (turning.abs() - std::f64::consts::TAU).abs() > 1e-6 {
        return Shape::Other;
    }
    Shape::ConvexPlanar
}

/// Orthonormal `(e1, e2)` spanning the plane normal to unit `d`, with
/// `(e1, e2, d)` right-handed. For `d = +z` this is `(x, y)`.
pub fn projection_basis(d: Point) -> (Point, Point) {
    let helper = if d.x.abs() > 0.9 { Point::new(0., 1., 0.) } else { Point::new(1., 0., 0.) };
    let e1 = (helper - d * helper.dot(d)).normalized().expect("helper not parallel to d");
    let e2 = d.cross(e1);
    (e1, e2)
}

/// Orthogonal projection onto the plane normal to `direction`, re-embedded
/// at z = 0.
pub fn project(config: &ChainConfig, direction: Point) -> Result<Projection> {
    let d = direction
        .normalized()
        .ok_or_else(|| Error::DegenerateProjection("zero projection direction".into()))?;
    let (e1, e2) = projection_basis(d);
    let verts: Vec<Point> = config.vertices().iter().map(|&p| Point::planar(p.dot(e1), p.dot(e2))).collect();
    let planar = ChainConfig::from_raw(verts, config.is_closed());
    let threshold = MIN_PROJECTED_EDGE * config.diameter();
    let lengths = planar.link_lengths();
    for (k, &l) in lengths.as_slice().iter().enumerate() {
        if l <= threshold {
            return Err(Error::DegenerateProjection(format!(
                "edge {k} projects to length {l:e} (threshold {threshold:e})"
            )));
        }
    }
    let tol = planar.default_tol();
    let simp = is_simple(&planar, Some(tol));
    let certificate = simp.simple.then(|| ProjectionCertificate {
        direction: d.to_array(),
        min_projected_clearance: simp.clearance,
        min_projected_edge_length: lengths.min(),
    });
    Ok(Projection { chain: planar, certificate, witness: simp.witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 3]]) -> Vec<Point> {
        v.iter().map(|&a| Point::from_array(a)).collect()
    }

    fn unit_square() -> ChainConfig {
        make_chain(pts(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]]), true).unwrap()
    }

    #[test]
    fn make_chain_examples() {
        let c = make_chain(pts(&[[0., 0., 0.], [1., 0., 0.]]), false).unwrap();
        assert_eq!(c.edge_count(), 1);
        assert_eq!(
            make_chain(pts(&[[0., 0., 0.], [0., 0., 0.]]), false),
            Err(Error::ZeroLengthLink { index: 0, next: 1 })
        );
        let sq = unit_square();
        assert_eq!(sq.link_lengths().as_slice(), &[1.0; 4]);
        assert!(matches!(
            make_chain(pts(&[[0., 0., 0.], [1., 0., 0.]]), true),
            Err(Error::TooFewVertices { needed: 3, got: 2 })
        ));
        // Closing edge of a closed chain is checked too.
        assert!(make_chain(pts(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 0., 0.]]), true).is_err());
    }

    #[test]
    fn simplicity_examples() {
        assert!(is_simple(&unit_square(), None).simple);
        let bowtie = make_chain(pts(&[[0., 0., 0.], [2., 2., 0.], [2., 0., 0.], [0., 2., 0.]]), true).unwrap();
        let s = is_simple(&bowtie, None);
        assert!(!s.simple);
        assert_eq!(s.witness, Some((0, 2)));
    }

    #[test]
    fn clearance_examples() {
        assert!((geom::min_clearance(&unit_square()) - 1.0).abs() < 1e-15);
        let open = make_chain(pts(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]]), false).unwrap();
        assert!((geom::min_clearance(&open) - 1.0).abs() < 1e-15);
        let single = make_chain(pts(&[[0., 0., 0.], [1., 0., 0.]]), false).unwrap();
        assert_eq!(geom::min_clearance(&single), f64::INFINITY);
    }

    #[test]
    fn shape_examples() {
        let s = make_chain(pts(&[[0., 0., 0.], [0., 0., 1.], [0., 0., 2.5]]), false).unwrap();
        assert_eq!(shape_classify(&s, None), Shape::Straight);
        let hex: Vec<Point> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                Point::planar(a.cos(), a.sin())
            })
            .collect();
        assert_eq!(shape_classify(&make_chain(hex, true).unwrap(), None), Shape::ConvexPlanar);
        let l = make_chain(pts(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.]]), false).unwrap();
        assert_eq!(shape_classify(&l, None), Shape::Other);
        let dart = make_chain(pts(&[[0., 0., 0.], [4., 0., 0.], [2., 1., 0.], [2., 4., 0.]]), true).unwrap();
        assert_eq!(shape_classify(&dart, None), Shape::Other);
        // Folding back along the line is not straight.
        let back = make_chain(pts(&[[0., 0., 0.], [2., 0., 0.], [1., 0., 0.], [3., 0., 0.]]), false).unwrap();
        assert_eq!(shape_classify(&back, None), Shape::Other);
        // A straight joint inside a convex polygon is allowed.
        let with_flat = make_chain(pts(&[[0., 0., 0.], [1., 0., 0.], [2., 0., 0.], [2., 2., 0.], [0., 2., 0.]]), true).unwrap();
        assert_eq!(shape_classify(&with_flat, None), Shape::ConvexPlanar);
    }

    #[test]
    fn projection_examples() {
        let c = make_chain(pts(&[[0., 0., 0.], [1., 0., 1.], [2., 0., 0.]]), false).unwrap();
        let p = project(&c, Point::new(0., 0., 1.)).unwrap();
        assert_eq!(p.chain.vertices(), &pts(&[[0., 0., 0.], [1., 0., 0.], [2., 0., 0.]])[..]);
        assert!(p.certificate.is_some());

        let v = make_chain(pts(&[[0., 0., 0.], [0., 0., 1.], [1., 0., 1.]]), false).unwrap();
        assert!(matches!(project(&v, Point::new(0., 0., 1.)), Err(Error::DegenerateProjection(_))));
    }

    #[test]
    fn subchain_ranges_wrap() {
        assert_eq!(SubchainRange::closed_range(1, 3).indices(5), vec![1, 2, 3]);
        assert_eq!(SubchainRange::open_range(3, 1).indices(5), vec![4, 0]);
    }
}
