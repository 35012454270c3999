//! Convexification of planar polygons by pocket flips.
//!
//! A pocket is the part of the boundary cut off by a hull edge that is not a
//! polygon edge (its lid). Flipping rotates the pocket chain by π about the
//! lid line, through the half-space above the plane; the result is the
//! pocket reflected across the lid, which strictly enlarges the area.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::chain::{ChainConfig, SubchainRange};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::motion::{pose_at, Move, MotionPlan};

pub const DEFAULT_MAX_FLIPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pocket {
    /// Lid endpoints in forward polygon order: the pocket chain runs `a -> b`.
    pub lid: (usize, usize),
    pub chain: SubchainRange,
}

/// Shoelace area of the xy-projection (positive when counterclockwise).
pub fn signed_area(verts: &[Point]) -> f64 {
    let n = verts.len();
    0.5 * (0..n)
        .map(|k| {
            let (p, q) = (verts[k], verts[(k + 1) % n]);
            p.x * q.y - p.y * q.x
        })
        .sum::<f64>()
}

pub fn perimeter(config: &ChainConfig) -> f64 {
    config.link_lengths().total()
}

fn check_planar_closed(polygon: &ChainConfig) -> Result<()> {
    if !polygon.is_closed() {
        return Err(Error::NotClosed);
    }
    let tol = polygon.default_tol();
    if polygon.vertices().iter().any(|p| p.z.abs() > tol) {
        return Err(Error::NotPlanar);
    }
    Ok(())
}

fn lex_cmp(p: Point, q: Point) -> Ordering {
    p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
}

/// Pockets in deterministic order: the first one's lid contains the
/// lexicographically least hull vertex (ties broken by the other endpoint's
/// index).
pub fn pockets(polygon: &ChainConfig) -> Result<Vec<Pocket>> {
    check_planar_closed(polygon)?;
    let v = polygon.vertices();
    let n = v.len();
    let hull = geom::convex_hull2(v)?;
    let ccw = signed_area(v) > 0.0;
    let mut out = Vec::new();
    for k in 0..hull.len() {
        let (h0, h1) = (hull[k], hull[(k + 1) % hull.len()]);
        let (a, b) = if ccw { (h0, h1) } else { (h1, h0) };
        if (a + 1) % n == b {
            continue;
        }
        out.push(Pocket { lid: (a, b), chain: SubchainRange::closed_range(a, b) });
    }
    let key = |p: &Pocket| {
        let (a, b) = p.lid;
        if lex_cmp(v[a], v[b]) == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        }
    };
    out.sort_by(|p, q| {
        let (pl, po) = key(p);
        let (ql, qo) = key(q);
        lex_cmp(v[pl], v[ql]).then(po.cmp(&qo))
    });
    Ok(out)
}

/// Flip one pocket: the move (a half turn about the lid, rising into +z)
/// and the resulting polygon.
pub fn flip(polygon: &ChainConfig, pocket: &Pocket) -> Result<(Move, ChainConfig)> {
    let v = polygon.vertices();
    let (a, b) = pocket.lid;
    let u = (v[b] - v[a]).normalized().ok_or(Error::DegenerateSegment)?;
    let interior = pocket.chain.indices(v.len());
    let inner = &interior[1..interior.len() - 1];
    // Pick the rotation sense that lifts the pocket off the plane upward.
    let far = inner
        .iter()
        .copied()
        .max_by(|&i, &j| v[i].dist_to_line(v[a], u).total_cmp(&v[j].dist_to_line(v[a], u)))
        .ok_or_else(|| Error::Planning("pocket has no interior vertex".into()))?;
    let rise = u.cross(v[far] - v[a]).z;
    let angle = if rise >= 0.0 { PI } else { -PI };
    let mv = Move::SubchainAboutLine { a, b, angle };
    let mut next = pose_at(&mv, polygon, 1.0)?;
    next = next.map_vertices(|p| Point::new(p.x, p.y, 0.0));
    let before = signed_area(v).abs();
    let after = signed_area(next.vertices()).abs();
    if after <= before {
        return Err(Error::Planning(format!("flip did not increase area ({before} -> {after})")));
    }
    if geom::min_clearance(&next) <= next.default_tol() {
        return Err(Error::Planning("flip produced a non-simple polygon".into()));
    }
    Ok((mv, next))
}

#[derive(Debug, Clone)]
pub struct FlipOutcome {
    pub plan: MotionPlan,
    pub convex: bool,
    /// Area after each flip, starting with the initial area.
    pub areas: Vec<f64>,
}

impl FlipOutcome {
    pub fn flips(&self) -> usize {
        self.plan.moves.len()
    }
}

/// Flip the first pocket until the polygon is convex or `max_flips` is hit.
pub fn convexify_flips(polygon: &ChainConfig, max_flips: usize) -> Result<FlipOutcome> {
    check_planar_closed(polygon)?;
    let mut plan = MotionPlan::new(polygon.clone());
    let mut cur = polygon.clone();
    let mut areas = vec![signed_area(cur.vertices()).abs()];
    loop {
        let ps = pockets(&cur)?;
        let Some(first) = ps.first() else {
            return Ok(FlipOutcome { plan, convex: true, areas });
        };
        if plan.moves.len() >= max_flips {
            return Ok(FlipOutcome { plan, convex: false, areas });
        }
        let (mv, next) = flip(&cur, first)?;
        plan.moves.push(mv);
        areas.push(signed_area(next.vertices()).abs());
        cur = next;
    }
}

/// Quadrilateral squashed to height `O(delta)`, with a reflex vertex at the
/// origin; every flip gains only a sliver of area, so smaller `delta` needs
/// more flips (2, 8, 28, 91, 292, 926 for delta = 1e-1 ... 1e-6).
pub fn delta_quadrilateral(delta: f64) -> Result<ChainConfig> {
    let verts = vec![
        Point::planar(0.0, 0.0),
        Point::planar(-1.0, -2.0 * delta),
        Point::planar(1.0, -2.0 * delta),
        Point::planar(0.0, 2.0 * delta),
    ];
    crate::chain::make_chain(verts, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_chain, shape_classify, Shape};

    fn poly(v: &[[f64; 2]]) -> ChainConfig {
        make_chain(v.iter().map(|a| Point::planar(a[0], a[1])).collect(), true).unwrap()
    }

    fn dart() -> ChainConfig {
        poly(&[[0., 0.], [2., 1.], [4., 0.], [4., 4.], [0., 4.]])
    }

    #[test]
    fn convex_has_no_pockets() {
        let pent: Vec<[f64; 2]> = (0..5)
            .map(|k| {
                let a = k as f64 * 2.0 * PI / 5.0;
                [a.cos(), a.sin()]
            })
            .collect();
        assert!(pockets(&poly(&pent)).unwrap().is_empty());
        assert!(convexify_flips(&poly(&pent), 10).unwrap().plan.is_empty());
    }

    #[test]
    fn dart_pocket_and_flip() {
        let p = dart();
        let ps = pockets(&p).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].lid, (0, 2));
        let (_, next) = flip(&p, &ps[0]).unwrap();
        assert!(next.vertices()[1].dist(Point::planar(2., -1.)) < 1e-12);
        assert!((signed_area(p.vertices()).abs() - 14.0).abs() < 1e-12);
        assert!((signed_area(next.vertices()).abs() - 18.0).abs() < 1e-12);
        assert!((perimeter(&p) - perimeter(&next)).abs() < 1e-12 * perimeter(&p));
        assert_eq!(shape_classify(&next, None), Shape::ConvexPlanar);
        let out = convexify_flips(&p, 10).unwrap();
        assert_eq!(out.flips(), 1);
        assert!(out.convex);
    }

    #[test]
    fn notched_octagon_has_two_pockets() {
        let mut v = Vec::new();
        for k in 0..8 {
            let a = k as f64 * PI / 4.0;
            let r = if k == 2 || k == 6 { 0.5 } else { 2.0 };
            v.push([r * a.cos(), r * a.sin()]);
        }
        assert_eq!(pockets(&poly(&v)).unwrap().len(), 2);
    }

    #[test]
    fn clockwise_input_works() {
        let mut v: Vec<[f64; 2]> = vec![[0., 0.], [2., 1.], [4., 0.], [4., 4.], [0., 4.]];
        v.reverse();
        let out = convexify_flips(&poly(&v), 10).unwrap();
        assert!(out.convex);
        assert_eq!(out.flips(), 1);
    }

    #[test]
    fn delta_family_counts_grow() {
        let counts: Vec<usize> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&d| convexify_flips(&delta_quadrilateral(d).unwrap(), DEFAULT_MAX_FLIPS).unwrap().flips())
            .collect();
        assert_eq!(counts, vec![2, 8, 28]);
    }

    #[test]
    fn flip_cap_returns_nonconvex_flag() {
        let out = convexify_flips(&delta_quadrilateral(1e-3).unwrap(), 5).unwrap();
        assert_eq!(out.flips(), 5);
        assert!(!out.convex);
    }

    #[test]
    fn open_or_lifted_input_is_rejected() {
        let open = make_chain(vec![Point::planar(0., 0.), Point::planar(1., 0.), Point::planar(0., 1.)], false).unwrap();
        assert!(matches!(pockets(&open), Err(Error::NotClosed)));
        let lifted = make_chain(vec![Point::planar(0., 0.), Point::planar(1., 0.), Point::new(0., 1., 1.)], true).unwrap();
        assert!(matches!(pockets(&lifted), Err(Error::NotPlanar)));
    }
}
