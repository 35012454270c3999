//! Straightening open chains that have a simple orthogonal projection.
//!
//! With projection direction `d` playing the role of "up": first the last
//! link is swung to point along `d`, then for `i = n-1, ..., 1` one
//! coupled-lift move swings link `i-1` up while the already straight suffix
//! rides on top of it as a segment parallel to `d`. Seen along `d` the
//! suffix is a single point sliding along the projected link, so the
//! projection stays simple and the 3D chain never self-intersects.
//!
//! A link pointing downward must pass through the horizontal, where its
//! projection has full length and may reach another link. Such a link
//! first dips towards the vertical (its projection shrinks), turns about
//! `d` at a small radius to an azimuth whose full-length reach is clear,
//! and then rises; this is still a single coupled-lift move.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;

use crate::chain::{is_simple, project, shape_classify, ChainConfig, ProjectionCertificate, Shape};
use crate::error::{Error, Result};
use crate::gen;
use crate::geom::{self, Point};
use crate::motion::{LiftDetour, Move, MotionPlan, Side};

/// Default number of candidate directions tried by the search.
pub const DEFAULT_BUDGET: usize = 200;

/// `+z`, then the remaining 26 axis and diagonal directions.
fn fixed_candidates() -> Vec<Point> {
    let mut out = vec![Point::new(0.0, 0.0, 1.0)];
    for a in [-1.0, 0.0, 1.0] {
        for b in [-1.0, 0.0, 1.0] {
            for c in [-1.0, 0.0, 1.0] {
                if (a, b, c) == (0.0, 0.0, 0.0) || (a, b, c) == (0.0, 0.0, 1.0) {
                    continue;
                }
                out.push(Point::new(a, b, c).normalized().unwrap());
            }
        }
    }
    out
}

/// `budget` candidate directions: the fixed ones, then seeded random ones.
fn candidates(budget: usize, seed: u64) -> impl Iterator<Item = Point> {
    let fixed = fixed_candidates();
    let mut rng = gen::rng(seed);
    (0..budget).map(move |k| match fixed.get(k) {
        Some(&d) => d,
        None => loop {
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = p.norm();
            if r > 1e-3 && r <= 1.0 {
                break p / r;
            }
        },
    })
}

/// Search for a direction along which the chain projects to a simple chain.
pub fn find_simple_projection(
    config: &ChainConfig,
    budget: usize,
    seed: u64,
) -> Result<Option<(Point, ProjectionCertificate)>> {
    let s = is_simple(config, None);
    if !s.simple {
        let (i, j) = s.witness.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    for d in candidates(budget, seed) {
        if let Ok(proj) = project(config, d) {
            if let Some(cert) = proj.certificate {
                return Ok(Some((d, cert)));
            }
        }
    }
    Ok(None)
}

/// Minimum angle (radians) kept between a turning edge and the projection
/// of the edge before it.
const TURN_GAP: f64 = 0.1;

/// Azimuth samples when searching for a clear turn.
const TURN_SAMPLES: usize = 720;

/// How the swing of one edge up to `up` is carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Swing {
    Direct,
    Detour(LiftDetour),
}

/// Projected geometry of the not-yet-lifted prefix, in a 2D frame
/// orthogonal to `up`.
struct Frame {
    up: Point,
    e1: Point,
    e2: Point,
}

impl Frame {
    fn new(up: Point) -> Self {
        let seed = if up.x.abs() < 0.9 { Point::new(1.0, 0.0, 0.0) } else { Point::new(0.0, 1.0, 0.0) };
        let e1 = (seed - up * seed.dot(up)).normalized().expect("seed is not parallel to up");
        Frame { up, e1, e2: up.cross(e1) }
    }

    fn flat(&self, p: Point) -> Point {
        Point::planar(p.dot(self.e1), p.dot(self.e2))
    }

    fn azimuth(&self, d: Point) -> f64 {
        d.dot(self.e2).atan2(d.dot(self.e1))
    }

    fn unit(&self, theta: f64) -> Point {
        Point::planar(theta.cos(), theta.sin())
    }
}

fn wrap(a: f64) -> f64 {
    let t = a.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Distance from the planar segment `a b` to the projected edges `0..upto`.
fn distance_to_edges(p: &[Point], upto: usize, a: Point, b: Point) -> f64 {
    (0..upto).map(|j| geom::segment_distance_raw(a, b, p[j], p[j + 1])).fold(f64::INFINITY, f64::min)
}

/// Plan the swing of edge `k` (from `v[k]`), given that edges after it are
/// already lifted. A downward edge passes through the horizontal, where its
/// projection has full length; if that is blocked along its own azimuth,
/// it first dips towards the vertical, turns to a clear azimuth, then rises.
fn plan_swing(frame: &Frame, v: &[Point], p: &[Point], k: usize, margin: f64) -> Result<Swing> {
    let d = v[k + 1] - v[k];
    let len = d.norm();
    if d.dot(frame.up) >= 0.0 || k == 0 {
        return Ok(Swing::Direct);
    }
    let r0 = (p[k + 1] - p[k]).norm();
    let theta0 = frame.azimuth(d);
    let reach = |theta: f64| distance_to_edges(p, k - 1, p[k], p[k] + frame.unit(theta) * len);
    if reach(theta0) > margin {
        return Ok(Swing::Direct);
    }
    let beta = frame.azimuth(v[k - 1] - v[k]);
    let room = distance_to_edges(p, k - 1, p[k], p[k]);
    let rho = r0.min(0.5 * room);
    let turn_to = |theta: f64| {
        let a = wrap(theta - theta0);
        let b = wrap(beta - theta0);
        if b != 0.0 && b.signum() == a.signum() && b.abs() < a.abs() {
            a - TAU * a.signum()
        } else {
            a
        }
    };
    let best = (0..TURN_SAMPLES)
        .map(|s| theta0 + TAU * s as f64 / TURN_SAMPLES as f64)
        .filter(|&t| wrap(t - beta).abs() >= TURN_GAP)
        .map(|t| (reach(t), t))
        .max_by(|x, y| x.0.total_cmp(&y.0));
    match best {
        Some((clear, theta)) if clear > margin && rho > margin => Ok(Swing::Detour(LiftDetour {
            dip: -(rho / len).clamp(0.0, 1.0).acos(),
            turn: turn_to(theta),
        })),
        _ => Err(Error::Planning(format!("edge {k} cannot swing up to {:?} without meeting an earlier edge", frame.up.to_array()))),
    }
}

/// Swing plan for every edge, last edge first.
fn plan_swings(config: &ChainConfig, up: Point) -> Result<Vec<Swing>> {
    let proj = project(config, up)?;
    if proj.certificate.is_none() {
        let (i, j) = proj.witness.unwrap_or((0, 0));
        return Err(Error::Planning(format!("projection along {:?} is not simple (edges {i}, {j})", up.to_array())));
    }
    let frame = Frame::new(up);
    let v = config.vertices();
    let p: Vec<Point> = v.iter().map(|&q| frame.flat(q)).collect();
    let margin = 100.0 * config.default_tol();
    (0..v.len() - 1).rev().map(|k| plan_swing(&frame, v, &p, k, margin)).collect()
}

/// Search for a direction that admits straightening: a simple projection
/// along which every edge can swing up.
pub fn find_straightening_direction(config: &ChainConfig, budget: usize, seed: u64) -> Result<Option<Point>> {
    let s = is_simple(config, None);
    if !s.simple {
        let (i, j) = s.witness.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    Ok(candidates(budget, seed).find(|&d| plan_swings(config, d).is_ok()))
}

/// Plan that straightens `config` into a segment from `v_0` along `direction`.
/// The chain must project simply along `direction`.
pub fn straighten(config: &ChainConfig, direction: Point) -> Result<MotionPlan> {
    if config.is_closed() {
        return Err(Error::NotOpen);
    }
    let up = direction
        .normalized()
        .ok_or_else(|| Error::DegenerateProjection("zero direction".into()))?;
    let mut plan = MotionPlan::new(config.clone());
    if shape_classify(config, None) == Shape::Straight {
        return Ok(plan);
    }
    let swings = plan_swings(config, up)?;
    let v = config.vertices();
    let m = v.len();
    for (i, swing) in (1..m).rev().zip(swings) {
        let mv = match swing {
            // Last edge: a plain swing within its vertical plane.
            Swing::Direct if i == m - 1 => {
                let d = v[m - 1] - v[m - 2];
                let h = d - up * d.dot(up);
                let hn = h
                    .normalized()
                    .ok_or_else(|| Error::DegenerateProjection("last link is parallel to the direction".into()))?;
                let phi0 = d.dot(up).atan2(h.norm());
                Move::SingleJoint { joint: m - 2, axis: hn.cross(up).to_array(), side: Side::Suffix, angle: FRAC_PI_2 - phi0 }
            }
            Swing::Direct => Move::CoupledLift { joint: i, up: up.to_array(), detour: None },
            Swing::Detour(d) => Move::CoupledLift { joint: i, up: up.to_array(), detour: Some(d) },
        };
        plan.moves.push(mv);
    }
    Ok(plan)
}

/// Search for a direction and straighten along it.
pub fn straighten_auto(config: &ChainConfig, budget: usize, seed: u64) -> Result<MotionPlan> {
    match find_straightening_direction(config, budget, seed)? {
        Some(d) => straighten(config, d),
        None => Err(Error::NoRegularProjection),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_chain;
    use crate::motion::{apply, validate, ValidationPolicy};

    #[test]
    fn one_link_is_already_straight() {
        let c = make_chain(vec![Point::new(0., 0., 0.), Point::new(1., 2., 3.)], false).unwrap();
        assert!(straighten(&c, Point::new(0., 0., 1.)).unwrap().is_empty());
    }

    #[test]
    fn l_chain_two_moves() {
        let c = make_chain(vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.1), Point::new(1., 1., 0.2)], false).unwrap();
        let plan = straighten(&c, Point::new(0., 0., 1.)).unwrap();
        assert_eq!(plan.len(), 2);
        let end = apply(&plan).unwrap();
        let total: f64 = c.link_lengths().total();
        assert!(end.vertices()[2].dist(Point::new(0., 0., total)) < 1e-12);
        assert_eq!(shape_classify(&end, None), Shape::Straight);
        assert!(validate(&plan, &ValidationPolicy::default()).certified);
    }

    #[test]
    fn zigzag_sixteen_links() {
        let c = gen::zigzag(17);
        let (d, _) = find_simple_projection(&c, DEFAULT_BUDGET, 0).unwrap().unwrap();
        assert_eq!(d, Point::new(0., 0., 1.));
        let plan = straighten(&c, d).unwrap();
        assert_eq!(plan.len(), 16);
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
    }

    #[test]
    fn works_along_other_directions() {
        let c = gen::random_lifted_chain(8, &mut gen::rng(3));
        let tilted = c.map_vertices(|p| Point::new(p.z, p.x, p.y));
        let plan = straighten_auto(&tilted, DEFAULT_BUDGET, 0).unwrap();
        assert!(plan.len() <= 7);
        assert!(validate(&plan, &ValidationPolicy::default()).certified);
        assert_eq!(shape_classify(&apply(&plan).unwrap(), None), Shape::Straight);
    }

    #[test]
    fn blocked_downward_edges_detour() {
        // Along +z an edge of this chain points down and its swing through
        // the horizontal along its own azimuth would hit an earlier edge.
        let c = gen::random_lifted_chain(9, &mut gen::rng(8008));
        let plan = straighten(&c, Point::new(0., 0., 1.)).unwrap();
        assert!(plan.len() <= 8);
        assert!(plan.moves.iter().any(|m| matches!(m, Move::CoupledLift { detour: Some(_), .. })));
        let text = crate::io::plan_to_json(&plan);
        assert_eq!(crate::io::plan_from_json(&text).unwrap(), plan);
        let r = validate(&plan, &ValidationPolicy::default());
        assert!(r.certified, "{:?}", r.failure);
        assert_eq!(shape_classify(&apply(&plan).unwrap(), None), Shape::Straight);
    }

    #[test]
    fn enclosed_downward_edge_needs_another_direction() {
        // Along +z the last edge points down from a vertex enclosed by the
        // projection, so no azimuth has room for it to pass the horizontal.
        let c = gen::random_lifted_chain(17, &mut gen::rng(16 * 1000 + 14));
        assert!(matches!(straighten(&c, Point::new(0., 0., 1.)), Err(Error::Planning(_))));
        let plan = straighten_auto(&c, DEFAULT_BUDGET, 0).unwrap();
        assert!(validate(&plan, &ValidationPolicy::default()).certified);
    }
}
