//! Locked chain constructions: the knitting-needles chain `K`, its doubled
//! closed version, the geometric locking preconditions and a randomized
//! straightening harness.
//!
//! `K` has vertices `v_0 .. v_5`: two long needles `e_0` and `e_4` and a
//! short cord `e_1 e_2 e_3` of length `L` woven around them. The ball `B` of
//! radius `r` about `v_1` contains the cord, while both needle tips stay
//! outside it. Closing `K` by the segment `v_5 v_0`, which runs outside `B`,
//! gives a trefoil; that closed hexagon is the knottedness certificate.

pub mod knot;

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::chain::{is_simple, make_chain, ChainConfig};
use crate::error::{Error, Result};
use crate::gen;
use crate::geom::{self, Point};
use crate::motion::{pose_at, validate, Move, MotionPlan, Side, ValidationPolicy};

pub use knot::{knot_determinant, knot_determinants, KnotDiagram};

/// Minimum clearance of a construction, relative to its shortest link.
pub const MIN_RELATIVE_CLEARANCE: f64 = 1e-3;

/// Potential below which a chain counts as straightened.
pub const STRAIGHT_THRESHOLD: f64 = 0.1;

/// Unit link directions of `K`: `v_0 - v_1` first, then `v_{k+1} - v_k` for
/// `k = 1..4`. Found by a seeded search and pinned by the tests (simplicity
/// and determinant 3 of the trefoil completion).
const NEEDLE_DIRECTIONS: [[f64; 3]; 5] = [
    [-0.0261, 0.2023, 0.979],
    [0.0958, 0.778, 0.6209],
    [-0.4757, -0.7537, 0.4535],
    [0.9441, -0.1151, -0.309],
    [-0.7387, 0.6337, -0.2296],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeedleParams {
    /// Link lengths `ℓ_0 .. ℓ_4`.
    pub l: [f64; 5],
    /// Radius of the ball `B` about `v_1`.
    pub r: f64,
}

impl Default for NeedleParams {
    fn default() -> Self {
        NeedleParams { l: [3.5, 1.0, 1.0, 1.0, 6.5], r: 3.0 }
    }
}

impl NeedleParams {
    /// Cord length `L = ℓ_1 + ℓ_2 + ℓ_3`.
    pub fn cord_length(&self) -> f64 {
        self.l[1] + self.l[2] + self.l[3]
    }

    pub fn min_link(&self) -> f64 {
        self.l.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Check `r ≥ L`, `ℓ_0 > r` and `ℓ_4 > r + L`.
    pub fn validate(&self) -> Result<()> {
        if self.l.iter().chain([&self.r]).any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::InvalidParams("lengths and radius must be finite and positive".into()));
        }
        let cord = self.cord_length();
        if self.r < cord {
            return Err(Error::InvalidParams(format!("r = {} < L = {cord}", self.r)));
        }
        if self.l[0] <= self.r {
            return Err(Error::InvalidParams(format!("l0 = {} <= r = {}", self.l[0], self.r)));
        }
        if self.l[4] <= self.r + cord {
            return Err(Error::InvalidParams(format!("l4 = {} <= r + L = {}", self.l[4], self.r + cord)));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> NeedleParams {
        NeedleParams { l: self.l.map(|x| x * s), r: self.r * s }
    }
}

fn needle_vertices(params: &NeedleParams) -> Vec<Point> {
    let d: Vec<Point> = NEEDLE_DIRECTIONS
        .iter()
        .map(|&a| Point::from_array(a).normalized().expect("nonzero direction"))
        .collect();
    let mut v = vec![d[0] * params.l[0], Point::new(0.0, 0.0, 0.0)];
    for k in 1..5 {
        let last = v[k];
        v.push(last + d[k] * params.l[k]);
    }
    v
}

fn check_clearance(config: &ChainConfig) -> Result<()> {
    let s = is_simple(config, None);
    if !s.simple {
        let (i, j) = s.witness.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    let (c, pair) = geom::min_clearance_with_pair(config);
    if c < MIN_RELATIVE_CLEARANCE * config.link_lengths().min() {
        let (i, j) = pair.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    Ok(())
}

/// The knitting-needles chain `K` (open, 6 vertices, `v_1` at the origin).
pub fn make_knitting_needles(params: &NeedleParams) -> Result<ChainConfig> {
    params.validate()?;
    let k = make_chain(needle_vertices(params), false)?;
    check_clearance(&k)?;
    Ok(k)
}

/// `K` closed by the segment `v_5 v_0`, which stays outside `B`: a trefoil.
pub fn make_trefoil_completion(params: &NeedleParams) -> Result<ChainConfig> {
    params.validate()?;
    let v = needle_vertices(params);
    if geom::point_segment_distance(v[1], v[0], v[5]) <= params.r {
        return Err(Error::InvalidParams("closing segment enters the ball".into()));
    }
    let t = make_chain(v, true)?;
    check_clearance(&t)?;
    Ok(t)
}

/// Default separation of the parallel copy: 2% of the shortest link.
pub fn default_offset(params: &NeedleParams) -> f64 {
    0.02 * params.min_link()
}

/// Direction of the parallel copy: the candidate furthest from parallel to
/// every link, so each link and its copy are well separated.
fn offset_direction(v: &[Point]) -> Point {
    let mut best = (f64::NEG_INFINITY, Point::new(0.0, 0.0, 1.0));
    for a in [-1.0, 0.0, 1.0] {
        for b in [-1.0, 0.0, 1.0] {
            for c in [-1.0, 0.0, 1.0] {
                let Some(w) = Point::new(a, b, c).normalized() else { continue };
                let score = v
                    .windows(2)
                    .map(|e| (e[1] - e[0]).normalized().map_or(0.0, |u| u.cross(w).norm()))
                    .fold(f64::INFINITY, f64::min);
                if score > best.0 {
                    best = (score, w);
                }
            }
        }
    }
    best.1
}

/// `K` plus a translated copy at distance `offset`, with matching endpoints
/// joined: `v_0 .. v_5, v'_5 .. v'_0`. The copy must lie inside the tube of
/// radius half the clearance of `K`, so `offset` is bounded by that.
pub fn make_locked_closed(params: &NeedleParams, offset: f64) -> Result<ChainConfig> {
    let k = make_knitting_needles(params)?;
    if !(offset.is_finite() && offset > 0.0) {
        return Err(Error::InvalidParams(format!("offset must be positive, got {offset}")));
    }
    let limit = 0.5 * geom::min_clearance(&k);
    if offset >= limit {
        return Err(Error::InvalidParams(format!("offset {offset} is not below half the clearance of K ({limit})")));
    }
    let v = k.vertices();
    let w = offset_direction(v) * offset;
    let mut verts = v.to_vec();
    verts.extend(v.iter().rev().map(|&p| p + w));
    let closed = make_chain(verts, true)?;
    check_clearance(&closed)?;
    Ok(closed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionReport {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `|v_0 - v_1| - r` seen.
    pub min_margin_v0: f64,
    /// Smallest `|v_5 - v_1| - r` seen.
    pub min_margin_v5: f64,
    /// Largest distance of a cord vertex from `v_1` (at most `L ≤ r`).
    pub max_cord_radius: f64,
    /// Lower bound on the `v_5` margin from the triangle inequality: `ℓ_4 - L - r`.
    pub analytic_margin: f64,
}

/// Sample random configurations of `K` (uniform random link directions)
/// and check that `v_0` and `v_5` stay outside `B` while the cord stays inside.
pub fn endpoint_exclusion_check(params: &NeedleParams, trials: usize, seed: u64) -> Result<ExclusionReport> {
    params.validate()?;
    let r = params.r;
    let samples: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = gen::rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial as u64));
            let mut dir = || loop {
                let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let n = p.norm();
                if n > 1e-3 && n <= 1.0 {
                    break p / n;
                }
            };
            let v1 = Point::new(0.0, 0.0, 0.0);
            let v0 = v1 + dir() * params.l[0];
            let mut p = v1;
            let mut cord = 0.0f64;
            for k in 1..4 {
                p = p + dir() * params.l[k];
                cord = cord.max(p.dist(v1));
            }
            let v5 = p + dir() * params.l[4];
            (v0.dist(v1) - r, v5.dist(v1) - r, cord)
        })
        .collect();
    let violations = samples.iter().filter(|s| s.0 <= 0.0 || s.1 <= 0.0 || s.2 > r).count();
    Ok(ExclusionReport {
        trials,
        violations,
        min_margin_v0: samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        min_margin_v5: samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
        max_cord_radius: samples.iter().map(|s| s.2).fold(0.0, f64::max),
        analytic_margin: params.l[4] - params.cord_length() - r,
    })
}

/// Sum of exterior angles at the interior joints; 0 exactly when straight.
pub fn straightness_potential(config: &ChainConfig) -> f64 {
    let v = config.vertices();
    (1..v.len().saturating_sub(1)).map(|i| PI - geom::joint_angle(v[i - 1], v[i], v[i + 1])).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StraightenAttempt {
    pub initial_potential: f64,
    pub best_potential: f64,
    /// Proposals tried.
    pub steps: usize,
    /// Proposals that lowered the potential and passed validation.
    pub accepted: usize,
    /// Proposals that lowered the potential but failed validation.
    pub rejected: usize,
    /// `best_potential < STRAIGHT_THRESHOLD`.
    pub straightened: bool,
    pub plan: MotionPlan,
}

/// Greedy randomized straightening: propose small single-joint rotations,
/// keep those that lower the potential and pass validation.
pub fn random_straighten_attempt(config: &ChainConfig, budget: usize, seed: u64) -> Result<StraightenAttempt> {
    if config.is_closed() {
        return Err(Error::NotOpen);
    }
    let s = is_simple(config, None);
    if !s.simple {
        let (i, j) = s.witness.unwrap_or((0, 0));
        return Err(Error::NotSimple(i, j));
    }
    let mut rng = gen::rng(seed);
    let mut cur = config.clone();
    let mut potential = straightness_potential(&cur);
    let initial_potential = potential;
    let mut plan = MotionPlan::new(config.clone());
    let (mut steps, mut accepted, mut rejected) = (0, 0, 0);
    let m = cur.len();
    let policy = ValidationPolicy::default();
    while steps < budget && potential >= 0.1 * STRAIGHT_THRESHOLD && m > 2 {
        steps += 1;
        let v = cur.vertices();
        let joint = rng.gen_range(1..m - 1);
        let exterior = PI - geom::joint_angle(v[joint - 1], v[joint], v[joint + 1]);
        let normal = (v[joint - 1] - v[joint]).cross(v[joint + 1] - v[joint]);
        let jitter = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let Some(axis) = (normal.normalized().unwrap_or(jitter) + jitter * 0.3).normalized() else { continue };
        let side = if rng.gen_bool(0.5) { Side::Prefix } else { Side::Suffix };
        let magnitude = rng.gen_range(0.0..1.0) * exterior.clamp(1e-3, 0.3);
        let angle = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
        let mv = Move::SingleJoint { joint, axis: axis.to_array(), side, angle };
        let Ok(next) = pose_at(&mv, &cur, 1.0) else { continue };
        let p = straightness_potential(&next);
        if p >= potential {
            continue;
        }
        let step = MotionPlan { initial: cur.clone(), moves: vec![mv.clone()] };
        if validate(&step, &policy).certified {
            cur = next;
            potential = p;
            plan.moves.push(mv);
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    Ok(StraightenAttempt {
        initial_potential,
        best_potential: potential,
        steps,
        accepted,
        rejected,
        straightened: potential < STRAIGHT_THRESHOLD,
        plan,
    })
}
