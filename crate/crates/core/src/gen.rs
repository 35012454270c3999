//! Seeded random chain generators used by tests, benchmarks and the CLI.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::{is_simple, make_chain, ChainConfig};
use crate::geom::{self, Point};
use crate::motion::{pose_at, Move, MotionPlan, Side};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn clear_enough(verts: &[Point], closed: bool, frac: f64) -> bool {
    let (c, _) = geom::clearance_filtered(verts, closed, |_, _| true);
    let min_len = (0..geom::edge_count(verts.len(), closed))
        .map(|e| {
            let (a, b) = geom::edge_ends(e, verts.len(), closed);
            verts[a].dist(verts[b])
        })
        .fold(f64::INFINITY, f64::min);
    c >= frac * min_len
}

/// Random simple polygon in the xy-plane, star-shaped about the origin,
/// counterclockwise, with clearance at least 2% of its shortest edge.
pub fn random_simple_polygon<R: Rng>(n: usize, rng: &mut R) -> ChainConfig {
    assert!(n >= 3);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let min_gap = (0..n)
            .map(|k| if k + 1 < n { angles[k + 1] - angles[k] } else { angles[0] + TAU - angles[k] })
            .fold(f64::INFINITY, f64::min);
        if min_gap < 0.15 * TAU / n as f64 {
            continue;
        }
        let verts: Vec<Point> = angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(0.4..1.6);
                Point::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect();
        if !clear_enough(&verts, true, 0.02) {
            continue;
        }
        if let Ok(c) = make_chain(verts, true) {
            return c;
        }
    }
}

/// Random simple planar open chain (a self-avoiding turning walk) whose
/// vertices are then lifted to random heights in `[-1, 1]`.
pub fn random_lifted_chain<R: Rng>(n: usize, rng: &mut R) -> ChainConfig {
    assert!(n >= 2);
    'attempt: loop {
        let mut verts = vec![Point::new(0.0, 0.0, 0.0)];
        let mut heading = rng.gen_range(0.0..TAU);
        while verts.len() < n {
            let mut placed = false;
            for _ in 0..50 {
                let h = heading + rng.gen_range(-2.0..2.0);
                let len = rng.gen_range(0.5..1.5);
                let last = *verts.last().unwrap();
                let cand = last + Point::new(h.cos(), h.sin(), 0.0) * len;
                verts.push(cand);
                if clear_enough(&verts, false, 0.05) {
                    heading = h;
                    placed = true;
                    break;
                }
                verts.pop();
            }
            if !placed {
                continue 'attempt;
            }
        }
        let lifted: Vec<Point> = verts.iter().map(|p| Point::new(p.x, p.y, rng.gen_range(-1.0..1.0))).collect();
        return make_chain(lifted, false).expect("walk has positive link lengths");
    }
}

/// Deterministic lifted zigzag with `n` vertices.
pub fn zigzag(n: usize) -> ChainConfig {
    let verts = (0..n)
        .map(|k| {
            let up = (k % 2) as f64;
            Point::new(k as f64, up, 0.5 * up)
        })
        .collect();
    make_chain(verts, false).expect("zigzag is valid")
}

/// Random barbed polygon: a convex `k`-gon (counterclockwise, on a random
/// ellipse) with an ear glued onto its closing edge. The ear apex is the
/// last vertex.
pub fn random_barbed<R: Rng>(k: usize, rng: &mut R) -> crate::barbed::BarbedPolygon {
    assert!(k >= 3);
    loop {
        let (ax, ay) = (rng.gen_range(0.6..1.6), rng.gen_range(0.6..1.6));
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let mut verts: Vec<Point> = angles.iter().map(|&a| Point::planar(ax * a.cos(), ay * a.sin())).collect();
        let (b0, b1) = (verts[k - 1], verts[0]);
        let base = b1 - b0;
        let len = base.norm();
        // Outward normal of the closing edge of a counterclockwise polygon.
        let out = Point::planar(base.y, -base.x) / len;
        let h = rng.gen_range(0.05..1.0) * len;
        let s = rng.gen_range(-0.8..0.8) * len;
        verts.push(b0 + base * 0.5 + out * h + base * (s / len));
        if !clear_enough(&verts, true, 0.02) {
            continue;
        }
        if let Ok(config) = make_chain(verts, true) {
            return crate::barbed::BarbedPolygon { config, apex: k };
        }
    }
}

/// Seeded motion that passes through a self-intersection while both of its
/// end configurations are simple: an in-plane rotation of the suffix of a
/// planar open chain that sweeps through the prefix. Used to check that the
/// validator rejects crossings it cannot see at the endpoints.
pub fn crossing_motion(seed: u64) -> MotionPlan {
    const SAMPLES: usize = 400;
    let mut rng = rng(seed);
    loop {
        let n = rng.gen_range(5..9);
        let walk = random_lifted_chain(n, &mut rng).map_vertices(|p| Point::planar(p.x, p.y));
        let joint = rng.gen_range(1..n - 1);
        let angle = rng.gen_range(0.5..TAU - 0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mv = Move::SingleJoint { joint, axis: [0.0, 0.0, 1.0], side: Side::Suffix, angle };
        let Ok(end) = pose_at(&mv, &walk, 1.0) else { continue };
        if !clear_enough(end.vertices(), false, 0.05) {
            continue;
        }
        let crosses = (1..SAMPLES).any(|k| {
            pose_at(&mv, &walk, k as f64 / SAMPLES as f64).map_or(false, |c| !is_simple(&c, None).simple)
        });
        if crosses {
            return MotionPlan { initial: walk, moves: vec![mv] };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::project;
    use crate::motion::{validate, ValidationPolicy};

    #[test]
    fn crossing_motions_are_rejected() {
        for seed in 0..10 {
            let plan = crossing_motion(seed);
            assert!(is_simple(&plan.initial, None).simple);
            assert_eq!(plan, crossing_motion(seed));
            let r = validate(&plan, &ValidationPolicy::default());
            assert!(!r.certified, "seed {seed}");
        }
    }

    #[test]
    fn generators_are_simple_and_deterministic() {
        for seed in 0..20 {
            let p = random_simple_polygon(9, &mut rng(seed));
            assert!(is_simple(&p, None).simple);
            assert!(p.is_planar_xy());
            assert_eq!(p, random_simple_polygon(9, &mut rng(seed)));
            let c = random_lifted_chain(12, &mut rng(seed));
            let proj = project(&c, Point::new(0.0, 0.0, 1.0)).unwrap();
            assert!(proj.certificate.is_some());
        }
        assert!(is_simple(&zigzag(7), None).simple);
    }
}
