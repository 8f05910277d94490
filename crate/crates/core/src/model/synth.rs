//! Seeded random generation of valid models and primitives, for fixtures
//! and property tests. Sketch coordinates stay inside `[-1, 1]` and
//! extrusions inside `[0, 2]`, so every output is quantizable.

use rand::{Rng, RngExt};

use super::primitive::Primitive;
use crate::geometry::{voxelize, Bounds};
use super::types::{BooleanOp, CADModel, CurveCmd, Extrude, Face, Loop, Point2, SEPair, Sketch, Vec3};
use super::validate::{validate_face, validate_loop, validate_model};

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Round to a 1/1000 grid so emitted scripts stay short.
fn snap(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(snap(x), snap(y))
}

/// Star-shaped polygon around `c` with `k` vertices at radii in
/// `[0.6 r, r]`; one edge may be replaced by an arc.
fn star_loop(rng: &mut impl Rng, c: Point2, r: f64, k: usize, arc: bool) -> Loop {
    let phase = uniform(rng, 0.0, std::f64::consts::TAU);
    let pts: Vec<Point2> = (0..k)
        .map(|i| {
            let a = phase + std::f64::consts::TAU * (i as f64 + uniform(rng, -0.2, 0.2)) / k as f64;
            let rr = r * uniform(rng, 0.6, 1.0);
            pt(c.x + rr * a.cos(), c.y + rr * a.sin())
        })
        .collect();
    let mut lp = Loop::polygon(&pts);
    if arc {
        let i = rng.random_range(0..k);
        let end = match lp.curves[i] {
            CurveCmd::Line { end, .. } => end,
            _ => unreachable!(),
        };
        let sweep = [30.0, 45.0, 60.0, 90.0][rng.random_range(0..4)];
        lp.curves[i] = CurveCmd::Arc { end, sweep, clockwise: rng.random::<bool>(), relative: false };
    }
    lp
}

/// Stadium: two parallel lines joined by half circles.
fn slot_loop(c: Point2, half_len: f64, r: f64) -> Loop {
    let (x0, x1) = (c.x - half_len, c.x + half_len);
    let (y0, y1) = (c.y - r, c.y + r);
    Loop {
        start: pt(x0, y0),
        curves: vec![
            CurveCmd::Line { end: pt(x1, y0), relative: false },
            CurveCmd::Arc { end: pt(x1, y1), sweep: 180.0, clockwise: false, relative: false },
            CurveCmd::Line { end: pt(x0, y1), relative: false },
            CurveCmd::Arc { end: pt(x0, y0), sweep: 180.0, clockwise: false, relative: false },
        ],
        closed: true,
    }
}

/// A valid loop roughly inside the disc of radius `r` around `c`.
pub fn random_loop(rng: &mut impl Rng, c: Point2, r: f64) -> Loop {
    for _ in 0..32 {
        let lp = match rng.random_range(0..5) {
            0 => {
                let (w, h) = (r * uniform(rng, 0.4, 0.7), r * uniform(rng, 0.4, 0.7));
                Loop::rect(pt(c.x - w, c.y - h), pt(c.x + w, c.y + h))
            }
            1 => Loop::circle(pt(c.x, c.y), snap(r * uniform(rng, 0.4, 1.0)).max(0.01)),
            2 => slot_loop(c, r * uniform(rng, 0.2, 0.5), r * uniform(rng, 0.2, 0.45)),
            3 => {
                let k = rng.random_range(3..9);
                star_loop(rng, c, r, k, false)
            }
            _ => {
                let k = rng.random_range(3..9);
                star_loop(rng, c, r, k, true)
            }
        };
        if validate_loop(&lp).is_valid() {
            return lp;
        }
    }
    Loop::rect(pt(c.x - 0.5 * r, c.y - 0.5 * r), pt(c.x + 0.5 * r, c.y + 0.5 * r))
}

/// A face inside the disc of radius `r` around `c`, sometimes with a hole.
pub fn random_face(rng: &mut impl Rng, c: Point2, r: f64) -> Face {
    let outer = random_loop(rng, c, r);
    if rng.random::<f64>() < 0.35 {
        let hole = if rng.random::<bool>() {
            Loop::circle(pt(c.x, c.y), snap(0.12 * r).max(0.005))
        } else {
            let h = 0.1 * r;
            Loop::rect(pt(c.x - h, c.y - h), pt(c.x + h, c.y + h))
        };
        let face = Face::new(outer.clone()).with_hole(hole);
        if validate_face(&face).is_valid() {
            return face;
        }
    }
    Face::new(outer)
}

fn random_frame(rng: &mut impl Rng) -> (Vec3, Vec3) {
    const AXES: [(Vec3, Vec3); 6] = [
        (Vec3::X, Vec3::Z),
        (Vec3::Y, Vec3::X),
        (Vec3::Z, Vec3::Y),
        (Vec3 { x: -1.0, y: 0.0, z: 0.0 }, Vec3 { x: 0.0, y: 0.0, z: -1.0 }),
        (Vec3 { x: 0.0, y: 1.0, z: 0.0 }, Vec3 { x: 0.0, y: 0.0, z: -1.0 }),
        (Vec3 { x: 0.0, y: 0.0, z: 1.0 }, Vec3 { x: 1.0, y: 0.0, z: 0.0 }),
    ];
    if rng.random::<f64>() < 0.8 {
        AXES[rng.random_range(0..AXES.len())]
    } else {
        // tilted about the x axis
        let t = uniform(rng, -0.6, 0.6);
        (Vec3::X, Vec3::new(0.0, -t.sin(), t.cos()))
    }
}

/// A sketch with one face, or two side by side.
pub fn random_sketch(rng: &mut impl Rng) -> Sketch {
    let (x_axis, normal) = random_frame(rng);
    let origin = Vec3::new(snap(uniform(rng, -0.2, 0.2)), snap(uniform(rng, -0.2, 0.2)), snap(uniform(rng, -0.2, 0.2)));
    let faces = if rng.random::<f64>() < 0.25 {
        let r = uniform(rng, 0.15, 0.3);
        vec![random_face(rng, Point2::new(-0.35, 0.0), r), random_face(rng, Point2::new(0.35, 0.0), r)]
    } else {
        let c = Point2::new(uniform(rng, -0.15, 0.15), uniform(rng, -0.15, 0.15));
        let r = uniform(rng, 0.25, 0.6);
        vec![random_face(rng, c, r)]
    };
    Sketch { origin, x_axis, normal, faces }
}

pub fn random_extrude(rng: &mut impl Rng) -> Extrude {
    let pos = snap(uniform(rng, 0.1, 0.7));
    let neg = if rng.random::<f64>() < 0.3 { snap(uniform(rng, 0.05, 0.4)) } else { 0.0 };
    Extrude::new(pos, neg)
}

/// A valid model of one to `max_pairs` pairs with a non-empty solid; later
/// pairs join, cut or intersect.
pub fn random_model(rng: &mut impl Rng, max_pairs: usize) -> CADModel {
    loop {
        let m = draw_model(rng, max_pairs);
        // cuts and intersections can cancel everything
        if voxelize(&m, 16, Bounds::Auto).is_ok_and(|g| !g.is_empty()) {
            return m;
        }
    }
}

fn draw_model(rng: &mut impl Rng, max_pairs: usize) -> CADModel {
    let n = rng.random_range(1..=max_pairs.max(1));
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let op = if k == 0 {
            BooleanOp::NewBody
        } else {
            [BooleanOp::Join, BooleanOp::Join, BooleanOp::Cut, BooleanOp::Intersect][rng.random_range(0..4)]
        };
        pairs.push(SEPair { sketch: random_sketch(rng), extrude: random_extrude(rng), op });
    }
    let m = CADModel { pairs };
    debug_assert!(validate_model(&m).is_valid());
    m
}

/// A random primitive of a random level.
pub fn random_primitive(rng: &mut impl Rng) -> Primitive {
    let r = uniform(rng, 0.2, 0.8);
    match rng.random_range(0..5) {
        0 => Primitive::L(random_loop(rng, Point2::new(0.0, 0.0), r)),
        1 => Primitive::F(random_face(rng, Point2::new(0.0, 0.0), r)),
        2 => Primitive::S(random_sketch(rng)),
        3 => Primitive::SE(SEPair { sketch: random_sketch(rng), extrude: random_extrude(rng), op: BooleanOp::NewBody }),
        _ => {
            let mut m = random_model(rng, 3);
            if m.pairs.len() == 1 {
                // a join cannot empty the solid
                m.pairs.push(SEPair { sketch: random_sketch(rng), extrude: random_extrude(rng), op: BooleanOp::Join });
            }
            Primitive::MSE(m)
        }
    }
}
