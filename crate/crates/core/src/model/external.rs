//! Reader for the sequence JSON exchange format (sketch and extrude entities
//! with profile loops). The schema is documented in `docs/formats.md`.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::geometry::polygon::{ring_inside, rings_cross};
use crate::geometry::{solve_arc, tessellate_loop, GeometryError};

use super::types::{BooleanOp, CADModel, CurveCmd, Extrude, Face, Loop, Point2, SEPair, Segment, Sketch, Vec3};
use super::validate::validate_model;
use super::ModelError;

/// Endpoint matching tolerance when chaining profile curves.
const CHAIN_TOL: f64 = 1e-5;
/// Two loops with all segments within this distance are the same loop.
const SAME_LOOP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
enum SegKey {
    Line(Point2, Point2),
    Arc(Point2, Point2, Point2, f64),
    Circle(Point2, f64),
}

fn seg_key(seg: &Segment) -> SegKey {
    let order = |a: Point2, b: Point2| if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    match *seg {
        Segment::Line { from, to } => {
            let (a, b) = order(from, to);
            SegKey::Line(a, b)
        }
        Segment::Arc { from, to, sweep, clockwise } => {
            let (a, b) = order(from, to);
            let c = solve_arc(from, to, sweep, clockwise).map(|g| g.center).unwrap_or(Point2::new(f64::NAN, f64::NAN));
            SegKey::Arc(a, b, c, sweep)
        }
        Segment::Circle { center, radius } => SegKey::Circle(center, radius),
    }
}

fn keys_match(a: &SegKey, b: &SegKey) -> bool {
    let close = |p: Point2, q: Point2| p.dist(q) <= SAME_LOOP_TOL;
    match (a, b) {
        (SegKey::Line(a0, a1), SegKey::Line(b0, b1)) => close(*a0, *b0) && close(*a1, *b1),
        (SegKey::Arc(a0, a1, ac, asw), SegKey::Arc(b0, b1, bc, bsw)) => {
            close(*a0, *b0) && close(*a1, *b1) && close(*ac, *bc) && (asw - bsw).abs() <= 1e-6
        }
        (SegKey::Circle(ac, ar), SegKey::Circle(bc, br)) => close(*ac, *bc) && (ar - br).abs() <= SAME_LOOP_TOL,
        _ => false,
    }
}

/// Same closed curve, regardless of start point and direction.
fn same_loop(a: &Loop, b: &Loop) -> bool {
    let ka: Vec<SegKey> = a.segments().iter().map(seg_key).collect();
    let kb: Vec<SegKey> = b.segments().iter().map(seg_key).collect();
    if ka.len() != kb.len() {
        return false;
    }
    let mut used = vec![false; kb.len()];
    ka.iter().all(|x| {
        if let Some(j) = (0..kb.len()).find(|&j| !used[j] && keys_match(x, &kb[j])) {
            used[j] = true;
            true
        } else {
            false
        }
    })
}

fn loops_tol(loops: &[Loop]) -> f64 {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seg in loops.iter().flat_map(|l| l.segments()) {
        let pts = match seg {
            Segment::Line { from, to } | Segment::Arc { from, to, .. } => [from, to],
            Segment::Circle { center, radius } => {
                [center - Point2::new(radius, radius), center + Point2::new(radius, radius)]
            }
        };
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let d = hi.dist(lo);
    if d.is_finite() && d > 0.0 { 1e-3 * d } else { 1e-3 }
}

/// Groups the loops of adjacent profiles into faces.
///
/// A loop listed by two profiles is the shared boundary between them and is
/// dropped from both. The remaining loops are nested by containment depth:
/// even depth starts a face, odd depth is a hole of its innermost container.
pub fn merge_profiles_to_faces(profiles: &[Vec<Loop>]) -> Result<Vec<Face>, GeometryError> {
    let all: Vec<&Loop> = profiles.iter().flatten().collect();
    let mut alive = vec![true; all.len()];
    for i in 0..all.len() {
        if !alive[i] {
            continue;
        }
        if let Some(j) = (i + 1..all.len()).find(|&j| alive[j] && same_loop(all[i], all[j])) {
            alive[i] = false;
            alive[j] = false;
        }
    }
    let loops: Vec<Loop> = all.iter().zip(&alive).filter(|(_, &a)| a).map(|(l, _)| (*l).clone()).collect();
    let tol = loops_tol(&loops);
    let rings = loops
        .iter()
        .map(|l| tessellate_loop(l, tol).map(|p| p.vertices))
        .collect::<Result<Vec<_>, _>>()?;

    let n = loops.len();
    // inside[i][j]: loop j lies inside loop i
    let mut inside = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if j > i && rings_cross(&rings[i], &rings[j]) {
                return Err(GeometryError::SelfIntersecting(format!("profile loops {i} and {j} intersect")));
            }
            inside[i][j] = ring_inside(&rings[i], &rings[j]) == Some(true);
        }
    }
    let depth: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| inside[i][j]).count()).collect();

    let mut face_of = vec![usize::MAX; n];
    let mut faces: Vec<Face> = Vec::new();
    for j in 0..n {
        if depth[j].is_multiple_of(2) {
            face_of[j] = faces.len();
            faces.push(Face::new(loops[j].clone()));
        }
    }
    for j in 0..n {
        if depth[j] % 2 == 1 {
            let parent = (0..n)
                .filter(|&i| inside[i][j] && depth[i] + 1 == depth[j])
                .min()
                .ok_or_else(|| GeometryError::Invalid(format!("hole loop {j} has no enclosing loop")))?;
            faces[face_of[parent]].holes.push(loops[j].clone());
        }
    }
    Ok(faces)
}

struct Reader<'a> {
    entities: &'a serde_json::Map<String, Value>,
}

fn field<'v>(v: &'v Value, key: &str, path: &str) -> Result<&'v Value, ModelError> {
    v.get(key).ok_or_else(|| ModelError::parse(format!("{path}.{key}"), "missing field"))
}

fn num(v: &Value, path: &str) -> Result<f64, ModelError> {
    let x = v.as_f64().ok_or_else(|| ModelError::parse(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(ModelError::parse(path, "non-finite number"));
    }
    Ok(x)
}

fn str_field<'v>(v: &'v Value, key: &str, path: &str) -> Result<&'v str, ModelError> {
    field(v, key, path)?.as_str().ok_or_else(|| ModelError::parse(format!("{path}.{key}"), "expected a string"))
}

/// `{"x":..,"y":..,"z":..}` or an array of 2 or 3 numbers; missing z is 0.
fn vec3(v: &Value, path: &str) -> Result<Vec3, ModelError> {
    if let Some(a) = v.as_array() {
        if a.len() != 2 && a.len() != 3 {
            return Err(ModelError::parse(path, "expected 2 or 3 coordinates"));
        }
        let z = if a.len() == 3 { num(&a[2], &format!("{path}[2]"))? } else { 0.0 };
        return Ok(Vec3::new(num(&a[0], &format!("{path}[0]"))?, num(&a[1], &format!("{path}[1]"))?, z));
    }
    let c = |k: &str| -> Result<f64, ModelError> {
        match v.get(k) {
            Some(x) => num(x, &format!("{path}.{k}")),
            None if k == "z" => Ok(0.0),
            None => Err(ModelError::parse(format!("{path}.{k}"), "missing field")),
        }
    };
    Ok(Vec3::new(c("x")?, c("y")?, c("z")?))
}

fn point2(v: &Value, path: &str) -> Result<Point2, ModelError> {
    let p = vec3(v, path)?;
    Ok(Point2::new(p.x, p.y))
}

enum RawCurve {
    Open { from: Point2, to: Point2, cmd: fn(Point2, f64, bool) -> CurveCmd, sweep: f64, clockwise: bool },
    Circle { center: Point2, radius: f64 },
}

fn line_cmd(end: Point2, _: f64, _: bool) -> CurveCmd {
    CurveCmd::Line { end, relative: false }
}

fn arc_cmd(end: Point2, sweep: f64, clockwise: bool) -> CurveCmd {
    CurveCmd::Arc { end, sweep, clockwise, relative: false }
}

fn read_curve(v: &Value, path: &str) -> Result<RawCurve, ModelError> {
    let ty = str_field(v, "type", path)?;
    match ty {
        "Line3D" | "Line" => Ok(RawCurve::Open {
            from: point2(field(v, "start_point", path)?, &format!("{path}.start_point"))?,
            to: point2(field(v, "end_point", path)?, &format!("{path}.end_point"))?,
            cmd: line_cmd,
            sweep: 0.0,
            clockwise: false,
        }),
        "Arc3D" | "Arc" => {
            let from = point2(field(v, "start_point", path)?, &format!("{path}.start_point"))?;
            let to = point2(field(v, "end_point", path)?, &format!("{path}.end_point"))?;
            let center = point2(field(v, "center_point", path)?, &format!("{path}.center_point"))?;
            let clockwise = match v.get("normal") {
                Some(n) => vec3(n, &format!("{path}.normal"))?.z < 0.0,
                None => false,
            };
            let (a, b) = (from - center, to - center);
            let ccw = b.y.atan2(b.x) - a.y.atan2(a.x);
            let ccw = ccw.rem_euclid(std::f64::consts::TAU).to_degrees();
            let sweep = if clockwise { 360.0 - ccw } else { ccw };
            if !(sweep > 0.0 && sweep < 360.0) {
                return Err(ModelError::Geometry(GeometryError::DegenerateArc(format!("{path}: sweep {sweep}"))));
            }
            Ok(RawCurve::Open { from, to, cmd: arc_cmd, sweep, clockwise })
        }
        "Circle3D" | "Circle" => Ok(RawCurve::Circle {
            center: point2(field(v, "center_point", path)?, &format!("{path}.center_point"))?,
            radius: num(field(v, "radius", path)?, &format!("{path}.radius"))?,
        }),
        other => Err(ModelError::Unsupported { path: format!("{path}.type"), feature: other.to_string() }),
    }
}

/// Chains curves head to tail, reversing any that arrive backwards.
fn read_loop(v: &Value, path: &str) -> Result<Loop, ModelError> {
    let curves = field(v, "profile_curves", path)?
        .as_array()
        .ok_or_else(|| ModelError::parse(format!("{path}.profile_curves"), "expected an array"))?;
    let raw = curves
        .iter()
        .enumerate()
        .map(|(i, c)| read_curve(c, &format!("{path}.profile_curves[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    match raw.as_slice() {
        [] => return Err(ModelError::parse(format!("{path}.profile_curves"), "empty loop")),
        [RawCurve::Circle { center, radius }] => return Ok(Loop::circle(*center, *radius)),
        _ => {}
    }
    let mut lp: Option<Loop> = None;
    let mut pen = Point2::default();
    for (i, c) in raw.iter().enumerate() {
        let cp = format!("{path}.profile_curves[{i}]");
        let RawCurve::Open { from, to, cmd, sweep, clockwise } = *c else {
            return Err(ModelError::parse(cp, "circle mixed with other curves"));
        };
        let Some(l) = lp.as_mut() else {
            // orient the first curve towards the second when needed
            let flip = match raw.get(1) {
                Some(RawCurve::Open { from: f2, to: t2, .. }) => {
                    from.dist(*f2).min(from.dist(*t2)) < to.dist(*f2).min(to.dist(*t2)) - CHAIN_TOL
                }
                _ => false,
            };
            let (s, e, cw) = if flip { (to, from, !clockwise) } else { (from, to, clockwise) };
            let mut l = Loop::new(s);
            l.curves.push(cmd(e, sweep, cw));
            lp = Some(l);
            pen = e;
            continue;
        };
        let (e, cw) = if from.dist(pen) <= CHAIN_TOL {
            (to, clockwise)
        } else if to.dist(pen) <= CHAIN_TOL {
            (from, !clockwise)
        } else {
            return Err(ModelError::parse(cp, "curve does not connect to the previous one"));
        };
        l.curves.push(cmd(e, sweep, cw));
        pen = e;
    }
    let mut l = lp.expect("non-empty loop");
    if pen.dist(l.start) > CHAIN_TOL {
        return Err(ModelError::parse(path, format!("loop ends {} from its start", pen.dist(l.start))));
    }
    // snap the last endpoint onto the start
    let start = l.start;
    match l.curves.last_mut() {
        Some(CurveCmd::Line { end, .. }) | Some(CurveCmd::Arc { end, .. }) => *end = start,
        _ => {}
    }
    l.closed = true;
    Ok(l)
}

impl Reader<'_> {
    fn entity(&self, id: &str, path: &str) -> Result<&Value, ModelError> {
        self.entities.get(id).ok_or_else(|| ModelError::parse(path, format!("unknown entity \"{id}\"")))
    }

    fn profile_loops(&self, sketch: &Value, sid: &str, pid: &str, path: &str) -> Result<Vec<Loop>, ModelError> {
        let ppath = format!("entities.{sid}.profiles.{pid}");
        let profile = field(sketch, "profiles", &format!("entities.{sid}"))?
            .get(pid)
            .ok_or_else(|| ModelError::parse(path, format!("sketch \"{sid}\" has no profile \"{pid}\"")))?;
        let loops = field(profile, "loops", &ppath)?
            .as_array()
            .ok_or_else(|| ModelError::parse(format!("{ppath}.loops"), "expected an array"))?;
        loops.iter().enumerate().map(|(i, l)| read_loop(l, &format!("{ppath}.loops[{i}]"))).collect()
    }

    fn plane(&self, sketch: &Value, sid: &str) -> Result<(Vec3, Vec3, Vec3), ModelError> {
        let path = format!("entities.{sid}.transform");
        let t = field(sketch, "transform", &format!("entities.{sid}"))?;
        let origin = vec3(field(t, "origin", &path)?, &format!("{path}.origin"))?;
        let x = vec3(field(t, "x_axis", &path)?, &format!("{path}.x_axis"))?;
        let n = vec3(field(t, "z_axis", &path)?, &format!("{path}.z_axis"))?;
        if !(x.norm() > 0.0 && n.norm() > 0.0) {
            return Err(ModelError::parse(path, "zero-length axis"));
        }
        Ok((origin, x.normalized(), n.normalized()))
    }

    fn extrude(&self, e: &Value, eid: &str) -> Result<Vec<SEPair>, ModelError> {
        let path = format!("entities.{eid}");
        let op_name = str_field(e, "operation", &path)?;
        let op = BooleanOp::parse(op_name)
            .ok_or_else(|| ModelError::Unsupported { path: format!("{path}.operation"), feature: op_name.to_string() })?;
        let distance = |key: &str| -> Result<f64, ModelError> {
            let p = format!("{path}.{key}");
            let ext = field(e, key, &path)?;
            let d = field(ext, "distance", &p)?;
            match d.get("value") {
                Some(v) => num(v, &format!("{p}.distance.value")),
                None => num(d, &format!("{p}.distance")),
            }
        };
        let ty = str_field(e, "extent_type", &path)?;
        let (lo, hi) = match ty {
            "OneSideFeatureExtentType" | "one_sided" => {
                let d = distance("extent_one")?;
                (d.min(0.0), d.max(0.0))
            }
            "SymmetricFeatureExtentType" | "symmetric" => {
                let d = distance("extent_one")?.abs();
                (-d / 2.0, d / 2.0)
            }
            "TwoSidesFeatureExtentType" | "two_sided" => {
                let (d1, d2) = (distance("extent_one")?, distance("extent_two")?);
                ((-d2).min(d1), d1.max(-d2))
            }
            other => {
                return Err(ModelError::Unsupported { path: format!("{path}.extent_type"), feature: other.to_string() })
            }
        };

        let refs = field(e, "profiles", &path)?
            .as_array()
            .ok_or_else(|| ModelError::parse(format!("{path}.profiles"), "expected an array"))?;
        // profiles grouped per sketch, sketches in first-reference order
        let mut order: Vec<String> = Vec::new();
        let mut by_sketch: BTreeMap<String, Vec<Vec<Loop>>> = BTreeMap::new();
        for (i, r) in refs.iter().enumerate() {
            let rp = format!("{path}.profiles[{i}]");
            let sid = str_field(r, "sketch", &rp)?;
            let pid = str_field(r, "profile", &rp)?;
            let sketch = self.entity(sid, &format!("{rp}.sketch"))?;
            let loops = self.profile_loops(sketch, sid, pid, &rp)?;
            if !by_sketch.contains_key(sid) {
                order.push(sid.to_string());
            }
            by_sketch.entry(sid.to_string()).or_default().push(loops);
        }
        if order.is_empty() {
            return Err(ModelError::parse(format!("{path}.profiles"), "extrude references no profiles"));
        }
        let mut out = Vec::new();
        for sid in order {
            let sketch = self.entity(&sid, &path)?;
            let (mut origin, x_axis, normal) = self.plane(sketch, &sid)?;
            let faces = merge_profiles_to_faces(&by_sketch[&sid])?;
            // an extent that does not straddle the plane moves the plane onto its near side
            let extrude = if lo <= 0.0 && hi >= 0.0 {
                Extrude::new(hi, -lo)
            } else {
                let base = if lo > 0.0 { lo } else { hi };
                origin = origin + normal * base;
                Extrude::new(hi - base, -(lo - base))
            };
            out.push(SEPair { sketch: Sketch { origin, x_axis, normal, faces }, extrude, op });
        }
        Ok(out)
    }
}

/// Parses the external sequence JSON into a validated model.
pub fn from_external_json(text: &[u8]) -> Result<CADModel, ModelError> {
    let doc: Value = serde_json::from_slice(text)
        .map_err(|e| ModelError::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let entities = field(&doc, "entities", "$")?
        .as_object()
        .ok_or_else(|| ModelError::parse("entities", "expected an object"))?;
    let sequence =
        field(&doc, "sequence", "$")?.as_array().ok_or_else(|| ModelError::parse("sequence", "expected an array"))?;
    let reader = Reader { entities };
    let mut pairs = Vec::new();
    for (i, step) in sequence.iter().enumerate() {
        let sp = format!("sequence[{i}]");
        let id = str_field(step, "entity", &sp)?;
        let ent = reader.entity(id, &format!("{sp}.entity"))?;
        let ty = match step.get("type").and_then(Value::as_str) {
            Some(t) => t,
            None => str_field(ent, "type", &format!("entities.{id}"))?,
        };
        match ty {
            "Sketch" => {}
            "ExtrudeFeature" => pairs.extend(reader.extrude(ent, id)?),
            other => return Err(ModelError::Unsupported { path: format!("{sp}.type"), feature: other.to_string() }),
        }
    }
    if pairs.is_empty() {
        return Err(ModelError::parse("sequence", "no extrude features"));
    }
    let model = CADModel { pairs };
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    Ok(model)
}
