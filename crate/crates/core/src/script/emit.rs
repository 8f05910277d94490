use std::fmt::Write;

use crate::model::{CADModel, CurveCmd, Extrude, Loop, Primitive, Vec3};

/// Shortest decimal text that parses back to the same `f64`.
fn n(x: f64) -> String {
    format!("{x}")
}

fn v3(v: Vec3) -> String {
    format!("({}, {}, {})", n(v.x), n(v.y), n(v.z))
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn emit_loop(lp: &Loop) -> String {
    let lp = lp.to_absolute();
    let mut s = format!("Loop().moveTo({}, {})", n(lp.start.x), n(lp.start.y));
    for c in &lp.curves {
        match *c {
            CurveCmd::Line { end, .. } => write!(s, ".lineTo({}, {})", n(end.x), n(end.y)),
            CurveCmd::Arc { end, sweep, clockwise, .. } => {
                write!(s, ".arcTo({}, {}, {}, {})", n(end.x), n(end.y), n(sweep), py_bool(clockwise))
            }
            CurveCmd::Circle { radius } => write!(s, ".circle({})", n(radius)),
        }
        .expect("string write");
    }
    if lp.closed && !lp.is_circle() {
        s.push_str(".close()");
    }
    s
}

fn emit_extrude(e: Extrude) -> String {
    if e.dist_neg == 0.0 {
        format!("Extrude({})", n(e.dist_pos))
    } else {
        format!("Extrude(({}, {}))", n(e.dist_pos), n(e.dist_neg))
    }
}

/// Script that rebuilds `model` with absolute coordinates.
pub fn emit_model(model: &CADModel) -> String {
    let mut s = String::from("from CADLib import Loop, Face, Sketch, Extrude, CADModel\n\ncad_model = CADModel()\n");
    for (i, pair) in model.pairs.iter().enumerate() {
        s.push('\n');
        let sk = &pair.sketch;
        let mut face_names = Vec::new();
        for (j, face) in sk.faces.iter().enumerate() {
            let mut loop_names = Vec::new();
            for (k, lp) in face.loops().enumerate() {
                let name = format!("loop_{i}_{j}_{k}");
                writeln!(s, "{name} = {}", emit_loop(lp)).expect("string write");
                loop_names.push(name);
            }
            let name = format!("face_{i}_{j}");
            writeln!(s, "{name} = Face().addLoop({})", loop_names.join(", ")).expect("string write");
            face_names.push(name);
        }
        writeln!(
            s,
            "sketch_{i} = Sketch({}, {}, {}).addFace({})",
            v3(sk.origin),
            v3(sk.x_axis),
            v3(sk.normal),
            face_names.join(", ")
        )
        .expect("string write");
        writeln!(s, "cad_model.addSE(sketch_{i}, {}, \"{}\")", emit_extrude(pair.extrude), pair.op.as_str())
            .expect("string write");
    }
    s
}

/// Hard-coded script for a primitive. Loops, faces and sketches are wrapped
/// into a one-pair model first, so the script always executes to a solid.
pub fn emit_hardcoded(p: &Primitive) -> String {
    emit_model(&p.to_model())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::primitive::square_loop;
    use crate::model::{BooleanOp, Face, Point2, Sketch};
    use crate::script::{execute_script, parse, tokenize, ExecLimits, ExprKind, StmtKind};

    #[test]
    fn unit_square_loop() {
        let text = emit_hardcoded(&Primitive::L(square_loop(0.0, 0.0, 1.0)));
        assert!(text.contains("Loop().moveTo(0, 0).lineTo(1, 0).lineTo(1, 1).lineTo(0, 1).lineTo(0, 0).close()"), "{text}");
        assert!(text.contains("Sketch((0, 0, 0), (1, 0, 0), (0, 0, 1))"));
        assert!(text.contains("Extrude(0.1)"));
        let ast = parse(&tokenize(&text).unwrap()).unwrap();
        let mut line_calls = 0;
        let mut close_calls = 0;
        fn count(e: &crate::script::Expr, lines: &mut usize, closes: &mut usize) {
            if let ExprKind::Call { func, .. } = &e.kind {
                if let ExprKind::Attr { value, name } = &func.kind {
                    match name.as_str() {
                        "lineTo" => *lines += 1,
                        "close" => *closes += 1,
                        _ => {}
                    }
                    count(value, lines, closes);
                }
            }
        }
        for s in &ast.statements {
            if let StmtKind::Assign { value, .. } = &s.kind {
                count(value, &mut line_calls, &mut close_calls);
            }
        }
        assert_eq!((line_calls, close_calls), (4, 1));
    }

    #[test]
    fn two_pair_model_carries_op() {
        let m = CADModel::unit_cube().with(
            Sketch::xy(vec![Face::new(Loop::circle(Point2::new(0.5, 0.5), 0.25))]),
            Extrude::new(0.5, 0.25),
            BooleanOp::Cut,
        );
        let text = emit_hardcoded(&Primitive::MSE(m.clone()));
        assert_eq!(text.matches("addSE").count(), 2);
        assert!(text.contains("Extrude((0.5, 0.25)), \"cut\")"));
        assert_eq!(execute_script(&text, &ExecLimits::default()).unwrap(), m);
    }

    #[test]
    fn arcs_and_holes_round_trip_exactly() {
        let outer = Loop {
            start: Point2::new(-0.3, 0.0),
            curves: vec![
                CurveCmd::Line { end: Point2::new(0.3, 0.0), relative: false },
                CurveCmd::Arc { end: Point2::new(-0.3, 0.0), sweep: 180.0, clockwise: false, relative: false },
            ],
            closed: true,
        };
        let face = Face::new(outer).with_hole(Loop::circle(Point2::new(0.0, 0.1), 0.05));
        let sk = Sketch {
            origin: Vec3::new(0.1, -0.2, 0.3),
            x_axis: Vec3::Y,
            normal: Vec3::X,
            faces: vec![face],
        };
        let m = CADModel::single(sk, Extrude::new(1.0 / 3.0, 0.0));
        let back = execute_script(&emit_model(&m), &ExecLimits::default()).unwrap();
        assert_eq!(back, m);
    }
}
