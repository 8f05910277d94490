use std::ops::Range;

use crate::model::{Face, Point2};

use super::polygon::{self_intersects, signed_area};
use super::tessellate::tessellate_loop;
use super::GeometryError;

/// Cap triangulation of a face. `rings[0]` is the outer ring (counter-clockwise),
/// the rest are holes (clockwise); triangles index into `vertices` and are
/// counter-clockwise.
#[derive(Clone, Debug)]
pub struct FaceTriangulation {
    pub vertices: Vec<Point2>,
    pub rings: Vec<Range<usize>>,
    pub triangles: Vec<[usize; 3]>,
}

impl FaceTriangulation {
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| signed_area(&[self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]))
            .sum()
    }
}

pub fn triangulate_face(face: &Face, chord_tol: f64) -> Result<FaceTriangulation, GeometryError> {
    let mut vertices = Vec::new();
    let mut rings = Vec::new();
    let mut expected = 0.0;
    for (k, lp) in face.loops().enumerate() {
        let mut ring = tessellate_loop(lp, chord_tol)?.vertices;
        if self_intersects(&ring) {
            return Err(GeometryError::SelfIntersecting(format!("loop {k} crosses itself")));
        }
        let area = signed_area(&ring);
        let want_ccw = k == 0;
        if (area > 0.0) != want_ccw {
            ring.reverse();
        }
        if k == 0 {
            expected += area.abs();
        } else {
            expected -= area.abs();
        }
        let start = vertices.len();
        vertices.extend(ring);
        rings.push(start..vertices.len());
    }
    let outer_area = signed_area(&vertices[rings[0].clone()]);
    if outer_area <= 1e-18 || expected <= 1e-12 * outer_area {
        return Err(GeometryError::Degenerate(format!("face area {expected}")));
    }

    let coords: Vec<f64> = vertices.iter().flat_map(|p| [p.x, p.y]).collect();
    let holes: Vec<usize> = rings[1..].iter().map(|r| r.start).collect();
    let flat = earcutr::earcut(&coords, &holes, 2)
        .map_err(|e| GeometryError::SelfIntersecting(format!("triangulation failed: {e:?}")))?;
    let mut triangles = Vec::with_capacity(flat.len() / 3);
    for t in flat.chunks_exact(3) {
        let tri = [t[0], t[1], t[2]];
        let a = signed_area(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
        if a < 0.0 {
            triangles.push([tri[0], tri[2], tri[1]]);
        } else {
            triangles.push(tri);
        }
    }
    let tri = FaceTriangulation { vertices, rings, triangles };
    let got = tri.area();
    if (got - expected).abs() > 1e-6 * expected {
        return Err(GeometryError::SelfIntersecting(format!(
            "triangulated area {got} differs from face area {expected}"
        )));
    }
    Ok(tri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Loop;

    #[test]
    fn unit_square() {
        let f = Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)));
        let t = triangulate_face(&f, 1e-3).unwrap();
        assert_eq!(t.triangles.len(), 2);
        assert!((t.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_with_square_hole() {
        let f = Face::new(Loop::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
            .with_hole(Loop::rect(Point2::new(0.25, 0.25), Point2::new(0.75, 0.75)));
        let t = triangulate_face(&f, 1e-3).unwrap();
        assert!((t.area() - 0.75).abs() < 1e-6 * 0.75);
        assert_eq!(t.rings.len(), 2);
    }

    #[test]
    fn disc_with_hole_area_matches_polygons() {
        let f = Face::new(Loop::circle(Point2::new(0.0, 0.0), 1.0))
            .with_hole(Loop::circle(Point2::new(0.2, 0.0), 0.3));
        let t = triangulate_face(&f, 1e-4).unwrap();
        let outer = signed_area(&t.vertices[t.rings[0].clone()]);
        let hole = signed_area(&t.vertices[t.rings[1].clone()]);
        assert!(outer > 0.0 && hole < 0.0);
        assert!((t.area() - (outer + hole)).abs() < 1e-9);
    }

    #[test]
    fn zero_area_face_is_rejected() {
        let flat = Loop::polygon(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]);
        let err = triangulate_face(&Face::new(flat), 1e-3).unwrap_err();
        assert!(matches!(err, GeometryError::Degenerate(_)), "{err:?}");
    }

    #[test]
    fn bowtie_is_rejected() {
        let bow = Loop::polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(matches!(
            triangulate_face(&Face::new(bow), 1e-3),
            Err(GeometryError::SelfIntersecting(_))
        ));
    }
}
