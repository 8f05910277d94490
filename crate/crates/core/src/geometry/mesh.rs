use std::collections::HashMap;

use serde::Serialize;

use crate::model::{CADModel, Extrude, Sketch, Vec3};

use super::triangulate::triangulate_face;
use super::GeometryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshPart {
    Cap,
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TriTag {
    pub se: usize,
    pub part: MeshPart,
}

#[derive(Clone, Debug, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub tags: Vec<TriTag>,
}

impl TriMesh {
    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Unnormalized normal; its length is twice the triangle area.
    pub fn area_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(c - a)
    }

    /// Enclosed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                a.dot(b.cross(c))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Every undirected edge is used by exactly two triangles, once in each direction.
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    pub fn append(&mut self, other: TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend(other.vertices);
        self.triangles.extend(other.triangles.into_iter().map(|t| t.map(|i| i + base)));
        self.tags.extend(other.tags);
    }
}

/// Closed prism over every face of the sketch: a cap at each end and quad-split
/// side walls, wound so normals point out of the material.
pub fn extrude_mesh(
    sketch: &Sketch,
    extrude: &Extrude,
    chord_tol: f64,
) -> Result<TriMesh, GeometryError> {
    let mut mesh = TriMesh::default();
    let (lo, hi) = (-extrude.dist_neg, extrude.dist_pos);
    if !(hi - lo > 0.0) {
        return Err(GeometryError::Degenerate(format!("extrusion length {}", hi - lo)));
    }
    let cap = TriTag { se: 0, part: MeshPart::Cap };
    let wall = TriTag { se: 0, part: MeshPart::Wall };
    for face in &sketch.faces {
        let tri = triangulate_face(face, chord_tol)?;
        let n = tri.vertices.len() as u32;
        let bottom = mesh.vertices.len() as u32;
        let top = bottom + n;
        mesh.vertices.extend(tri.vertices.iter().map(|&p| sketch.to_world(p, lo)));
        mesh.vertices.extend(tri.vertices.iter().map(|&p| sketch.to_world(p, hi)));
        for t in &tri.triangles {
            let [a, b, c] = t.map(|i| i as u32);
            mesh.triangles.push([bottom + a, bottom + c, bottom + b]);
            mesh.triangles.push([top + a, top + b, top + c]);
            mesh.tags.extend([cap, cap]);
        }
        for ring in &tri.rings {
            let (s, e) = (ring.start as u32, ring.end as u32);
            for i in s..e {
                let j = if i + 1 == e { s } else { i + 1 };
                mesh.triangles.push([bottom + i, bottom + j, top + j]);
                mesh.triangles.push([bottom + i, top + j, top + i]);
                mesh.tags.extend([wall, wall]);
            }
        }
    }
    Ok(mesh)
}

/// Per-pair prisms of the whole model, concatenated without booleans.
/// Triangle tags carry the pair index.
pub fn model_mesh(model: &CADModel, chord_tol: f64) -> Result<TriMesh, GeometryError> {
    let mut out = TriMesh::default();
    for (k, pair) in model.pairs.iter().enumerate() {
        let mut m = extrude_mesh(&pair.sketch, &pair.extrude, chord_tol)?;
        for tag in &mut m.tags {
            tag.se = k;
        }
        out.append(m);
    }
    Ok(out)
}
