//! Mesh and voxel file formats.
//!
//! OBJ: one `o se_<k>_<op>` object per sketch-extrude pair, in model order.
//! Each object lists its vertices (bottom ring then top ring per face) followed
//! by its triangles as 1-based global indices, counter-clockwise seen from
//! outside the prism. No boolean is applied.
//!
//! Voxel RLE (all little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `RCVX` |
//! | 4     | version `u32` = 1 |
//! | 12    | dims `u32 x 3` (x, y, z) |
//! | 24    | origin (minimum corner) `f64 x 3` |
//! | 8     | cell size `f64` |
//! | 4     | run count `u32` |
//! | 4 * n | run lengths `u32`, alternating empty/occupied, starting with empty |
//!
//! Cells are ordered with x fastest, then y, then z.

use std::fmt::Write as _;

use crate::model::{CADModel, Vec3};

use super::mesh::extrude_mesh;
use super::voxel::VoxelGrid;
use super::GeometryError;

pub const VOXEL_MAGIC: &[u8; 4] = b"RCVX";
pub const VOXEL_VERSION: u32 = 1;

pub fn model_to_obj(model: &CADModel, chord_tol: f64) -> Result<String, GeometryError> {
    let mut out = String::from("# recad sketch-extrude prisms\n");
    let mut base = 0usize;
    for (k, pair) in model.pairs.iter().enumerate() {
        let mesh = extrude_mesh(&pair.sketch, &pair.extrude, chord_tol)?;
        let _ = writeln!(out, "o se_{k}_{}", pair.op.as_str());
        for v in &mesh.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &mesh.triangles {
            let _ = writeln!(out, "f {} {} {}", base + t[0] as usize + 1, base + t[1] as usize + 1, base + t[2] as usize + 1);
        }
        base += mesh.vertices.len();
    }
    Ok(out)
}

pub fn encode_voxels(grid: &VoxelGrid) -> Vec<u8> {
    let mut runs: Vec<u32> = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for idx in 0..grid.len() {
        let v = grid.get_index(idx);
        if v != current {
            runs.push(len);
            current = v;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);

    let mut out = Vec::with_capacity(56 + 4 * runs.len());
    out.extend_from_slice(VOXEL_MAGIC);
    out.extend_from_slice(&VOXEL_VERSION.to_le_bytes());
    for d in grid.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for c in grid.origin().to_array() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&grid.cell.to_le_bytes());
    out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
    for r in runs {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

pub fn decode_voxels(bytes: &[u8]) -> Result<VoxelGrid, GeometryError> {
    let bad = |m: &str| GeometryError::Invalid(format!("voxel file: {m}"));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], GeometryError> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != VOXEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
    if u32_at(take(4)?) != VOXEL_VERSION {
        return Err(bad("unsupported version"));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u32_at(take(4)?) as usize;
    }
    let mut origin = [0.0; 3];
    for o in &mut origin {
        *o = f64_at(take(8)?);
    }
    let cell = f64_at(take(8)?);
    let nruns = u32_at(take(4)?) as usize;
    let h = cell * 0.5;
    let center = Vec3::new(
        origin[0] + dims[0] as f64 * h,
        origin[1] + dims[1] as f64 * h,
        origin[2] + dims[2] as f64 * h,
    );
    let mut grid = VoxelGrid::empty(center, cell, dims);
    let mut idx = 0usize;
    for r in 0..nruns {
        let len = u32_at(take(4)?) as usize;
        if idx + len > grid.len() {
            return Err(bad("runs overflow grid"));
        }
        if r % 2 == 1 {
            for i in idx..idx + len {
                grid.set_index(i, true);
            }
        }
        idx += len;
    }
    if idx != grid.len() {
        return Err(bad("runs do not cover grid"));
    }
    Ok(grid)
}
