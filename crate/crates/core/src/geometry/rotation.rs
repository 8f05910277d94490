use serde::{Deserialize, Serialize};

use crate::model::{CADModel, Vec3};

/// One of the 24 proper rotations that map coordinate axes onto coordinate axes.
///
/// Component `i` of the rotated vector is `±v[perm[i]]`, negated when `neg[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxisRotation {
    pub perm: [usize; 3],
    pub neg: [bool; 3],
}

impl AxisRotation {
    pub const IDENTITY: AxisRotation = AxisRotation { perm: [0, 1, 2], neg: [false; 3] };

    /// All 24 rotations, identity first, in a fixed order.
    pub fn all() -> Vec<AxisRotation> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(24);
        for perm in PERMS {
            for bits in 0..8u8 {
                let neg = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
                let r = AxisRotation { perm, neg };
                if r.determinant() == 1 {
                    out.push(r);
                }
            }
        }
        out
    }

    pub fn matrix(&self) -> [[i32; 3]; 3] {
        let mut m = [[0; 3]; 3];
        for i in 0..3 {
            m[i][self.perm[i]] = if self.neg[i] { -1 } else { 1 };
        }
        m
    }

    pub fn determinant(&self) -> i32 {
        let m = self.matrix();
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let a = v.to_array();
        let c = |i: usize| if self.neg[i] { -a[self.perm[i]] } else { a[self.perm[i]] };
        Vec3::new(c(0), c(1), c(2))
    }

    pub fn inverse(&self) -> AxisRotation {
        let mut perm = [0; 3];
        let mut neg = [false; 3];
        for i in 0..3 {
            perm[self.perm[i]] = i;
            neg[self.perm[i]] = self.neg[i];
        }
        AxisRotation { perm, neg }
    }

    /// Where cell `idx` of a cubic grid of side `n` centered on the rotation
    /// center lands after rotation.
    #[inline]
    pub fn map_index(&self, idx: [usize; 3], n: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for i in 0..3 {
            let s = idx[self.perm[i]];
            out[i] = if self.neg[i] { n - 1 - s } else { s };
        }
        out
    }
}

impl CADModel {
    /// The model rotated about the world origin.
    pub fn rotated(&self, r: &AxisRotation) -> CADModel {
        let mut m = self.clone();
        for p in &mut m.pairs {
            p.sketch.origin = r.apply(p.sketch.origin);
            p.sketch.x_axis = r.apply(p.sketch.x_axis);
            p.sketch.normal = r.apply(p.sketch.normal);
        }
        m
    }
}
