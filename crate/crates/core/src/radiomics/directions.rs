//! The 13 unique 3D neighbor offsets. Each offset stands for itself and its
//! negation, so symmetric matrices built over this set cover all 26
//! neighbors.

use crate::volume::Dims;

/// (dz, dy, dx). The first four lie in the axial plane.
pub const OFFSETS: [[i64; 3]; 13] = [
    [0, 0, 1],
    [0, 1, 0],
    [0, 1, 1],
    [0, 1, -1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 0, -1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// Offsets scaled by `step` that connect at least one in-bounds voxel pair.
/// Single-slice stacks therefore keep only the in-plane offsets.
pub fn active(dims: Dims, step: usize) -> Vec<[i64; 3]> {
    let extent = dims.as_array();
    let step = step as i64;
    OFFSETS
        .iter()
        .filter(|o| {
            o.iter()
                .zip(extent.iter())
                .all(|(&c, &n)| c == 0 || (n as i64) > c.abs() * step)
        })
        .map(|o| [o[0] * step, o[1] * step, o[2] * step])
        .collect()
}

/// Calls `f` with the flat index of every voxel within Chebyshev distance
/// `r` of (z, y, x), excluding the voxel itself and anything out of bounds.
#[inline]
pub fn for_each_neighbor(dims: Dims, z: usize, y: usize, x: usize, r: usize, mut f: impl FnMut(usize)) {
    let range = |c: usize, n: usize| c.saturating_sub(r)..=(c + r).min(n - 1);
    for zz in range(z, dims.nz) {
        for yy in range(y, dims.ny) {
            let row = (zz * dims.ny + yy) * dims.nx;
            for xx in range(x, dims.nx) {
                if (zz, yy, xx) != (z, y, x) {
                    f(row + xx);
                }
            }
        }
    }
}
