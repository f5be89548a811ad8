//! Shape descriptors of the cuboid ROI, in closed form.
//!
//! The mask is always the full axis-aligned cuboid, so mesh quantities are
//! exact box formulas. Axis lengths are `4 * sqrt(lambda)` where `lambda` is
//! the variance of a uniform distribution over the box edge, `L^2 / 12`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::radiomics::{Family, FamilyValues};
use crate::roi::CuboidMask;
use crate::volume::Spacing;

pub const NAMES: &[&str] = &[
    "Elongation",
    "Flatness",
    "LeastAxisLength",
    "MajorAxisLength",
    "Maximum2DDiameterColumn",
    "Maximum2DDiameterRow",
    "Maximum2DDiameterSlice",
    "Maximum3DDiameter",
    "MeshVolume",
    "MinorAxisLength",
    "Sphericity",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "VoxelVolume",
];

pub fn shape_features(mask: &CuboidMask, spacing: Spacing) -> Result<FamilyValues> {
    if mask.voxel_count() == 0 {
        return Err(Error::Empty("shape features need a non-empty mask".into()));
    }
    let d = mask.dims;
    // physical edge lengths along x, y, z
    let lx = d.nx as f64 * spacing.sx;
    let ly = d.ny as f64 * spacing.sy;
    let lz = d.nz as f64 * spacing.sz;

    let volume = lx * ly * lz;
    let voxel_volume = mask.voxel_count() as f64 * spacing.voxel_volume();
    let area = 2.0 * (lx * ly + ly * lz + lz * lx);
    let sphericity = (36.0 * PI * volume * volume).cbrt() / area;

    let axis = |l: f64| 4.0 * (l * l / 12.0).sqrt();
    let mut edges = [lx, ly, lz];
    edges.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (major, minor, least) = (axis(edges[0]), axis(edges[1]), axis(edges[2]));

    Ok(FamilyValues::from_pairs(
        Family::Shape,
        &[
            ("Elongation", minor / major),
            ("Flatness", least / major),
            ("LeastAxisLength", least),
            ("MajorAxisLength", major),
            // coronal plane (x, z)
            ("Maximum2DDiameterColumn", lx.hypot(lz)),
            // sagittal plane (y, z)
            ("Maximum2DDiameterRow", ly.hypot(lz)),
            // axial plane (x, y)
            ("Maximum2DDiameterSlice", lx.hypot(ly)),
            ("Maximum3DDiameter", (lx * lx + ly * ly + lz * lz).sqrt()),
            ("MeshVolume", volume),
            ("MinorAxisLength", minor),
            ("Sphericity", sphericity),
            ("SurfaceArea", area),
            ("SurfaceVolumeRatio", area / volume),
            ("VoxelVolume", voxel_volume),
        ],
    ))
}
