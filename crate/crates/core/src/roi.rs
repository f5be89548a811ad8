//! Fixed-size ROI cropping around an annotated tumor center, and gray to
//! three-channel slice synthesis.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, GrayVolume, Volume};

pub const CROP_SIZE: usize = 128;

/// Center-point annotation: tumor center voxel in the resampled volume and
/// the number of tumor slices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub patient_id: String,
    /// 1 when the genotype marker is present.
    pub label: u8,
    /// (z, y, x) voxel index.
    pub center: [usize; 3],
    pub slice_count: usize,
}

/// Cuboid occupancy mask. Every voxel of the ROI belongs to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuboidMask {
    pub dims: Dims,
}

impl CuboidMask {
    pub fn voxel_count(&self) -> usize {
        self.dims.len()
    }

    pub fn contains(&self, z: usize, y: usize, x: usize) -> bool {
        z < self.dims.nz && y < self.dims.ny && x < self.dims.nx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiStack {
    pub patient_id: String,
    pub label: u8,
    /// `slice_count` slices of `size x size` gray levels.
    pub image: GrayVolume,
    pub mask: CuboidMask,
}

impl RoiStack {
    pub fn slice_count(&self) -> usize {
        self.image.dims().nz
    }

    pub fn slice(&self, i: usize) -> &[u8] {
        self.image.slice(i)
    }

    pub fn size(&self) -> usize {
        self.image.dims().nx
    }
}

/// First z-index of an `s`-slice window centered on `cz`. Even counts take
/// `s/2` slices below the center and `s/2 - 1` above it.
fn first_slice(cz: usize, s: usize) -> i64 {
    cz as i64 - (s / 2) as i64
}

pub fn crop_roi(vol: &GrayVolume, ann: &Annotation) -> Result<RoiStack> {
    crop_roi_sized(vol, ann, CROP_SIZE)
}

pub fn crop_roi_sized(vol: &GrayVolume, ann: &Annotation, size: usize) -> Result<RoiStack> {
    let d = vol.dims();
    let [cz, cy, cx] = ann.center;
    if cz >= d.nz || cy >= d.ny || cx >= d.nx {
        return Err(Error::CenterOutOfBounds {
            z: cz as i64,
            y: cy as i64,
            x: cx as i64,
            nz: d.nz,
            ny: d.ny,
            nx: d.nx,
        });
    }
    if ann.slice_count == 0 {
        return Err(Error::InvalidParameter("slice_count must be >= 1".into()));
    }
    if ann.slice_count > d.nz {
        return Err(Error::SliceCountExceedsVolume {
            requested: ann.slice_count,
            available: d.nz,
        });
    }
    if size == 0 {
        return Err(Error::InvalidParameter("crop size must be >= 1".into()));
    }
    let s = ann.slice_count;
    let z0 = first_slice(cz, s);
    let y0 = cy as i64 - (size / 2) as i64;
    let x0 = cx as i64 - (size / 2) as i64;
    let out = Dims::new(s, size, size);
    let src = vol.voxels();
    let image = Volume::from_fn(out, vol.spacing(), |z, y, x| {
        d.checked_index(z0 + z as i64, y0 + y as i64, x0 + x as i64)
            .map(|i| src[i])
            .unwrap_or(0)
    })?;
    Ok(RoiStack {
        patient_id: ann.patient_id.clone(),
        label: ann.label,
        image,
        mask: CuboidMask { dims: out },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Single gray channel.
    Gray,
    /// Slice copied into three identical channels.
    Replicate,
    /// Slices (i-1, i, i+1), clamped at the stack ends.
    Adjacent,
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray" => Ok(ChannelMode::Gray),
            "replicate" => Ok(ChannelMode::Replicate),
            "adjacent" => Ok(ChannelMode::Adjacent),
            other => Err(Error::InvalidParameter(format!("unknown channel mode `{other}`"))),
        }
    }
}

impl ChannelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelMode::Gray => "gray",
            ChannelMode::Replicate => "replicate",
            ChannelMode::Adjacent => "adjacent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImage {
    /// One or three planes, each `height * width` row-major.
    pub channels: Vec<Vec<u8>>,
    pub height: usize,
    pub width: usize,
    pub source_slice: usize,
    pub mode: ChannelMode,
}

pub fn synth_channels(stack: &RoiStack, i: usize, mode: ChannelMode) -> Result<ChannelImage> {
    let s = stack.slice_count();
    if i >= s {
        return Err(Error::IndexOutOfRange { index: i, len: s });
    }
    let channels = match mode {
        ChannelMode::Gray => vec![stack.slice(i).to_vec()],
        ChannelMode::Replicate => vec![stack.slice(i).to_vec(); 3],
        ChannelMode::Adjacent => [i.saturating_sub(1), i, (i + 1).min(s - 1)]
            .iter()
            .map(|&k| stack.slice(k).to_vec())
            .collect(),
    };
    let d = stack.image.dims();
    Ok(ChannelImage {
        channels,
        height: d.ny,
        width: d.nx,
        source_slice: i,
        mode,
    })
}

/// Sidecar describing an exported channel tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSidecar {
    pub patient_id: String,
    pub label: u8,
    pub source_slice: usize,
    pub mode: ChannelMode,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub dtype: String,
    pub layout: String,
    pub data: String,
}

/// Writes `<stem>.raw` (channel-major u8) and `<stem>.json` into `dir`.
pub fn export_channel_image(
    img: &ChannelImage,
    patient_id: &str,
    label: u8,
    dir: &Path,
) -> Result<PathBuf> {
    let stem = format!("{patient_id}_s{:03}_{}", img.source_slice, img.mode.as_str());
    let raw = dir.join(format!("{stem}.raw"));
    let side = dir.join(format!("{stem}.json"));
    let bytes: Vec<u8> = img.channels.iter().flatten().copied().collect();
    fs::write(&raw, bytes).map_err(|e| Error::io(&raw, e))?;
    let sidecar = ChannelSidecar {
        patient_id: patient_id.to_string(),
        label,
        source_slice: img.source_slice,
        mode: img.mode,
        channels: img.channels.len(),
        height: img.height,
        width: img.width,
        dtype: "uint8".into(),
        layout: "CHW".into(),
        data: format!("{stem}.raw"),
    };
    let text = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))?;
    Ok(side)
}

/// One row of the cohort manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub patient_id: String,
    pub label: u8,
    /// Volume header path, relative to the manifest's directory.
    pub volume: String,
    pub center_z: usize,
    pub center_y: usize,
    pub center_x: usize,
    pub slice_count: usize,
}

impl ManifestRecord {
    pub fn annotation(&self) -> Annotation {
        Annotation {
            patient_id: self.patient_id.clone(),
            label: self.label,
            center: [self.center_z, self.center_y, self.center_x],
            slice_count: self.slice_count,
        }
    }
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let rec: ManifestRecord = rec?;
        if rec.label > 1 {
            return Err(Error::InvalidParameter(format!(
                "patient {}: label must be 0 or 1, got {}",
                rec.patient_id, rec.label
            )));
        }
        if rec.slice_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "patient {}: slice_count must be >= 1",
                rec.patient_id
            )));
        }
        out.push(rec);
    }
    Ok(out)
}
