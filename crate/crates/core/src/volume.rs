//! CT volume storage, Hounsfield-unit windowing and isotropic resampling.
//!
//! Volumes live on disk as a small UTF-8 header plus a raw little-endian
//! voxel file:
//!
//! ```text
//! dims = 40 208 208
//! spacing = 2.5 0.75 0.75
//! dtype = int16-le
//! data = patient_000.raw
//! ```
//!
//! Voxels are stored z-major, then y, with x varying fastest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel counts along (z, y, x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub nz: usize,
    pub ny: usize,
    pub nx: usize,
}

impl Dims {
    pub fn new(nz: usize, ny: usize, nx: usize) -> Self {
        Dims { nz, ny, nx }
    }

    pub fn len(&self) -> usize {
        self.nz * self.ny * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nz, self.ny, self.nx]
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    /// Flat index of a signed coordinate, or `None` when out of bounds.
    #[inline]
    pub fn checked_index(&self, z: i64, y: i64, x: i64) -> Option<usize> {
        if z < 0 || y < 0 || x < 0 {
            return None;
        }
        let (z, y, x) = (z as usize, y as usize, x as usize);
        if z >= self.nz || y >= self.ny || x >= self.nx {
            return None;
        }
        Some(self.index(z, y, x))
    }
}

/// Millimeters per voxel along (z, y, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub sz: f64,
    pub sy: f64,
    pub sx: f64,
}

impl Spacing {
    pub fn new(sz: f64, sy: f64, sx: f64) -> Self {
        Spacing { sz, sy, sx }
    }

    pub fn isotropic(s: f64) -> Self {
        Spacing::new(s, s, s)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sz, self.sy, self.sx]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.sz * self.sy * self.sx
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.sz, self.sy, self.sx]
            .iter()
            .all(|s| s.is_finite() && *s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::NonPositiveSpacing(self.sz, self.sy, self.sx))
        }
    }
}

/// Element types that can be stored in the raw volume format.
pub trait Voxel: Copy + Send + Sync + Default + PartialEq + std::fmt::Debug {
    const DTYPE: &'static str;
    const BYTES: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Voxel for i16 {
    const DTYPE: &'static str = "int16-le";
    const BYTES: usize = 2;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        i16::from_le_bytes([bytes[0], bytes[1]])
    }
}

impl Voxel for u8 {
    const DTYPE: &'static str = "uint8";
    const BYTES: usize = 1;
    fn write_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }
    fn read_le(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

/// Dense 3D voxel grid with physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: Dims,
    spacing: Spacing,
    voxels: Vec<T>,
}

/// Signed intensities in Hounsfield Units.
pub type CtVolume = Volume<i16>;
/// Gray levels in 0..=255.
pub type GrayVolume = Volume<u8>;

impl<T: Voxel> Volume<T> {
    pub fn new(dims: Dims, spacing: Spacing, voxels: Vec<T>) -> Result<Self> {
        if dims.nz == 0 || dims.ny == 0 || dims.nx == 0 {
            return Err(Error::InvalidDims(format!(
                "all dims must be >= 1, got ({}, {}, {})",
                dims.nz, dims.ny, dims.nx
            )));
        }
        spacing.validate()?;
        if voxels.len() != dims.len() {
            return Err(Error::InvalidDims(format!(
                "voxel count {} does not match dims product {}",
                voxels.len(),
                dims.len()
            )));
        }
        Ok(Volume {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: T) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims.len()])
    }

    pub fn from_fn(dims: Dims, spacing: Spacing, f: impl Fn(usize, usize, usize) -> T) -> Result<Self> {
        let mut voxels = Vec::with_capacity(dims.len());
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    voxels.push(f(z, y, x));
                }
            }
        }
        Self::new(dims, spacing, voxels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn voxels(&self) -> &[T] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<T> {
        self.voxels
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> T {
        self.voxels[self.dims.index(z, y, x)]
    }

    /// One z-slice as a contiguous row-major `ny * nx` buffer.
    pub fn slice(&self, z: usize) -> &[T] {
        let plane = self.dims.ny * self.dims.nx;
        &self.voxels[z * plane..(z + 1) * plane]
    }

    /// Copy of a single z-slice as a one-slice volume.
    pub fn slice_volume(&self, z: usize) -> Volume<T> {
        Volume {
            dims: Dims::new(1, self.dims.ny, self.dims.nx),
            spacing: self.spacing,
            voxels: self.slice(z).to_vec(),
        }
    }

    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U + Sync) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            voxels: self.voxels.par_iter().map(|&v| f(v)).collect(),
        }
    }

    fn raw_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.voxels.len() * T::BYTES);
        for &v in &self.voxels {
            v.write_le(&mut out);
        }
        out
    }
}

/// Linear Hounsfield-unit to gray-level window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Window {
    pub center: f64,
    pub width: f64,
}

impl Default for Window {
    /// Abdominal soft-tissue window.
    fn default() -> Self {
        Window {
            center: 40.0,
            width: 400.0,
        }
    }
}

impl Window {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        let w = Window { center, width };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window width must be > 0, got {}",
                self.width
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, hu: f64) -> u8 {
        let lo = self.center - self.width / 2.0;
        let t = ((hu - lo) / self.width).clamp(0.0, 1.0);
        (t * 255.0).round() as u8
    }
}

pub fn hu_to_gray(vol: &CtVolume, window: Window) -> Result<GrayVolume> {
    window.validate()?;
    Ok(vol.map(|hu| window.apply(hu as f64)))
}

/// Per-axis interpolation taps: (lower index, upper index, upper weight).
fn axis_taps(n_in: usize, s_in: f64, n_out: usize, s_out: f64) -> Vec<(usize, usize, f64)> {
    let ratio = s_out / s_in;
    let last = (n_in - 1) as f64;
    (0..n_out)
        .map(|j| {
            // voxel centers are aligned so the physical extents coincide
            let pos = ((j as f64 + 0.5) * ratio - 0.5).clamp(0.0, last);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

/// Output voxel count along one axis when resampling to `target` mm.
pub fn resampled_len(n: usize, spacing: f64, target: f64) -> usize {
    ((n as f64 * spacing / target).round() as usize).max(1)
}

/// Trilinear resampling to `target` mm on every axis, with edge clamping.
pub fn resample_isotropic(vol: &CtVolume, target: f64) -> Result<CtVolume> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "resampling target must be > 0, got {target}"
        )));
    }
    let d = vol.dims;
    let s = vol.spacing;
    let out = Dims::new(
        resampled_len(d.nz, s.sz, target),
        resampled_len(d.ny, s.sy, target),
        resampled_len(d.nx, s.sx, target),
    );
    let tz = axis_taps(d.nz, s.sz, out.nz, target);
    let ty = axis_taps(d.ny, s.sy, out.ny, target);
    let tx = axis_taps(d.nx, s.sx, out.nx, target);
    let src = &vol.voxels;
    let plane = out.ny * out.nx;

    let mut voxels = vec![0i16; out.len()];
    voxels
        .par_chunks_mut(plane)
        .zip(tz.par_iter())
        .for_each(|(dst, &(z0, z1, wz))| {
            for (yi, &(y0, y1, wy)) in ty.iter().enumerate() {
                for (xi, &(x0, x1, wx)) in tx.iter().enumerate() {
                    let at = |z: usize, y: usize, x: usize| src[d.index(z, y, x)] as f64;
                    let lerp = |a: f64, b: f64, w: f64| if w == 0.0 { a } else { a + (b - a) * w };
                    let c00 = lerp(at(z0, y0, x0), at(z0, y0, x1), wx);
                    let c01 = lerp(at(z0, y1, x0), at(z0, y1, x1), wx);
                    let c10 = lerp(at(z1, y0, x0), at(z1, y0, x1), wx);
                    let c11 = lerp(at(z1, y1, x0), at(z1, y1, x1), wx);
                    let c0 = lerp(c00, c01, wy);
                    let c1 = lerp(c10, c11, wy);
                    let v = lerp(c0, c1, wz);
                    dst[yi * out.nx + xi] = v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
                }
            }
        });
    Volume::new(out, Spacing::isotropic(target), voxels)
}

/// Writes the header to `header_path` and the raw voxels next to it.
pub fn write_volume<T: Voxel>(vol: &Volume<T>, header_path: &Path) -> Result<()> {
    let raw_name = raw_name_for(header_path);
    let raw_path = header_path.with_file_name(&raw_name);
    let d = vol.dims;
    let s = vol.spacing;
    let mut header = String::new();
    writeln!(header, "dims = {} {} {}", d.nz, d.ny, d.nx).unwrap();
    writeln!(header, "spacing = {} {} {}", s.sz, s.sy, s.sx).unwrap();
    writeln!(header, "dtype = {}", T::DTYPE).unwrap();
    writeln!(header, "data = {raw_name}").unwrap();
    fs::write(&raw_path, vol.raw_bytes()).map_err(|e| Error::io(&raw_path, e))?;
    fs::write(header_path, header).map_err(|e| Error::io(header_path, e))?;
    Ok(())
}

fn raw_name_for(header_path: &Path) -> String {
    let stem = header_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".to_string());
    format!("{stem}.raw")
}

struct Header {
    dims: Dims,
    spacing: Spacing,
    dtype: String,
    data: PathBuf,
}

fn parse_header(path: &Path) -> Result<Header> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let (mut dims, mut spacing, mut dtype, mut data) = (None, None, None, None);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", lineno + 1)))?;
        let value = value.trim();
        match key.trim() {
            "dims" => {
                let v = parse_triple::<usize>(value).ok_or_else(|| bad(format!("bad dims `{value}`")))?;
                dims = Some(Dims::new(v[0], v[1], v[2]));
            }
            "spacing" => {
                let v = parse_triple::<f64>(value).ok_or_else(|| bad(format!("bad spacing `{value}`")))?;
                spacing = Some(Spacing::new(v[0], v[1], v[2]));
            }
            "dtype" => dtype = Some(value.to_string()),
            "data" => data = Some(value.to_string()),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let dims = dims.ok_or_else(|| bad("missing `dims`".into()))?;
    let spacing = spacing.ok_or_else(|| bad("missing `spacing`".into()))?;
    let dtype = dtype.ok_or_else(|| bad("missing `dtype`".into()))?;
    let data = data.ok_or_else(|| bad("missing `data`".into()))?;
    if dims.nz == 0 || dims.ny == 0 || dims.nx == 0 {
        return Err(bad(format!("dims must be >= 1, got `{} {} {}`", dims.nz, dims.ny, dims.nx)));
    }
    spacing.validate()?;
    let data = path.parent().unwrap_or_else(|| Path::new(".")).join(data);
    Ok(Header {
        dims,
        spacing,
        dtype,
        data,
    })
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> Option<[T; 3]> {
    let mut it = s.split_whitespace().map(|t| t.parse::<T>());
    let a = it.next()?.ok()?;
    let b = it.next()?.ok()?;
    let c = it.next()?.ok()?;
    if it.next().is_some() {
        return None;
    }
    Some([a, b, c])
}

/// Reads a volume whose header declares element type `T`.
pub fn read_volume_as<T: Voxel>(path: &Path) -> Result<Volume<T>> {
    let header = parse_header(path)?;
    if header.dtype != T::DTYPE {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("dtype `{}`, expected `{}`", header.dtype, T::DTYPE),
        });
    }
    if !header.data.exists() {
        return Err(Error::MissingFile(header.data));
    }
    let bytes = fs::read(&header.data).map_err(|e| Error::io(&header.data, e))?;
    let expected = header.dims.len() * T::BYTES;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let voxels = bytes.chunks_exact(T::BYTES).map(T::read_le).collect();
    Volume::new(header.dims, header.spacing, voxels)
}

pub fn read_volume(path: &Path) -> Result<CtVolume> {
    read_volume_as::<i16>(path)
}
