//! Synthetic CT cohorts: a soft-tissue block with one ellipsoidal tumor per
//! patient. Positive tumors carry stronger multiplicative speckle than
//! negative ones, so the class signal lives in texture rather than size,
//! shape or brightness.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::{write_manifest, ManifestRecord};
use crate::seed::{derive_seed, rng};
use crate::volume::{write_volume, CtVolume, Dims, Spacing};

pub const MIN_MARGIN_VOXELS: f64 = 5.0;
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomParams {
    pub n_patients: usize,
    pub n_positive: usize,
    /// (nz, ny, nx) voxels.
    pub dims: [usize; 3],
    /// (sz, sy, sx) millimeters.
    pub spacing: [f64; 3],
    /// Spacing the pipeline resamples to; used for the manifest.
    pub target_spacing: f64,
    /// Tumor semi-axis range in millimeters.
    pub radius_mm: [f64; 2],
    pub background_hu: f64,
    pub background_noise_hu: f64,
    /// Range of per-patient mean tumor intensity, independent of class.
    pub tumor_hu: [f64; 2],
    /// Speckle standard deviation, relative to the tumor mean, per class.
    pub heterogeneity_negative: f64,
    pub heterogeneity_positive: f64,
    /// Gaussian correlation length of the speckle field in millimeters;
    /// 0 gives independent per-voxel speckle.
    pub speckle_correlation_mm: f64,
    pub seed: u64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            n_patients: 24,
            n_positive: 4,
            dims: [48, 160, 160],
            spacing: [2.5, 1.0, 1.0],
            target_spacing: 1.0,
            radius_mm: [15.0, 35.0],
            background_hu: 40.0,
            background_noise_hu: 20.0,
            tumor_hu: [70.0, 90.0],
            heterogeneity_negative: 0.5,
            heterogeneity_positive: 1.0,
            speckle_correlation_mm: 1.0,
            seed: 0,
        }
    }
}

impl PhantomParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.n_positive > 0 && self.n_positive < self.n_patients) {
            return bad(format!(
                "need 0 < n_positive < n_patients, got {} of {}",
                self.n_positive, self.n_patients
            ));
        }
        if !(self.heterogeneity_negative >= 0.0 && self.heterogeneity_positive > self.heterogeneity_negative) {
            return bad("need heterogeneity_positive > heterogeneity_negative >= 0".into());
        }
        if self.dims.contains(&0) {
            return bad("phantom dims must be >= 1".into());
        }
        if !self.spacing.iter().chain([&self.target_spacing]).all(|&s| s > 0.0 && s.is_finite()) {
            return bad("phantom spacings must be > 0".into());
        }
        let [lo, hi] = self.radius_mm;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("bad radius range [{lo}, {hi}]"));
        }
        if self.tumor_hu[1] < self.tumor_hu[0] || self.background_noise_hu < 0.0 || !(self.speckle_correlation_mm >= 0.0) {
            return bad("bad intensity parameters".into());
        }
        for a in 0..3 {
            let extent = self.dims[a] as f64 * self.spacing[a];
            if 2.0 * (hi + MIN_MARGIN_VOXELS * self.spacing[a]) > extent {
                return bad(format!(
                    "tumors up to {hi} mm with a {MIN_MARGIN_VOXELS}-voxel margin do not fit axis {a} ({extent} mm)"
                ));
            }
        }
        Ok(())
    }
}

/// Ground truth for one generated patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomPatient {
    pub patient_id: String,
    pub label: u8,
    /// Physical tumor center (z, y, x) in millimeters from the volume corner.
    pub center_mm: [f64; 3],
    pub semi_axes_mm: [f64; 3],
    pub tumor_mean_hu: f64,
    pub heterogeneity: f64,
    pub seed: u64,
}

impl PhantomPatient {
    /// Voxel index of the center after resampling to `target`.
    pub fn resampled_center(&self, target: f64) -> [usize; 3] {
        self.center_mm.map(|c| (c / target).floor() as usize)
    }

    /// Resampled slices whose centers fall inside the tumor's z-extent.
    pub fn resampled_slice_count(&self, target: f64) -> usize {
        let lo = self.center_mm[0] - self.semi_axes_mm[0];
        let hi = self.center_mm[0] + self.semi_axes_mm[0];
        // slice j is centered at (j + 0.5) * target
        let first = (lo / target - 0.5).ceil().max(0.0) as i64;
        let last = (hi / target - 0.5).floor() as i64;
        (last - first + 1).max(1) as usize
    }

    pub fn contains_mm(&self, p: [f64; 3]) -> bool {
        (0..3).map(|a| ((p[a] - self.center_mm[a]) / self.semi_axes_mm[a]).powi(2)).sum::<f64>() <= 1.0
    }

    pub fn manifest_record(&self, volume: String, target: f64) -> ManifestRecord {
        let c = self.resampled_center(target);
        ManifestRecord {
            patient_id: self.patient_id.clone(),
            label: self.label,
            volume,
            center_z: c[0],
            center_y: c[1],
            center_x: c[2],
            slice_count: self.resampled_slice_count(target),
        }
    }
}

fn patient_id(i: usize) -> String {
    format!("P{i:03}")
}

/// Labels and geometry for every patient, without voxels.
pub fn plan_cohort(p: &PhantomParams) -> Result<Vec<PhantomPatient>> {
    p.validate()?;
    let mut order: Vec<usize> = (0..p.n_patients).collect();
    order.shuffle(&mut rng(derive_seed(p.seed, &[0])));
    let mut labels = vec![0u8; p.n_patients];
    for &i in &order[..p.n_positive] {
        labels[i] = 1;
    }
    Ok((0..p.n_patients)
        .map(|i| {
            let seed = derive_seed(p.seed, &[1, i as u64]);
            let mut r = rng(seed);
            let [lo, hi] = p.radius_mm;
            let base = r.random_range(lo..=hi);
            let semi_axes_mm = [0, 1, 2].map(|_| (base * r.random_range(0.85..=1.0)).max(lo));
            let center_mm = [0, 1, 2].map(|a| {
                let extent = p.dims[a] as f64 * p.spacing[a];
                let margin = semi_axes_mm[a] + MIN_MARGIN_VOXELS * p.spacing[a];
                r.random_range(margin..=extent - margin)
            });
            let label = labels[i];
            PhantomPatient {
                patient_id: patient_id(i),
                label,
                center_mm,
                semi_axes_mm,
                tumor_mean_hu: r.random_range(p.tumor_hu[0]..=p.tumor_hu[1]),
                heterogeneity: if label == 1 {
                    p.heterogeneity_positive
                } else {
                    p.heterogeneity_negative
                },
                seed,
            }
        })
        .collect())
}

/// Unit-variance stationary Gaussian field on a 1 mm grid covering a box,
/// made by blurring white noise with a separable Gaussian kernel.
struct SpeckleField {
    origin: [f64; 3],
    dims: [usize; 3],
    values: Vec<f64>,
}

const FIELD_STEP_MM: f64 = 1.0;

impl SpeckleField {
    fn new(lo: [f64; 3], hi: [f64; 3], sigma_mm: f64, r: &mut impl Rng) -> Self {
        let sigma = sigma_mm / FIELD_STEP_MM;
        let radius = (3.0 * sigma).ceil() as usize;
        // pad so the blur sees full support everywhere inside the box
        let origin = [0, 1, 2].map(|a| lo[a] - (radius + 1) as f64 * FIELD_STEP_MM);
        let dims = [0, 1, 2].map(|a| ((hi[a] - origin[a]) / FIELD_STEP_MM).ceil() as usize + radius + 2);
        let mut values: Vec<f64> = (0..dims[0] * dims[1] * dims[2]).map(|_| StandardNormal.sample(r)).collect();
        let kernel: Vec<f64> = (0..=2 * radius)
            .map(|i| (-((i as f64 - radius as f64).powi(2)) / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = kernel.iter().sum();
        let kernel: Vec<f64> = kernel.iter().map(|k| k / sum).collect();
        let gain = kernel.iter().map(|k| k * k).sum::<f64>().powf(1.5);
        let strides = [dims[1] * dims[2], dims[2], 1];
        for axis in 0..3 {
            let mut out = vec![0.0; values.len()];
            for (i, o) in out.iter_mut().enumerate() {
                let c = (i / strides[axis]) % dims[axis];
                let mut acc = 0.0;
                for (t, k) in kernel.iter().enumerate() {
                    let j = c as i64 + t as i64 - radius as i64;
                    let j = j.clamp(0, dims[axis] as i64 - 1) as usize;
                    acc += k * values[i - c * strides[axis] + j * strides[axis]];
                }
                *o = acc;
            }
            values = out;
        }
        values.iter_mut().for_each(|v| *v /= gain);
        SpeckleField { origin, dims, values }
    }

    /// Trilinear sample at a physical position inside the box.
    fn at(&self, p: [f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = ((p[a] - self.origin[a]) / FIELD_STEP_MM).clamp(0.0, (self.dims[a] - 2) as f64);
            base[a] = u.floor() as usize;
            frac[a] = u - base[a] as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..3 {
                let bit = (corner >> (2 - a)) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.dims[a] + base[a] + bit;
            }
            acc += w * self.values[idx];
        }
        acc
    }
}

/// Background `N(bg, noise)` per voxel; inside the tumor
/// `mean * (1 + h * g)` with `g` a unit-variance speckle field.
pub fn render_volume(p: &PhantomParams, patient: &PhantomPatient) -> Result<CtVolume> {
    let dims = Dims::new(p.dims[0], p.dims[1], p.dims[2]);
    let spacing = Spacing::new(p.spacing[0], p.spacing[1], p.spacing[2]);
    let mut r = rng(derive_seed(patient.seed, &[2]));
    let field = (p.speckle_correlation_mm > 0.0).then(|| {
        let lo = [0, 1, 2].map(|a| patient.center_mm[a] - patient.semi_axes_mm[a]);
        let hi = [0, 1, 2].map(|a| patient.center_mm[a] + patient.semi_axes_mm[a]);
        SpeckleField::new(lo, hi, p.speckle_correlation_mm, &mut rng(derive_seed(patient.seed, &[3])))
    });
    let mut vox = Vec::with_capacity(dims.len());
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let pos = [
                    (z as f64 + 0.5) * spacing.sz,
                    (y as f64 + 0.5) * spacing.sy,
                    (x as f64 + 0.5) * spacing.sx,
                ];
                let g: f64 = StandardNormal.sample(&mut r);
                let hu = if patient.contains_mm(pos) {
                    let speckle = field.as_ref().map_or(g, |f| f.at(pos));
                    patient.tumor_mean_hu * (1.0 + patient.heterogeneity * speckle)
                } else {
                    p.background_hu + p.background_noise_hu * g
                };
                vox.push(hu.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16);
            }
        }
    }
    CtVolume::new(dims, spacing, vox)
}

/// Writes `<id>.hdr`/`<id>.raw` per patient and the manifest, which is
/// written last through a temporary file.
pub fn generate_cohort(p: &PhantomParams, out_dir: &Path) -> Result<Vec<ManifestRecord>> {
    let patients = plan_cohort(p)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records = patients
        .par_iter()
        .map(|pt| {
            let vol = render_volume(p, pt)?;
            let name = format!("{}.hdr", pt.patient_id);
            write_volume(&vol, &out_dir.join(&name))?;
            Ok(pt.manifest_record(name, p.target_spacing))
        })
        .collect::<Result<Vec<_>>>()?;
    let tmp = out_dir.join(format!(".{MANIFEST_NAME}.tmp"));
    write_manifest(&tmp, &records)?;
    let dest = out_dir.join(MANIFEST_NAME);
    fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))?;
    Ok(records)
}
