//! Slice augmentation (rotation, flipping, noise injection, gamma) and
//! minority-class balancing of a training split.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::RoiStack;
use crate::seed::{derive_seed, hash_str, rng};

pub const SMALL_ANGLE_LIMIT: f64 = 15.0;
pub const GAMMA_RANGE: (f64, f64) = (0.7, 1.5);

/// Square gray image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceImage {
    pub size: usize,
    pub pixels: Vec<u8>,
}

impl SliceImage {
    pub fn new(size: usize, pixels: Vec<u8>) -> Result<Self> {
        if size == 0 || pixels.len() != size * size {
            return Err(Error::InvalidDims(format!(
                "expected {size}x{size} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(SliceImage { size, pixels })
    }

    #[inline]
    fn at(&self, y: usize, x: usize) -> u8 {
        self.pixels[y * self.size + x]
    }

    fn from_fn(size: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                pixels.push(f(y, x));
            }
        }
        SliceImage { size, pixels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipAxis {
    /// Mirror rows (top-bottom).
    Vertical,
    /// Mirror columns (left-right).
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Transform {
    Rotate { degrees: f64 },
    Flip { axis: FlipAxis },
    Noise { sigma: f64 },
    Gamma { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Rotate,
    Flip,
    Noise,
    Gamma,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [
        TransformKind::Rotate,
        TransformKind::Flip,
        TransformKind::Noise,
        TransformKind::Gamma,
    ];
}

fn right_angle_turns(degrees: f64) -> Option<u32> {
    for (turns, a) in [(1, 90.0), (2, 180.0), (3, 270.0)] {
        if degrees == a {
            return Some(turns);
        }
    }
    None
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Transform::Rotate { degrees } => {
                right_angle_turns(degrees).is_some()
                    || (-SMALL_ANGLE_LIMIT..=SMALL_ANGLE_LIMIT).contains(&degrees)
            }
            Transform::Flip { .. } => true,
            Transform::Noise { sigma } => sigma >= 0.0 && sigma.is_finite(),
            Transform::Gamma { gamma } => (GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&gamma),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("transform out of range: {self:?}")))
        }
    }

    pub fn kind(&self) -> TransformKind {
        match self {
            Transform::Rotate { .. } => TransformKind::Rotate,
            Transform::Flip { .. } => TransformKind::Flip,
            Transform::Noise { .. } => TransformKind::Noise,
            Transform::Gamma { .. } => TransformKind::Gamma,
        }
    }

    /// Draws random parameters for `kind`.
    pub fn sample<R: Rng>(kind: TransformKind, noise_sigma: f64, rng: &mut R) -> Transform {
        match kind {
            TransformKind::Rotate => {
                let degrees = if rng.random_bool(0.5) {
                    [90.0, 180.0, 270.0][rng.random_range(0..3)]
                } else {
                    rng.random_range(-SMALL_ANGLE_LIMIT..=SMALL_ANGLE_LIMIT)
                };
                Transform::Rotate { degrees }
            }
            TransformKind::Flip => Transform::Flip {
                axis: if rng.random_bool(0.5) {
                    FlipAxis::Vertical
                } else {
                    FlipAxis::Horizontal
                },
            },
            TransformKind::Noise => Transform::Noise { sigma: noise_sigma },
            TransformKind::Gamma => Transform::Gamma {
                gamma: rng.random_range(GAMMA_RANGE.0..=GAMMA_RANGE.1),
            },
        }
    }
}

/// Applies one transform. `seed` drives the noise draw; other kinds ignore it.
pub fn apply_transform(img: &SliceImage, t: &Transform, seed: u64) -> Result<SliceImage> {
    t.validate()?;
    let n = img.size;
    Ok(match *t {
        Transform::Rotate { degrees } => match right_angle_turns(degrees) {
            Some(turns) => (0..turns).fold(img.clone(), |acc, _| rotate90(&acc)),
            None => rotate_bilinear(img, degrees),
        },
        Transform::Flip { axis } => SliceImage::from_fn(n, |y, x| match axis {
            FlipAxis::Vertical => img.at(n - 1 - y, x),
            FlipAxis::Horizontal => img.at(y, n - 1 - x),
        }),
        Transform::Noise { sigma } => {
            if sigma == 0.0 {
                img.clone()
            } else {
                let normal = Normal::new(0.0, sigma).expect("sigma validated");
                let mut r = rng(seed);
                let pixels = img
                    .pixels
                    .iter()
                    .map(|&v| (v as f64 + normal.sample(&mut r)).round().clamp(0.0, 255.0) as u8)
                    .collect();
                SliceImage { size: n, pixels }
            }
        }
        Transform::Gamma { gamma } => {
            let lut: Vec<u8> = (0..256)
                .map(|v| (255.0 * (v as f64 / 255.0).powf(gamma)).round() as u8)
                .collect();
            SliceImage {
                size: n,
                pixels: img.pixels.iter().map(|&v| lut[v as usize]).collect(),
            }
        }
    })
}

/// Quarter turn counter-clockwise.
fn rotate90(img: &SliceImage) -> SliceImage {
    let n = img.size;
    SliceImage::from_fn(n, |y, x| img.at(x, n - 1 - y))
}

fn rotate_bilinear(img: &SliceImage, degrees: f64) -> SliceImage {
    let n = img.size;
    let c = (n as f64 - 1.0) / 2.0;
    let (s, co) = degrees.to_radians().sin_cos();
    let last = (n - 1) as f64;
    SliceImage::from_fn(n, |y, x| {
        let (dy, dx) = (y as f64 - c, x as f64 - c);
        // inverse rotation of the output coordinate
        let sx = co * dx - s * dy + c;
        let sy = s * dx + co * dy + c;
        if !(0.0..=last).contains(&sx) || !(0.0..=last).contains(&sy) {
            return 0;
        }
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(n - 1), (y0 + 1).min(n - 1));
        let (wx, wy) = (sx - x0 as f64, sy - y0 as f64);
        let p = |yy, xx| img.at(yy, xx) as f64;
        let top = p(y0, x0) * (1.0 - wx) + p(y0, x1) * wx;
        let bot = p(y1, x0) * (1.0 - wx) + p(y1, x1) * wx;
        (top * (1.0 - wy) + bot * wy).round().clamp(0.0, 255.0) as u8
    })
}

/// Where an augmented slice came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub patient_id: String,
    pub source_slice: usize,
    pub chain: Vec<Transform>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSlice {
    pub patient_id: String,
    pub label: u8,
    pub slice_index: usize,
    pub image: SliceImage,
    /// `None` for untouched originals.
    pub provenance: Option<Provenance>,
}

impl LabeledSlice {
    /// One original slice per z-slice of the stack.
    pub fn from_stack(stack: &RoiStack) -> Vec<LabeledSlice> {
        let n = stack.size();
        (0..stack.slice_count())
            .map(|i| LabeledSlice {
                patient_id: stack.patient_id.clone(),
                label: stack.label,
                slice_index: i,
                image: SliceImage {
                    size: n,
                    pixels: stack.slice(i).to_vec(),
                },
                provenance: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub seed: u64,
    /// Minimum minority/majority slice ratio after balancing.
    pub target_ratio: f64,
    pub noise_sigma: f64,
    /// Give every majority slice one random transform in place.
    pub transform_majority: bool,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            seed: 0,
            target_ratio: 1.0,
            noise_sigma: 5.0,
            transform_majority: true,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target ratio must be in (0, 1], got {}",
                self.target_ratio
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter("noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

const MAJORITY_STREAM: u64 = 1;
const MINORITY_STREAM: u64 = 2;
const MAX_ROUNDS: usize = 100_000;

struct Job {
    /// Index into the input slice set.
    source: usize,
    transform: Transform,
    seed: u64,
}

fn plan_job(policy: &AugmentPolicy, source: usize, kind: TransformKind, path: &[u64]) -> Job {
    let seed = derive_seed(policy.seed, path);
    let mut r = rng(seed);
    Job {
        source,
        transform: Transform::sample(kind, policy.noise_sigma, &mut r),
        seed,
    }
}

fn run_job(input: &[LabeledSlice], job: &Job) -> Result<LabeledSlice> {
    let src = &input[job.source];
    let image = apply_transform(&src.image, &job.transform, job.seed)?;
    let mut chain = src
        .provenance
        .as_ref()
        .map(|p| p.chain.clone())
        .unwrap_or_default();
    chain.push(job.transform);
    Ok(LabeledSlice {
        patient_id: src.patient_id.clone(),
        label: src.label,
        slice_index: src.slice_index,
        image,
        provenance: Some(Provenance {
            patient_id: src.patient_id.clone(),
            source_slice: src.slice_index,
            chain,
            seed: job.seed,
        }),
    })
}

/// Seeds derive from the slice identity rather than its position, so a
/// slice receives the same transforms in every training split it joins.
fn slice_key(s: &LabeledSlice) -> u64 {
    let depth = s.provenance.as_ref().map_or(0, |p| p.chain.len() as u64);
    derive_seed(hash_str(&s.patient_id), &[s.slice_index as u64, depth])
}

/// Balances a two-class slice set. Minority originals are kept and joined by
/// synthetic copies, one per transform kind per source slice per round,
/// until `minority / majority >= target_ratio`. Majority slices each get one
/// randomly chosen transform in place, so the majority count is unchanged.
pub fn balance_cohort(slices: &[LabeledSlice], policy: &AugmentPolicy) -> Result<Vec<LabeledSlice>> {
    policy.validate()?;
    let positives = slices.iter().filter(|s| s.label == 1).count();
    let negatives = slices.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass(format!(
            "balancing needs both classes ({positives} positive, {negatives} negative slices)"
        )));
    }
    let minority_label = if positives < negatives { 1 } else { 0 };
    let minority: Vec<usize> = (0..slices.len())
        .filter(|&i| slices[i].label == minority_label)
        .collect();
    let majority_count = slices.len() - minority.len();

    let mut majority_jobs = Vec::new();
    if policy.transform_majority {
        for (i, s) in slices.iter().enumerate() {
            if s.label != minority_label {
                let key = slice_key(s);
                let mut r = rng(derive_seed(policy.seed, &[MAJORITY_STREAM, key, 0]));
                let kind = TransformKind::ALL[r.random_range(0..4)];
                majority_jobs.push(plan_job(policy, i, kind, &[MAJORITY_STREAM, key, 1]));
            }
        }
    }

    let mut minority_jobs = Vec::new();
    let mut count = minority.len();
    let reached = |count: usize| count as f64 / majority_count as f64 >= policy.target_ratio;
    'rounds: for round in 0..MAX_ROUNDS {
        for &src in &minority {
            for (k, &kind) in TransformKind::ALL.iter().enumerate() {
                if reached(count) {
                    break 'rounds;
                }
                minority_jobs.push(plan_job(
                    policy,
                    src,
                    kind,
                    &[MINORITY_STREAM, round as u64, slice_key(&slices[src]), k as u64],
                ));
                count += 1;
            }
        }
    }

    let transformed: Vec<LabeledSlice> = majority_jobs
        .par_iter()
        .map(|j| run_job(slices, j))
        .collect::<Result<_>>()?;
    let synthetic: Vec<LabeledSlice> = minority_jobs
        .par_iter()
        .map(|j| run_job(slices, j))
        .collect::<Result<_>>()?;

    let mut replaced = transformed.into_iter();
    let mut out = Vec::with_capacity(slices.len() + synthetic.len());
    for s in slices {
        if s.label != minority_label && policy.transform_majority {
            out.push(replaced.next().expect("one job per majority slice"));
        } else {
            out.push(s.clone());
        }
    }
    out.extend(synthetic);
    Ok(out)
}
