//! C ABI over `mna-core`.
//!
//! Every function returns an [`MnaStatus`]. On failure the message is
//! available from [`mna_last_error`] on the same thread until the next call.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::OnceLock;

use mna_core::eval::roc_auc;
use mna_core::phantom::{generate_cohort, PhantomParams};
use mna_core::radiomics::{extract_all, feature_names, Binning, ExtractionParams, FEATURE_COUNT};
use mna_core::roi::{crop_roi_sized, Annotation};
use mna_core::volume::{hu_to_gray, read_volume, resample_isotropic, CtVolume, Dims, GrayVolume, Spacing, Window};
use mna_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnaStatus {
    Ok = 0,
    NullPointer = 1,
    Io = 2,
    Format = 3,
    InvalidArgument = 4,
    OutOfBounds = 5,
    Data = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// HU volume handle.
pub struct MnaCtVolume(CtVolume);

/// 8-bit gray volume handle, also used for cropped ROI stacks.
pub struct MnaGrayVolume(GrayVolume);

/// Phantom cohort settings. Fields not listed keep their library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MnaPhantomParams {
    pub n_patients: usize,
    pub n_positive: usize,
    /// (nz, ny, nx) voxels.
    pub dims: [usize; 3],
    /// (sz, sy, sx) millimeters.
    pub spacing: [f64; 3],
    /// Tumor semi-axis range in millimeters.
    pub radius_mm: [f64; 2],
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MnaStatus, String);

fn status_of(e: &Error) -> MnaStatus {
    match e {
        Error::MissingFile(_) | Error::Io { .. } | Error::MissingArtifact(_) => MnaStatus::Io,
        Error::MalformedHeader { .. } | Error::SizeMismatch { .. } | Error::Serde(_) => MnaStatus::Format,
        Error::NonPositiveSpacing(..) | Error::InvalidDims(_) | Error::InvalidParameter(_) | Error::Config(_) => {
            MnaStatus::InvalidArgument
        }
        Error::CenterOutOfBounds { .. } | Error::SliceCountExceedsVolume { .. } | Error::IndexOutOfRange { .. } => {
            MnaStatus::OutOfBounds
        }
        _ => MnaStatus::Data,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MnaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MnaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MnaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MnaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(MnaStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn params(bin_width: f64, bin_count: usize, distance: usize) -> Result<ExtractionParams, Failure> {
    let p = ExtractionParams {
        binning: if bin_count > 0 {
            Binning::Count(bin_count)
        } else {
            Binning::Width(bin_width)
        },
        distance,
    };
    p.validate()?;
    Ok(p)
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mna_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn mna_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an Analyze 7.5 style `.hdr`/`.raw` HU volume.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mna_volume_load(path: *const c_char, out: *mut *mut MnaCtVolume) -> MnaStatus {
    guard(|| {
        let path = path_arg(path)?;
        put(out, MnaCtVolume(read_volume(&path)?))
    })
}

/// # Safety
/// `vol` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn mna_volume_free(vol: *mut MnaCtVolume) {
    if !vol.is_null() {
        drop(Box::from_raw(vol));
    }
}

/// Writes (nz, ny, nx) to `dims` and (sz, sy, sx) millimeters to `spacing`.
/// Either output may be NULL.
///
/// # Safety
/// Non-NULL outputs must have room for three elements.
#[no_mangle]
pub unsafe extern "C" fn mna_volume_shape(vol: *const MnaCtVolume, dims: *mut usize, spacing: *mut f64) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        write_shape(v.dims(), v.spacing(), dims, spacing);
        Ok(())
    })
}

unsafe fn write_shape(d: Dims, s: Spacing, dims: *mut usize, spacing: *mut f64) {
    if !dims.is_null() {
        ptr::copy_nonoverlapping(d.as_array().as_ptr(), dims, 3);
    }
    if !spacing.is_null() {
        ptr::copy_nonoverlapping(s.as_array().as_ptr(), spacing, 3);
    }
}

/// Trilinear resampling to isotropic `target_mm` spacing.
///
/// # Safety
/// `vol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mna_volume_resample(
    vol: *const MnaCtVolume,
    target_mm: f64,
    out: *mut *mut MnaCtVolume,
) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        put(out, MnaCtVolume(resample_isotropic(v, target_mm)?))
    })
}

/// Maps HU to 0-255 through the window `[center - width/2, center + width/2]`.
///
/// # Safety
/// `vol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mna_volume_to_gray(
    vol: *const MnaCtVolume,
    center: f64,
    width: f64,
    out: *mut *mut MnaGrayVolume,
) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        put(out, MnaGrayVolume(hu_to_gray(v, Window::new(center, width)?)?))
    })
}

/// Copies `nz * ny * nx` z-major bytes into a new gray volume.
///
/// # Safety
/// `data` must hold `nz * ny * nx` bytes, `spacing` three values.
#[no_mangle]
pub unsafe extern "C" fn mna_gray_new(
    data: *const u8,
    nz: usize,
    ny: usize,
    nx: usize,
    spacing: *const f64,
    out: *mut *mut MnaGrayVolume,
) -> MnaStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if spacing.is_null() {
            return Err(null("spacing"));
        }
        let dims = Dims::new(nz, ny, nx);
        let s = std::slice::from_raw_parts(spacing, 3);
        let vox = std::slice::from_raw_parts(data, dims.len()).to_vec();
        put(out, MnaGrayVolume(GrayVolume::new(dims, Spacing::new(s[0], s[1], s[2]), vox)?))
    })
}

/// # Safety
/// `vol` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn mna_gray_free(vol: *mut MnaGrayVolume) {
    if !vol.is_null() {
        drop(Box::from_raw(vol));
    }
}

/// # Safety
/// Non-NULL outputs must have room for three elements.
#[no_mangle]
pub unsafe extern "C" fn mna_gray_shape(vol: *const MnaGrayVolume, dims: *mut usize, spacing: *mut f64) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        write_shape(v.dims(), v.spacing(), dims, spacing);
        Ok(())
    })
}

/// Borrows the z-major voxel bytes. The pointer lives as long as the handle.
///
/// # Safety
/// `vol` must be a live handle; `data` and `len` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mna_gray_data(vol: *const MnaGrayVolume, data: *mut *const u8, len: *mut usize) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        if data.is_null() || len.is_null() {
            return Err(null("output"));
        }
        *data = v.voxels().as_ptr();
        *len = v.voxels().len();
        Ok(())
    })
}

/// Crops `slice_count` slices of `size x size` around the (z, y, x) center,
/// zero-padding outside the volume.
///
/// # Safety
/// `vol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mna_roi_crop(
    vol: *const MnaGrayVolume,
    z: usize,
    y: usize,
    x: usize,
    slice_count: usize,
    size: usize,
    out: *mut *mut MnaGrayVolume,
) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        let ann = Annotation {
            patient_id: String::new(),
            label: 0,
            center: [z, y, x],
            slice_count,
        };
        put(out, MnaGrayVolume(crop_roi_sized(v, &ann, size)?.image))
    })
}

#[no_mangle]
pub extern "C" fn mna_feature_count() -> usize {
    FEATURE_COUNT
}

fn name_table() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| feature_names().into_iter().map(|n| CString::new(n).unwrap()).collect())
}

/// Name of feature `index` in output order, e.g. `glcm_Contrast`; NULL when
/// out of range. The string is static.
#[no_mangle]
pub extern "C" fn mna_feature_name(index: usize) -> *const c_char {
    name_table().get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// Writes the 107 features of the whole volume to `out`. `bin_count > 0`
/// selects fixed-count binning, otherwise `bin_width` is used.
///
/// # Safety
/// `vol` must be a live handle and `out` hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mna_extract_features(
    vol: *const MnaGrayVolume,
    bin_width: f64,
    bin_count: usize,
    distance: usize,
    out: *mut f64,
    cap: usize,
) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        write_features(v, bin_width, bin_count, distance, out, cap)
    })
}

/// Same as [`mna_extract_features`] on the single slice `z`.
///
/// # Safety
/// `vol` must be a live handle and `out` hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mna_extract_slice_features(
    vol: *const MnaGrayVolume,
    z: usize,
    bin_width: f64,
    bin_count: usize,
    distance: usize,
    out: *mut f64,
    cap: usize,
) -> MnaStatus {
    guard(|| {
        let v = &borrow(vol, "volume")?.0;
        let nz = v.dims().nz;
        if z >= nz {
            return Err(Error::IndexOutOfRange { index: z, len: nz }.into());
        }
        write_features(&v.slice_volume(z), bin_width, bin_count, distance, out, cap)
    })
}

unsafe fn write_features(
    v: &GrayVolume,
    bin_width: f64,
    bin_count: usize,
    distance: usize,
    out: *mut f64,
    cap: usize,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if cap < FEATURE_COUNT {
        return Err(Failure(
            MnaStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {FEATURE_COUNT} needed"),
        ));
    }
    let f = extract_all(v, &params(bin_width, bin_count, distance)?)?;
    ptr::copy_nonoverlapping(f.values.as_ptr(), out, f.values.len());
    Ok(())
}

/// Area under the ROC curve; ties count one half. Labels are 0 or 1.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mna_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> MnaStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l = std::slice::from_raw_parts(labels, n);
        *out = roc_auc(s, l)?;
        Ok(())
    })
}

/// Default cohort: 24 patients, 4 positive.
#[no_mangle]
pub extern "C" fn mna_phantom_default_params() -> MnaPhantomParams {
    let d = PhantomParams::default();
    MnaPhantomParams {
        n_patients: d.n_patients,
        n_positive: d.n_positive,
        dims: d.dims,
        spacing: d.spacing,
        radius_mm: d.radius_mm,
        seed: d.seed,
    }
}

/// Writes `P###.hdr`/`.raw` volumes and `manifest.csv` to `out_dir`;
/// `count` receives the number of patients written and may be NULL.
///
/// # Safety
/// `params` must be valid and `out_dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mna_phantom_generate(
    params: *const MnaPhantomParams,
    out_dir: *const c_char,
    count: *mut usize,
) -> MnaStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let dir = path_arg(out_dir)?;
        let full = PhantomParams {
            n_patients: p.n_patients,
            n_positive: p.n_positive,
            dims: p.dims,
            spacing: p.spacing,
            radius_mm: p.radius_mm,
            seed: p.seed,
            ..Default::default()
        };
        let records = generate_cohort(&full, &dir)?;
        if !count.is_null() {
            *count = records.len();
        }
        Ok(())
    })
}
