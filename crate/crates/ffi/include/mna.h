#ifndef MNA_H
#define MNA_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MnaStatus {
  MNA_STATUS_OK = 0,
  MNA_STATUS_NULL_POINTER = 1,
  MNA_STATUS_IO = 2,
  MNA_STATUS_FORMAT = 3,
  MNA_STATUS_INVALID_ARGUMENT = 4,
  MNA_STATUS_OUT_OF_BOUNDS = 5,
  MNA_STATUS_DATA = 6,
  MNA_STATUS_BUFFER_TOO_SMALL = 7,
  MNA_STATUS_PANIC = 8,
} MnaStatus;

/**
 * HU volume handle.
 */
typedef struct MnaCtVolume MnaCtVolume;

/**
 * 8-bit gray volume handle, also used for cropped ROI stacks.
 */
typedef struct MnaGrayVolume MnaGrayVolume;

/**
 * Phantom cohort settings. Fields not listed keep their library defaults.
 */
typedef struct MnaPhantomParams {
  size_t n_patients;
  size_t n_positive;
  /**
   * (nz, ny, nx) voxels.
   */
  size_t dims[3];
  /**
   * (sz, sy, sx) millimeters.
   */
  double spacing[3];
  /**
   * Tumor semi-axis range in millimeters.
   */
  double radius_mm[2];
  uint64_t seed;
} MnaPhantomParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static NUL-terminated string.
 */
const char *mna_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next library call on the same thread.
 */
const char *mna_last_error(void);

/**
 * Loads an Analyze 7.5 style `.hdr`/`.raw` HU volume.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MnaStatus mna_volume_load(const char *path, struct MnaCtVolume **out);

/**
 * # Safety
 * `vol` must come from this library or be NULL.
 */
void mna_volume_free(struct MnaCtVolume *vol);

/**
 * Writes (nz, ny, nx) to `dims` and (sz, sy, sx) millimeters to `spacing`.
 * Either output may be NULL.
 *
 * # Safety
 * Non-NULL outputs must have room for three elements.
 */
enum MnaStatus mna_volume_shape(const struct MnaCtVolume *vol, size_t *dims, double *spacing);

/**
 * Trilinear resampling to isotropic `target_mm` spacing.
 *
 * # Safety
 * `vol` must be a live handle and `out` a valid pointer.
 */
enum MnaStatus mna_volume_resample(const struct MnaCtVolume *vol,
                                   double target_mm,
                                   struct MnaCtVolume **out);

/**
 * Maps HU to 0-255 through the window `[center - width/2, center + width/2]`.
 *
 * # Safety
 * `vol` must be a live handle and `out` a valid pointer.
 */
enum MnaStatus mna_volume_to_gray(const struct MnaCtVolume *vol,
                                  double center,
                                  double width,
                                  struct MnaGrayVolume **out);

/**
 * Copies `nz * ny * nx` z-major bytes into a new gray volume.
 *
 * # Safety
 * `data` must hold `nz * ny * nx` bytes, `spacing` three values.
 */
enum MnaStatus mna_gray_new(const uint8_t *data,
                            size_t nz,
                            size_t ny,
                            size_t nx,
                            const double *spacing,
                            struct MnaGrayVolume **out);

/**
 * # Safety
 * `vol` must come from this library or be NULL.
 */
void mna_gray_free(struct MnaGrayVolume *vol);

/**
 * # Safety
 * Non-NULL outputs must have room for three elements.
 */
enum MnaStatus mna_gray_shape(const struct MnaGrayVolume *vol, size_t *dims, double *spacing);

/**
 * Borrows the z-major voxel bytes. The pointer lives as long as the handle.
 *
 * # Safety
 * `vol` must be a live handle; `data` and `len` valid pointers.
 */
enum MnaStatus mna_gray_data(const struct MnaGrayVolume *vol, const uint8_t **data, size_t *len);

/**
 * Crops `slice_count` slices of `size x size` around the (z, y, x) center,
 * zero-padding outside the volume.
 *
 * # Safety
 * `vol` must be a live handle and `out` a valid pointer.
 */
enum MnaStatus mna_roi_crop(const struct MnaGrayVolume *vol,
                            size_t z,
                            size_t y,
                            size_t x,
                            size_t slice_count,
                            size_t size,
                            struct MnaGrayVolume **out);

size_t mna_feature_count(void);

/**
 * Name of feature `index` in output order, e.g. `glcm_Contrast`; NULL when
 * out of range. The string is static.
 */
const char *mna_feature_name(size_t index);

/**
 * Writes the 107 features of the whole volume to `out`. `bin_count > 0`
 * selects fixed-count binning, otherwise `bin_width` is used.
 *
 * # Safety
 * `vol` must be a live handle and `out` hold `cap` doubles.
 */
enum MnaStatus mna_extract_features(const struct MnaGrayVolume *vol,
                                    double bin_width,
                                    size_t bin_count,
                                    size_t distance,
                                    double *out,
                                    size_t cap);

/**
 * Same as [`mna_extract_features`] on the single slice `z`.
 *
 * # Safety
 * `vol` must be a live handle and `out` hold `cap` doubles.
 */
enum MnaStatus mna_extract_slice_features(const struct MnaGrayVolume *vol,
                                          size_t z,
                                          double bin_width,
                                          size_t bin_count,
                                          size_t distance,
                                          double *out,
                                          size_t cap);

/**
 * Area under the ROC curve; ties count one half. Labels are 0 or 1.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be valid.
 */
enum MnaStatus mna_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Default cohort: 24 patients, 4 positive.
 */
struct MnaPhantomParams mna_phantom_default_params(void);

/**
 * Writes `P###.hdr`/`.raw` volumes and `manifest.csv` to `out_dir`;
 * `count` receives the number of patients written and may be NULL.
 *
 * # Safety
 * `params` must be valid and `out_dir` NUL-terminated.
 */
enum MnaStatus mna_phantom_generate(const struct MnaPhantomParams *params,
                                    const char *out_dir,
                                    size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MNA_H */
