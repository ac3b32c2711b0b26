#pragma once

#include <span>

#include "cdis/volume.hpp"

namespace cdis {

/// Keeps a centered contiguous window of target_nz slices. An odd
/// surplus drops the extra slice from the high-index end, so the
/// low-index side keeps more. Throws ValidationError when the volume
/// has fewer than target_nz slices.
DwiVolume select_slices(const DwiVolume& vol, std::size_t target_nz);
ScalarVolume select_slices(const ScalarVolume& vol, std::size_t target_nz);
MaskVolume select_slices(const MaskVolume& vol, std::size_t target_nz);

/// Per-slice bilinear resampling with edge-aligned sampling: corner
/// pixel centers map to corner pixel centers. Output values are convex
/// combinations of input values.
ScalarVolume resize_bilinear(const ScalarVolume& vol, std::size_t out_ny, std::size_t out_nx);

/// Convenience wrapper applying resize_bilinear per b index.
DwiVolume resize_bilinear(const DwiVolume& vol, std::size_t out_ny, std::size_t out_nx);

/// Nearest-neighbor resampling on the same edge-aligned grid; keeps
/// masks binary.
MaskVolume resize_nearest(const MaskVolume& vol, std::size_t out_ny, std::size_t out_nx);

/// Histogram threshold maximizing between-class variance (Otsu).
///
/// The histogram spans [min, max] with n_bins equal-width bins and the
/// candidate thresholds are the interior bin edges; class statistics
/// are accumulated from the actual values in each bin, and ties break
/// toward the lower threshold. Degenerate input (all values equal)
/// returns that value.
double otsu_threshold(std::span<const double> values, int n_bins = 256);

/// Breast mask from the lowest-b volume: Otsu threshold, keep voxels
/// strictly above it, retain the largest 6-connected component and fill
/// fully enclosed holes per slice. Throws ValidationError when the
/// thresholded mask is empty.
MaskVolume compute_breast_mask(const DwiVolume& dwi);

/// Number of 6-connected components in a mask (diagnostic helper).
std::size_t count_components(const MaskVolume& mask);

} // namespace cdis
