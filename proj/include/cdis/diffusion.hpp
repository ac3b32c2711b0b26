#pragma once

#include "cdis/volume.hpp"

namespace cdis {

/// Per-voxel mono-exponential decay fit.
///
/// A voxel is valid when its coefficient of determination reaches the
/// configured floor, the fitted decay rate is non-negative and both
/// fitted quantities are finite. Invalid voxels carry adc = 0 and
/// s0 = 0; r2 keeps the computed value so failures stay inspectable.
struct AdcFitResult {
    ScalarVolume adc;   // mm^2/s
    ScalarVolume s0;    // signal units, > 0 where valid
    ScalarVolume r2;    // dimensionless, <= 1
    MaskVolume valid;
};

/// Ordinary least squares of log(max(S(b), signal_floor)) against b,
/// per voxel: the slope is -ADC and the intercept log(S0). R^2 is
/// defined as 1 when the total sum of squares is zero (constant
/// signal). Requires at least two b-values.
AdcFitResult fit_adc(const DwiVolume& dwi, double r2_min = 0.8, double signal_floor = 1e-6);

/// Synthetic acquisition at the requested b-values:
/// S(b) = s0 * exp(-b * adc) per voxel; invalid voxels produce 0.
DwiVolume synthesize_signals(const AdcFitResult& fit, const BValueList& s_hat);

} // namespace cdis
