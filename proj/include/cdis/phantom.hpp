#pragma once

#include <array>
#include <cstdint>

#include <json.hpp>

#include "cdis/volume.hpp"

namespace cdis {

/// Axis-aligned ellipsoid in voxel coordinates, (z, y, x) order.
struct Ellipsoid {
    std::array<double, 3> center{};
    std::array<double, 3> semi_axes{};

    bool contains(double z, double y, double x) const {
        const double dz = (z - center[0]) / semi_axes[0];
        const double dy = (y - center[1]) / semi_axes[1];
        const double dx = (x - center[2]) / semi_axes[2];
        return dz * dz + dy * dy + dx * dx <= 1.0;
    }
};

/// Parameters of a synthetic breast DWI acquisition with a known tumour.
///
/// The noiseless signal per voxel is S(b) = S0 * exp(-b * ADC) with the
/// region's (S0, ADC); background voxels use s0_background with the
/// tissue ADC. Rician noise is applied as sqrt((S + n1)^2 + n2^2) with
/// n1, n2 ~ Normal(0, noise_sigma^2) drawn from a counter-based stream
/// keyed by the 4-D element index, so generation is deterministic and
/// order-independent.
struct PhantomSpec {
    Shape3 shape{25, 224, 224};
    BValueList bvalues{{0.0, 100.0, 600.0, 800.0}};
    double s0_tissue = 1000.0;
    double s0_background = 0.0;
    double adc_tissue = 2.0e-3;  // mm^2/s
    double adc_tumour = 1.0e-3;  // mm^2/s, below tissue (restricted diffusion)
    Ellipsoid breast{{12.0, 112.0, 112.0}, {10.0, 80.0, 80.0}};
    Ellipsoid tumour{{12.0, 100.0, 124.0}, {4.0, 14.0, 14.0}};
    double noise_sigma = 0.0;  // signal units
    std::uint64_t seed = 1;

    static PhantomSpec default_spec() { return PhantomSpec{}; }

    void validate() const;
};

void to_json(nlohmann::json& j, const PhantomSpec& spec);
void from_json(const nlohmann::json& j, PhantomSpec& spec);

struct Phantom {
    DwiVolume dwi;
    MaskVolume breast_mask;
    MaskVolume tumour_mask;
};

/// Deterministic phantom generation; identical (spec, seed) give
/// bit-identical outputs. Throws ValidationError when the rasterized
/// tumour is not contained in the breast or either region is empty.
Phantom generate_phantom(const PhantomSpec& spec);

} // namespace cdis
