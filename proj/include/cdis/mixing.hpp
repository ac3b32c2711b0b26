#pragma once

#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cdis/volume.hpp"

namespace cdis {

/// Exponent configuration of the signal-mixing function: one exponent
/// per synthetic b-value, a box the exponents must stay inside, and
/// the floor applied to signals before taking logs.
struct MixingConfig {
    BValueList s_hat{{50.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0, 7000.0}};
    std::vector<double> rho{1.6160, 1.5209, 1.2006, 0.8362, 1.1630, 0.8666, 1.1424, -0.4635};
    std::pair<double, double> rho_bounds{-10.0, 10.0};
    double signal_floor = 1e-6;

    /// Eight-term starting point for exponent tuning.
    static MixingConfig default_initial() { return MixingConfig{}; }

    /// Untuned six-term reference: unit exponents over [0, 5000].
    static MixingConfig unoptimized_baseline();

    void validate() const;
};

void to_json(nlohmann::json& j, const MixingConfig& config);
void from_json(const nlohmann::json& j, MixingConfig& config);

/// Exponent-weighted multiplicative mixture, evaluated in log domain:
/// out(x) = exp(sum_i rho[i] * ln(max(S_i(x), signal_floor))).
///
/// When the exponent sum passes the largest-float32 log the voxel
/// saturates to the largest finite float32 instead of overflowing, so
/// the output is always finite and representable in the f32le bundle
/// format.
ScalarVolume mix(const DwiVolume& signals, std::span<const double> rho, double signal_floor);

/// Saturating scalar core of mix(); exposed so callers that already
/// hold log-signals can reproduce the exact same arithmetic.
double mix_exponent_to_value(double log_sum);

/// Full per-voxel pipeline: fit the decay model on the native volume,
/// synthesize signals at config.s_hat and mix them under config.rho.
/// Voxels invalid under the fit yield 0.
ScalarVolume compute_cdis(const DwiVolume& native, const MixingConfig& config, double r2_min = 0.8);

} // namespace cdis
