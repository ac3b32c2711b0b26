#include "cdis/mixing.hpp"

#include <cmath>
#include <limits>

#include "cdis/diffusion.hpp"

namespace cdis {

MixingConfig MixingConfig::unoptimized_baseline() {
    MixingConfig config;
    config.s_hat = BValueList({0.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0});
    config.rho = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    return config;
}

void MixingConfig::validate() const {
    if (rho.size() != s_hat.size())
        throw ValidationError("rho has " + std::to_string(rho.size()) + " entries for " +
                              std::to_string(s_hat.size()) + " synthetic b-values");
    if (!(rho_bounds.first < rho_bounds.second))
        throw ValidationError("rho bounds must satisfy lo < hi");
    for (double r : rho) {
        if (!std::isfinite(r))
            throw ValidationError("rho entries must be finite");
        if (r < rho_bounds.first || r > rho_bounds.second)
            throw ValidationError("rho entry " + std::to_string(r) + " is outside [" +
                                  std::to_string(rho_bounds.first) + ", " +
                                  std::to_string(rho_bounds.second) + "]");
    }
    if (!(signal_floor > 0.0) || !std::isfinite(signal_floor))
        throw ValidationError("signal_floor must be positive and finite");
}

void to_json(nlohmann::json& j, const MixingConfig& config) {
    j = nlohmann::json{
        {"s_hat", config.s_hat.values()},
        {"rho", config.rho},
        {"rho_bounds", {config.rho_bounds.first, config.rho_bounds.second}},
        {"signal_floor", config.signal_floor},
    };
}

void from_json(const nlohmann::json& j, MixingConfig& config) {
    config.s_hat = BValueList(j.at("s_hat").get<std::vector<double>>());
    config.rho = j.at("rho").get<std::vector<double>>();
    if (j.contains("rho_bounds")) {
        const auto bounds = j["rho_bounds"].get<std::vector<double>>();
        if (bounds.size() != 2)
            throw ValidationError("rho_bounds must hold exactly [lo, hi]");
        config.rho_bounds = {bounds[0], bounds[1]};
    } else {
        config.rho_bounds = {-10.0, 10.0};
    }
    config.signal_floor = j.value("signal_floor", 1e-6);
    config.validate();
}

namespace {

// Saturation point: largest float32, so mixed volumes survive the
// f32le bundle round trip.
constexpr double kSaturation = static_cast<double>(std::numeric_limits<float>::max());
const double kLogSaturation = std::log(kSaturation);

} // namespace

double mix_exponent_to_value(double log_sum) {
    return log_sum > kLogSaturation ? kSaturation : std::exp(log_sum);
}

ScalarVolume mix(const DwiVolume& signals, std::span<const double> rho, double signal_floor) {
    if (rho.size() != signals.nb())
        throw ValidationError("mix needs one exponent per signal volume: got " +
                              std::to_string(rho.size()) + " for " + std::to_string(signals.nb()));
    if (!(signal_floor > 0.0))
        throw ValidationError("signal_floor must be positive");
    for (double r : rho)
        if (!std::isfinite(r))
            throw ValidationError("mix exponents must be finite");

    const std::size_t n_voxels = signals.voxels_per_b();
    const std::size_t nb = signals.nb();
    const double* data = signals.data().data();

    std::vector<double> out(n_voxels);
    for (std::size_t v = 0; v < n_voxels; ++v) {
        double log_sum = 0.0;
        for (std::size_t i = 0; i < nb; ++i)
            log_sum += rho[i] * std::log(std::max(data[i * n_voxels + v], signal_floor));
        out[v] = mix_exponent_to_value(log_sum);
    }
    return ScalarVolume(signals.shape(), std::move(out), Unit::dimensionless);
}

ScalarVolume compute_cdis(const DwiVolume& native, const MixingConfig& config, double r2_min) {
    config.validate();
    const AdcFitResult fit = fit_adc(native, r2_min);
    const DwiVolume synthetic = synthesize_signals(fit, config.s_hat);
    ScalarVolume mixed = mix(synthetic, config.rho, config.signal_floor);

    std::vector<double> out = mixed.data();
    const auto& valid = fit.valid.data();
    for (std::size_t v = 0; v < out.size(); ++v)
        if (!valid[v])
            out[v] = 0.0;
    return ScalarVolume(mixed.shape(), std::move(out), Unit::dimensionless);
}

} // namespace cdis
