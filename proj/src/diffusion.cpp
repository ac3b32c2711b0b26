#include "cdis/diffusion.hpp"

#include <cmath>
#include <vector>

namespace cdis {

AdcFitResult fit_adc(const DwiVolume& dwi, double r2_min, double signal_floor) {
    const std::size_t nb = dwi.nb();
    if (nb < 2)
        throw ValidationError("ADC fit requires at least 2 b-values, got " + std::to_string(nb));
    if (!(r2_min >= 0.0 && r2_min <= 1.0))
        throw ValidationError("r2_min must lie in [0, 1]");
    if (!(signal_floor > 0.0))
        throw ValidationError("signal_floor must be positive");

    const std::size_t n_voxels = dwi.voxels_per_b();
    const auto& b = dwi.bvalues();

    double b_mean = 0.0;
    for (std::size_t i = 0; i < nb; ++i)
        b_mean += b[i];
    b_mean /= static_cast<double>(nb);
    double sxx = 0.0;
    for (std::size_t i = 0; i < nb; ++i)
        sxx += (b[i] - b_mean) * (b[i] - b_mean);

    std::vector<double> adc(n_voxels), s0(n_voxels), r2(n_voxels);
    std::vector<std::uint8_t> valid(n_voxels);
    std::vector<double> y(nb);

    const double* data = dwi.data().data();
    for (std::size_t v = 0; v < n_voxels; ++v) {
        double y_mean = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            y[i] = std::log(std::max(data[i * n_voxels + v], signal_floor));
            y_mean += y[i];
        }
        y_mean /= static_cast<double>(nb);

        double sxy = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            sxy += (b[i] - b_mean) * (y[i] - y_mean);
            syy += (y[i] - y_mean) * (y[i] - y_mean);
        }

        const double slope = sxy / sxx;
        const double intercept = y_mean - slope * b_mean;

        double ss_res = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            const double r = y[i] - (intercept + slope * b[i]);
            ss_res += r * r;
        }
        const double r2_v = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;

        double adc_v = -slope;
        if (adc_v == 0.0)
            adc_v = 0.0;  // normalize -0.0
        const double s0_v = std::exp(intercept);

        const bool ok = r2_v >= r2_min && adc_v >= 0.0 && s0_v > 0.0 && std::isfinite(adc_v) &&
                        std::isfinite(s0_v);
        valid[v] = ok ? 1 : 0;
        adc[v] = ok ? adc_v : 0.0;
        s0[v] = ok ? s0_v : 0.0;
        r2[v] = r2_v;
    }

    const Shape3 shape = dwi.shape();
    return AdcFitResult{
        ScalarVolume(shape, std::move(adc), Unit::adc_mm2_per_s),
        ScalarVolume(shape, std::move(s0), Unit::signal),
        ScalarVolume(shape, std::move(r2), Unit::dimensionless),
        MaskVolume(shape, std::move(valid)),
    };
}

DwiVolume synthesize_signals(const AdcFitResult& fit, const BValueList& s_hat) {
    const Shape3 shape = fit.adc.shape();
    if (fit.s0.shape() != shape || fit.r2.shape() != shape || fit.valid.shape() != shape)
        throw ValidationError("ADC fit volumes must share one shape");

    const std::size_t n_voxels = shape.count();
    const std::size_t nb = s_hat.size();
    std::vector<double> data(nb * n_voxels);

    const double* adc = fit.adc.data().data();
    const double* s0 = fit.s0.data().data();
    const auto& valid = fit.valid.data();

    for (std::size_t i = 0; i < nb; ++i) {
        const double b = s_hat[i];
        double* slab = data.data() + i * n_voxels;
        for (std::size_t v = 0; v < n_voxels; ++v)
            slab[v] = valid[v] ? s0[v] * std::exp(-b * adc[v]) : 0.0;
    }
    return DwiVolume(s_hat, shape, std::move(data));
}

} // namespace cdis
