#include "cdis/phantom.hpp"

#include <cmath>
#include <numbers>

#include "cdis/rng.hpp"

namespace cdis {

void PhantomSpec::validate() const {
    if (shape.nz == 0 || shape.ny == 0 || shape.nx == 0)
        throw ValidationError("phantom shape must be positive, got " + shape.describe());
    if (!(s0_tissue > 0.0) || !(s0_background >= 0.0))
        throw ValidationError("phantom S0 values must be positive (background may be 0)");
    if (!(adc_tumour < adc_tissue))
        throw ValidationError("adc_tumour must be below adc_tissue (restricted diffusion)");
    if (!(adc_tumour > 0.0))
        throw ValidationError("ADC values must be positive");
    if (!(noise_sigma >= 0.0))
        throw ValidationError("noise_sigma must be non-negative");
    for (double a : breast.semi_axes)
        if (!(a > 0.0))
            throw ValidationError("breast semi-axes must be positive");
    for (double a : tumour.semi_axes)
        if (!(a > 0.0))
            throw ValidationError("tumour semi-axes must be positive");
}

namespace {

nlohmann::json ellipsoid_to_json(const Ellipsoid& e) {
    return {{"center", e.center}, {"semi_axes", e.semi_axes}};
}

Ellipsoid ellipsoid_from_json(const nlohmann::json& j) {
    Ellipsoid e;
    e.center = j.at("center").get<std::array<double, 3>>();
    e.semi_axes = j.at("semi_axes").get<std::array<double, 3>>();
    return e;
}

} // namespace

void to_json(nlohmann::json& j, const PhantomSpec& spec) {
    j = nlohmann::json{
        {"shape", {spec.shape.nz, spec.shape.ny, spec.shape.nx}},
        {"bvalues", spec.bvalues.values()},
        {"s0_tissue", spec.s0_tissue},
        {"s0_background", spec.s0_background},
        {"adc_tissue", spec.adc_tissue},
        {"adc_tumour", spec.adc_tumour},
        {"breast", ellipsoid_to_json(spec.breast)},
        {"tumour", ellipsoid_to_json(spec.tumour)},
        {"noise_sigma", spec.noise_sigma},
        {"seed", spec.seed},
    };
}

void from_json(const nlohmann::json& j, PhantomSpec& spec) {
    const auto dims = j.at("shape").get<std::vector<std::size_t>>();
    if (dims.size() != 3)
        throw ValidationError("phantom shape must have 3 dimensions");
    spec.shape = {dims[0], dims[1], dims[2]};
    spec.bvalues = BValueList(j.at("bvalues").get<std::vector<double>>());
    spec.s0_tissue = j.at("s0_tissue").get<double>();
    spec.s0_background = j.at("s0_background").get<double>();
    spec.adc_tissue = j.at("adc_tissue").get<double>();
    spec.adc_tumour = j.at("adc_tumour").get<double>();
    spec.breast = ellipsoid_from_json(j.at("breast"));
    spec.tumour = ellipsoid_from_json(j.at("tumour"));
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.validate();
}

Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();

    const Shape3 shape = spec.shape;
    const std::size_t n_voxels = shape.count();
    const std::size_t nb = spec.bvalues.size();

    std::vector<std::uint8_t> breast(n_voxels, 0);
    std::vector<std::uint8_t> tumour(n_voxels, 0);
    std::vector<double> s0(n_voxels);
    std::vector<double> adc(n_voxels);

    std::size_t v = 0;
    for (std::size_t z = 0; z < shape.nz; ++z) {
        for (std::size_t y = 0; y < shape.ny; ++y) {
            for (std::size_t x = 0; x < shape.nx; ++x, ++v) {
                const double zf = static_cast<double>(z);
                const double yf = static_cast<double>(y);
                const double xf = static_cast<double>(x);
                const bool in_breast = spec.breast.contains(zf, yf, xf);
                const bool in_tumour = spec.tumour.contains(zf, yf, xf);
                if (in_tumour && !in_breast)
                    throw ValidationError("tumour ellipsoid is not contained in the breast ellipsoid");
                breast[v] = in_breast ? 1 : 0;
                tumour[v] = in_tumour ? 1 : 0;
                s0[v] = in_breast ? spec.s0_tissue : spec.s0_background;
                adc[v] = in_tumour ? spec.adc_tumour : spec.adc_tissue;
            }
        }
    }

    std::size_t n_tumour = 0, n_breast = 0;
    for (std::size_t i = 0; i < n_voxels; ++i) {
        n_tumour += tumour[i];
        n_breast += breast[i];
    }
    if (n_tumour == 0)
        throw ValidationError("tumour ellipsoid rasterizes to zero voxels");
    if (n_breast == n_tumour)
        throw ValidationError("breast ellipsoid holds no healthy tissue voxels");

    std::vector<double> data(nb * n_voxels);
    const double sigma = spec.noise_sigma;
    for (std::size_t bi = 0; bi < nb; ++bi) {
        const double b = spec.bvalues[bi];
        double* slab = data.data() + bi * n_voxels;
        for (std::size_t i = 0; i < n_voxels; ++i) {
            const double clean = s0[i] * std::exp(-b * adc[i]);
            if (sigma == 0.0) {
                slab[i] = clean;
                continue;
            }
            // Two standard normals via Box-Muller, keyed by the 4-D
            // element index so parallel generation stays reproducible.
            const std::uint64_t element = bi * n_voxels + i;
            const double u1 = 1.0 - uniform01_at(spec.seed, 2 * element);
            const double u2 = uniform01_at(spec.seed, 2 * element + 1);
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double n1 = sigma * r * std::cos(2.0 * std::numbers::pi * u2);
            const double n2 = sigma * r * std::sin(2.0 * std::numbers::pi * u2);
            slab[i] = std::sqrt((clean + n1) * (clean + n1) + n2 * n2);
        }
    }

    return Phantom{
        DwiVolume(spec.bvalues, shape, std::move(data)),
        MaskVolume(shape, std::move(breast)),
        MaskVolume(shape, std::move(tumour)),
    };
}

} // namespace cdis
