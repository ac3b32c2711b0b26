#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdis/volume.hpp"

namespace cdis {

/// Intensity-to-gray mapping for rendering. minmax spans the full
/// value range of the selected slices; percentile clips to the given
/// percentiles first so outliers cannot wash out the display.
struct Windowing {
    enum class Mode { minmax, percentile };
    Mode mode = Mode::minmax;
    double p_lo = 1.0;
    double p_hi = 99.0;

    static Windowing minmax() { return {}; }
    static Windowing percentile(double lo, double hi);

    /// Accepts "minmax" or "percentile:LO,HI" (e.g. "percentile:1,99").
    static Windowing parse(const std::string& text);
};

/// Horizontal 8-bit grayscale montage of the chosen slices as PNG
/// bytes: width = len(slices) * nx, height = ny. A degenerate window
/// (all values equal) maps every pixel to 0. Out-of-range slice
/// indices throw ValidationError.
std::vector<std::uint8_t> render_montage(const ScalarVolume& vol,
                                         const std::vector<std::size_t>& slice_indices,
                                         const Windowing& window = {});

/// Minimal grayscale PNG encoder (bit depth 8, color type 0).
std::vector<std::uint8_t> encode_png_gray8(std::size_t width, std::size_t height,
                                           const std::vector<std::uint8_t>& pixels);

} // namespace cdis
