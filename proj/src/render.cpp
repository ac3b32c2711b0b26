#include "cdis/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <zlib.h>

#include "cdis/errors.hpp"

namespace cdis {

Windowing Windowing::percentile(double lo, double hi) {
    if (!(lo >= 0.0 && lo < hi && hi <= 100.0))
        throw ValidationError("percentile window needs 0 <= lo < hi <= 100");
    Windowing w;
    w.mode = Mode::percentile;
    w.p_lo = lo;
    w.p_hi = hi;
    return w;
}

Windowing Windowing::parse(const std::string& text) {
    if (text == "minmax")
        return minmax();
    const std::string prefix = "percentile:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string args = text.substr(prefix.size());
        const std::size_t comma = args.find(',');
        if (comma != std::string::npos) {
            char* end_lo = nullptr;
            char* end_hi = nullptr;
            const std::string lo_s = args.substr(0, comma), hi_s = args.substr(comma + 1);
            const double lo = std::strtod(lo_s.c_str(), &end_lo);
            const double hi = std::strtod(hi_s.c_str(), &end_hi);
            if (end_lo && *end_lo == '\0' && end_hi && *end_hi == '\0' && !lo_s.empty() &&
                !hi_s.empty())
                return percentile(lo, hi);
        }
    }
    throw ValidationError("bad window spec '" + text +
                          "' (expected minmax or percentile:LO,HI)");
}

namespace {

/// Linear-interpolated percentile of a sorted sample.
double percentile_of(const std::vector<double>& sorted, double p) {
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return std::lerp(sorted[lo], sorted[hi], rank - static_cast<double>(lo));
}

void append_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    append_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + crc_start),
                            static_cast<uInt>(out.size() - crc_start));
    append_u32be(out, static_cast<std::uint32_t>(crc));
}

} // namespace

std::vector<std::uint8_t> encode_png_gray8(std::size_t width, std::size_t height,
                                           const std::vector<std::uint8_t>& pixels) {
    if (width == 0 || height == 0)
        throw ValidationError("PNG dimensions must be positive");
    if (pixels.size() != width * height)
        throw ValidationError("pixel buffer size does not match dimensions");

    // One filter byte (0 = None) per scanline.
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * width),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width));
    }
    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    const int rc = compress2(compressed.data(), &compressed_size, raw.data(),
                             static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION);
    if (rc != Z_OK)
        throw IoError("zlib compression failed with code " + std::to_string(rc));
    compressed.resize(compressed_size);

    std::vector<std::uint8_t> png = {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<std::uint8_t> ihdr;
    append_u32be(ihdr, static_cast<std::uint32_t>(width));
    append_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // color type: grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", compressed);
    append_chunk(png, "IEND", {});
    return png;
}

std::vector<std::uint8_t> render_montage(const ScalarVolume& vol,
                                         const std::vector<std::size_t>& slice_indices,
                                         const Windowing& window) {
    if (slice_indices.empty())
        throw ValidationError("montage needs at least one slice index");
    const Shape3& shape = vol.shape();
    for (std::size_t z : slice_indices)
        if (z >= shape.nz)
            throw ValidationError("slice index " + std::to_string(z) + " out of range [0, " +
                                  std::to_string(shape.nz - 1) + "]");

    const std::size_t slice_size = shape.ny * shape.nx;
    std::vector<double> selected;
    selected.reserve(slice_indices.size() * slice_size);
    for (std::size_t z : slice_indices) {
        const double* slab = vol.data().data() + z * slice_size;
        selected.insert(selected.end(), slab, slab + slice_size);
    }

    double lo, hi;
    if (window.mode == Windowing::Mode::minmax) {
        const auto [min_it, max_it] = std::minmax_element(selected.begin(), selected.end());
        lo = *min_it;
        hi = *max_it;
    } else {
        std::vector<double> sorted = selected;
        std::sort(sorted.begin(), sorted.end());
        lo = percentile_of(sorted, window.p_lo);
        hi = percentile_of(sorted, window.p_hi);
    }

    const std::size_t width = slice_indices.size() * shape.nx;
    const std::size_t height = shape.ny;
    std::vector<std::uint8_t> pixels(width * height, 0);
    if (hi > lo) {
        const double scale = 255.0 / (hi - lo);
        for (std::size_t s = 0; s < slice_indices.size(); ++s) {
            const double* slab = selected.data() + s * slice_size;
            for (std::size_t y = 0; y < shape.ny; ++y)
                for (std::size_t x = 0; x < shape.nx; ++x) {
                    const double v = (slab[y * shape.nx + x] - lo) * scale;
                    const long g = std::lround(std::clamp(v, 0.0, 255.0));
                    pixels[y * width + s * shape.nx + x] = static_cast<std::uint8_t>(g);
                }
        }
    }
    return encode_png_gray8(width, height, pixels);
}

} // namespace cdis
