#include "cdis/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cdis {

namespace {

std::size_t window_start(std::size_t nz, std::size_t target_nz) {
    if (target_nz == 0)
        throw ValidationError("target slice count must be positive");
    if (nz < target_nz)
        throw ValidationError("volume has " + std::to_string(nz) + " slices, need at least " +
                              std::to_string(target_nz));
    return (nz - target_nz) / 2;
}

template <typename T>
std::vector<T> copy_window(const std::vector<T>& data, std::size_t slice_size, std::size_t start,
                           std::size_t count) {
    const auto begin = data.begin() + static_cast<std::ptrdiff_t>(start * slice_size);
    return std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(count * slice_size));
}

// Source coordinate for an output index under corner-aligned sampling.
double sample_coord(std::size_t out_i, std::size_t out_n, std::size_t in_n) {
    if (out_n == 1)
        return static_cast<double>(in_n - 1) / 2.0;
    return static_cast<double>(out_i) * static_cast<double>(in_n - 1) /
           static_cast<double>(out_n - 1);
}

void resize_slice_bilinear(const double* src, std::size_t in_ny, std::size_t in_nx, double* dst,
                           std::size_t out_ny, std::size_t out_nx) {
    for (std::size_t oy = 0; oy < out_ny; ++oy) {
        const double sy = sample_coord(oy, out_ny, in_ny);
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, in_ny - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < out_nx; ++ox) {
            const double sx = sample_coord(ox, out_nx, in_nx);
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, in_nx - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = std::lerp(src[y0 * in_nx + x0], src[y0 * in_nx + x1], fx);
            const double bot = std::lerp(src[y1 * in_nx + x0], src[y1 * in_nx + x1], fx);
            dst[oy * out_nx + ox] = std::lerp(top, bot, fy);
        }
    }
}

void check_resize_dims(std::size_t out_ny, std::size_t out_nx) {
    if (out_ny == 0 || out_nx == 0)
        throw ValidationError("resize output dimensions must be positive");
}

} // namespace

DwiVolume select_slices(const DwiVolume& vol, std::size_t target_nz) {
    const std::size_t start = window_start(vol.shape().nz, target_nz);
    const Shape3 out_shape{target_nz, vol.shape().ny, vol.shape().nx};
    const std::size_t slice_size = vol.shape().ny * vol.shape().nx;
    std::vector<double> data;
    data.reserve(vol.nb() * out_shape.count());
    for (std::size_t b = 0; b < vol.nb(); ++b) {
        const auto begin =
            vol.data().begin() + static_cast<std::ptrdiff_t>((b * vol.shape().nz + start) * slice_size);
        data.insert(data.end(), begin, begin + static_cast<std::ptrdiff_t>(target_nz * slice_size));
    }
    return DwiVolume(vol.bvalues(), out_shape, std::move(data));
}

ScalarVolume select_slices(const ScalarVolume& vol, std::size_t target_nz) {
    const std::size_t start = window_start(vol.shape().nz, target_nz);
    const std::size_t slice_size = vol.shape().ny * vol.shape().nx;
    return ScalarVolume({target_nz, vol.shape().ny, vol.shape().nx},
                        copy_window(vol.data(), slice_size, start, target_nz), vol.unit());
}

MaskVolume select_slices(const MaskVolume& vol, std::size_t target_nz) {
    const std::size_t start = window_start(vol.shape().nz, target_nz);
    const std::size_t slice_size = vol.shape().ny * vol.shape().nx;
    return MaskVolume({target_nz, vol.shape().ny, vol.shape().nx},
                      copy_window(vol.data(), slice_size, start, target_nz));
}

ScalarVolume resize_bilinear(const ScalarVolume& vol, std::size_t out_ny, std::size_t out_nx) {
    check_resize_dims(out_ny, out_nx);
    const Shape3 in = vol.shape();
    std::vector<double> data(in.nz * out_ny * out_nx);
    for (std::size_t z = 0; z < in.nz; ++z)
        resize_slice_bilinear(vol.data().data() + z * in.ny * in.nx, in.ny, in.nx,
                              data.data() + z * out_ny * out_nx, out_ny, out_nx);
    return ScalarVolume({in.nz, out_ny, out_nx}, std::move(data), vol.unit());
}

DwiVolume resize_bilinear(const DwiVolume& vol, std::size_t out_ny, std::size_t out_nx) {
    check_resize_dims(out_ny, out_nx);
    const Shape3 in = vol.shape();
    std::vector<double> data(vol.nb() * in.nz * out_ny * out_nx);
    for (std::size_t b = 0; b < vol.nb(); ++b)
        for (std::size_t z = 0; z < in.nz; ++z)
            resize_slice_bilinear(vol.data().data() + (b * in.nz + z) * in.ny * in.nx, in.ny, in.nx,
                                  data.data() + (b * in.nz + z) * out_ny * out_nx, out_ny, out_nx);
    return DwiVolume(vol.bvalues(), {in.nz, out_ny, out_nx}, std::move(data));
}

MaskVolume resize_nearest(const MaskVolume& vol, std::size_t out_ny, std::size_t out_nx) {
    check_resize_dims(out_ny, out_nx);
    const Shape3 in = vol.shape();
    std::vector<std::uint8_t> data(in.nz * out_ny * out_nx);
    for (std::size_t z = 0; z < in.nz; ++z) {
        const std::uint8_t* src = vol.data().data() + z * in.ny * in.nx;
        std::uint8_t* dst = data.data() + z * out_ny * out_nx;
        for (std::size_t oy = 0; oy < out_ny; ++oy) {
            const auto sy = static_cast<std::size_t>(std::llround(sample_coord(oy, out_ny, in.ny)));
            for (std::size_t ox = 0; ox < out_nx; ++ox) {
                const auto sx = static_cast<std::size_t>(std::llround(sample_coord(ox, out_nx, in.nx)));
                dst[oy * out_nx + ox] = src[std::min(sy, in.ny - 1) * in.nx + std::min(sx, in.nx - 1)];
            }
        }
    }
    return MaskVolume({in.nz, out_ny, out_nx}, std::move(data));
}

double otsu_threshold(std::span<const double> values, int n_bins) {
    if (values.empty())
        throw ValidationError("otsu_threshold requires a non-empty value list");
    if (n_bins < 1)
        throw ValidationError("otsu_threshold requires at least one bin");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (!std::isfinite(v))
            throw ValidationError("otsu_threshold requires finite values");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi)
        return lo;

    const auto bins = static_cast<std::size_t>(n_bins);
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> count(bins, 0);
    std::vector<double> sum(bins, 0.0);
    for (double v : values) {
        auto idx = static_cast<std::size_t>((v - lo) / width);
        idx = std::min(idx, bins - 1);
        count[idx] += 1;
        sum[idx] += v;
    }

    const auto n_total = static_cast<double>(values.size());
    double total_sum = 0.0;
    for (double s : sum)
        total_sum += s;

    // Split after bin k; the threshold is that bin's upper edge.
    double best_score = -1.0;
    std::size_t best_k = 0;
    double n0 = 0.0, s0 = 0.0;
    for (std::size_t k = 0; k + 1 < bins; ++k) {
        n0 += static_cast<double>(count[k]);
        s0 += sum[k];
        const double n1 = n_total - n0;
        if (n0 == 0.0 || n1 == 0.0)
            continue;
        const double mu0 = s0 / n0;
        const double mu1 = (total_sum - s0) / n1;
        const double diff = mu0 - mu1;
        const double score = n0 * n1 * diff * diff;
        if (score > best_score) {
            best_score = score;
            best_k = k;
        }
    }
    return lo + static_cast<double>(best_k + 1) * width;
}

namespace {

// Largest 6-connected component of a 3-D mask, via BFS over voxel indices.
std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& mask, Shape3 shape) {
    const std::size_t n = mask.size();
    std::vector<std::int32_t> label(n, -1);
    std::vector<std::size_t> queue;
    std::int32_t n_labels = 0;
    std::size_t best_size = 0;
    std::int32_t best_label = -1;

    const auto nz = static_cast<std::ptrdiff_t>(shape.nz);
    const auto ny = static_cast<std::ptrdiff_t>(shape.ny);
    const auto nx = static_cast<std::ptrdiff_t>(shape.nx);

    for (std::size_t start = 0; start < n; ++start) {
        if (!mask[start] || label[start] >= 0)
            continue;
        const std::int32_t current = n_labels++;
        std::size_t size = 0;
        queue.clear();
        queue.push_back(start);
        label[start] = current;
        while (!queue.empty()) {
            const std::size_t v = queue.back();
            queue.pop_back();
            ++size;
            const auto x = static_cast<std::ptrdiff_t>(v % shape.nx);
            const auto y = static_cast<std::ptrdiff_t>((v / shape.nx) % shape.ny);
            const auto z = static_cast<std::ptrdiff_t>(v / (shape.nx * shape.ny));
            const std::ptrdiff_t deltas[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                                 {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
            for (const auto& d : deltas) {
                const std::ptrdiff_t zz = z + d[0], yy = y + d[1], xx = x + d[2];
                if (zz < 0 || zz >= nz || yy < 0 || yy >= ny || xx < 0 || xx >= nx)
                    continue;
                const auto w = static_cast<std::size_t>((zz * ny + yy) * nx + xx);
                if (mask[w] && label[w] < 0) {
                    label[w] = current;
                    queue.push_back(w);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_label = current;
        }
    }

    std::vector<std::uint8_t> out(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (label[i] == best_label) ? 1 : 0;
    return out;
}

// Fills in-plane holes: anything not reachable from the slice border
// through unmasked pixels (4-connected) becomes mask.
void fill_holes_per_slice(std::vector<std::uint8_t>& mask, Shape3 shape) {
    const std::size_t slice_size = shape.ny * shape.nx;
    std::vector<std::uint8_t> outside(slice_size);
    std::vector<std::size_t> queue;
    for (std::size_t z = 0; z < shape.nz; ++z) {
        std::uint8_t* slice = mask.data() + z * slice_size;
        std::fill(outside.begin(), outside.end(), 0);
        queue.clear();
        auto push = [&](std::size_t y, std::size_t x) {
            const std::size_t i = y * shape.nx + x;
            if (!slice[i] && !outside[i]) {
                outside[i] = 1;
                queue.push_back(i);
            }
        };
        for (std::size_t x = 0; x < shape.nx; ++x) {
            push(0, x);
            push(shape.ny - 1, x);
        }
        for (std::size_t y = 0; y < shape.ny; ++y) {
            push(y, 0);
            push(y, shape.nx - 1);
        }
        while (!queue.empty()) {
            const std::size_t i = queue.back();
            queue.pop_back();
            const std::size_t y = i / shape.nx;
            const std::size_t x = i % shape.nx;
            if (x + 1 < shape.nx) push(y, x + 1);
            if (x > 0) push(y, x - 1);
            if (y + 1 < shape.ny) push(y + 1, x);
            if (y > 0) push(y - 1, x);
        }
        for (std::size_t i = 0; i < slice_size; ++i)
            if (!slice[i] && !outside[i])
                slice[i] = 1;
    }
}

} // namespace

MaskVolume compute_breast_mask(const DwiVolume& dwi) {
    // Anatomy reference is the lowest b-value (b=0 when present).
    const ScalarVolume reference = extract_b_slice(dwi, dwi.bvalues()[0]);
    const double threshold = otsu_threshold(reference.data());

    std::vector<std::uint8_t> mask(reference.size());
    std::size_t n_set = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        mask[i] = reference.data()[i] > threshold ? 1 : 0;
        n_set += mask[i];
    }
    if (n_set == 0)
        throw ValidationError("breast mask is empty after thresholding");

    mask = largest_component(mask, reference.shape());
    fill_holes_per_slice(mask, reference.shape());
    return MaskVolume(reference.shape(), std::move(mask));
}

std::size_t count_components(const MaskVolume& mask) {
    const auto& data = mask.data();
    const Shape3 shape = mask.shape();
    std::vector<std::uint8_t> seen(data.size(), 0);
    std::vector<std::size_t> queue;
    std::size_t n_components = 0;

    const auto nz = static_cast<std::ptrdiff_t>(shape.nz);
    const auto ny = static_cast<std::ptrdiff_t>(shape.ny);
    const auto nx = static_cast<std::ptrdiff_t>(shape.nx);

    for (std::size_t start = 0; start < data.size(); ++start) {
        if (!data[start] || seen[start])
            continue;
        ++n_components;
        queue.clear();
        queue.push_back(start);
        seen[start] = 1;
        while (!queue.empty()) {
            const std::size_t v = queue.back();
            queue.pop_back();
            const auto x = static_cast<std::ptrdiff_t>(v % shape.nx);
            const auto y = static_cast<std::ptrdiff_t>((v / shape.nx) % shape.ny);
            const auto z = static_cast<std::ptrdiff_t>(v / (shape.nx * shape.ny));
            const std::ptrdiff_t deltas[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                                 {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
            for (const auto& d : deltas) {
                const std::ptrdiff_t zz = z + d[0], yy = y + d[1], xx = x + d[2];
                if (zz < 0 || zz >= nz || yy < 0 || yy >= ny || xx < 0 || xx >= nx)
                    continue;
                const auto w = static_cast<std::size_t>((zz * ny + yy) * nx + xx);
                if (data[w] && !seen[w]) {
                    seen[w] = 1;
                    queue.push_back(w);
                }
            }
        }
    }
    return n_components;
}

} // namespace cdis
