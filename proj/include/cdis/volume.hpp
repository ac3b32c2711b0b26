#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdis/errors.hpp"

namespace cdis {

/// Physical unit tag carried by a ScalarVolume.
enum class Unit { signal, adc_mm2_per_s, dimensionless };

std::string to_string(Unit unit);
Unit unit_from_string(const std::string& name);

/// Strictly increasing list of non-negative, finite b-values (s/mm^2).
class BValueList {
public:
    explicit BValueList(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    /// Index of an exactly matching b-value, if present.
    std::optional<std::size_t> index_of(double b) const;

    /// "[0, 100, 600, 800]" - used in error messages.
    std::string describe() const;

    bool operator==(const BValueList&) const = default;

private:
    std::vector<double> values_;
};

/// Spatial grid dimensions, slice-major: (nz, ny, nx).
struct Shape3 {
    std::size_t nz = 0;
    std::size_t ny = 0;
    std::size_t nx = 0;

    std::size_t count() const { return nz * ny * nx; }
    bool operator==(const Shape3&) const = default;
    std::string describe() const;
};

/// 3-D float map (ADC, single-b DWI extract, mixed output).
/// Immutable after construction; arithmetic is carried out in double,
/// the on-disk payload is float32.
class ScalarVolume {
public:
    ScalarVolume(Shape3 shape, std::vector<double> data, Unit unit);

    static ScalarVolume filled(Shape3 shape, double value, Unit unit);

    const Shape3& shape() const { return shape_; }
    Unit unit() const { return unit_; }
    const std::vector<double>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t z, std::size_t y, std::size_t x) const {
        return data_[(z * shape_.ny + y) * shape_.nx + x];
    }

private:
    Shape3 shape_;
    Unit unit_;
    std::vector<double> data_;
};

/// 3-D binary map; voxel values are exactly 0 or 1.
class MaskVolume {
public:
    MaskVolume(Shape3 shape, std::vector<std::uint8_t> data);

    static MaskVolume zeros(Shape3 shape);

    const Shape3& shape() const { return shape_; }
    const std::vector<std::uint8_t>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }

    bool operator()(std::size_t z, std::size_t y, std::size_t x) const {
        return data_[(z * shape_.ny + y) * shape_.nx + x] != 0;
    }

    /// Number of set voxels.
    std::size_t count() const;

    bool operator==(const MaskVolume&) const = default;

private:
    Shape3 shape_;
    std::vector<std::uint8_t> data_;
};

/// 4-D acquisition container indexed (b, z, y, x), b slowest.
class DwiVolume {
public:
    DwiVolume(BValueList bvalues, Shape3 shape, std::vector<double> data);

    std::size_t nb() const { return bvalues_.size(); }
    const BValueList& bvalues() const { return bvalues_; }
    const Shape3& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }
    std::size_t voxels_per_b() const { return shape_.count(); }

    double operator()(std::size_t b, std::size_t z, std::size_t y, std::size_t x) const {
        return data_[((b * shape_.nz + z) * shape_.ny + y) * shape_.nx + x];
    }

private:
    BValueList bvalues_;
    Shape3 shape_;
    std::vector<double> data_;
};

/// 3-D volume of the signals at one native b-value (exact match required).
/// Throws ValidationError listing the available b-values when absent.
ScalarVolume extract_b_slice(const DwiVolume& dwi, double b);

} // namespace cdis
