#include "cdis/volume.hpp"

#include <cmath>
#include <sstream>

namespace cdis {

std::string to_string(Unit unit) {
    switch (unit) {
    case Unit::signal: return "signal";
    case Unit::adc_mm2_per_s: return "adc_mm2_per_s";
    case Unit::dimensionless: return "dimensionless";
    }
    return "dimensionless";
}

Unit unit_from_string(const std::string& name) {
    if (name == "signal") return Unit::signal;
    if (name == "adc_mm2_per_s") return Unit::adc_mm2_per_s;
    if (name == "dimensionless") return Unit::dimensionless;
    throw ValidationError("unknown unit tag: \"" + name + "\"");
}

std::string Shape3::describe() const {
    std::ostringstream os;
    os << "(" << nz << ", " << ny << ", " << nx << ")";
    return os.str();
}

BValueList::BValueList(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty())
        throw ValidationError("b-value list must not be empty");
    double prev = -1.0;
    for (double b : values_) {
        if (!std::isfinite(b))
            throw ValidationError("b-values must be finite");
        if (b < 0.0)
            throw ValidationError("b-values must be non-negative");
        if (b <= prev)
            throw ValidationError("b-values must be strictly increasing: " + describe());
        prev = b;
    }
}

std::optional<std::size_t> BValueList::index_of(double b) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] == b)
            return i;
    return std::nullopt;
}

std::string BValueList::describe() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < values_.size(); ++i)
        os << (i ? ", " : "") << values_[i];
    os << "]";
    return os.str();
}

namespace {

void check_shape(const Shape3& shape) {
    if (shape.nz == 0 || shape.ny == 0 || shape.nx == 0)
        throw ValidationError("volume dimensions must be positive, got " + shape.describe());
}

void check_finite(const std::vector<double>& data) {
    for (double v : data)
        if (!std::isfinite(v))
            throw ValidationError("volume data must be finite");
}

} // namespace

ScalarVolume::ScalarVolume(Shape3 shape, std::vector<double> data, Unit unit)
    : shape_(shape), unit_(unit), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.count())
        throw ValidationError("scalar volume data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_.describe());
    check_finite(data_);
}

ScalarVolume ScalarVolume::filled(Shape3 shape, double value, Unit unit) {
    return ScalarVolume(shape, std::vector<double>(shape.count(), value), unit);
}

MaskVolume::MaskVolume(Shape3 shape, std::vector<std::uint8_t> data)
    : shape_(shape), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.count())
        throw ValidationError("mask volume data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_.describe());
    for (std::uint8_t v : data_)
        if (v > 1)
            throw ValidationError("mask voxels must be 0 or 1");
}

MaskVolume MaskVolume::zeros(Shape3 shape) {
    return MaskVolume(shape, std::vector<std::uint8_t>(shape.count(), 0));
}

std::size_t MaskVolume::count() const {
    std::size_t n = 0;
    for (std::uint8_t v : data_)
        n += v;
    return n;
}

DwiVolume::DwiVolume(BValueList bvalues, Shape3 shape, std::vector<double> data)
    : bvalues_(std::move(bvalues)), shape_(shape), data_(std::move(data)) {
    check_shape(shape_);
    const std::size_t expected = bvalues_.size() * shape_.count();
    if (data_.size() != expected)
        throw ValidationError("DWI data length " + std::to_string(data_.size()) + " does not match " +
                              std::to_string(bvalues_.size()) + " x " + shape_.describe());
    check_finite(data_);
}

ScalarVolume extract_b_slice(const DwiVolume& dwi, double b) {
    const auto index = dwi.bvalues().index_of(b);
    if (!index) {
        std::ostringstream os;
        os << "b-value " << b << " not present; available: " << dwi.bvalues().describe();
        throw ValidationError(os.str());
    }
    const std::size_t n = dwi.voxels_per_b();
    const double* begin = dwi.data().data() + *index * n;
    return ScalarVolume(dwi.shape(), std::vector<double>(begin, begin + n), Unit::signal);
}

} // namespace cdis
