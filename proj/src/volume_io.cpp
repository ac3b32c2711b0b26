#include "cdis/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace cdis {

namespace {

constexpr int kFormatVersion = 1;

void append_f32le(std::vector<std::uint8_t>& out, double v, const std::string& stem) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f))
        throw ValidationError("value " + std::to_string(v) +
                              " is not representable as float32 while writing " + stem);
    const auto bits = std::bit_cast<std::uint32_t>(f);
    out.push_back(static_cast<std::uint8_t>(bits & 0xFF));
    out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xFF));
}

double parse_f32le(const std::uint8_t* p, const std::string& stem) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                               (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f))
        throw ValidationError("non-finite float32 payload in " + stem + ".raw");
    return static_cast<double>(f);
}

void write_file(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out)
        throw IoError("write failed for " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw IoError("cannot open " + path + " for reading");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char*>(data.data()), size);
        if (!in)
            throw IoError("read failed for " + path);
    }
    return data;
}

void write_bundle(const nlohmann::json& header, const std::vector<std::uint8_t>& payload,
                  const std::string& stem) {
    const std::string text = header.dump();
    write_file(stem + ".json", text.data(), text.size());
    write_file(stem + ".raw", payload.data(), payload.size());
}

} // namespace

void write_volume(const DwiVolume& vol, const std::string& stem) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["dtype"] = "f32le";
    header["shape"] = {vol.nb(), vol.shape().nz, vol.shape().ny, vol.shape().nx};
    header["bvalues"] = vol.bvalues().values();
    header["unit"] = to_string(Unit::signal);
    std::vector<std::uint8_t> payload;
    payload.reserve(vol.size() * 4);
    for (double v : vol.data())
        append_f32le(payload, v, stem);
    write_bundle(header, payload, stem);
}

void write_volume(const ScalarVolume& vol, const std::string& stem) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["dtype"] = "f32le";
    header["shape"] = {vol.shape().nz, vol.shape().ny, vol.shape().nx};
    header["unit"] = to_string(vol.unit());
    std::vector<std::uint8_t> payload;
    payload.reserve(vol.size() * 4);
    for (double v : vol.data())
        append_f32le(payload, v, stem);
    write_bundle(header, payload, stem);
}

void write_volume(const MaskVolume& vol, const std::string& stem) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["dtype"] = "u8";
    header["shape"] = {vol.shape().nz, vol.shape().ny, vol.shape().nx};
    write_bundle(header, vol.data(), stem);
}

void write_volume(const AnyVolume& vol, const std::string& stem) {
    std::visit([&](const auto& v) { write_volume(v, stem); }, vol);
}

AnyVolume read_volume(const std::string& stem) {
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(read_file(stem + ".json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptFileError("malformed header " + stem + ".json: " + e.what());
    }
    if (!header.is_object() || !header.contains("format_version") || !header.contains("dtype") ||
        !header.contains("shape"))
        throw CorruptFileError("header " + stem + ".json is missing required fields");

    const int version = header["format_version"].get<int>();
    if (version != kFormatVersion)
        throw UnsupportedFormatError("unsupported format_version " + std::to_string(version) +
                                     " in " + stem + ".json");
    const std::string dtype = header["dtype"].get<std::string>();
    if (dtype != "f32le" && dtype != "u8")
        throw UnsupportedFormatError("unsupported dtype \"" + dtype + "\" in " + stem + ".json");

    const auto dims = header["shape"].get<std::vector<std::size_t>>();
    if (dims.size() != 3 && dims.size() != 4)
        throw CorruptFileError("shape in " + stem + ".json must have 3 or 4 dimensions");
    std::size_t total = 1;
    for (std::size_t d : dims)
        total *= d;

    const std::vector<std::uint8_t> payload = read_file(stem + ".raw");
    const std::size_t elem_size = dtype == "f32le" ? 4 : 1;
    if (payload.size() != total * elem_size)
        throw CorruptFileError(stem + ".raw holds " + std::to_string(payload.size()) +
                               " bytes, expected " + std::to_string(total * elem_size));

    if (dtype == "u8") {
        if (dims.size() != 3)
            throw CorruptFileError("u8 bundles must be 3-D in " + stem + ".json");
        return MaskVolume({dims[0], dims[1], dims[2]}, payload);
    }

    std::vector<double> values(total);
    for (std::size_t i = 0; i < total; ++i)
        values[i] = parse_f32le(payload.data() + i * 4, stem);

    if (dims.size() == 4) {
        if (!header.contains("bvalues"))
            throw CorruptFileError("4-D bundle " + stem + ".json is missing bvalues");
        auto bvalues = header["bvalues"].get<std::vector<double>>();
        if (bvalues.size() != dims[0])
            throw CorruptFileError("bvalues length does not match shape[0] in " + stem + ".json");
        return DwiVolume(BValueList(std::move(bvalues)), {dims[1], dims[2], dims[3]},
                         std::move(values));
    }

    Unit unit = Unit::dimensionless;
    if (header.contains("unit"))
        unit = unit_from_string(header["unit"].get<std::string>());
    return ScalarVolume({dims[0], dims[1], dims[2]}, std::move(values), unit);
}

DwiVolume read_dwi(const std::string& stem) {
    AnyVolume vol = read_volume(stem);
    if (auto* dwi = std::get_if<DwiVolume>(&vol))
        return std::move(*dwi);
    throw ValidationError(stem + " does not hold a 4-D DWI bundle");
}

ScalarVolume read_scalar(const std::string& stem) {
    AnyVolume vol = read_volume(stem);
    if (auto* s = std::get_if<ScalarVolume>(&vol))
        return std::move(*s);
    throw ValidationError(stem + " does not hold a 3-D scalar bundle");
}

MaskVolume read_mask(const std::string& stem) {
    AnyVolume vol = read_volume(stem);
    if (auto* m = std::get_if<MaskVolume>(&vol))
        return std::move(*m);
    throw ValidationError(stem + " does not hold a mask bundle");
}

} // namespace cdis
