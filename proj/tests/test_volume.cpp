#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cdis/errors.hpp"
#include "cdis/volume.hpp"
#include "cdis/volume_io.hpp"

#include "test_util.hpp"

using namespace cdis;
using testutil::TempDir;

TEST_SUITE("volume-core") {

TEST_CASE("b-value list accepts strictly increasing non-negative values") {
    BValueList b({0.0, 100.0, 600.0, 800.0});
    CHECK(b.size() == 4);
    CHECK(b[0] == 0.0);
    CHECK(b[3] == 800.0);
    CHECK(b.describe() == "[0, 100, 600, 800]");
    CHECK(b.index_of(600.0).value() == 2);
    CHECK(!b.index_of(700.0).has_value());

    // Single b-value is a legal list; the fit layer is what needs two.
    CHECK(BValueList({800.0}).size() == 1);
}

TEST_CASE("b-value list rejects malformed input") {
    CHECK_THROWS_AS(BValueList({}), ValidationError);
    CHECK_THROWS_AS(BValueList({0.0, 100.0, 100.0}), ValidationError);
    CHECK_THROWS_AS(BValueList({100.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(BValueList({-5.0, 100.0}), ValidationError);
    CHECK_THROWS_AS(BValueList({0.0, std::numeric_limits<double>::infinity()}), ValidationError);
    CHECK_THROWS_AS(BValueList({std::numeric_limits<double>::quiet_NaN()}), ValidationError);
}

TEST_CASE("volume constructors enforce shape and payload invariants") {
    CHECK_THROWS_AS(ScalarVolume({0, 2, 2}, {}, Unit::signal), ValidationError);
    CHECK_THROWS_AS(ScalarVolume({1, 2, 2}, {1.0, 2.0, 3.0}, Unit::signal), ValidationError);
    CHECK_THROWS_AS(ScalarVolume({1, 1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()},
                                 Unit::signal),
                    ValidationError);

    CHECK_THROWS_AS(MaskVolume({1, 1, 2}, {0, 2}), ValidationError);
    CHECK_THROWS_AS(MaskVolume({1, 1, 2}, {0}), ValidationError);

    CHECK_THROWS_AS(DwiVolume(BValueList({0.0, 800.0}), {1, 1, 2}, {1.0, 2.0, 3.0}),
                    ValidationError);

    // Indexing is (z, y, x) row-major with x fastest.
    ScalarVolume s({2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, Unit::dimensionless);
    CHECK(s(0, 0, 0) == 0.0);
    CHECK(s(0, 1, 2) == 5.0);
    CHECK(s(1, 0, 1) == 7.0);
    CHECK(s(1, 1, 2) == 11.0);

    MaskVolume m({1, 2, 2}, {0, 1, 1, 0});
    CHECK(m.count() == 2);
    CHECK(m(0, 0, 1));
    CHECK(!m(0, 1, 1));
}

TEST_CASE("extract_b_slice returns the exact per-b sub-volume") {
    const BValueList bvals({0.0, 100.0, 600.0, 800.0});
    const Shape3 shape{2, 3, 4};
    std::vector<double> data(bvals.size() * shape.count());
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<double>(i) * 0.5 + 1.0;
    DwiVolume dwi(bvals, shape, data);

    for (std::size_t bi = 0; bi < bvals.size(); ++bi) {
        ScalarVolume slice = extract_b_slice(dwi, bvals[bi]);
        CHECK(slice.shape() == shape);
        CHECK(slice.unit() == Unit::signal);
        for (std::size_t z = 0; z < shape.nz; ++z)
            for (std::size_t y = 0; y < shape.ny; ++y)
                for (std::size_t x = 0; x < shape.nx; ++x)
                    CHECK(slice(z, y, x) == dwi(bi, z, y, x));
    }
}

TEST_CASE("extract_b_slice names the available b-values on a miss") {
    DwiVolume dwi(BValueList({0.0, 100.0, 600.0, 800.0}), {1, 1, 1}, {1.0, 2.0, 3.0, 4.0});
    CHECK_THROWS_WITH_AS(extract_b_slice(dwi, 500.0),
                         doctest::Contains("[0, 100, 600, 800]"), ValidationError);
}

TEST_CASE("scalar payload [1.0, 2.0] serializes to pinned little-endian bytes") {
    TempDir dir("vol_pinned");
    ScalarVolume vol({1, 1, 2}, {1.0, 2.0}, Unit::signal);
    write_volume(vol, dir.str("v"));

    const auto raw = testutil::read_bytes(dir.str("v.raw"));
    const std::vector<std::uint8_t> expected = {0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40};
    CHECK(raw == expected);
}

TEST_CASE("all-zero mask serializes to zero bytes") {
    TempDir dir("vol_maskzero");
    write_volume(MaskVolume::zeros({1, 2, 2}), dir.str("m"));
    const auto raw = testutil::read_bytes(dir.str("m.raw"));
    CHECK(raw == std::vector<std::uint8_t>(4, 0x00));
}

TEST_CASE("float32-representable volumes round-trip bit-identically") {
    TempDir dir("vol_roundtrip");
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);

    const Shape3 shape{3, 5, 7};
    std::vector<double> data(shape.count() * 2);
    for (double& v : data)
        v = static_cast<double>(static_cast<float>(dist(rng)));  // force f32-representable

    DwiVolume dwi(BValueList({0.0, 800.0}), shape, data);
    write_volume(dwi, dir.str("d"));
    DwiVolume back = read_dwi(dir.str("d"));
    CHECK(back.bvalues() == dwi.bvalues());
    CHECK(back.shape() == dwi.shape());
    CHECK(back.data() == dwi.data());

    ScalarVolume sv(shape, std::vector<double>(data.begin(), data.begin() + shape.count()),
                    Unit::adc_mm2_per_s);
    write_volume(sv, dir.str("s"));
    ScalarVolume sback = read_scalar(dir.str("s"));
    CHECK(sback.unit() == Unit::adc_mm2_per_s);
    CHECK(sback.data() == sv.data());

    std::vector<std::uint8_t> mdata(shape.count());
    for (std::size_t i = 0; i < mdata.size(); ++i)
        mdata[i] = static_cast<std::uint8_t>(i % 2);
    MaskVolume mask(shape, mdata);
    write_volume(mask, dir.str("m"));
    CHECK(read_mask(dir.str("m")) == mask);
}

TEST_CASE("write-read-write is byte stable") {
    TempDir dir("vol_stable");
    ScalarVolume vol({2, 3, 3}, std::vector<double>(18, 0.125), Unit::dimensionless);
    write_volume(vol, dir.str("a"));
    write_volume(read_scalar(dir.str("a")), dir.str("b"));
    CHECK(testutil::read_bytes(dir.str("a.json")) == testutil::read_bytes(dir.str("b.json")));
    CHECK(testutil::read_bytes(dir.str("a.raw")) == testutil::read_bytes(dir.str("b.raw")));
}

TEST_CASE("values outside float32 range are rejected at write time") {
    TempDir dir("vol_huge");
    ScalarVolume vol({1, 1, 1}, {1e300}, Unit::dimensionless);
    CHECK_THROWS_AS(write_volume(vol, dir.str("h")), ValidationError);
}

TEST_CASE("missing bundle reports an I/O error") {
    TempDir dir("vol_missing");
    CHECK_THROWS_AS(read_volume(dir.str("nope")), IoError);
}

TEST_CASE("malformed or incomplete headers are corrupt, not I/O noise") {
    TempDir dir("vol_badhdr");

    testutil::write_text(dir.str("a.json"), "{not json");
    testutil::write_bytes(dir.str("a.raw"), {});
    CHECK_THROWS_AS(read_volume(dir.str("a")), CorruptFileError);

    testutil::write_text(dir.str("b.json"), R"({"format_version": 1, "dtype": "f32le"})");
    testutil::write_bytes(dir.str("b.raw"), {});
    CHECK_THROWS_AS(read_volume(dir.str("b")), CorruptFileError);

    // 2-D shape is neither a scalar volume nor an acquisition.
    testutil::write_text(dir.str("c.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [2, 2]})");
    testutil::write_bytes(dir.str("c.raw"), std::vector<std::uint8_t>(16, 0));
    CHECK_THROWS_AS(read_volume(dir.str("c")), CorruptFileError);
}

TEST_CASE("unknown version and dtype are unsupported-format errors") {
    TempDir dir("vol_unsup");

    testutil::write_text(dir.str("v.json"),
                         R"({"format_version": 2, "dtype": "f32le", "shape": [1, 1, 1]})");
    testutil::write_bytes(dir.str("v.raw"), std::vector<std::uint8_t>(4, 0));
    CHECK_THROWS_AS(read_volume(dir.str("v")), UnsupportedFormatError);

    testutil::write_text(dir.str("d.json"),
                         R"({"format_version": 1, "dtype": "f64le", "shape": [1, 1, 1]})");
    testutil::write_bytes(dir.str("d.raw"), std::vector<std::uint8_t>(8, 0));
    CHECK_THROWS_AS(read_volume(dir.str("d")), UnsupportedFormatError);
}

TEST_CASE("payload length must match the declared shape") {
    TempDir dir("vol_len");
    testutil::write_text(dir.str("t.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [1, 1, 2],
                             "unit": "signal"})");
    testutil::write_bytes(dir.str("t.raw"), std::vector<std::uint8_t>(4, 0));  // one value, not two
    CHECK_THROWS_AS(read_volume(dir.str("t")), CorruptFileError);
}

TEST_CASE("4-D headers need matching b-values") {
    TempDir dir("vol_bv");

    testutil::write_text(dir.str("nb.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [2, 1, 1, 1],
                             "unit": "signal"})");
    testutil::write_bytes(dir.str("nb.raw"), std::vector<std::uint8_t>(8, 0));
    CHECK_THROWS_AS(read_volume(dir.str("nb")), CorruptFileError);

    testutil::write_text(dir.str("mm.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [2, 1, 1, 1],
                             "bvalues": [0.0], "unit": "signal"})");
    testutil::write_bytes(dir.str("mm.raw"), std::vector<std::uint8_t>(8, 0));
    CHECK_THROWS_AS(read_volume(dir.str("mm")), CorruptFileError);
}

TEST_CASE("u8 bundles must be 3-D") {
    TempDir dir("vol_u8");
    testutil::write_text(dir.str("m.json"),
                         R"({"format_version": 1, "dtype": "u8", "shape": [1, 1, 1, 2]})");
    testutil::write_bytes(dir.str("m.raw"), {0, 1});
    CHECK_THROWS_AS(read_volume(dir.str("m")), CorruptFileError);
}

TEST_CASE("non-finite float payload is rejected") {
    TempDir dir("vol_inf");
    testutil::write_text(dir.str("i.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [1, 1, 1],
                             "unit": "signal"})");
    testutil::write_bytes(dir.str("i.raw"), {0x00, 0x00, 0x80, 0x7F});  // +inf
    CHECK_THROWS_AS(read_volume(dir.str("i")), ValidationError);
}

TEST_CASE("typed readers reject bundles of the wrong kind") {
    TempDir dir("vol_kind");
    write_volume(ScalarVolume::filled({1, 1, 1}, 1.0, Unit::signal), dir.str("s"));
    write_volume(MaskVolume::zeros({1, 1, 1}), dir.str("m"));
    write_volume(DwiVolume(BValueList({0.0, 800.0}), {1, 1, 1}, {1.0, 2.0}), dir.str("d"));

    CHECK_THROWS_AS(read_dwi(dir.str("s")), ValidationError);
    CHECK_THROWS_AS(read_scalar(dir.str("m")), ValidationError);
    CHECK_THROWS_AS(read_scalar(dir.str("d")), ValidationError);
    CHECK_THROWS_AS(read_mask(dir.str("s")), ValidationError);
}

TEST_CASE("scalar bundles without a unit default to dimensionless") {
    TempDir dir("vol_nounit");
    testutil::write_text(dir.str("n.json"),
                         R"({"format_version": 1, "dtype": "f32le", "shape": [1, 1, 1]})");
    testutil::write_bytes(dir.str("n.raw"), {0x00, 0x00, 0x80, 0x3F});
    CHECK(read_scalar(dir.str("n")).unit() == Unit::dimensionless);
}

TEST_CASE("unit tags round-trip and reject unknown names") {
    for (Unit u : {Unit::signal, Unit::adc_mm2_per_s, Unit::dimensionless})
        CHECK(unit_from_string(to_string(u)) == u);
    CHECK_THROWS_AS(unit_from_string("parsec"), ValidationError);
}

} // TEST_SUITE
