#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "segbench/nifti.hpp"

using namespace segbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "segbench_nifti_tests";
    fs::create_directories(dir);
    return dir;
}

TypedVolume sample_volume(VoxelType type) {
    TypedVolume v;
    v.dims = {4, 3, 5};
    v.spacing = {0.75, 1.25, 3.0};
    v.type = type;
    std::mt19937_64 rng(99);
    const std::size_t n = v.dims.count();
    switch (type) {
    case VoxelType::U8:
        for (std::size_t i = 0; i < n; ++i)
            v.u8.push_back(static_cast<std::uint8_t>(rng() % 256));
        break;
    case VoxelType::I16:
        for (std::size_t i = 0; i < n; ++i)
            v.i16.push_back(static_cast<std::int16_t>(static_cast<int>(rng() % 4000) - 2000));
        break;
    case VoxelType::F32: {
        std::uniform_real_distribution<float> val(-1.0f, 1.0f);
        for (std::size_t i = 0; i < n; ++i) v.f32.push_back(val(rng));
        break;
    }
    }
    return v;
}

void check_equal(const TypedVolume& a, const TypedVolume& b) {
    CHECK(a.dims == b.dims);
    CHECK(a.spacing.sx == doctest::Approx(b.spacing.sx).epsilon(1e-6));
    CHECK(a.spacing.sy == doctest::Approx(b.spacing.sy).epsilon(1e-6));
    CHECK(a.spacing.sz == doctest::Approx(b.spacing.sz).epsilon(1e-6));
    CHECK(a.type == b.type);
    CHECK(a.u8 == b.u8);
    CHECK(a.i16 == b.i16);
    CHECK(a.f32 == b.f32);
}

// byte-level header surgery for malformed-input tests
std::vector<char> read_all(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_all(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("nifti header echo") {
    const fs::path path = temp_dir() / "echo.nii";
    TypedVolume v;
    v.dims = {4, 4, 4};
    v.spacing = {1, 1, 3};
    v.type = VoxelType::U8;
    v.u8.assign(64, 7);
    write_nifti(v, path.string());

    const TypedVolume r = read_nifti(path.string());
    CHECK(r.dims == GridDims{4, 4, 4});
    CHECK(r.spacing.sx == doctest::Approx(1.0));
    CHECK(r.spacing.sz == doctest::Approx(3.0));
    const LabelVolume labels = to_labels(r);
    CHECK(labels.data == v.u8);
}

TEST_CASE("nifti round-trip for every dtype, plain and gzipped") {
    for (VoxelType type : {VoxelType::U8, VoxelType::I16, VoxelType::F32}) {
        const TypedVolume v = sample_volume(type);
        for (const char* name : {"rt.nii", "rt.nii.gz"}) {
            const fs::path path = temp_dir() / name;
            write_nifti(v, path.string());
            check_equal(v, read_nifti(path.string()));
        }
    }
}

TEST_CASE("raw sidecar round-trip") {
    for (VoxelType type : {VoxelType::U8, VoxelType::I16, VoxelType::F32}) {
        const TypedVolume v = sample_volume(type);
        const fs::path base = temp_dir() / "fixture";
        write_raw(v, base.string() + ".raw");
        check_equal(v, read_raw(base.string() + ".json"));
        check_equal(v, read_volume(base.string() + ".raw"));
    }
}

TEST_CASE("bad magic is a distinct error") {
    const fs::path path = temp_dir() / "badmagic.nii";
    write_nifti(sample_volume(VoxelType::U8), path.string());
    std::vector<char> bytes = read_all(path);
    std::memcpy(bytes.data() + 344, "abc", 4);
    write_all(path, bytes);
    try {
        read_nifti(path.string());
        FAIL("expected NiftiError");
    } catch (const NiftiError& e) {
        CHECK(e.code == NiftiError::Code::BadMagic);
    }
}

TEST_CASE("unsupported dtype is a distinct error") {
    const fs::path path = temp_dir() / "baddtype.nii";
    write_nifti(sample_volume(VoxelType::U8), path.string());
    std::vector<char> bytes = read_all(path);
    const std::int16_t dt_float64 = 64;
    std::memcpy(bytes.data() + 70, &dt_float64, 2);
    write_all(path, bytes);
    try {
        read_nifti(path.string());
        FAIL("expected NiftiError");
    } catch (const NiftiError& e) {
        CHECK(e.code == NiftiError::Code::UnsupportedDtype);
    }
}

TEST_CASE("dim[0] != 3 is a distinct error") {
    const fs::path path = temp_dir() / "baddim.nii";
    write_nifti(sample_volume(VoxelType::U8), path.string());
    std::vector<char> bytes = read_all(path);
    const std::int16_t four = 4;
    std::memcpy(bytes.data() + 40, &four, 2);
    write_all(path, bytes);
    try {
        read_nifti(path.string());
        FAIL("expected NiftiError");
    } catch (const NiftiError& e) {
        CHECK(e.code == NiftiError::Code::BadDim);
    }
}

TEST_CASE("truncated payload is a distinct error") {
    const fs::path path = temp_dir() / "short.nii";
    write_nifti(sample_volume(VoxelType::I16), path.string());
    std::vector<char> bytes = read_all(path);
    bytes.resize(bytes.size() - 10);
    write_all(path, bytes);
    try {
        read_nifti(path.string());
        FAIL("expected NiftiError");
    } catch (const NiftiError& e) {
        CHECK(e.code == NiftiError::Code::Truncated);
    }
}

TEST_CASE("non-nifti garbage is rejected") {
    const fs::path path = temp_dir() / "garbage.nii";
    write_all(path, std::vector<char>(400, 'x'));
    CHECK_THROWS_AS(read_nifti(path.string()), NiftiError);
}

TEST_CASE("big-endian files read correctly") {
    const TypedVolume v = sample_volume(VoxelType::I16);
    const fs::path path = temp_dir() / "be.nii";
    write_nifti(v, path.string());
    std::vector<char> bytes = read_all(path);

    auto swap_at = [&](std::size_t off, std::size_t width) {
        for (std::size_t i = 0; i < width / 2; ++i)
            std::swap(bytes[off + i], bytes[off + width - 1 - i]);
    };
    swap_at(0, 4); // sizeof_hdr
    for (int i = 0; i < 8; ++i) swap_at(40 + 2 * static_cast<std::size_t>(i), 2); // dim
    swap_at(70, 2);                                                               // datatype
    swap_at(72, 2);                                                               // bitpix
    for (int i = 0; i < 8; ++i) swap_at(76 + 4 * static_cast<std::size_t>(i), 4); // pixdim
    swap_at(108, 4);                                                              // vox_offset
    swap_at(112, 4);
    swap_at(116, 4);
    for (std::size_t i = 352; i + 1 < bytes.size(); i += 2) std::swap(bytes[i], bytes[i + 1]);
    write_all(path, bytes);

    check_equal(v, read_nifti(path.string()));
}

TEST_CASE("ni1 header pair reads from the sibling img") {
    const TypedVolume v = sample_volume(VoxelType::U8);
    const fs::path nii = temp_dir() / "pair.nii";
    write_nifti(v, nii.string());
    std::vector<char> bytes = read_all(nii);
    std::memcpy(bytes.data() + 344, "ni1", 4);
    const fs::path hdr = temp_dir() / "pair.hdr";
    const fs::path img = temp_dir() / "pair.img";
    write_all(hdr, std::vector<char>(bytes.begin(), bytes.begin() + 348));
    write_all(img, std::vector<char>(bytes.begin() + 352, bytes.end()));
    check_equal(v, read_nifti(hdr.string()));
}

TEST_CASE("scl slope and intercept apply to scalar reads") {
    TypedVolume v = sample_volume(VoxelType::I16);
    v.scl_slope = 0.5f;
    v.scl_inter = 10.0f;
    const fs::path path = temp_dir() / "scl.nii";
    write_nifti(v, path.string());
    const ScalarVolume s = to_scalar(read_nifti(path.string()));
    for (std::size_t i = 0; i < v.i16.size(); ++i)
        CHECK(s.data[i] == doctest::Approx(v.i16[i] * 0.5f + 10.0f));
    // scaled payloads cannot be label volumes
    CHECK_THROWS_AS(to_labels(read_nifti(path.string())), NiftiError);
}

TEST_CASE("unwritable path reports an io error") {
    CHECK_THROWS_AS(write_nifti(sample_volume(VoxelType::U8), "/nonexistent-dir/x.nii"),
                    NiftiError);
}

TEST_CASE("label conversion rejects out-of-range and float inputs") {
    TypedVolume v = sample_volume(VoxelType::I16);
    v.i16[0] = 300;
    CHECK_THROWS_AS(to_labels(v), NiftiError);
    CHECK_THROWS_AS(to_labels(sample_volume(VoxelType::F32)), NiftiError);
}
