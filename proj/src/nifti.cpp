#include "segbench/nifti.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace segbench {

namespace {

using Code = NiftiError::Code;

// NIfTI-1 datatype codes
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

constexpr std::size_t kHeaderSize = 348;

template <class T>
T load_le(const unsigned char* p, bool swap) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <class T>
void store(unsigned char* p, T v) {
    std::memcpy(p, &v, sizeof(T));
}

template <class T>
void byteswap_inplace(std::vector<T>& v) {
    for (T& x : v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &x, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&x, b, sizeof(T));
    }
}

// gzFile reads both gzip and plain streams transparently.
struct GzReader {
    gzFile f = nullptr;
    explicit GzReader(const std::string& path) {
        f = gzopen(path.c_str(), "rb");
        if (!f) throw NiftiError(Code::IoFailure, "cannot open " + path);
    }
    ~GzReader() {
        if (f) gzclose(f);
    }
    std::size_t read(void* dst, std::size_t n) {
        std::size_t total = 0;
        auto* p = static_cast<unsigned char*>(dst);
        while (total < n) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(n - total, 1u << 30));
            const int got = gzread(f, p + total, chunk);
            if (got <= 0) break;
            total += static_cast<std::size_t>(got);
        }
        return total;
    }
    void skip(std::size_t n) {
        std::vector<unsigned char> scratch(std::min<std::size_t>(n, 1 << 16));
        while (n > 0) {
            const std::size_t chunk = std::min(n, scratch.size());
            if (read(scratch.data(), chunk) != chunk)
                throw NiftiError(Code::Truncated, "truncated payload (vox_offset past EOF)");
            n -= chunk;
        }
    }
};

std::size_t bytes_per_voxel(VoxelType t) {
    switch (t) {
    case VoxelType::U8: return 1;
    case VoxelType::I16: return 2;
    default: return 4;
    }
}

std::int16_t datatype_code(VoxelType t) {
    switch (t) {
    case VoxelType::U8: return kDtUint8;
    case VoxelType::I16: return kDtInt16;
    default: return kDtFloat32;
    }
}

template <class T>
std::vector<T> read_payload(GzReader& r, std::size_t count, bool swap) {
    std::vector<T> out(count);
    const std::size_t want = count * sizeof(T);
    if (r.read(out.data(), want) != want)
        throw NiftiError(Code::Truncated, "truncated payload");
    if (swap && sizeof(T) > 1) byteswap_inplace(out);
    return out;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

} // namespace

TypedVolume read_nifti(const std::string& path) {
    GzReader reader(path);
    unsigned char hdr[kHeaderSize];
    if (reader.read(hdr, kHeaderSize) != kHeaderSize)
        throw NiftiError(Code::Truncated, "file shorter than the 348-byte header: " + path);

    bool swap = false;
    std::int32_t sizeof_hdr = load_le<std::int32_t>(hdr + 0, false);
    if (sizeof_hdr != 348) {
        sizeof_hdr = load_le<std::int32_t>(hdr + 0, true);
        if (sizeof_hdr != 348)
            throw NiftiError(Code::BadHeader, "sizeof_hdr != 348 in either byte order: " + path);
        swap = true;
    }

    char magic[4];
    std::memcpy(magic, hdr + 344, 4);
    const bool single_file = std::memcmp(magic, "n+1", 4) == 0;
    const bool header_pair = std::memcmp(magic, "ni1", 4) == 0;
    if (!single_file && !header_pair)
        throw NiftiError(Code::BadMagic, "bad magic (expected \"n+1\" or \"ni1\"): " + path);

    const std::int16_t ndim = load_le<std::int16_t>(hdr + 40, swap);
    if (ndim != 3)
        throw NiftiError(Code::BadDim, "dim[0] must be 3, got " + std::to_string(ndim));

    TypedVolume vol;
    vol.dims.nx = load_le<std::int16_t>(hdr + 42, swap);
    vol.dims.ny = load_le<std::int16_t>(hdr + 44, swap);
    vol.dims.nz = load_le<std::int16_t>(hdr + 46, swap);
    if (!vol.dims.valid())
        throw NiftiError(Code::BadDim, "non-positive dim[1..3]: " + path);

    vol.spacing.sx = load_le<float>(hdr + 80, swap);
    vol.spacing.sy = load_le<float>(hdr + 84, swap);
    vol.spacing.sz = load_le<float>(hdr + 88, swap);
    if (!vol.spacing.valid())
        throw NiftiError(Code::BadValue, "non-positive pixdim[1..3]: " + path);

    const std::int16_t datatype = load_le<std::int16_t>(hdr + 70, swap);
    switch (datatype) {
    case kDtUint8: vol.type = VoxelType::U8; break;
    case kDtInt16: vol.type = VoxelType::I16; break;
    case kDtFloat32: vol.type = VoxelType::F32; break;
    default:
        throw NiftiError(Code::UnsupportedDtype,
                         "unsupported datatype code " + std::to_string(datatype));
    }

    vol.scl_slope = load_le<float>(hdr + 112, swap);
    vol.scl_inter = load_le<float>(hdr + 116, swap);
    const float vox_offset = load_le<float>(hdr + 108, swap);

    const std::size_t count = vol.dims.count();
    if (single_file) {
        const auto offset = static_cast<std::size_t>(vox_offset);
        if (offset < kHeaderSize)
            throw NiftiError(Code::BadValue, "vox_offset inside the header: " + path);
        reader.skip(offset - kHeaderSize);
        switch (vol.type) {
        case VoxelType::U8: vol.u8 = read_payload<std::uint8_t>(reader, count, swap); break;
        case VoxelType::I16: vol.i16 = read_payload<std::int16_t>(reader, count, swap); break;
        case VoxelType::F32: vol.f32 = read_payload<float>(reader, count, swap); break;
        }
    } else {
        // header pair: payload lives in a sibling .img (optionally .img.gz)
        std::filesystem::path img(path);
        std::string stem = img.string();
        if (has_suffix(stem, ".gz")) stem.resize(stem.size() - 3);
        if (has_suffix(stem, ".hdr")) stem.resize(stem.size() - 4);
        std::string img_path = stem + ".img";
        if (!std::filesystem::exists(img_path) && std::filesystem::exists(img_path + ".gz"))
            img_path += ".gz";
        GzReader data(img_path);
        switch (vol.type) {
        case VoxelType::U8: vol.u8 = read_payload<std::uint8_t>(data, count, swap); break;
        case VoxelType::I16: vol.i16 = read_payload<std::int16_t>(data, count, swap); break;
        case VoxelType::F32: vol.f32 = read_payload<float>(data, count, swap); break;
        }
    }
    return vol;
}

void write_nifti(const TypedVolume& vol, const std::string& path) {
    if (!vol.dims.valid() || !vol.spacing.valid())
        throw NiftiError(Code::BadValue, "invalid dims/spacing");
    const std::size_t count = vol.dims.count();

    unsigned char hdr[kHeaderSize + 4] = {}; // header + 4-byte extension flag
    store<std::int32_t>(hdr + 0, 348);
    hdr[38] = 'r'; // regular
    store<std::int16_t>(hdr + 40, 3);
    store<std::int16_t>(hdr + 42, static_cast<std::int16_t>(vol.dims.nx));
    store<std::int16_t>(hdr + 44, static_cast<std::int16_t>(vol.dims.ny));
    store<std::int16_t>(hdr + 46, static_cast<std::int16_t>(vol.dims.nz));
    for (int i = 4; i <= 7; ++i) store<std::int16_t>(hdr + 40 + 2 * i, 1);
    store<std::int16_t>(hdr + 70, datatype_code(vol.type));
    store<std::int16_t>(hdr + 72, static_cast<std::int16_t>(8 * bytes_per_voxel(vol.type)));
    store<float>(hdr + 76, 1.0f); // qfac
    store<float>(hdr + 80, static_cast<float>(vol.spacing.sx));
    store<float>(hdr + 84, static_cast<float>(vol.spacing.sy));
    store<float>(hdr + 88, static_cast<float>(vol.spacing.sz));
    store<float>(hdr + 108, 352.0f); // vox_offset
    store<float>(hdr + 112, vol.scl_slope);
    store<float>(hdr + 116, vol.scl_inter);
    std::memcpy(hdr + 344, "n+1", 4);

    const void* payload = nullptr;
    std::size_t payload_bytes = count * bytes_per_voxel(vol.type);
    switch (vol.type) {
    case VoxelType::U8:
        if (vol.u8.size() != count) throw NiftiError(Code::BadValue, "u8 payload size mismatch");
        payload = vol.u8.data();
        break;
    case VoxelType::I16:
        if (vol.i16.size() != count) throw NiftiError(Code::BadValue, "i16 payload size mismatch");
        payload = vol.i16.data();
        break;
    case VoxelType::F32:
        if (vol.f32.size() != count) throw NiftiError(Code::BadValue, "f32 payload size mismatch");
        payload = vol.f32.data();
        break;
    }

    if (has_suffix(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw NiftiError(Code::IoFailure, "cannot open for writing: " + path);
        bool ok = gzwrite(f, hdr, sizeof(hdr)) == static_cast<int>(sizeof(hdr));
        const auto* p = static_cast<const unsigned char*>(payload);
        std::size_t left = payload_bytes;
        while (ok && left > 0) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
            ok = gzwrite(f, p, chunk) == static_cast<int>(chunk);
            p += chunk;
            left -= chunk;
        }
        gzclose(f);
        if (!ok) throw NiftiError(Code::IoFailure, "write failed: " + path);
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw NiftiError(Code::IoFailure, "cannot open for writing: " + path);
        f.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
        f.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
        if (!f) throw NiftiError(Code::IoFailure, "write failed: " + path);
    }
}

namespace {

std::string sidecar_base(const std::string& path) {
    if (has_suffix(path, ".raw")) return path.substr(0, path.size() - 4);
    if (has_suffix(path, ".json")) return path.substr(0, path.size() - 5);
    return path;
}

VoxelType dtype_from_string(const std::string& s) {
    if (s == "u8") return VoxelType::U8;
    if (s == "i16") return VoxelType::I16;
    if (s == "f32") return VoxelType::F32;
    throw NiftiError(Code::BadValue, "sidecar dtype must be u8|i16|f32, got \"" + s + "\"");
}

const char* dtype_to_string(VoxelType t) {
    switch (t) {
    case VoxelType::U8: return "u8";
    case VoxelType::I16: return "i16";
    default: return "f32";
    }
}

} // namespace

TypedVolume read_raw(const std::string& path) {
    const std::string base = sidecar_base(path);
    std::ifstream jf(base + ".json");
    if (!jf) throw NiftiError(Code::IoFailure, "cannot open sidecar " + base + ".json");
    nlohmann::json j;
    try {
        jf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw NiftiError(Code::BadValue, "malformed sidecar JSON: " + std::string(e.what()));
    }

    TypedVolume vol;
    try {
        const auto dims = j.at("dims");
        const auto sp = j.at("spacing_mm");
        vol.dims = {dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>()};
        vol.spacing = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
        vol.type = dtype_from_string(j.at("dtype").get<std::string>());
        if (j.at("order").get<std::string>() != "x-fastest")
            throw NiftiError(Code::BadValue, "sidecar order must be \"x-fastest\"");
    } catch (const nlohmann::json::exception& e) {
        throw NiftiError(Code::BadValue, "sidecar missing fields: " + std::string(e.what()));
    }
    if (!vol.dims.valid() || !vol.spacing.valid())
        throw NiftiError(Code::BadValue, "sidecar dims/spacing invalid");

    GzReader r(base + ".raw");
    const std::size_t count = vol.dims.count();
    switch (vol.type) {
    case VoxelType::U8: vol.u8 = read_payload<std::uint8_t>(r, count, false); break;
    case VoxelType::I16: vol.i16 = read_payload<std::int16_t>(r, count, false); break;
    case VoxelType::F32: vol.f32 = read_payload<float>(r, count, false); break;
    }
    return vol;
}

void write_raw(const TypedVolume& vol, const std::string& path) {
    const std::string base = sidecar_base(path);
    nlohmann::json j;
    j["dims"] = {vol.dims.nx, vol.dims.ny, vol.dims.nz};
    j["spacing_mm"] = {vol.spacing.sx, vol.spacing.sy, vol.spacing.sz};
    j["dtype"] = dtype_to_string(vol.type);
    j["order"] = "x-fastest";
    std::ofstream jf(base + ".json");
    if (!jf) throw NiftiError(Code::IoFailure, "cannot open for writing: " + base + ".json");
    jf << j.dump(2) << "\n";

    std::ofstream rf(base + ".raw", std::ios::binary);
    if (!rf) throw NiftiError(Code::IoFailure, "cannot open for writing: " + base + ".raw");
    switch (vol.type) {
    case VoxelType::U8:
        rf.write(reinterpret_cast<const char*>(vol.u8.data()),
                 static_cast<std::streamsize>(vol.u8.size()));
        break;
    case VoxelType::I16:
        rf.write(reinterpret_cast<const char*>(vol.i16.data()),
                 static_cast<std::streamsize>(vol.i16.size() * 2));
        break;
    case VoxelType::F32:
        rf.write(reinterpret_cast<const char*>(vol.f32.data()),
                 static_cast<std::streamsize>(vol.f32.size() * 4));
        break;
    }
    if (!rf) throw NiftiError(Code::IoFailure, "write failed: " + base + ".raw");
}

TypedVolume read_volume(const std::string& path) {
    if (has_suffix(path, ".raw") || has_suffix(path, ".json")) return read_raw(path);
    return read_nifti(path);
}

LabelVolume to_labels(const TypedVolume& vol) {
    const bool scaled = vol.scl_slope != 0.0f && (vol.scl_slope != 1.0f || vol.scl_inter != 0.0f);
    if (scaled)
        throw NiftiError(Code::BadValue, "label volume carries nontrivial scl_slope/scl_inter");
    std::vector<std::uint8_t> labels;
    switch (vol.type) {
    case VoxelType::U8: labels = vol.u8; break;
    case VoxelType::I16:
        labels.reserve(vol.i16.size());
        for (std::int16_t v : vol.i16) {
            if (v < 0 || v > 255)
                throw NiftiError(Code::BadValue,
                                 "label value outside [0,255]: " + std::to_string(v));
            labels.push_back(static_cast<std::uint8_t>(v));
        }
        break;
    case VoxelType::F32:
        throw NiftiError(Code::BadValue, "float32 volume cannot be read as labels");
    }
    return LabelVolume(vol.dims, vol.spacing, std::move(labels));
}

ScalarVolume to_scalar(const TypedVolume& vol) {
    std::vector<float> data;
    data.reserve(vol.dims.count());
    switch (vol.type) {
    case VoxelType::U8:
        for (std::uint8_t v : vol.u8) data.push_back(static_cast<float>(v));
        break;
    case VoxelType::I16:
        for (std::int16_t v : vol.i16) data.push_back(static_cast<float>(v));
        break;
    case VoxelType::F32: data = vol.f32; break;
    }
    if (vol.scl_slope != 0.0f && (vol.scl_slope != 1.0f || vol.scl_inter != 0.0f))
        for (float& v : data) v = v * vol.scl_slope + vol.scl_inter;
    return ScalarVolume(vol.dims, vol.spacing, std::move(data));
}

TypedVolume from_labels(const LabelVolume& vol) {
    TypedVolume out;
    out.dims = vol.dims;
    out.spacing = vol.spacing;
    out.type = VoxelType::U8;
    out.u8 = vol.data;
    return out;
}

TypedVolume from_scalar(const ScalarVolume& vol) {
    TypedVolume out;
    out.dims = vol.dims;
    out.spacing = vol.spacing;
    out.type = VoxelType::F32;
    out.f32 = vol.data;
    return out;
}

LabelVolume read_label_volume(const std::string& path) { return to_labels(read_volume(path)); }

ScalarVolume read_scalar_volume(const std::string& path) { return to_scalar(read_volume(path)); }

} // namespace segbench
