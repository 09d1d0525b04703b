#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "segbench/volume.hpp"

namespace segbench {

enum class VoxelType { U8, I16, F32 };

/// Voxel payload as stored on disk, before conversion to a typed grid.
/// Exactly one of u8/i16/f32 is populated, matching `type`.
struct TypedVolume {
    GridDims dims;
    Spacing spacing;
    VoxelType type = VoxelType::U8;
    std::vector<std::uint8_t> u8;
    std::vector<std::int16_t> i16;
    std::vector<float> f32;
    // Raw header scaling; applied when converting to scalars, rejected for labels.
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
};

struct NiftiError : std::runtime_error {
    enum class Code {
        IoFailure,        // unreadable/unwritable file
        BadHeader,        // sizeof_hdr wrong in both byte orders
        BadMagic,         // magic is neither "n+1" nor "ni1"
        BadDim,           // dim[0] != 3 or non-positive extents
        UnsupportedDtype, // datatype outside {uint8, int16, float32}
        Truncated,        // payload shorter than dims require
        BadValue,         // labels out of range / scaled labels / bad sidecar
    };
    NiftiError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
    Code code;
};

/// NIfTI-1 subset reader: dtype in {uint8, int16, float32}, dim[0] == 3,
/// either byte order, "n+1" (data in-file at vox_offset) or "ni1" (sibling
/// .img) magic, plain or gzip-compressed.
TypedVolume read_nifti(const std::string& path);

/// Writes a single-file little-endian "n+1" volume; gzip-compressed when the
/// path ends in ".gz". read_nifti inverts it bit-exactly.
void write_nifti(const TypedVolume& vol, const std::string& path);

/// Sidecar fixture format: <base>.raw (little-endian payload, x-fastest) plus
/// <base>.json with {dims:[3], spacing_mm:[3], dtype:"u8"|"i16"|"f32",
/// order:"x-fastest"}. `path` may name either file.
TypedVolume read_raw(const std::string& path);
void write_raw(const TypedVolume& vol, const std::string& path);

/// Dispatch on extension: .raw/.json -> sidecar format, otherwise NIfTI.
TypedVolume read_volume(const std::string& path);

LabelVolume to_labels(const TypedVolume& vol);
ScalarVolume to_scalar(const TypedVolume& vol);
TypedVolume from_labels(const LabelVolume& vol);
TypedVolume from_scalar(const ScalarVolume& vol);

LabelVolume read_label_volume(const std::string& path);
ScalarVolume read_scalar_volume(const std::string& path);

} // namespace segbench
