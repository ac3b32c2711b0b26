#pragma once

#include <string>
#include <variant>

#include "cdis/volume.hpp"

namespace cdis {

using AnyVolume = std::variant<DwiVolume, ScalarVolume, MaskVolume>;

/// Writes `<stem>.json` (header) and `<stem>.raw` (payload).
///
/// The header carries {format_version, dtype, shape, bvalues?, unit?};
/// the payload is raw little-endian C-order bytes with the b index
/// slowest. DWI and scalar volumes store float32 ("f32le"), masks store
/// one byte per voxel ("u8").
void write_volume(const AnyVolume& vol, const std::string& path_stem);
void write_volume(const DwiVolume& vol, const std::string& path_stem);
void write_volume(const ScalarVolume& vol, const std::string& path_stem);
void write_volume(const MaskVolume& vol, const std::string& path_stem);

/// Inverse of write_volume. Validates header/payload consistency:
/// a payload whose byte count disagrees with the header shape is a
/// CorruptFileError, an unknown dtype is an UnsupportedFormatError and
/// a non-finite float32 payload is a ValidationError.
AnyVolume read_volume(const std::string& path_stem);

/// Typed readers; throw ValidationError when the bundle holds a
/// different kind of volume.
DwiVolume read_dwi(const std::string& path_stem);
ScalarVolume read_scalar(const std::string& path_stem);
MaskVolume read_mask(const std::string& path_stem);

} // namespace cdis
