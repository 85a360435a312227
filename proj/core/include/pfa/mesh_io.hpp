#pragma once

#include <filesystem>
#include <string_view>

#include "pfa/mesh.hpp"

namespace pfa {

/// Loads a PLY (ascii or binary_little_endian) or Wavefront OBJ (v/f records)
/// mesh. Polygons are fan-triangulated; units are taken as-is.
///
/// Errors: kIo (unreadable file), kParse (malformed or truncated content; the
/// message names the byte offset), kEmptyMesh, kDegenerateTriangle.
MeshModel load_mesh(const std::filesystem::path& path);

/// Parses in-memory file contents. `format_hint` is "ply", "obj", or empty to
/// sniff the PLY magic.
MeshModel parse_mesh(std::string_view contents, std::string_view format_hint = {});

void save_obj(const MeshModel& mesh, const std::filesystem::path& path);
void save_ply_binary(const MeshModel& mesh, const std::filesystem::path& path);

}  // namespace pfa
