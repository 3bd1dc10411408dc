#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mcflab/mesh.hpp"

namespace mcflab {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// OFF with optional `#dim l` comment; vertex lines carry l coordinates.
TriMesh read_off(std::istream& in);
void write_off(std::ostream& out, const TriMesh& mesh);

/// OBJ subset: `v` lines with l coordinates, `f` lines (1-based, slash forms accepted).
TriMesh read_obj(std::istream& in);
void write_obj(std::ostream& out, const TriMesh& mesh);

/// Dispatches on the extension (.off / .obj).
TriMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriMesh& mesh);

}  // namespace mcflab
