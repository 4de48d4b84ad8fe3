#pragma once

#include "cortexgeo/mesh.hpp"

#include <iosfwd>
#include <string>

namespace cortexgeo {

enum class MeshFormat { obj, off, ply, stl };

// Infers a format from a file extension; throws ValidationError otherwise.
MeshFormat format_from_path(const std::string& path);

// OBJ / OFF / PLY (ascii and binary_little_endian) / STL (ascii and binary).
// Polygons with more than three sides are fan-triangulated. STL vertices are
// welded by exact coordinate match.
Mesh load_mesh(std::istream& in, MeshFormat format);
Mesh load_mesh_file(const std::string& path);

// Writers emit OBJ, OFF, or ascii PLY with 9 significant digits per
// coordinate; load_mesh inverts them exactly for decimal round-trippable
// coordinates. STL output is unsupported.
void save_mesh(std::ostream& out, const Mesh& mesh, MeshFormat format);
void save_mesh_file(const std::string& path, const Mesh& mesh);

}  // namespace cortexgeo
