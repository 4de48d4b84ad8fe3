#include "cortexgeo/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace cortexgeo {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw ValidationError("parse failure: " + what);
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double to_double(std::string_view tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{}) parse_fail("bad number '" + std::string(tok) + "'");
  return v;
}

long to_long(std::string_view tok) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{}) parse_fail("bad integer '" + std::string(tok) + "'");
  return v;
}

// Iterates lines of a buffer, tolerating \r\n endings.
struct LineReader {
  std::string_view buf;
  std::size_t pos = 0;
  bool next(std::string_view& line) {
    if (pos >= buf.size()) return false;
    std::size_t end = buf.find('\n', pos);
    if (end == std::string_view::npos) end = buf.size();
    line = buf.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return true;
  }
};

void fan_triangulate(Mesh& mesh, const std::vector<Index>& poly) {
  if (poly.size() < 3) parse_fail("polygon with fewer than 3 vertices");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k)
    mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

// ---------------------------------------------------------------- OBJ

Mesh load_obj(std::string_view text) {
  Mesh mesh;
  LineReader lr{text};
  std::string_view line;
  while (lr.next(line)) {
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) parse_fail("obj vertex record too short");
      mesh.vertices.emplace_back(to_double(toks[1]), to_double(toks[2]),
                                 to_double(toks[3]));
    } else if (toks[0] == "f") {
      std::vector<Index> poly;
      for (std::size_t t = 1; t < toks.size(); ++t) {
        std::string_view tok = toks[t];
        const std::size_t slash = tok.find('/');
        if (slash != std::string_view::npos) tok = tok.substr(0, slash);
        long idx = to_long(tok);
        if (idx < 0) idx += static_cast<long>(mesh.vertices.size()) + 1;
        if (idx < 1 || idx > static_cast<long>(mesh.vertices.size()))
          parse_fail("obj face index out of range");
        poly.push_back(static_cast<Index>(idx - 1));
      }
      fan_triangulate(mesh, poly);
    }
    // vn/vt/o/g/s/usemtl/mtllib records are ignored
  }
  return mesh;
}

void save_obj(std::ostream& out, const Mesh& mesh) {
  std::string buf;
  for (const Vec3& v : mesh.vertices) {
    buf += "v ";
    append_number(buf, v.x());
    buf += ' ';
    append_number(buf, v.y());
    buf += ' ';
    append_number(buf, v.z());
    buf += '\n';
  }
  for (const auto& f : mesh.faces) {
    buf += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) +
           ' ' + std::to_string(f[2] + 1) + '\n';
  }
  out << buf;
}

// ---------------------------------------------------------------- OFF

Mesh load_off(std::string_view text) {
  LineReader lr{text};
  std::string_view line;
  std::vector<std::string_view> toks;
  auto next_tokens = [&]() -> bool {
    while (lr.next(line)) {
      toks = split_ws(line);
      if (!toks.empty() && toks[0][0] != '#') return true;
    }
    return false;
  };
  if (!next_tokens() || toks[0] != "OFF") parse_fail("missing OFF header");
  // counts may share the header line in some writers
  if (toks.size() < 4 && !next_tokens()) parse_fail("missing OFF counts");
  std::size_t base = toks[0] == "OFF" ? 1 : 0;
  if (toks.size() < base + 3) parse_fail("bad OFF counts line");
  const long nv = to_long(toks[base]);
  const long nf = to_long(toks[base + 1]);
  if (nv < 0 || nf < 0) parse_fail("negative OFF counts");

  Mesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_tokens() || toks.size() < 3) parse_fail("truncated OFF vertex list");
    mesh.vertices.emplace_back(to_double(toks[0]), to_double(toks[1]),
                               to_double(toks[2]));
  }
  for (long i = 0; i < nf; ++i) {
    if (!next_tokens()) parse_fail("truncated OFF face list");
    const long n = to_long(toks[0]);
    if (n < 3 || toks.size() < static_cast<std::size_t>(n) + 1)
      parse_fail("bad OFF face record");
    std::vector<Index> poly;
    for (long k = 0; k < n; ++k) {
      const long idx = to_long(toks[static_cast<std::size_t>(k) + 1]);
      if (idx < 0 || idx >= nv) parse_fail("off face index out of range");
      poly.push_back(static_cast<Index>(idx));
    }
    fan_triangulate(mesh, poly);
  }
  return mesh;
}

void save_off(std::ostream& out, const Mesh& mesh) {
  std::string buf = "OFF\n";
  buf += std::to_string(mesh.vertex_count()) + ' ' +
         std::to_string(mesh.face_count()) + " 0\n";
  for (const Vec3& v : mesh.vertices) {
    append_number(buf, v.x());
    buf += ' ';
    append_number(buf, v.y());
    buf += ' ';
    append_number(buf, v.z());
    buf += '\n';
  }
  for (const auto& f : mesh.faces)
    buf += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
           std::to_string(f[2]) + '\n';
  out << buf;
}

// ---------------------------------------------------------------- PLY

struct PlyProperty {
  std::string type;  // scalar type, or list index type
  std::string name;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  parse_fail("unknown ply type '" + t + "'");
}

double ply_read_binary_scalar(const char*& p, const std::string& t) {
  auto load = [&p](auto value) {
    std::memcpy(&value, p, sizeof(value));
    p += sizeof(value);
    return value;
  };
  if (t == "char" || t == "int8") return load(std::int8_t{});
  if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
  if (t == "short" || t == "int16") return load(std::int16_t{});
  if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
  if (t == "int" || t == "int32") return load(std::int32_t{});
  if (t == "uint" || t == "uint32") return static_cast<double>(load(std::uint32_t{}));
  if (t == "float" || t == "float32") return load(float{});
  if (t == "double" || t == "float64") return load(double{});
  parse_fail("unknown ply type '" + t + "'");
}

Mesh load_ply(std::string_view text) {
  LineReader lr{text};
  std::string_view line;
  if (!lr.next(line) || split_ws(line) != std::vector<std::string_view>{"ply"})
    parse_fail("missing ply magic");

  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    if (!lr.next(line)) parse_fail("unterminated ply header");
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "end_header") break;
    if (toks[0] == "format") {
      if (toks.size() < 2) parse_fail("bad ply format line");
      if (toks[1] == "ascii")
        binary = false;
      else if (toks[1] == "binary_little_endian")
        binary = true;
      else
        parse_fail("unsupported ply format '" + std::string(toks[1]) + "'");
    } else if (toks[0] == "element") {
      if (toks.size() < 3) parse_fail("bad ply element line");
      elements.push_back({std::string(toks[1]), to_long(toks[2]), {}});
    } else if (toks[0] == "property") {
      if (elements.empty() || toks.size() < 3) parse_fail("stray ply property");
      PlyProperty p;
      if (toks[1] == "list") {
        if (toks.size() < 5) parse_fail("bad ply list property");
        p.is_list = true;
        p.count_type = std::string(toks[2]);
        p.type = std::string(toks[3]);
        p.name = std::string(toks[4]);
      } else {
        p.type = std::string(toks[1]);
        p.name = std::string(toks[2]);
      }
      elements.back().props.push_back(std::move(p));
    } else {
      parse_fail("unexpected ply header line");
    }
  }

  Mesh mesh;
  const char* bin = text.data() + lr.pos;
  const char* bin_end = text.data() + text.size();
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, iface = -1;
    for (std::size_t p = 0; p < el.props.size(); ++p) {
      const auto& prop = el.props[p];
      if (is_vertex && !prop.is_list) {
        if (prop.name == "x") ix = static_cast<int>(p);
        if (prop.name == "y") iy = static_cast<int>(p);
        if (prop.name == "z") iz = static_cast<int>(p);
      }
      if (is_face && prop.is_list &&
          (prop.name == "vertex_indices" || prop.name == "vertex_index"))
        iface = static_cast<int>(p);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
      parse_fail("ply vertex element lacks x/y/z");
    if (is_face && iface < 0) parse_fail("ply face element lacks vertex_indices");

    for (long row = 0; row < el.count; ++row) {
      std::vector<double> scalars(el.props.size(), 0.0);
      std::vector<Index> poly;
      if (binary) {
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            if (bin + ply_type_size(prop.count_type) > bin_end)
              parse_fail("truncated ply binary data");
            const long n =
                static_cast<long>(ply_read_binary_scalar(bin, prop.count_type));
            if (bin + n * ply_type_size(prop.type) > bin_end)
              parse_fail("truncated ply binary data");
            for (long k = 0; k < n; ++k) {
              const double v = ply_read_binary_scalar(bin, prop.type);
              if (static_cast<int>(p) == iface)
                poly.push_back(static_cast<Index>(v));
            }
          } else {
            if (bin + ply_type_size(prop.type) > bin_end)
              parse_fail("truncated ply binary data");
            scalars[p] = ply_read_binary_scalar(bin, prop.type);
          }
        }
      } else {
        if (!lr.next(line)) parse_fail("truncated ply ascii data");
        const auto toks = split_ws(line);
        std::size_t t = 0;
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            if (t >= toks.size()) parse_fail("truncated ply ascii row");
            const long n = to_long(toks[t++]);
            if (t + n > toks.size()) parse_fail("truncated ply ascii row");
            for (long k = 0; k < n; ++k) {
              const long idx = to_long(toks[t++]);
              if (static_cast<int>(p) == iface)
                poly.push_back(static_cast<Index>(idx));
            }
          } else {
            if (t >= toks.size()) parse_fail("truncated ply ascii row");
            scalars[p] = to_double(toks[t++]);
          }
        }
      }
      if (is_vertex)
        mesh.vertices.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
      if (is_face) {
        for (Index idx : poly)
          if (idx < 0 || idx >= mesh.vertex_count())
            parse_fail("ply face index out of range");
        fan_triangulate(mesh, poly);
      }
    }
  }
  return mesh;
}

void save_ply(std::ostream& out, const Mesh& mesh) {
  std::string buf =
      "ply\nformat ascii 1.0\nelement vertex " +
      std::to_string(mesh.vertex_count()) +
      "\nproperty double x\nproperty double y\nproperty double z\nelement face " +
      std::to_string(mesh.face_count()) +
      "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : mesh.vertices) {
    append_number(buf, v.x());
    buf += ' ';
    append_number(buf, v.y());
    buf += ' ';
    append_number(buf, v.z());
    buf += '\n';
  }
  for (const auto& f : mesh.faces)
    buf += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
           std::to_string(f[2]) + '\n';
  out << buf;
}

// ---------------------------------------------------------------- STL

struct VertexWelder {
  std::map<std::array<std::uint64_t, 3>, Index> seen;
  Index add(Mesh& mesh, const Vec3& v) {
    std::array<std::uint64_t, 3> key;
    std::memcpy(key.data(), v.data(), sizeof(key));
    const auto [it, inserted] = seen.emplace(key, mesh.vertex_count());
    if (inserted) mesh.vertices.push_back(v);
    return it->second;
  }
};

void add_welded_triangle(Mesh& mesh, const std::array<Index, 3>& tri) {
  // STL triangles that collapse under welding are dropped
  if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) return;
  mesh.faces.push_back(tri);
}

Mesh load_stl_ascii(std::string_view text) {
  Mesh mesh;
  VertexWelder weld;
  LineReader lr{text};
  std::string_view line;
  std::array<Index, 3> tri{};
  int corner = 0;
  while (lr.next(line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "vertex") {
      if (toks.size() < 4) parse_fail("stl vertex record too short");
      const Vec3 v(to_double(toks[1]), to_double(toks[2]), to_double(toks[3]));
      tri[corner++] = weld.add(mesh, v);
      if (corner == 3) {
        add_welded_triangle(mesh, tri);
        corner = 0;
      }
    }
  }
  if (corner != 0) parse_fail("stl facet with incomplete vertex list");
  return mesh;
}

Mesh load_stl_binary(std::string_view data) {
  if (data.size() < 84) parse_fail("stl file too short");
  std::uint32_t count = 0;
  std::memcpy(&count, data.data() + 80, 4);
  if (data.size() < 84 + static_cast<std::size_t>(count) * 50)
    parse_fail("truncated binary stl");
  Mesh mesh;
  VertexWelder weld;
  const char* p = data.data() + 84;
  for (std::uint32_t t = 0; t < count; ++t) {
    std::array<Index, 3> tri{};
    const char* rec = p + t * 50 + 12;  // skip facet normal
    for (int k = 0; k < 3; ++k) {
      float c[3];
      std::memcpy(c, rec + k * 12, 12);
      tri[k] = weld.add(mesh, Vec3(c[0], c[1], c[2]));
    }
    add_welded_triangle(mesh, tri);
  }
  return mesh;
}

Mesh load_stl(std::string_view data) {
  std::size_t i = 0;
  while (i < data.size() && std::isspace(static_cast<unsigned char>(data[i]))) ++i;
  const bool starts_solid = data.substr(i, 5) == "solid";
  // binary files sometimes start with "solid" too; require an ascii facet
  if (starts_solid &&
      data.substr(0, std::min<std::size_t>(data.size(), 1024)).find("facet") !=
          std::string_view::npos)
    return load_stl_ascii(data);
  return load_stl_binary(data);
}

}  // namespace

MeshFormat format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "obj") return MeshFormat::obj;
  if (ext == "off") return MeshFormat::off;
  if (ext == "ply") return MeshFormat::ply;
  if (ext == "stl") return MeshFormat::stl;
  throw ValidationError("unrecognized mesh extension '" + ext + "'");
}

Mesh load_mesh(std::istream& in, MeshFormat format) {
  const std::string text = read_all(in);
  Mesh mesh;
  switch (format) {
    case MeshFormat::obj: mesh = load_obj(text); break;
    case MeshFormat::off: mesh = load_off(text); break;
    case MeshFormat::ply: mesh = load_ply(text); break;
    case MeshFormat::stl: mesh = load_stl(text); break;
  }
  validate(mesh);
  return mesh;
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return load_mesh(in, format_from_path(path));
}

void save_mesh(std::ostream& out, const Mesh& mesh, MeshFormat format) {
  validate(mesh);
  switch (format) {
    case MeshFormat::obj: save_obj(out, mesh); break;
    case MeshFormat::off: save_off(out, mesh); break;
    case MeshFormat::ply: save_ply(out, mesh); break;
    case MeshFormat::stl:
      throw ValidationError("save_mesh: STL output is not supported");
  }
  if (!out) throw NumericError("save_mesh: stream write failed");
}

void save_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  save_mesh(out, mesh, format_from_path(path));
}

}  // namespace cortexgeo
