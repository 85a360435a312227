#include "pfa/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pfa/error.hpp"

namespace pfa {

namespace {

[[noreturn]] void parse_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::kParse, what + " at byte offset " + std::to_string(offset));
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

class Cursor {
 public:
  explicit Cursor(std::string_view data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ >= data_.size(); }
  std::string_view rest() const { return data_.substr(pos_); }

  /// Returns the next line without its terminator, advancing past it.
  std::optional<std::string_view> line() {
    if (at_end()) return std::nullopt;
    const std::size_t end = data_.find('\n', pos_);
    std::string_view out = data_.substr(pos_, end == std::string_view::npos ? data_.size() - pos_ : end - pos_);
    pos_ = end == std::string_view::npos ? data_.size() : end + 1;
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }

  std::string_view token() {
    while (!at_end() && is_space(data_[pos_])) ++pos_;
    const std::size_t start = pos_;
    while (!at_end() && !is_space(data_[pos_])) ++pos_;
    return data_.substr(start, pos_ - start);
  }

  void skip_space() {
    while (!at_end() && is_space(data_[pos_])) ++pos_;
  }

  bool read_bytes(void* dst, std::size_t n) {
    if (data_.size() - pos_ < n) return false;
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
    return true;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view tok) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

void fan_triangulate(const std::vector<std::uint32_t>& poly, std::vector<Triangle>& out) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    out.push_back({poly[0], poly[k], poly[k + 1]});
  }
}

// ---------------------------------------------------------------- OBJ

MeshModel parse_obj(std::string_view contents) {
  Cursor cur(contents);
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> poly;
  while (true) {
    const std::size_t line_offset = cur.offset();
    auto line = cur.line();
    if (!line) break;
    const auto tokens = split(*line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) parse_error(line_offset, "vertex record needs 3 coordinates");
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        auto x = parse_number<double>(tokens[k + 1]);
        if (!x) parse_error(line_offset, "malformed vertex coordinate '" + std::string(tokens[k + 1]) + "'");
        v[k] = *x;
      }
      vertices.push_back(v);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) parse_error(line_offset, "face record needs at least 3 vertices");
      poly.clear();
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const std::string_view ref = tokens[k].substr(0, tokens[k].find('/'));
        auto idx = parse_number<long long>(ref);
        if (!idx || *idx == 0) parse_error(line_offset, "malformed face index '" + std::string(tokens[k]) + "'");
        const long long resolved = *idx > 0 ? *idx - 1 : static_cast<long long>(vertices.size()) + *idx;
        if (resolved < 0 || resolved >= static_cast<long long>(vertices.size())) {
          parse_error(line_offset, "face index " + std::to_string(*idx) + " out of range");
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      fan_triangulate(poly, triangles);
    }
    // Other records (vn, vt, o, g, s, usemtl, mtllib, ...) carry no geometry we use.
  }
  return MeshModel(std::move(vertices), std::move(triangles));
}

// ---------------------------------------------------------------- PLY

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUInt8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUInt16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUInt32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T load_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(reinterpret_cast<std::uint8_t*>(&v), reinterpret_cast<std::uint8_t*>(&v) + sizeof(T));
  }
  return v;
}

double read_binary_value(Cursor& cur, PlyType t, const std::string& what) {
  std::uint8_t buf[8];
  const std::size_t offset = cur.offset();
  if (!cur.read_bytes(buf, ply_size(t))) {
    parse_error(offset, "unexpected end of file while reading " + what);
  }
  switch (t) {
    case PlyType::kInt8: return static_cast<std::int8_t>(buf[0]);
    case PlyType::kUInt8: return buf[0];
    case PlyType::kInt16: return load_le<std::int16_t>(buf);
    case PlyType::kUInt16: return load_le<std::uint16_t>(buf);
    case PlyType::kInt32: return load_le<std::int32_t>(buf);
    case PlyType::kUInt32: return load_le<std::uint32_t>(buf);
    case PlyType::kFloat32: return load_le<float>(buf);
    case PlyType::kFloat64: return load_le<double>(buf);
  }
  return 0.0;
}

double read_ascii_value(Cursor& cur, const std::string& what) {
  cur.skip_space();
  const std::size_t offset = cur.offset();
  const std::string_view tok = cur.token();
  if (tok.empty()) parse_error(offset, "unexpected end of file while reading " + what);
  auto v = parse_number<double>(tok);
  if (!v) parse_error(offset, "malformed number '" + std::string(tok) + "' in " + what);
  return *v;
}

MeshModel parse_ply(std::string_view contents) {
  Cursor cur(contents);
  auto magic = cur.line();
  if (!magic || *magic != "ply") parse_error(0, "missing 'ply' magic");

  bool binary = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (!header_done) {
    const std::size_t line_offset = cur.offset();
    auto line = cur.line();
    if (!line) parse_error(line_offset, "unexpected end of file inside PLY header");
    const auto tok = split(*line);
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) parse_error(line_offset, "malformed format line");
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        parse_error(line_offset, "unsupported PLY format '" + std::string(tok[1]) + "'");
      }
    } else if (tok[0] == "comment" || tok[0] == "obj_info") {
      continue;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_error(line_offset, "malformed element line");
      auto count = parse_number<std::size_t>(tok[2]);
      if (!count) parse_error(line_offset, "malformed element count");
      elements.push_back({std::string(tok[1]), *count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) parse_error(line_offset, "property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = ply_type(tok[2]);
        auto vt = ply_type(tok[3]);
        if (!ct || !vt) parse_error(line_offset, "unknown list property type");
        prop = {std::string(tok[4]), *vt, true, *ct};
      } else if (tok.size() == 3) {
        auto t = ply_type(tok[1]);
        if (!t) parse_error(line_offset, "unknown property type '" + std::string(tok[1]) + "'");
        prop = {std::string(tok[2]), *t, false, PlyType::kUInt8};
      } else {
        parse_error(line_offset, "malformed property line");
      }
      elements.back().properties.push_back(prop);
    } else if (tok[0] == "end_header") {
      header_done = true;
    } else {
      parse_error(line_offset, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }

  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> poly;

  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int xyz_index[3] = {-1, -1, -1};
    int face_list = -1;
    for (std::size_t p = 0; p < el.properties.size(); ++p) {
      const auto& name = el.properties[p].name;
      if (is_vertex && !el.properties[p].is_list) {
        if (name == "x") xyz_index[0] = static_cast<int>(p);
        if (name == "y") xyz_index[1] = static_cast<int>(p);
        if (name == "z") xyz_index[2] = static_cast<int>(p);
      }
      if (is_face && el.properties[p].is_list && (name == "vertex_indices" || name == "vertex_index")) {
        face_list = static_cast<int>(p);
      }
    }
    if (is_vertex && (xyz_index[0] < 0 || xyz_index[1] < 0 || xyz_index[2] < 0)) {
      parse_error(cur.offset(), "vertex element lacks x/y/z properties");
    }
    if (is_face && face_list < 0) {
      parse_error(cur.offset(), "face element lacks a vertex_indices list");
    }

    for (std::size_t i = 0; i < el.count; ++i) {
      const std::size_t record_offset = cur.offset();
      Vec3 v = Vec3::Zero();
      poly.clear();
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const PlyProperty& prop = el.properties[p];
        const std::string what = el.name + " " + std::to_string(i) + " property '" + prop.name + "'";
        if (prop.is_list) {
          const double n = binary ? read_binary_value(cur, prop.count_type, what) : read_ascii_value(cur, what);
          if (n < 0 || n != static_cast<double>(static_cast<std::size_t>(n))) {
            parse_error(record_offset, "invalid list length in " + what);
          }
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            const double idx = binary ? read_binary_value(cur, prop.type, what) : read_ascii_value(cur, what);
            if (static_cast<int>(p) == face_list) {
              if (idx < 0 || idx >= static_cast<double>(UINT32_MAX)) parse_error(record_offset, "invalid vertex index in " + what);
              poly.push_back(static_cast<std::uint32_t>(idx));
            }
          }
        } else {
          const double value = binary ? read_binary_value(cur, prop.type, what) : read_ascii_value(cur, what);
          for (int k = 0; k < 3; ++k) {
            if (static_cast<int>(p) == xyz_index[k]) v[k] = value;
          }
        }
      }
      if (is_vertex) vertices.push_back(v);
      if (is_face) {
        if (poly.size() < 3) parse_error(record_offset, "face " + std::to_string(i) + " has fewer than 3 vertices");
        for (std::uint32_t idx : poly) {
          if (idx >= vertices.size()) parse_error(record_offset, "face " + std::to_string(i) + " index out of range");
        }
        fan_triangulate(poly, triangles);
      }
    }
  }
  return MeshModel(std::move(vertices), std::move(triangles));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

MeshModel parse_mesh(std::string_view contents, std::string_view format_hint) {
  if (format_hint == "ply" || (format_hint.empty() && contents.starts_with("ply"))) {
    return parse_ply(contents);
  }
  if (format_hint.empty() || format_hint == "obj") return parse_obj(contents);
  throw Error(ErrorCode::kInvalidInput, "unknown mesh format '" + std::string(format_hint) + "'");
}

MeshModel load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open mesh file " + path.string());
  const std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string ext = lower_extension(path);
  std::string_view hint;
  if (ext == ".ply") hint = "ply";
  if (ext == ".obj") hint = "obj";
  return parse_mesh(contents, hint);
}

void save_obj(const MeshModel& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write mesh file " + path.string());
  char buf[96];
  for (const Vec3& v : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Triangle& t : mesh.triangles()) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing mesh file " + path.string());
}

void save_ply_binary(const MeshModel& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write mesh file " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices().size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles().size() << "\n"
      << "property list uchar uint vertex_indices\nend_header\n";
  auto put = [&out](auto value) {
    char bytes[sizeof(value)];
    std::memcpy(bytes, &value, sizeof(value));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(value));
    out.write(bytes, sizeof(value));
  };
  for (const Vec3& v : mesh.vertices()) {
    put(v.x());
    put(v.y());
    put(v.z());
  }
  for (const Triangle& t : mesh.triangles()) {
    put(static_cast<std::uint8_t>(3));
    for (std::uint32_t i : t) put(i);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing mesh file " + path.string());
}

}  // namespace pfa
