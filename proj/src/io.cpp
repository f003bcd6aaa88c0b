#include "roofseg/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace roofseg {

namespace {

std::string loc(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_double_field(std::string_view field, const std::filesystem::path& path,
                          std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw IoError(loc(path, line_no) + ": malformed numeric field '" + std::string(field) + "'");
  }
  return v;
}

long parse_int_field(std::string_view field, const std::filesystem::path& path,
                     std::size_t line_no) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw IoError(loc(path, line_no) + ": malformed integer field '" + std::string(field) + "'");
  }
  return v;
}

Vec3 renormalize(const Vec3& n, const std::filesystem::path& path, std::size_t vertex) {
  const double len = n.norm();
  if (!(len > 1e-12) || !std::isfinite(len)) {
    throw IoError(path.string() + ": zero-length normal at vertex " + std::to_string(vertex));
  }
  return n / len;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 40> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

XyzContents load_xyz(const std::filesystem::path& path, bool has_label_column) {
  std::ifstream in = open_input(path, false);
  XyzContents out;
  out.cloud.id = path.stem().string();

  const std::size_t expected = has_label_column ? 4 : 3;
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != expected) {
      throw IoError(loc(path, line_no) + ": expected " + std::to_string(expected) +
                    " fields, got " + std::to_string(fields.size()));
    }
    Vec3 p(parse_double_field(fields[0], path, line_no),
           parse_double_field(fields[1], path, line_no),
           parse_double_field(fields[2], path, line_no));
    out.cloud.points.push_back(p);
    if (has_label_column) {
      labels.push_back(static_cast<int>(parse_int_field(fields[3], path, line_no)));
    }
  }
  if (out.cloud.empty()) {
    throw IoError(path.string() + ": empty cloud file");
  }
  if (has_label_column) {
    out.labeling = InstanceLabeling(std::move(labels));
  }
  return out;
}

void save_xyz(const PointCloud& cloud, const std::filesystem::path& path,
              const InstanceLabeling* labeling) {
  if (labeling != nullptr && labeling->size() != cloud.size()) {
    throw ValidationError("labeling length " + std::to_string(labeling->size()) +
                          " does not match cloud size " + std::to_string(cloud.size()));
  }
  std::ofstream out = open_output(path, false);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
    if (labeling != nullptr) {
      out << ' ' << labeling->labels[i];
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

namespace {

enum class PlyType { kFloat32, kFloat64, kInt8, kUint8, kInt16, kUint16, kInt32, kUint32 };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32: return 4;
  }
  return 0;
}

PlyType parse_ply_type(const std::string& name, const std::string& prop,
                       const std::filesystem::path& path) {
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  throw IoError(path.string() + ": unsupported type '" + name + "' for property " + prop);
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> vertex_properties;
};

PlyHeader read_ply_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw IoError(path.string() + ": truncated PLY header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  next_line();
  if (line != "ply") {
    throw IoError(path.string() + ": not a PLY file (missing 'ply' magic)");
  }

  PlyHeader header;
  bool in_vertex_element = false;
  bool vertex_seen = false;
  bool other_element_first = false;
  while (true) {
    next_line();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) {
      continue;
    }
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        header.binary = false;
      } else if (fmt == "binary_little_endian") {
        header.binary = true;
      } else {
        throw IoError(path.string() + ": unsupported PLY format '" + fmt + "'");
      }
    } else if (keyword == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        header.vertex_count = count;
        in_vertex_element = true;
        vertex_seen = true;
      } else {
        in_vertex_element = false;
        if (!vertex_seen) other_element_first = true;
      }
    } else if (keyword == "property") {
      if (!in_vertex_element) continue;
      std::string type_name;
      ls >> type_name;
      if (type_name == "list") {
        std::string cnt_type, val_type, prop_name;
        ls >> cnt_type >> val_type >> prop_name;
        throw IoError(path.string() + ": unsupported list property '" + prop_name +
                      "' in vertex element");
      }
      std::string prop_name;
      ls >> prop_name;
      header.vertex_properties.push_back({prop_name, parse_ply_type(type_name, prop_name, path)});
    } else if (keyword == "end_header") {
      break;
    } else {
      throw IoError(path.string() + ": unrecognized header keyword '" + keyword + "'");
    }
  }
  if (!vertex_seen) {
    throw IoError(path.string() + ": PLY file has no vertex element");
  }
  if (other_element_first) {
    throw IoError(path.string() + ": PLY elements before 'vertex' are unsupported");
  }
  return header;
}

double decode_scalar(const unsigned char* bytes, PlyType type) {
  auto read_le = [&](auto value) {
    std::memcpy(&value, bytes, sizeof(value));
    return value;
  };
  switch (type) {
    case PlyType::kFloat32: return static_cast<double>(read_le(float{}));
    case PlyType::kFloat64: return read_le(double{});
    case PlyType::kInt8: return static_cast<double>(read_le(std::int8_t{}));
    case PlyType::kUint8: return static_cast<double>(read_le(std::uint8_t{}));
    case PlyType::kInt16: return static_cast<double>(read_le(std::int16_t{}));
    case PlyType::kUint16: return static_cast<double>(read_le(std::uint16_t{}));
    case PlyType::kInt32: return static_cast<double>(read_le(std::int32_t{}));
    case PlyType::kUint32: return static_cast<double>(read_le(std::uint32_t{}));
  }
  return 0.0;
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, true);
  PlyHeader header = read_ply_header(in, path);

  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
  for (std::size_t p = 0; p < header.vertex_properties.size(); ++p) {
    const auto& prop = header.vertex_properties[p];
    const bool is_coord = prop.name == "x" || prop.name == "y" || prop.name == "z" ||
                          prop.name == "nx" || prop.name == "ny" || prop.name == "nz";
    if (is_coord && prop.type != PlyType::kFloat32 && prop.type != PlyType::kFloat64) {
      throw IoError(path.string() + ": unsupported type for property " + prop.name +
                    " (expected float or double)");
    }
    if (prop.name == "x") ix = static_cast<int>(p);
    if (prop.name == "y") iy = static_cast<int>(p);
    if (prop.name == "z") iz = static_cast<int>(p);
    if (prop.name == "nx") inx = static_cast<int>(p);
    if (prop.name == "ny") iny = static_cast<int>(p);
    if (prop.name == "nz") inz = static_cast<int>(p);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw IoError(path.string() + ": vertex element lacks x, y, z properties");
  }
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.id = path.stem().string();
  cloud.points.reserve(header.vertex_count);
  if (has_normals) cloud.normals.reserve(header.vertex_count);

  std::vector<double> row(header.vertex_properties.size(), 0.0);
  if (header.binary) {
    std::size_t stride = 0;
    for (const auto& prop : header.vertex_properties) stride += ply_type_size(prop.type);
    std::vector<unsigned char> buf(stride);
    for (std::size_t v = 0; v < header.vertex_count; ++v) {
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(stride));
      if (in.gcount() != static_cast<std::streamsize>(stride)) {
        throw IoError(path.string() + ": unexpected end of vertex data");
      }
      std::size_t off = 0;
      for (std::size_t p = 0; p < header.vertex_properties.size(); ++p) {
        row[p] = decode_scalar(buf.data() + off, header.vertex_properties[p].type);
        off += ply_type_size(header.vertex_properties[p].type);
      }
      cloud.points.emplace_back(row[ix], row[iy], row[iz]);
      if (has_normals) {
        cloud.normals.push_back(renormalize(Vec3(row[inx], row[iny], row[inz]), path, v));
      }
    }
  } else {
    std::string line;
    std::size_t line_no = 0;
    for (std::size_t v = 0; v < header.vertex_count; ++v) {
      do {
        if (!std::getline(in, line)) {
          throw IoError(path.string() + ": unexpected end of vertex data");
        }
        ++line_no;
      } while (split_fields(line).empty());
      auto fields = split_fields(line);
      if (fields.size() < header.vertex_properties.size()) {
        throw IoError(loc(path, line_no) + ": vertex line has too few values");
      }
      for (std::size_t p = 0; p < header.vertex_properties.size(); ++p) {
        row[p] = parse_double_field(fields[p], path, line_no);
      }
      cloud.points.emplace_back(row[ix], row[iy], row[iz]);
      if (has_normals) {
        cloud.normals.push_back(renormalize(Vec3(row[inx], row[iny], row[inz]), path, v));
      }
    }
  }
  return cloud;
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  const bool binary = format == PlyFormat::kBinaryLittleEndian;
  std::ofstream out = open_output(path, binary);

  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) {
    out << "property float nx\nproperty float ny\nproperty float nz\n";
  }
  out << "end_header\n";

  if (binary) {
    auto write_f32 = [&](double v) {
      const float f = static_cast<float>(v);
      static_assert(sizeof(float) == 4);
      out.write(reinterpret_cast<const char*>(&f), 4);  // host is little-endian
    };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      write_f32(p.x());
      write_f32(p.y());
      write_f32(p.z());
      if (cloud.has_normals()) {
        const Vec3& n = cloud.normals[i];
        write_f32(n.x());
        write_f32(n.y());
        write_f32(n.z());
      }
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
      if (cloud.has_normals()) {
        const Vec3& n = cloud.normals[i];
        out << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' '
            << format_double(n.z());
      }
      out << '\n';
    }
  }
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

InstanceLabeling load_labeling(const std::filesystem::path& path, std::ptrdiff_t expected_len) {
  std::ifstream in = open_input(path, false);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 1) {
      throw IoError(loc(path, line_no) + ": expected a single integer");
    }
    labels.push_back(static_cast<int>(parse_int_field(fields[0], path, line_no)));
  }
  if (expected_len >= 0 && static_cast<std::ptrdiff_t>(labels.size()) != expected_len) {
    throw IoError(path.string() + ": label count " + std::to_string(labels.size()) +
                  " does not match expected " + std::to_string(expected_len));
  }
  return InstanceLabeling(std::move(labels));
}

void save_labeling(const InstanceLabeling& labeling, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, false);
  for (int label : labeling.labels) {
    out << label << '\n';
  }
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace roofseg
