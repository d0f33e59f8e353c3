// SPDX-License-Identifier: Apache-2.0
#include "gof/scene_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gof/errors.hpp"
#include "gof/image_io.hpp"

namespace gof {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  size_t offset = 0;
  size_t size = 0;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
  bool has_list = false;
  size_t stride = 0;
};

size_t ply_type_size(const std::string& t) {
  static const std::map<std::string, size_t> sizes = {
      {"char", 1},  {"uchar", 1},  {"int8", 1},    {"uint8", 1},   {"short", 2},
      {"ushort", 2}, {"int16", 2}, {"uint16", 2},  {"int", 4},     {"uint", 4},
      {"int32", 4}, {"uint32", 4}, {"float", 4},   {"float32", 4}, {"double", 8},
      {"float64", 8}};
  const auto it = sizes.find(t);
  return it == sizes.end() ? 0 : it->second;
}

bool is_float32(const std::string& t) { return t == "float" || t == "float32"; }
bool is_int32(const std::string& t) { return t == "int" || t == "int32" || t == "uint" || t == "uint32"; }

struct PlyHeader {
  std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply") {
    throw FormatError("'" + path + "' is not a PLY file");
  }
  PlyHeader h;
  bool format_ok = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") {
      if (!format_ok) throw FormatError("'" + path + "': only binary_little_endian PLY is supported");
      return h;
    }
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      format_ok = fmt == "binary_little_endian";
    } else if (word == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      if (!ls) throw FormatError("'" + path + "': malformed element line '" + line + "'");
      h.elements.push_back(e);
    } else if (word == "property") {
      if (h.elements.empty()) throw FormatError("'" + path + "': property before any element");
      PlyElement& e = h.elements.back();
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type, name;
        ls >> count_type >> item_type >> name;
        e.has_list = true;
        e.properties.push_back({name, "list " + count_type + " " + item_type, 0, 0});
        continue;
      }
      PlyProperty p;
      p.type = type;
      ls >> p.name;
      p.size = ply_type_size(type);
      if (p.size == 0 || p.name.empty()) {
        throw FormatError("'" + path + "': unsupported property line '" + line + "'");
      }
      p.offset = e.stride;
      e.stride += p.size;
      e.properties.push_back(p);
    }
  }
  throw FormatError("'" + path + "': missing end_header");
}

const PlyProperty* find_property(const PlyElement& e, const std::string& name) {
  for (const auto& p : e.properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

float read_f32(const char* rec, size_t offset) {
  float v;
  std::memcpy(&v, rec + offset, 4);
  return v;
}

void write_f32(std::ostream& os, double v) {
  const float f = static_cast<float>(v);
  os.write(reinterpret_cast<const char*>(&f), 4);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double y) { return std::log(y) - std::log1p(-y); }

}  // namespace

std::vector<Gaussian3D> load_gaussians(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path + "'");
  const PlyHeader header = read_ply_header(is, path);

  const PlyElement* vertex = nullptr;
  for (const auto& e : header.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    if (e.has_list) throw FormatError("'" + path + "': cannot skip list element '" + e.name + "'");
    is.seekg(static_cast<std::streamoff>(e.count * e.stride), std::ios::cur);
  }
  if (!vertex) throw FormatError("'" + path + "': no 'vertex' element");
  if (vertex->has_list) throw FormatError("'" + path + "': list property in 'vertex'");

  auto require = [&](const std::string& name) -> size_t {
    const PlyProperty* p = find_property(*vertex, name);
    if (!p) throw FormatError("'" + path + "': missing property '" + name + "'");
    if (!is_float32(p->type)) throw FormatError("'" + path + "': property '" + name + "' is not float32");
    return p->offset;
  };

  const char* base[] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                        "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
  std::map<std::string, size_t> offsets;
  for (const char* name : base) offsets[name] = require(name);

  int rest_count = 0;
  while (find_property(*vertex, "f_rest_" + std::to_string(rest_count))) ++rest_count;
  for (const auto& p : vertex->properties) {
    if (p.name.rfind("f_rest_", 0) == 0) {
      const int k = std::stoi(p.name.substr(7));
      if (k >= rest_count) throw FormatError("'" + path + "': missing property 'f_rest_" + std::to_string(rest_count) + "'");
    }
  }
  if (rest_count != 0 && rest_count != 9 && rest_count != 24 && rest_count != kShRestFloats) {
    throw FormatError("'" + path + "': missing property 'f_rest_" + std::to_string(rest_count) +
                      "' (SH rest coefficients must number 0, 9, 24 or 45)");
  }
  std::vector<size_t> rest_offsets(rest_count);
  for (int k = 0; k < rest_count; ++k) rest_offsets[k] = require("f_rest_" + std::to_string(k));
  const int bands = rest_count / 3;

  std::vector<Gaussian3D> out(vertex->count);
  std::vector<char> rec(vertex->stride);
  for (size_t i = 0; i < vertex->count; ++i) {
    is.read(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (!is) throw FormatError("'" + path + "': truncated at vertex " + std::to_string(i));
    for (const auto& [name, off] : offsets) {
      if (!std::isfinite(read_f32(rec.data(), off))) {
        throw FormatError("'" + path + "': non-finite '" + name + "' in vertex " + std::to_string(i));
      }
    }
    for (int k = 0; k < rest_count; ++k) {
      if (!std::isfinite(read_f32(rec.data(), rest_offsets[k]))) {
        throw FormatError("'" + path + "': non-finite 'f_rest_" + std::to_string(k) + "' in vertex " +
                          std::to_string(i));
      }
    }
    auto f = [&](const char* name) { return static_cast<double>(read_f32(rec.data(), offsets[name])); };
    Gaussian3D& g = out[i];
    g.center = Vec3(f("x"), f("y"), f("z"));
    g.scale = Vec3(std::exp(f("scale_0")), std::exp(f("scale_1")), std::exp(f("scale_2")));
    g.opacity = sigmoid(f("opacity"));
    Vec4 q(f("rot_0"), f("rot_1"), f("rot_2"), f("rot_3"));
    const double qn = q.norm();
    if (!(qn > 0.0)) throw FormatError("'" + path + "': zero quaternion in vertex " + std::to_string(i));
    if (std::abs(qn - 1.0) > 1e-6) q /= qn;
    g.rotation = q;
    g.sh[0] = Vec3(f("f_dc_0"), f("f_dc_1"), f("f_dc_2"));
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < bands; ++k) {
        g.sh[k + 1][c] = read_f32(rec.data(), rest_offsets[c * bands + k]);
      }
    }
  }
  return out;
}

void save_gaussians(std::span<const Gaussian3D> gaussians, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  os << "ply\nformat binary_little_endian 1.0\nelement vertex " << gaussians.size() << "\n";
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
    os << "property float " << n << "\n";
  }
  for (int k = 0; k < kShRestFloats; ++k) os << "property float f_rest_" << k << "\n";
  os << "property float opacity\n";
  for (int k = 0; k < 3; ++k) os << "property float scale_" << k << "\n";
  for (int k = 0; k < 4; ++k) os << "property float rot_" << k << "\n";
  os << "end_header\n";

  size_t clamped = 0;
  for (const Gaussian3D& g : gaussians) {
    for (int a = 0; a < 3; ++a) write_f32(os, g.center[a]);
    for (int a = 0; a < 3; ++a) write_f32(os, 0.0);
    for (int c = 0; c < 3; ++c) write_f32(os, g.sh[0][c]);
    for (int c = 0; c < 3; ++c) {
      for (int k = 1; k < kShCoefficients; ++k) write_f32(os, g.sh[k][c]);
    }
    double alpha = g.opacity;
    if (alpha <= 0.0 || alpha >= 1.0) {
      alpha = std::clamp(alpha, 1e-6, 1.0 - 1e-6);
      ++clamped;
    }
    write_f32(os, logit(alpha));
    for (int a = 0; a < 3; ++a) write_f32(os, std::log(g.scale[a]));
    for (int a = 0; a < 4; ++a) write_f32(os, g.rotation[a]);
  }
  if (!os) throw InputError("failed writing '" + path + "'");
  if (clamped > 0) {
    warn("save_gaussians: clamped " + std::to_string(clamped) + " opacity value(s) of 0 or 1 into [1e-6, 1-1e-6]");
  }
}

void validate_camera(const CameraView& c) {
  const std::string who = "camera " + std::to_string(c.id) + ": ";
  if (c.width <= 0 || c.height <= 0) throw InputError(who + "image size must be positive");
  if (!(c.fx > 0.0 && c.fy > 0.0)) throw InputError(who + "focal lengths must be positive");
  if (!(c.cx > 0.0 && c.cx < c.width && c.cy > 0.0 && c.cy < c.height)) {
    throw InputError(who + "principal point must lie inside the image");
  }
  if (!c.rotation.allFinite() || !c.translation.allFinite()) throw InputError(who + "non-finite pose");
  const double err = (c.rotation * c.rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-4) {
    throw InputError(who + "rotation is not orthonormal (max |R R^T - I| = " + std::to_string(err) + ")");
  }
  if (c.rotation.determinant() < 0.0) throw InputError(who + "rotation is a reflection");
  if (c.image && (c.image->width != c.width || c.image->height != c.height)) {
    throw InputError(who + "reference image size does not match the camera");
  }
}

std::vector<CameraView> load_cameras(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  std::vector<CameraView> out;
  std::set<int> ids;
  try {
    const auto& list = doc.at("cameras");
    if (!list.is_array()) throw FormatError("'" + path + "': 'cameras' must be an array");
    for (const auto& rec : list) {
      CameraView c;
      c.id = rec.at("id").get<int>();
      c.width = rec.at("width").get<int>();
      c.height = rec.at("height").get<int>();
      c.fx = rec.at("fx").get<double>();
      c.fy = rec.at("fy").get<double>();
      c.cx = rec.at("cx").get<double>();
      c.cy = rec.at("cy").get<double>();
      const auto rot = rec.at("rotation").get<std::vector<double>>();
      const auto tr = rec.at("translation").get<std::vector<double>>();
      if (rot.size() != 9 || tr.size() != 3) {
        throw FormatError("camera " + std::to_string(c.id) + ": rotation needs 9 values and translation 3");
      }
      for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot[r * 3 + k];
        c.translation[r] = tr[r];
      }
      if (!ids.insert(c.id).second) throw InputError("camera " + std::to_string(c.id) + ": duplicate id");
      if (rec.contains("image") && !rec["image"].is_null()) {
        const std::string rel = rec["image"].get<std::string>();
        if (!rel.empty()) {
          const std::filesystem::path p = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : dir / rel;
          c.image = read_image(p.string());
        }
      }
      validate_camera(c);
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  return out;
}

void save_cameras(std::span<const CameraView> cameras, const std::string& path,
                  std::span<const std::string> image_paths) {
  if (!image_paths.empty() && image_paths.size() != cameras.size()) {
    throw InputError("save_cameras: one image path per camera is required");
  }
  nlohmann::json list = nlohmann::json::array();
  for (size_t i = 0; i < cameras.size(); ++i) {
    const CameraView& c = cameras[i];
    nlohmann::json rec;
    rec["id"] = c.id;
    rec["width"] = c.width;
    rec["height"] = c.height;
    rec["fx"] = c.fx;
    rec["fy"] = c.fy;
    rec["cx"] = c.cx;
    rec["cy"] = c.cy;
    std::vector<double> rot(9), tr(3);
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) rot[r * 3 + k] = c.rotation(r, k);
      tr[r] = c.translation[r];
    }
    rec["rotation"] = rot;
    rec["translation"] = tr;
    if (!image_paths.empty() && !image_paths[i].empty()) rec["image"] = image_paths[i];
    list.push_back(rec);
  }
  std::ofstream os(path);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  os << nlohmann::json{{"cameras", list}}.dump(2) << "\n";
  if (!os) throw InputError("failed writing '" + path + "'");
}

MeshFormat mesh_format_from_path(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".obj" || ext == ".OBJ") return MeshFormat::kObj;
  if (ext == ".ply" || ext == ".PLY") return MeshFormat::kPly;
  throw InputError("unknown mesh format for '" + path + "' (use .obj or .ply)");
}

void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format) {
  const int nv = static_cast<int>(mesh.vertices.size());
  for (size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& t = mesh.triangles[f];
    for (const int v : t) {
      if (v < 0 || v >= nv) throw InputError("save_mesh: face " + std::to_string(f) + " has index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw InputError("save_mesh: face " + std::to_string(f) + " is degenerate (repeated index)");
    }
  }
  const bool with_values = !mesh.values.empty() && mesh.values.size() == mesh.vertices.size();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  if (format == MeshFormat::kObj) {
    os.precision(9);
    for (const Vec3& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << "\n";
    for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
  } else {
    os << "ply\nformat binary_little_endian 1.0\nelement vertex " << nv << "\n"
       << "property float x\nproperty float y\nproperty float z\n";
    if (with_values) os << "property float value\n";
    os << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (int i = 0; i < nv; ++i) {
      for (int a = 0; a < 3; ++a) write_f32(os, mesh.vertices[i][a]);
      if (with_values) write_f32(os, mesh.values[i]);
    }
    for (const auto& t : mesh.triangles) {
      const unsigned char n = 3;
      os.put(static_cast<char>(n));
      const int32_t idx[3] = {t[0], t[1], t[2]};
      os.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  }
  if (!os) throw InputError("failed writing '" + path + "'");
  if (mesh.triangles.empty()) warn("save_mesh: writing an empty mesh to '" + path + "'");
}

namespace {

TriangleMesh load_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path + "'");
  TriangleMesh m;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      if (!ls) throw FormatError("'" + path + "': bad vertex on line " + std::to_string(lineno));
      m.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      for (int& idx : t) {
        std::string tok;
        ls >> tok;
        if (tok.empty()) throw FormatError("'" + path + "': bad face on line " + std::to_string(lineno));
        idx = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      m.triangles.push_back(t);
    }
  }
  return m;
}

TriangleMesh load_ply_mesh(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path + "'");
  const PlyHeader h = read_ply_header(is, path);
  TriangleMesh m;
  for (const PlyElement& e : h.elements) {
    if (e.name == "vertex") {
      if (e.has_list) throw FormatError("'" + path + "': list property in 'vertex'");
      const PlyProperty* px = find_property(e, "x");
      const PlyProperty* py = find_property(e, "y");
      const PlyProperty* pz = find_property(e, "z");
      const PlyProperty* pv = find_property(e, "value");
      if (!px || !py || !pz) throw FormatError("'" + path + "': missing property 'x', 'y' or 'z'");
      if (!is_float32(px->type) || !is_float32(py->type) || !is_float32(pz->type)) {
        throw FormatError("'" + path + "': vertex coordinates must be float32");
      }
      std::vector<char> rec(e.stride);
      for (size_t i = 0; i < e.count; ++i) {
        is.read(rec.data(), static_cast<std::streamsize>(rec.size()));
        if (!is) throw FormatError("'" + path + "': truncated vertex data");
        m.vertices.emplace_back(read_f32(rec.data(), px->offset), read_f32(rec.data(), py->offset),
                                read_f32(rec.data(), pz->offset));
        if (pv && is_float32(pv->type)) m.values.push_back(read_f32(rec.data(), pv->offset));
      }
    } else if (e.name == "face") {
      if (e.properties.size() != 1 || e.properties[0].type.rfind("list", 0) != 0) {
        throw FormatError("'" + path + "': face element must hold one index list");
      }
      const std::string& lt = e.properties[0].type;
      std::istringstream ts(lt);
      std::string list_word, count_type, item_type;
      ts >> list_word >> count_type >> item_type;
      if (ply_type_size(count_type) != 1 || !is_int32(item_type)) {
        throw FormatError("'" + path + "': face lists must be uchar count with int32 indices");
      }
      for (size_t i = 0; i < e.count; ++i) {
        const int n = is.get();
        if (n != 3) throw FormatError("'" + path + "': face " + std::to_string(i) + " is not a triangle");
        int32_t idx[3];
        is.read(reinterpret_cast<char*>(idx), sizeof(idx));
        if (!is) throw FormatError("'" + path + "': truncated face data");
        m.triangles.push_back({idx[0], idx[1], idx[2]});
      }
    } else {
      throw FormatError("'" + path + "': unexpected element '" + e.name + "'");
    }
  }
  return m;
}

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
  const MeshFormat f = mesh_format_from_path(path);
  TriangleMesh m = f == MeshFormat::kObj ? load_obj(path) : load_ply_mesh(path);
  for (size_t i = 0; i < m.triangles.size(); ++i) {
    for (const int v : m.triangles[i]) {
      if (v < 0 || v >= static_cast<int>(m.vertices.size())) {
        throw FormatError("'" + path + "': face " + std::to_string(i) + " has index out of range");
      }
    }
  }
  return m;
}

}  // namespace gof
