// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gof/errors.hpp"
#include "gof/image_io.hpp"
#include "gof/oracles/fixtures.hpp"
#include "gof/scene_io.hpp"
#include "test_util.hpp"

namespace gof {
namespace {

std::vector<float> stored_row(float opacity, std::array<float, 3> scale, std::array<float, 4> rot) {
  std::vector<float> r(62, 0.0f);
  r[0] = 1.0f;
  r[1] = -2.0f;
  r[2] = 3.0f;
  r[6] = 0.25f;
  r[9] = 0.125f;   // f_rest_0
  r[53] = -0.5f;   // f_rest_44
  r[54] = opacity;
  for (int k = 0; k < 3; ++k) r[55 + k] = scale[k];
  for (int k = 0; k < 4; ++k) r[58 + k] = rot[k];
  return r;
}

TEST(SceneIo, ActivatesStoredValues) {
  const std::string path = test::temp_path("activate.ply");
  test::write_float_ply(path, test::gaussian_properties(), {stored_row(0.0f, {0, 0, 0}, {2, 0, 0, 0})});
  const auto g = load_gaussians(path);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].scale, Vec3(1, 1, 1));
  EXPECT_DOUBLE_EQ(g[0].opacity, 0.5);
  EXPECT_DOUBLE_EQ(g[0].rotation.norm(), 1.0);
  EXPECT_EQ(g[0].center, Vec3(1, -2, 3));
  EXPECT_DOUBLE_EQ(g[0].sh[0].x(), 0.25);
  // f_rest is channel-major: f_rest_0 is red of coefficient 1, f_rest_44 blue of 15
  EXPECT_DOUBLE_EQ(g[0].sh[1].x(), 0.125);
  EXPECT_DOUBLE_EQ(g[0].sh[15].z(), -0.5);
}

TEST(SceneIo, SaveAppliesInverseActivations) {
  Gaussian3D g;
  g.opacity = 0.5;
  g.scale = Vec3(1, 1, 1);
  const std::string path = test::temp_path("inverse.ply");
  save_gaussians(std::vector{g}, path);
  const std::string bytes = test::read_file(path);
  const size_t body = bytes.find("end_header\n") + 11;
  std::vector<float> row(62);
  std::memcpy(row.data(), bytes.data() + body, 62 * sizeof(float));
  EXPECT_EQ(row[54], 0.0f);
  EXPECT_EQ(row[55], 0.0f);
  EXPECT_EQ(row[56], 0.0f);
  EXPECT_EQ(row[57], 0.0f);
}

TEST(SceneIo, RoundTripReproducesStoredBytes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 50; ++i) {
    std::vector<float> r(62);
    for (float& v : r) v = u(rng);
    r[3] = r[4] = r[5] = 0.0f;  // normals are not preserved
    // stored quaternion must already be unit for exact bytes
    Eigen::Vector4f q(r[58], r[59], r[60], r[61]);
    q.normalize();
    for (int k = 0; k < 4; ++k) r[58 + k] = q[k];
    rows.push_back(r);
  }
  const std::string a = test::temp_path("rt_a.ply");
  const std::string b = test::temp_path("rt_b.ply");
  test::write_float_ply(a, test::gaussian_properties(), rows);
  save_gaussians(load_gaussians(a), b);
  const std::string sa = test::read_file(a), sb = test::read_file(b);
  const std::string body_a = sa.substr(sa.find("end_header\n") + 11);
  const std::string body_b = sb.substr(sb.find("end_header\n") + 11);
  ASSERT_EQ(body_a.size(), body_b.size());
  size_t mismatched = 0;
  for (size_t i = 0; i < body_a.size(); i += 4) {
    if (std::memcmp(body_a.data() + i, body_b.data() + i, 4) != 0) ++mismatched;
  }
  EXPECT_EQ(mismatched, 0u);
}

TEST(SceneIo, LoadSaveIsFieldwiseIdentity) {
  std::mt19937_64 rng(11);
  const auto scene = oracle::random_scene(rng, 40);
  const std::string path = test::temp_path("fieldwise.ply");
  save_gaussians(scene, path);
  const auto back = load_gaussians(path);
  ASSERT_EQ(back.size(), scene.size());
  for (size_t i = 0; i < scene.size(); ++i) {
    EXPECT_LT((back[i].center - scene[i].center).norm(), 1e-6);
    EXPECT_LT(((back[i].scale - scene[i].scale).array() / scene[i].scale.array()).abs().maxCoeff(), 1e-6);
    EXPECT_NEAR(back[i].opacity, scene[i].opacity, 1e-6);
    const double dot = std::abs(back[i].rotation.dot(scene[i].rotation.normalized()));
    EXPECT_NEAR(dot, 1.0, 1e-6);
    EXPECT_NEAR(back[i].rotation.norm(), 1.0, 1e-6);
    for (int k = 0; k < kShCoefficients; ++k) EXPECT_LT((back[i].sh[k] - scene[i].sh[k]).norm(), 1e-6);
  }
}

TEST(SceneIo, LowerDegreeIsZeroPadded) {
  const std::string path = test::temp_path("degree1.ply");
  std::vector<float> row(26, 0.0f);
  row[9] = 0.5f;   // f_rest_0: red of coefficient 1
  row[17] = 0.25f; // f_rest_8: blue of coefficient 3
  row[22] = 1.0f;  // rot_0
  test::write_float_ply(path, test::gaussian_properties(9), {row});
  const auto g = load_gaussians(path);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].sh[1].x(), 0.5);
  EXPECT_DOUBLE_EQ(g[0].sh[3].z(), 0.25);
  for (int k = 4; k < kShCoefficients; ++k) EXPECT_EQ(g[0].sh[k], Vec3::Zero());
}

TEST(SceneIo, ClampsSaturatedOpacityWithWarning) {
  Gaussian3D a, b;
  a.opacity = 0.0;
  b.opacity = 1.0;
  const std::string path = test::temp_path("clamp.ply");
  test::WarningCapture warnings;
  save_gaussians(std::vector{a, b}, path);
  ASSERT_EQ(warnings.messages.size(), 1u);
  const auto back = load_gaussians(path);
  EXPECT_NEAR(back[0].opacity, 1e-6, 1e-9);
  EXPECT_NEAR(back[1].opacity, 1.0 - 1e-6, 1e-9);
  EXPECT_TRUE(std::isfinite(back[0].opacity));
}

TEST(SceneIo, MissingPropertyIsNamed) {
  auto names = test::gaussian_properties();
  names.erase(std::find(names.begin(), names.end(), "scale_1"));
  const std::string path = test::temp_path("missing.ply");
  test::write_float_ply(path, names, {std::vector<float>(61, 0.0f)});
  try {
    load_gaussians(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("scale_1"), std::string::npos) << e.what();
  }
}

TEST(SceneIo, NonFiniteFieldReportsRecord) {
  std::vector<std::vector<float>> rows(3, stored_row(0, {0, 0, 0}, {1, 0, 0, 0}));
  rows[2][1] = std::nanf("");
  const std::string path = test::temp_path("nan.ply");
  test::write_float_ply(path, test::gaussian_properties(), rows);
  try {
    load_gaussians(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("vertex 2"), std::string::npos) << e.what();
  }
}

TEST(SceneIo, RejectsBadFiles) {
  EXPECT_THROW(load_gaussians(test::temp_path("does_not_exist.ply")), InputError);
  const std::string text = test::temp_path("text.ply");
  std::ofstream(text) << "not a ply\n";
  EXPECT_THROW(load_gaussians(text), FormatError);
  const std::string ascii = test::temp_path("ascii.ply");
  std::ofstream(ascii) << "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
  EXPECT_THROW(load_gaussians(ascii), FormatError);
  const std::string truncated = test::temp_path("truncated.ply");
  test::write_float_ply(truncated, test::gaussian_properties(), {stored_row(0, {0, 0, 0}, {1, 0, 0, 0})});
  std::filesystem::resize_file(truncated, std::filesystem::file_size(truncated) - 8);
  EXPECT_THROW(load_gaussians(truncated), FormatError);
}

CameraView basic_camera(int id) {
  CameraView c;
  c.id = id;
  c.width = 8;
  c.height = 6;
  c.fx = c.fy = 10.0;
  c.cx = 4.0;
  c.cy = 3.0;
  return c;
}

TEST(SceneIo, CameraRoundTripPreservesOrderAndIds) {
  CameraView a = basic_camera(7);
  CameraView b = oracle::look_at(Vec3(0, 0, 5), Vec3::Zero(), Vec3::UnitY(), 8, 6, 50.0, 3);
  const std::string path = test::temp_path("cams.json");
  save_cameras(std::vector{a, b}, path);
  const auto cams = load_cameras(path);
  ASSERT_EQ(cams.size(), 2u);
  EXPECT_EQ(cams[0].id, 7);
  EXPECT_EQ(cams[1].id, 3);
  EXPECT_FALSE(cams[0].image.has_value());
  EXPECT_LT((cams[1].rotation - b.rotation).norm(), 1e-12);
  EXPECT_LT((cams[1].translation - b.translation).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(cams[1].fx, b.fx);
}

TEST(SceneIo, IdentityCameraSitsAtOriginLookingDownZ) {
  const CameraView c = basic_camera(0);
  EXPECT_EQ(c.center(), Vec3::Zero());
  EXPECT_EQ(c.world_direction(c.cx, c.cy), Vec3(0, 0, 1));
}

TEST(SceneIo, CameraImagesDecodeToUnitRange) {
  Image img(8, 6, 3);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i % 256) / 255.0;
  const std::string png = test::temp_path("cam_img.png");
  write_image(img, png);
  const std::string path = test::temp_path("cams_img.json");
  save_cameras(std::vector{basic_camera(0)}, path, std::vector<std::string>{"cam_img.png"});
  const auto cams = load_cameras(path);
  ASSERT_TRUE(cams[0].image.has_value());
  for (size_t i = 0; i < img.data.size(); ++i) EXPECT_DOUBLE_EQ(cams[0].image->data[i], img.data[i]);
}

TEST(SceneIo, RejectsNonOrthonormalRotationWithId) {
  CameraView c = basic_camera(42);
  c.rotation(0, 1) = 1e-3;
  const std::string path = test::temp_path("bad_rot.json");
  std::ofstream(path) << R"({"cameras": [{"id": 42, "width": 8, "height": 6, "fx": 10, "fy": 10,
    "cx": 4, "cy": 3, "rotation": [1, 0.001, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 0]}]})";
  try {
    load_cameras(path);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos) << e.what();
  }
  EXPECT_THROW(validate_camera(c), InputError);
  c.rotation(0, 1) = 5e-5;
  EXPECT_NO_THROW(validate_camera(c));
}

TEST(SceneIo, CameraInvariants) {
  CameraView c = basic_camera(0);
  c.fx = 0.0;
  EXPECT_THROW(validate_camera(c), InputError);
  c = basic_camera(0);
  c.cx = 8.0;
  EXPECT_THROW(validate_camera(c), InputError);
  c = basic_camera(0);
  c.rotation = -Mat3::Identity();
  EXPECT_THROW(validate_camera(c), InputError);
  const std::string dup = test::temp_path("dup.json");
  save_cameras(std::vector{basic_camera(1), basic_camera(1)}, dup);
  EXPECT_THROW(load_cameras(dup), InputError);
  const std::string junk = test::temp_path("junk.json");
  std::ofstream(junk) << "{ cameras: ";
  EXPECT_THROW(load_cameras(junk), FormatError);
}

TriangleMesh unit_tetrahedron() {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

TEST(SceneIo, ObjHasOneBasedFaces) {
  const std::string path = test::temp_path("tet.obj");
  save_mesh(unit_tetrahedron(), path, MeshFormat::kObj);
  std::ifstream is(path);
  std::string line;
  int v = 0, f = 0, min_index = 1 << 30;
  while (std::getline(is, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) {
      ++f;
      std::istringstream ls(line.substr(2));
      int i;
      while (ls >> i) min_index = std::min(min_index, i);
    }
  }
  EXPECT_EQ(v, 4);
  EXPECT_EQ(f, 4);
  EXPECT_EQ(min_index, 1);
  const TriangleMesh back = load_mesh(path);
  EXPECT_EQ(back.triangles, unit_tetrahedron().triangles);
}

TEST(SceneIo, PlyMeshRoundTrip) {
  TriangleMesh m = unit_tetrahedron();
  m.values = {0.1, 0.2, 0.3, 0.4};
  const std::string path = test::temp_path("tet.ply");
  save_mesh(m, path, mesh_format_from_path(path));
  const TriangleMesh back = load_mesh(path);
  EXPECT_EQ(back.vertices.size(), 4u);
  EXPECT_EQ(back.triangles, m.triangles);
  ASSERT_EQ(back.values.size(), 4u);
  EXPECT_FLOAT_EQ(static_cast<float>(back.values[2]), 0.3f);
}

TEST(SceneIo, DegenerateTriangleRejectedWithIndex) {
  TriangleMesh m = unit_tetrahedron();
  m.triangles[2] = {1, 1, 3};
  try {
    save_mesh(m, test::temp_path("degenerate.obj"), MeshFormat::kObj);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("face 2"), std::string::npos) << e.what();
  }
}

TEST(SceneIo, EmptyMeshIsValidWithWarning) {
  test::WarningCapture warnings;
  const std::string path = test::temp_path("empty.ply");
  save_mesh(TriangleMesh{}, path, MeshFormat::kPly);
  EXPECT_EQ(warnings.messages.size(), 1u);
  const TriangleMesh back = load_mesh(path);
  EXPECT_TRUE(back.vertices.empty());
  EXPECT_TRUE(back.triangles.empty());
}

TEST(SceneIo, MeshFormatFromExtension) {
  EXPECT_EQ(mesh_format_from_path("a/b.obj"), MeshFormat::kObj);
  EXPECT_EQ(mesh_format_from_path("a/b.PLY"), MeshFormat::kPly);
  EXPECT_THROW(mesh_format_from_path("a/b.stl"), InputError);
}

}  // namespace
}  // namespace gof
