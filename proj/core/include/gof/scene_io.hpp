// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "gof/types.hpp"

namespace gof {

/// Reads a binary little-endian 3DGS point cloud and returns activated
/// Gaussians (exp scale, sigmoid opacity, unit quaternion). Files with fewer
/// SH bands are padded with zeros.
std::vector<Gaussian3D> load_gaussians(const std::string& path);

/// Writes the 3DGS layout with degree-3 SH. Opacities of exactly 0 or 1 are
/// clamped into [1e-6, 1 - 1e-6] with a warning.
void save_gaussians(std::span<const Gaussian3D> gaussians, const std::string& path);

/// Camera list in JSON:
///
///   {"cameras": [{"id": 0, "width": 64, "height": 64, "fx": 80, "fy": 80,
///                 "cx": 32, "cy": 32, "rotation": [9 floats, row-major],
///                 "translation": [3 floats], "image": "view0.png"}]}
///
/// `image` is optional and resolved relative to the file. PNG and binary or
/// ASCII PPM are accepted; 8-bit values are mapped to [0, 1] by dividing by
/// 255.
std::vector<CameraView> load_cameras(const std::string& path);

/// Writes cameras in the format read by load_cameras. `image_paths` may be
/// empty or hold one (possibly empty) path per camera.
void save_cameras(std::span<const CameraView> cameras, const std::string& path,
                  std::span<const std::string> image_paths = {});

/// Throws InputError describing the first violated camera invariant.
void validate_camera(const CameraView& camera);

enum class MeshFormat { kObj, kPly };

/// Picks the format from the file extension (.obj or .ply).
MeshFormat mesh_format_from_path(const std::string& path);

/// Writes OBJ (1-based faces) or binary little-endian PLY (float32 vertices,
/// int32 faces; vertex values as a float `value` property when present).
void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format);

/// Reads a mesh written by save_mesh in either format.
TriangleMesh load_mesh(const std::string& path);

}  // namespace gof
