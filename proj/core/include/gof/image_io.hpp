// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "gof/types.hpp"

namespace gof {

/// Decodes an 8-bit PNG (gray, gray+alpha, RGB or RGBA) or a P5/P6/P2/P3 PPM
/// into an RGB image with values in [0, 1]. Alpha is dropped.
Image read_image(const std::string& path);

/// Writes a 1- or 3-channel image as 8-bit PNG or PPM, chosen by extension.
/// Values are clamped to [0, 1].
void write_image(const Image& image, const std::string& path);

/// Depth mapped to [0, 1] by its min/max over pixels with accumulation above
/// `min_accumulation`; other pixels are 0.
Image depth_visualization(const Image& depth, const Image& accumulation,
                          double min_accumulation = 1e-6);

/// Normals mapped from [-1, 1] to [0, 1] per component.
Image normal_visualization(const Image& normal);

}  // namespace gof
