/* Copyright 2026 The cgdbm Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/
#pragma once

#include <string>
#include <vector>

#include "cgdbm/images.hpp"
#include "cgdbm/types.hpp"

namespace cgdbm {

/// Grid of square tiles, one per row of `tiles` (side*side pixels each).
/// Every tile is scaled on its own so that 0 maps to mid-gray and its
/// largest |value| to black or white. NaN rows are left blank.
GrayImage montage(const Matrix& tiles, int side, int columns, int pad = 1);

/// The same grid as an SVG document, one rect per pixel, with an optional
/// caption under each tile.
std::string svg_montage(const Matrix& tiles, int side, int columns,
                        const std::vector<std::string>& captions = {}, int scale = 4);

}  // namespace cgdbm
