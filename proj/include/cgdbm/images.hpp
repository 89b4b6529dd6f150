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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cgdbm {

/// Grayscale image, row-major, one double per pixel.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  double& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

/// Reads binary (P5) or ASCII (P2) PGM with 8- or 16-bit samples.
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes a binary 8-bit PGM. Pixel values are clamped to [0, 255].
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Every *.pgm image and every CGMAT1 matrix file (*.cgmat, rows = image
/// rows) in a directory, sorted by file name.
std::vector<GrayImage> load_image_dir(const std::filesystem::path& dir);

/// Dead-leaves image: occluding discs and rectangles of random gray level
/// with power-law sizes, lightly blurred. Used as a procedural stand-in for
/// a natural-image corpus.
GrayImage dead_leaves_image(int width, int height, std::uint64_t seed);

}  // namespace cgdbm
