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
#include "cgdbm/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cgdbm/error.hpp"

namespace cgdbm {

namespace {

// Gray levels in [0, 255] for one tile; empty when the tile is blank.
std::vector<int> tile_levels(const Matrix& tiles, Eigen::Index row) {
  const auto t = tiles.row(row);
  if (!t.allFinite()) return {};
  const double scale = t.cwiseAbs().maxCoeff();
  std::vector<int> out(static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double v = scale > 0.0 ? t[i] / scale : 0.0;
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(127.5 + 127.5 * v));
  }
  return out;
}

void check_tiles(const Matrix& tiles, int side, int columns) {
  if (side < 1 || columns < 1) throw DomainError("montage needs positive side and columns");
  if (tiles.cols() != static_cast<Eigen::Index>(side) * side)
    throw DimensionError("tile width " + std::to_string(tiles.cols()) + " is not " +
                         std::to_string(side) + "^2");
}

}  // namespace

GrayImage montage(const Matrix& tiles, int side, int columns, int pad) {
  check_tiles(tiles, side, columns);
  const int n = static_cast<int>(tiles.rows());
  const int cols = std::max(1, std::min(columns, n));
  const int rows = std::max(1, (n + cols - 1) / cols);
  GrayImage img;
  img.width = cols * (side + pad) + pad;
  img.height = rows * (side + pad) + pad;
  img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height), 255.0);
  for (int k = 0; k < n; ++k) {
    const auto levels = tile_levels(tiles, k);
    const int r0 = pad + (k / cols) * (side + pad);
    const int c0 = pad + (k % cols) * (side + pad);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c)
        img.at(r0 + r, c0 + c) = levels.empty() ? 255.0 : levels[static_cast<std::size_t>(r * side + c)];
  }
  return img;
}

std::string svg_montage(const Matrix& tiles, int side, int columns,
                        const std::vector<std::string>& captions, int scale) {
  check_tiles(tiles, side, columns);
  const int n = static_cast<int>(tiles.rows());
  const int cols = std::max(1, std::min(columns, n));
  const int rows = std::max(1, (n + cols - 1) / cols);
  const int caption_h = captions.empty() ? 0 : 12;
  const int cell_w = side * scale + 4;
  const int cell_h = side * scale + 4 + caption_h;
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "shape-rendering=\"crispEdges\">\n",
                cols * cell_w, rows * cell_h);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int k = 0; k < n; ++k) {
    const int x0 = (k % cols) * cell_w + 2;
    const int y0 = (k / cols) * cell_h + 2;
    const auto levels = tile_levels(tiles, k);
    if (!levels.empty()) {
      std::snprintf(buf, sizeof buf, "<g transform=\"translate(%d,%d) scale(%d)\">\n", x0, y0, scale);
      out += buf;
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const int g = levels[static_cast<std::size_t>(r * side + c)];
          std::snprintf(buf, sizeof buf,
                        "<rect x=\"%d\" y=\"%d\" width=\"1\" height=\"1\" fill=\"rgb(%d,%d,%d)\"/>\n", c,
                        r, g, g, g);
          out += buf;
        }
      out += "</g>\n";
    }
    if (static_cast<std::size_t>(k) < captions.size()) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"9\">", x0,
                    y0 + side * scale + 10);
      out += buf;
      out += captions[static_cast<std::size_t>(k)];
      out += "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace cgdbm
