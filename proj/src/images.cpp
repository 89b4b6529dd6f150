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

#include "cgdbm/images.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cgdbm/error.hpp"
#include "cgdbm/io.hpp"
#include "cgdbm/rng.hpp"

namespace cgdbm {
namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

int pgm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string t = pgm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("'" + path.string() + "': bad PGM header token '" + t + "'");
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2")
    throw BadMagicError("'" + path.string() + "' is not a P2/P5 PGM image");
  GrayImage img;
  img.width = pgm_int(in, path);
  img.height = pgm_int(in, path);
  const int maxval = pgm_int(in, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535)
    throw FormatError("'" + path.string() + "': unsupported PGM geometry or maxval");
  const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(count);
  if (magic == "P2") {
    for (auto& px : img.pixels) px = pgm_int(in, path);
    return img;
  }
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::string raw(count * bytes_per, '\0');
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw TruncatedError("'" + path.string() + "': pixel data truncated");
  for (std::size_t i = 0; i < count; ++i) {
    if (bytes_per == 1) {
      img.pixels[i] = static_cast<unsigned char>(raw[i]);
    } else {  // 16-bit samples are big-endian
      img.pixels[i] = static_cast<double>((static_cast<unsigned char>(raw[2 * i]) << 8) |
                                          static_cast<unsigned char>(raw[2 * i + 1]));
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.reserve(out.size() + image.pixels.size());
  for (double v : image.pixels)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)))));
  write_file(path, out);
}

std::vector<GrayImage> load_image_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("image directory '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".cgmat")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> images;
  for (const auto& f : files) {
    if (f.extension() == ".pgm") {
      images.push_back(read_pgm(f));
      continue;
    }
    const MatrixFile m = load_matrix(f);
    GrayImage img;
    img.height = static_cast<int>(m.data.rows());
    img.width = static_cast<int>(m.data.cols());
    img.pixels.assign(m.data.data(), m.data.data() + m.data.size());
    images.push_back(std::move(img));
  }
  return images;
}

GrayImage dead_leaves_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 128.0);

  // Radius density ~ r^-3 on [r_min, r_max], sampled by inversion.
  const double r_min = 2.0;
  const double r_max = 0.25 * std::min(width, height);
  const double a = 1.0 / (r_min * r_min);
  const double b = 1.0 / (r_max * r_max);
  const int leaves = 6 * width * height / 40;
  for (int n = 0; n < leaves; ++n) {
    const double radius = 1.0 / std::sqrt(a - rng.uniform() * (a - b));
    const double cx = rng.uniform() * width;
    const double cy = rng.uniform() * height;
    const double gray = 20.0 + 215.0 * rng.uniform();
    const bool rectangle = rng.uniform() < 0.5;
    const double angle = rng.uniform() * std::numbers::pi;
    const double aspect = 0.3 + 0.7 * rng.uniform();
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    const int r0 = std::max(0, static_cast<int>(cy - radius - 1));
    const int r1 = std::min(height - 1, static_cast<int>(cy + radius + 1));
    const int c0 = std::max(0, static_cast<int>(cx - radius - 1));
    const int c1 = std::min(width - 1, static_cast<int>(cx + radius + 1));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double dx = c + 0.5 - cx;
        const double dy = r + 0.5 - cy;
        const double u = (ca * dx + sa * dy) / radius;
        const double v = (-sa * dx + ca * dy) / (radius * aspect);
        const bool inside = rectangle ? (std::abs(u) <= 1.0 && std::abs(v) <= 1.0)
                                      : (u * u + v * v <= 1.0);
        if (inside) img.at(r, c) = gray;
      }
    }
  }

  // Separable Gaussian blur, sigma 1 pixel, clamped borders.
  const double kernel[5] = {0.05448868, 0.24420134, 0.40261995, 0.24420134, 0.05448868};
  std::vector<double> tmp(img.pixels.size());
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double s = 0.0;
      for (int t = -2; t <= 2; ++t) s += kernel[t + 2] * img.at(r, std::clamp(c + t, 0, width - 1));
      tmp[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] = s;
    }
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double s = 0.0;
      for (int t = -2; t <= 2; ++t)
        s += kernel[t + 2] * tmp[static_cast<std::size_t>(std::clamp(r + t, 0, height - 1)) *
                                     static_cast<std::size_t>(width) +
                                 static_cast<std::size_t>(c)];
      img.at(r, c) = s;
    }
  return img;
}

}  // namespace cgdbm
