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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgdbm/gdbm.hpp"
#include "cgdbm/sampling.hpp"
#include "cgdbm/stimuli.hpp"

namespace cgdbm {

// Binary containers share one layout:
//   magic line ("CGDBM1\n" or "CGMAT1\n")
//   one text header line of comma-separated key=value pairs
//   payload of little-endian IEEE-754 doubles
//   8-byte little-endian CRC-64/XZ of the payload

inline constexpr std::string_view kModelMagic = "CGDBM1\n";
inline constexpr std::string_view kMatrixMagic = "CGMAT1\n";

/// CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and xorout).
std::uint64_t crc64(std::span<const unsigned char> bytes);

using HeaderFields = std::vector<std::pair<std::string, std::string>>;

/// Model file: header "L=.., M=.., N=..", payload W (row-major L x M), U
/// (M x N), b_y, b_z, sigma2, c_x, c_y, c_z.
std::string encode_model(const ModelParams& p, const Offsets& c);
std::pair<ModelParams, Offsets> decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const ModelParams& p, const Offsets& c);
std::pair<ModelParams, Offsets> load_model(const std::filesystem::path& path);

struct MatrixFile {
  Matrix data;
  HeaderFields meta;  // fields other than rows and cols, in file order

  /// Value of a metadata field, or fallback when absent.
  std::string get(const std::string& key, const std::string& fallback = "") const;
};

/// Matrix container: header "rows=.., cols=..[, key=value...]", payload
/// row-major.
std::string encode_matrix(const Matrix& m, const HeaderFields& meta = {});
MatrixFile decode_matrix(std::string_view bytes);
void save_matrix(const std::filesystem::path& path, const Matrix& m, const HeaderFields& meta = {});
MatrixFile load_matrix(const std::filesystem::path& path);

/// Whitener stored as a (k + 1) x (D + 1) matrix: row 0 is [mean, 0],
/// row i is [basis column i - 1, eigenvalue i - 1].
void save_whitener(const std::filesystem::path& path, const Whitener& w);
Whitener load_whitener(const std::filesystem::path& path);

void save_frames(const std::filesystem::path& path, const FrameSet& frames);
FrameSet load_frames(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest-safe decimal with 17 significant digits.
std::string format_double(double v);

}  // namespace cgdbm
