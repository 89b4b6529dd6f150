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

#include "cgdbm/io.hpp"

#include <bit>
#include <boost/crc.hpp>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cgdbm/error.hpp"

namespace cgdbm {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  return v;
}

class PayloadWriter {
 public:
  void put(double v) { put_u64(bytes_, std::bit_cast<std::uint64_t>(v)); }
  template <typename Derived>
  void put(const Eigen::DenseBase<Derived>& m) {
    // Row-major traversal regardless of storage order.
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put(static_cast<double>(m(r, c)));
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class PayloadReader {
 public:
  explicit PayloadReader(std::string_view payload) : payload_(payload) {}
  double get() {
    const double v = std::bit_cast<double>(get_u64(payload_, pos_));
    pos_ += 8;
    return v;
  }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get();
    return m;
  }
  Vector vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = get();
    return v;
  }

 private:
  std::string_view payload_;
  std::size_t pos_ = 0;
};

std::string header_line(const HeaderFields& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ", ";
    line += fields[i].first + "=" + fields[i].second;
  }
  return line + "\n";
}

HeaderFields parse_header(std::string_view line) {
  HeaderFields fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(", ", pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view item = line.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw FormatError("malformed header field '" + std::string(item) + "'");
    fields.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    pos = end + 2;
  }
  return fields;
}

std::string find_field(const HeaderFields& fields, const std::string& key) {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  throw FormatError("header lacks required field '" + key + "'");
}

Eigen::Index parse_dim(const std::string& text, const std::string& key) {
  long long v = -1;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0)
    throw FormatError("header field '" + key + "' is not a non-negative integer: '" + text + "'");
  return static_cast<Eigen::Index>(v);
}

std::string seal(std::string_view magic, const HeaderFields& fields, const std::string& payload) {
  std::string out(magic);
  out += header_line(fields);
  out += payload;
  put_u64(out, crc64({reinterpret_cast<const unsigned char*>(payload.data()), payload.size()}));
  return out;
}

struct Unsealed {
  HeaderFields fields;
  std::string_view payload;
};

// Validates magic, payload length and checksum. expected_doubles maps the
// parsed header to the number of payload values it implies.
template <typename Expected>
Unsealed unseal(std::string_view bytes, std::string_view magic, Expected expected_doubles) {
  if (bytes.substr(0, magic.size()) != magic)
    throw BadMagicError("bad magic: expected '" +
                        std::string(magic.substr(0, magic.size() - 1)) + "'");
  const std::size_t eol = bytes.find('\n', magic.size());
  if (eol == std::string_view::npos) throw TruncatedError("header line is not terminated");
  Unsealed out;
  out.fields = parse_header(bytes.substr(magic.size(), eol - magic.size()));
  const std::size_t expected_bytes = 8 * static_cast<std::size_t>(expected_doubles(out.fields));
  const std::size_t available = bytes.size() - (eol + 1);
  if (available < expected_bytes + 8)
    throw TruncatedError("payload truncated: header implies " + std::to_string(expected_bytes + 8) +
                         " bytes after the header, found " + std::to_string(available));
  if (available > expected_bytes + 8)
    throw FormatError("header dimensions disagree with payload length (" +
                      std::to_string(available - 8) + " payload bytes, header implies " +
                      std::to_string(expected_bytes) + ")");
  out.payload = bytes.substr(eol + 1, expected_bytes);
  const std::uint64_t stored = get_u64(bytes, eol + 1 + expected_bytes);
  const std::uint64_t actual =
      crc64({reinterpret_cast<const unsigned char*>(out.payload.data()), out.payload.size()});
  if (stored != actual) throw ChecksumError("payload checksum mismatch");
  return out;
}

}  // namespace

std::uint64_t crc64(std::span<const unsigned char> bytes) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, 0xFFFFFFFFFFFFFFFFULL, 0xFFFFFFFFFFFFFFFFULL,
                     true, true>
      crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::string encode_model(const ModelParams& p, const Offsets& c) {
  p.validate();
  c.check_against(p);
  PayloadWriter w;
  w.put(p.W);
  w.put(p.U);
  w.put(p.b_y.transpose());
  w.put(p.b_z.transpose());
  w.put(p.sigma2.transpose());
  w.put(c.c_x.transpose());
  w.put(c.c_y.transpose());
  w.put(c.c_z.transpose());
  return seal(kModelMagic,
              {{"L", std::to_string(p.visible())},
               {"M", std::to_string(p.hidden1())},
               {"N", std::to_string(p.hidden2())}},
              w.bytes());
}

std::pair<ModelParams, Offsets> decode_model(std::string_view bytes) {
  Eigen::Index L = 0, M = 0, N = 0;
  const Unsealed u = unseal(bytes, kModelMagic, [&](const HeaderFields& f) {
    L = parse_dim(find_field(f, "L"), "L");
    M = parse_dim(find_field(f, "M"), "M");
    N = parse_dim(find_field(f, "N"), "N");
    return L * M + M * N + M + N + 2 * L + M + N;
  });
  PayloadReader r(u.payload);
  ModelParams p;
  p.W = r.matrix(L, M);
  p.U = r.matrix(M, N);
  p.b_y = r.vector(M);
  p.b_z = r.vector(N);
  p.sigma2 = r.vector(L);
  Offsets c;
  c.c_x = r.vector(L);
  c.c_y = r.vector(M);
  c.c_z = r.vector(N);
  p.validate();
  return {std::move(p), std::move(c)};
}

std::string MatrixFile::get(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return fallback;
}

std::string encode_matrix(const Matrix& m, const HeaderFields& meta) {
  HeaderFields fields{{"rows", std::to_string(m.rows())}, {"cols", std::to_string(m.cols())}};
  for (const auto& [k, v] : meta) {
    if (k == "rows" || k == "cols" || k.find_first_of("=,\n") != std::string::npos ||
        v.find_first_of(",\n") != std::string::npos)
      throw FormatError("metadata field '" + k + "' cannot be stored in a header");
    fields.emplace_back(k, v);
  }
  PayloadWriter w;
  w.put(m);
  return seal(kMatrixMagic, fields, w.bytes());
}

MatrixFile decode_matrix(std::string_view bytes) {
  Eigen::Index rows = 0, cols = 0;
  const Unsealed u = unseal(bytes, kMatrixMagic, [&](const HeaderFields& f) {
    rows = parse_dim(find_field(f, "rows"), "rows");
    cols = parse_dim(find_field(f, "cols"), "cols");
    return rows * cols;
  });
  MatrixFile out;
  PayloadReader r(u.payload);
  out.data = r.matrix(rows, cols);
  for (const auto& kv : u.fields)
    if (kv.first != "rows" && kv.first != "cols") out.meta.push_back(kv);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void save_model(const std::filesystem::path& path, const ModelParams& p, const Offsets& c) {
  write_file(path, encode_model(p, c));
}

std::pair<ModelParams, Offsets> load_model(const std::filesystem::path& path) {
  return decode_model(read_file(path));
}

void save_matrix(const std::filesystem::path& path, const Matrix& m, const HeaderFields& meta) {
  write_file(path, encode_matrix(m, meta));
}

MatrixFile load_matrix(const std::filesystem::path& path) { return decode_matrix(read_file(path)); }

void save_whitener(const std::filesystem::path& path, const Whitener& w) {
  const Eigen::Index D = w.input_dim();
  const Eigen::Index k = w.k();
  Matrix m = Matrix::Zero(k + 1, D + 1);
  m.row(0).head(D) = w.mean.transpose();
  m.block(1, 0, k, D) = w.basis.transpose();
  m.block(1, D, k, 1) = w.eigvals;
  save_matrix(path, m, {{"kind", "whitener"}});
}

Whitener load_whitener(const std::filesystem::path& path) {
  const MatrixFile f = load_matrix(path);
  if (f.get("kind") != "whitener")
    throw FormatError("'" + path.string() + "' does not hold a whitener");
  if (f.data.rows() < 2 || f.data.cols() < 2)
    throw FormatError("whitener matrix is too small");
  const Eigen::Index D = f.data.cols() - 1;
  const Eigen::Index k = f.data.rows() - 1;
  Whitener w;
  w.mean = f.data.row(0).head(D).transpose();
  w.basis = f.data.block(1, 0, k, D).transpose();
  w.eigvals = f.data.block(1, D, k, 1);
  return w;
}

void save_frames(const std::filesystem::path& path, const FrameSet& frames) {
  HeaderFields meta{{"kind", to_string(frames.kind)}, {"seed", std::to_string(frames.seed)}};
  if (!frames.source.empty()) meta.emplace_back("source", frames.source);
  save_matrix(path, frames.frames, meta);
}

FrameSet load_frames(const std::filesystem::path& path) {
  MatrixFile f = load_matrix(path);
  FrameSet out;
  out.frames = std::move(f.data);
  out.kind = frame_kind_from_string(f.get("kind", "spontaneous"));
  out.seed = std::stoull(f.get("seed", "0"));
  out.source = f.get("source");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace cgdbm
