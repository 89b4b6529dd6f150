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
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cgdbm/error.hpp"
#include "cgdbm/images.hpp"
#include "cgdbm/stimuli.hpp"
#include "test_util.hpp"

using namespace cgdbm;
namespace fs = std::filesystem;

namespace {

GrayImage constant_image(int w, int h, double v) {
  GrayImage img{w, h, std::vector<double>(static_cast<std::size_t>(w * h), v)};
  return img;
}

Matrix gaussian_rows(Eigen::Index n, const Vector& sd, Rng& rng) {
  Matrix X(n, sd.size());
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index i = 0; i < sd.size(); ++i) X(r, i) = sd[i] * rng.normal();
  return X;
}

Matrix covariance(const Matrix& X) {
  const Matrix centered = X.rowwise() - X.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(X.rows());
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cgdbm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("patch extraction") {
  SUBCASE("constant image") {
    PatchConfig cfg;
    cfg.n_patches = 50;
    Rng rng(1);
    const auto split = extract_patches({constant_image(30, 20, 7.0)}, cfg, rng);
    CHECK((split.train.array() == 7.0).all());
    CHECK((split.test.array() == 7.0).all());
    CHECK(split.train.cols() == 144);
  }
  SUBCASE("split sizes") {
    PatchConfig cfg;
    cfg.patch_side = 4;
    cfg.n_patches = 60000;
    cfg.train_fraction = 5.0 / 6.0;
    Rng rng(1);
    const auto split = extract_patches({constant_image(8, 8, 1.0)}, cfg, rng);
    CHECK(split.train.rows() == 50000);
    CHECK(split.test.rows() == 10000);
  }
  SUBCASE("seeded and positional") {
    GrayImage img{16, 16, {}};
    for (int i = 0; i < 256; ++i) img.pixels.push_back(i);
    PatchConfig cfg;
    cfg.patch_side = 4;
    cfg.n_patches = 100;
    Rng a(3), b(3);
    const auto s1 = extract_patches({img}, cfg, a);
    const auto s2 = extract_patches({img}, cfg, b);
    CHECK(s1.train == s2.train);
    CHECK(s1.test == s2.test);
    // Each patch is a row-major block: neighbors differ by 1 across, 16 down.
    for (Eigen::Index r = 0; r < s1.train.rows(); ++r) {
      CHECK(s1.train(r, 1) - s1.train(r, 0) == 1.0);
      CHECK(s1.train(r, 4) - s1.train(r, 0) == 16.0);
    }
  }
  SUBCASE("small images are skipped") {
    PatchConfig cfg;
    cfg.n_patches = 10;
    Rng rng(1);
    const auto split =
        extract_patches({constant_image(5, 5, 1.0), constant_image(12, 12, 2.0)}, cfg, rng);
    CHECK(split.skipped_images == 1);
    CHECK((split.train.array() == 2.0).all());
    CHECK_THROWS_AS(extract_patches({constant_image(5, 5, 1.0)}, cfg, rng), DomainError);
  }
  SUBCASE("config validation") {
    PatchConfig cfg;
    cfg.patch_side = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = PatchConfig{};
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("whitener on a known covariance") {
  Rng rng(2);
  Vector sd(2);
  sd << 2.0, 1.0;
  const Matrix X = gaussian_rows(200000, sd, rng);
  const auto w = fit_whitener(X, 2);
  // Standard error of a variance estimate is sqrt(2/n) * variance.
  CHECK(std::abs(w.eigvals[0] - 4.0) <= 4 * 4.0 * std::sqrt(2.0 / 200000));
  CHECK(std::abs(w.eigvals[1] - 1.0) <= 4 * 1.0 * std::sqrt(2.0 / 200000));
  CHECK(std::abs(std::abs(w.basis(0, 0)) - 1.0) < 1e-2);
}

TEST_CASE("whitening identities") {
  Rng rng(4);
  Vector sd(9);
  sd << 5, 4, 3, 2.5, 2, 1.5, 1, 0.5, 0.25;
  // Mix with a random rotation so the principal axes are not the coordinates.
  Matrix A(9, 9);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  const Matrix Q = Eigen::HouseholderQR<Matrix>(A).householderQ();
  const Matrix X = (gaussian_rows(5000, sd, rng) * Q.transpose()).rowwise() + Vector::LinSpaced(9, 1, 9).transpose();

  for (Eigen::Index k : {4, 9}) {
    const auto w = fit_whitener(X, k);
    CHECK((w.basis.transpose() * w.basis - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index i = 1; i < k; ++i) CHECK(w.eigvals[i] <= w.eigvals[i - 1]);
    CHECK(w.eigvals.minCoeff() > 0);

    const Matrix Z = whiten(X, w);
    CHECK((covariance(Z) - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(whiten(w.mean.transpose(), w).norm() == doctest::Approx(0.0));
    CHECK((dewhiten(Matrix::Zero(1, k), w) - w.mean.transpose()).norm() == 0.0);

    // Round trip equals the orthogonal projection onto the retained subspace.
    const Matrix round = dewhiten(Z, w);
    const Matrix centered = X.rowwise() - w.mean.transpose();
    const Matrix projected = (centered * w.basis * w.basis.transpose()).rowwise() + w.mean.transpose();
    CHECK((round - projected).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((dewhiten(whiten(round, w), w) - round).cwiseAbs().maxCoeff() <= 1e-8);
    if (k == 9) CHECK((round - X).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SUBCASE("norm invariance under rotations within the retained subspace") {
    const auto w = fit_whitener(X, 4);
    Matrix B(4, 4);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    const Matrix R = Eigen::HouseholderQR<Matrix>(B).householderQ();
    // Rotate whitened coordinates, map back; whitened norms are unchanged.
    const Matrix Z = whiten(X.topRows(50), w);
    const Matrix rotated = dewhiten(Z * R.transpose(), w);
    const Matrix Z2 = whiten(rotated, w);
    for (Eigen::Index r = 0; r < 50; ++r) CHECK(Z2.row(r).norm() == doctest::Approx(Z.row(r).norm()).epsilon(1e-10));
  }

  SUBCASE("errors") {
    const auto w = fit_whitener(X, 4);
    CHECK_THROWS_AS(whiten(Matrix::Zero(2, 8), w), DimensionError);
    CHECK_THROWS_AS(dewhiten(Matrix::Zero(2, 5), w), DimensionError);
    CHECK_THROWS_AS(fit_whitener(X.topRows(3), 4), DomainError);
    CHECK_THROWS_AS(fit_whitener(X, 10), DomainError);
  }
}

TEST_CASE("rank deficiency names the achievable rank") {
  Rng rng(1);
  Matrix X = Matrix::Zero(100, 4);
  for (Eigen::Index r = 0; r < 100; ++r) {
    X(r, 0) = rng.normal();
    X(r, 1) = rng.normal();
  }
  try {
    fit_whitener(X, 3);
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("rank is 2") != std::string::npos);
  }
}

TEST_CASE("grating geometry") {
  const auto gs = generate_gratings(8, {0.0}, {2.0}, {0.3}, 1.5);
  REQUIRE(gs.size() == 1);
  const Vector& px = gs[0].pixels;
  for (int r = 1; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(px[r * 8 + c] == doctest::Approx(px[c]));
  CHECK(px[0] == doctest::Approx(1.5 * std::cos(0.3)));
  CHECK(px[1] == doctest::Approx(1.5 * std::cos(2 * std::numbers::pi * 2.0 / 8 + 0.3)));

  const auto vertical = generate_gratings(8, {90.0}, {2.0}, {0.0}, 1.0);
  for (int r = 0; r < 8; ++r)
    for (int c = 1; c < 8; ++c) CHECK(vertical[0].pixels[r * 8 + c] == doctest::Approx(vertical[0].pixels[r * 8]));

  const auto pair = generate_gratings(12, {22.5}, {1.7}, {0.4, 0.4 + std::numbers::pi}, 1.0);
  CHECK((pair[0].pixels + pair[1].pixels).cwiseAbs().maxCoeff() < 1e-12);

  const auto oris = default_orientations();
  REQUIRE(oris.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(oris[i] == 22.5 * static_cast<double>(i));
  const auto freqs = default_frequencies(12);
  REQUIRE(freqs.size() == 6);
  CHECK(freqs.front() == doctest::Approx(1.0));
  CHECK(freqs.back() == doctest::Approx(3.0));
  CHECK(default_phases().size() == 4);

  const auto all = generate_gratings(12, oris, freqs, default_phases(), 1.0);
  CHECK(all.size() == 8 * 6 * 4);
  CHECK(all[24].spec.orientation == 22.5);
  CHECK(all[1].spec.phase == doctest::Approx(std::numbers::pi / 2));
  CHECK(generate_gratings(12, oris, freqs, default_phases(), 1.0)[77].pixels == all[77].pixels);
}

TEST_CASE("target amplitude") {
  const auto oris = default_orientations();
  const auto freqs = default_frequencies(12);
  const auto phases = default_phases();
  CHECK(target_amplitude(Matrix::Zero(10, 144), 12, oris, freqs, phases) == 0.0);

  Rng rng(6);
  Matrix P(300, 144);
  for (Eigen::Index i = 0; i < P.size(); ++i) P.data()[i] = 10 + 3 * rng.normal();
  const double a = target_amplitude(P, 12, oris, freqs, phases);
  CHECK(target_amplitude(2 * P, 12, oris, freqs, phases) == doctest::Approx(2 * a).epsilon(1e-12));

  const Matrix centered = P.rowwise() - P.colwise().mean();
  const double patch_norm = centered.rowwise().norm().mean();
  double grating_norm = 0.0;
  const auto gs = generate_gratings(12, oris, freqs, phases, a);
  for (const auto& g : gs) grating_norm += g.pixels.norm() / static_cast<double>(gs.size());
  CHECK(std::abs(grating_norm - patch_norm) <= 1e-9);
}

TEST_CASE("pgm round trip and formats") {
  const auto dir = scratch_dir("pgm");
  GrayImage img{5, 3, {}};
  for (int i = 0; i < 15; ++i) img.pixels.push_back(i * 17);
  write_pgm(dir / "a.pgm", img);
  const auto back = read_pgm(dir / "a.pgm");
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.pixels == img.pixels);

  {
    std::ofstream out(dir / "b.pgm");
    out << "P2\n# comment\n3 2\n65535\n0 1 2\n300 65535 7\n";
  }
  const auto ascii = read_pgm(dir / "b.pgm");
  CHECK(ascii.at(1, 1) == 65535.0);
  CHECK(ascii.at(1, 0) == 300.0);

  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5 2 1 1000\n";
    const unsigned char raw[] = {0x01, 0x02, 0x00, 0x05};
    out.write(reinterpret_cast<const char*>(raw), 4);
  }
  const auto wide = read_pgm(dir / "c.pgm");
  CHECK(wide.pixels == std::vector<double>{258.0, 5.0});

  {
    std::ofstream out(dir / "d.pgm", std::ios::binary);
    out << "P5 4 4 255\n";
    out << "ab";
  }
  CHECK_THROWS_AS(read_pgm(dir / "d.pgm"), FormatError);
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), IoError);

  fs::remove(dir / "d.pgm");
  const auto all = load_image_dir(dir);
  REQUIRE(all.size() == 3);
  CHECK(all[0].width == 5);
  CHECK(all[1].width == 3);
}

TEST_CASE("dead leaves images are deterministic and textured") {
  const auto a = dead_leaves_image(64, 48, 3);
  const auto b = dead_leaves_image(64, 48, 3);
  const auto c = dead_leaves_image(64, 48, 4);
  CHECK(a.pixels == b.pixels);
  CHECK(a.pixels != c.pixels);
  CHECK(a.width == 64);
  CHECK(a.height == 48);
  const auto [lo, hi] = std::minmax_element(a.pixels.begin(), a.pixels.end());
  CHECK(*hi - *lo > 50.0);
}
