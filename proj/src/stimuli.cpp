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

#include "cgdbm/stimuli.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include "cgdbm/error.hpp"

namespace cgdbm {

void PatchConfig::validate() const {
  if (patch_side < 4) throw ConfigError("patch_side must be at least 4");
  if (n_patches < 2) throw ConfigError("n_patches must be at least 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
}

std::size_t PatchConfig::train_count() const {
  return static_cast<std::size_t>(std::llround(train_fraction * n_patches));
}

PatchSplit extract_patches(const std::vector<GrayImage>& images, const PatchConfig& cfg,
                           Rng& rng) {
  cfg.validate();
  const int side = cfg.patch_side;
  std::vector<const GrayImage*> usable;
  PatchSplit out;
  for (const auto& img : images) {
    if (img.width >= side && img.height >= side) {
      usable.push_back(&img);
    } else {
      ++out.skipped_images;
      std::cerr << "warning: skipping " << img.width << "x" << img.height
                << " image smaller than the " << side << "-pixel patch\n";
    }
  }
  if (usable.empty()) throw DomainError("no image is large enough for " + std::to_string(side) +
                                        "-pixel patches");

  const Eigen::Index D = static_cast<Eigen::Index>(side) * side;
  Matrix all(cfg.n_patches, D);
  for (Eigen::Index n = 0; n < all.rows(); ++n) {
    const GrayImage& img = *usable[rng.below(usable.size())];
    const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - side + 1)));
    const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - side + 1)));
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) all(n, r * side + c) = img.at(top + r, left + c);
  }
  const auto n_train = static_cast<Eigen::Index>(cfg.train_count());
  out.train = all.topRows(n_train);
  out.test = all.bottomRows(all.rows() - n_train);
  return out;
}

Whitener fit_whitener(const Matrix& train, Eigen::Index k) {
  const Eigen::Index D = train.cols();
  if (k < 1 || k > D)
    throw DomainError("retained dimension " + std::to_string(k) + " outside [1, " +
                      std::to_string(D) + "]");
  if (train.rows() < k)
    throw DomainError("need at least " + std::to_string(k) + " rows to fit " + std::to_string(k) +
                      " components, got " + std::to_string(train.rows()));
  Whitener w;
  w.mean = train.colwise().mean().transpose();
  const Matrix centered = train.rowwise() - w.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(train.rows());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values[D - 1];
  const double rank_tol = 1e-10 * std::max(largest, 0.0) * static_cast<double>(D);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < D; ++i)
    if (values[i] > rank_tol) ++rank;
  if (!(largest > 0.0) || rank < k)
    throw DomainError("covariance rank is " + std::to_string(rank) + ", cannot retain " +
                      std::to_string(k) + " components");

  w.basis.resize(D, k);
  w.eigvals.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd v = eig.eigenvectors().col(D - 1 - i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;  // fix the sign for reproducible files
    w.basis.col(i) = v;
    w.eigvals[i] = std::max(values[D - 1 - i], kEigvalFloor * largest);
  }
  return w;
}

Matrix whiten(const Matrix& rows, const Whitener& w) {
  if (rows.cols() != w.input_dim())
    throw DimensionError("rows have width " + std::to_string(rows.cols()) +
                         ", whitener expects " + std::to_string(w.input_dim()));
  return (rows.rowwise() - w.mean.transpose()) * w.basis *
         w.eigvals.cwiseSqrt().cwiseInverse().asDiagonal();
}

Matrix dewhiten_directions(const Matrix& rows, const Whitener& w) {
  if (rows.cols() != w.k())
    throw DimensionError("rows have width " + std::to_string(rows.cols()) +
                         ", whitener retains " + std::to_string(w.k()));
  return rows * w.eigvals.cwiseSqrt().asDiagonal() * w.basis.transpose();
}

Matrix dewhiten(const Matrix& rows, const Whitener& w) {
  Matrix out = dewhiten_directions(rows, w);
  out.rowwise() += w.mean.transpose();
  return out;
}

std::vector<double> default_orientations() {
  std::vector<double> out;
  for (int i = 0; i < 8; ++i) out.push_back(22.5 * i);
  return out;
}

std::vector<double> default_frequencies(int patch_side) {
  const double hi = std::max(1.0, patch_side / 4.0);
  std::vector<double> out;
  for (int i = 0; i < 6; ++i) out.push_back(std::exp(std::log(hi) * i / 5.0));
  return out;
}

std::vector<double> default_phases() {
  const double pi = std::numbers::pi;
  return {0.0, pi / 2.0, pi, 3.0 * pi / 2.0};
}

std::vector<Grating> generate_gratings(int patch_side, const std::vector<double>& orientations,
                                       const std::vector<double>& frequencies,
                                       const std::vector<double>& phases, double amplitude) {
  if (orientations.empty() || frequencies.empty() || phases.empty())
    throw DomainError("grating parameter lists must be non-empty");
  if (patch_side < 1) throw DomainError("patch side must be positive");
  std::vector<Grating> out;
  out.reserve(orientations.size() * frequencies.size() * phases.size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (double theta : orientations) {
    const double rad = theta * std::numbers::pi / 180.0;
    const double ct = std::cos(rad);
    const double st = std::sin(rad);
    for (double f : frequencies) {
      if (!(f > 0.0)) throw DomainError("grating frequency must be positive");
      for (double phi : phases) {
        Grating g{GratingSpec{theta, f, phi, amplitude}, Vector(patch_side * patch_side)};
        for (int r = 0; r < patch_side; ++r)
          for (int c = 0; c < patch_side; ++c)
            g.pixels[r * patch_side + c] =
                amplitude * std::cos(two_pi * f * (c * ct + r * st) / patch_side + phi);
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

double mean_centered_norm(const Matrix& patches) {
  if (patches.rows() == 0) throw DomainError("no natural patches to match");
  const Matrix centered = patches.rowwise() - patches.colwise().mean();
  return centered.rowwise().norm().mean();
}

double amplitude_for_norm(double target_norm, int patch_side,
                          const std::vector<double>& orientations,
                          const std::vector<double>& frequencies,
                          const std::vector<double>& phases) {
  const auto unit = generate_gratings(patch_side, orientations, frequencies, phases, 1.0);
  double grating_norm = 0.0;
  for (const auto& g : unit) grating_norm += g.pixels.norm();
  grating_norm /= static_cast<double>(unit.size());
  return target_norm / grating_norm;
}

double target_amplitude(const Matrix& patches, int patch_side,
                        const std::vector<double>& orientations,
                        const std::vector<double>& frequencies,
                        const std::vector<double>& phases) {
  if (patches.cols() != static_cast<Eigen::Index>(patch_side) * patch_side)
    throw DimensionError("patch width does not match the patch side");
  return amplitude_for_norm(mean_centered_norm(patches), patch_side, orientations, frequencies,
                            phases);
}

}  // namespace cgdbm
