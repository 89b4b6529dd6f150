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
#include <vector>

#include "cgdbm/images.hpp"
#include "cgdbm/rng.hpp"
#include "cgdbm/types.hpp"

namespace cgdbm {

struct PatchConfig {
  int patch_side = 12;
  int n_patches = 20000;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t train_count() const;
};

struct PatchSplit {
  Matrix train;
  Matrix test;
  std::size_t skipped_images = 0;
};

/// Samples n_patches patches at uniform random positions of uniformly
/// chosen images. Rows are row-major flattened patches; the first
/// train_count() rows form the training set. Images smaller than the patch
/// are skipped (counted in skipped_images).
PatchSplit extract_patches(const std::vector<GrayImage>& images, const PatchConfig& cfg,
                           Rng& rng);

/// PCA whitening onto the k leading principal directions.
struct Whitener {
  Vector mean;     // D
  Matrix basis;    // D x k, orthonormal columns
  Vector eigvals;  // k, descending

  Eigen::Index input_dim() const { return basis.rows(); }
  Eigen::Index k() const { return basis.cols(); }
};

/// Eigenvalues below this fraction of the largest are floored before
/// inversion.
inline constexpr double kEigvalFloor = 1e-8;

Whitener fit_whitener(const Matrix& train, Eigen::Index k);

/// (x - mean) basis diag(eigvals^-1/2)
Matrix whiten(const Matrix& rows, const Whitener& w);

/// v diag(eigvals^1/2) basis^T + mean
Matrix dewhiten(const Matrix& rows, const Whitener& w);

/// Linear part of dewhiten (no mean). Maps whitened-space directions such
/// as filters to pixel space.
Matrix dewhiten_directions(const Matrix& rows, const Whitener& w);

struct GratingSpec {
  double orientation = 0.0;  // degrees
  double frequency = 1.0;    // cycles per patch
  double phase = 0.0;        // radians
  double amplitude = 1.0;
};

struct Grating {
  GratingSpec spec;
  Vector pixels;  // side * side, row-major
};

/// 0, 22.5, ..., 157.5 degrees.
std::vector<double> default_orientations();
/// Six frequencies log-spaced from 1 to side / 4 cycles per patch.
std::vector<double> default_frequencies(int patch_side);
/// 0, pi/2, pi, 3pi/2.
std::vector<double> default_phases();

/// Full-field gratings, amplitude * cos(2 pi f (c cos t + r sin t) / side + phase),
/// for every (orientation, frequency, phase) combination in that nesting
/// order.
std::vector<Grating> generate_gratings(int patch_side, const std::vector<double>& orientations,
                                       const std::vector<double>& frequencies,
                                       const std::vector<double>& phases, double amplitude);

/// Mean Euclidean norm of the rows after subtracting the column means.
double mean_centered_norm(const Matrix& patches);

/// Amplitude at which the grating set has mean norm target_norm.
double amplitude_for_norm(double target_norm, int patch_side,
                          const std::vector<double>& orientations,
                          const std::vector<double>& frequencies,
                          const std::vector<double>& phases);

/// Amplitude giving the grating set the same mean Euclidean norm as the
/// mean-subtracted natural patches.
double target_amplitude(const Matrix& patches, int patch_side,
                        const std::vector<double>& orientations,
                        const std::vector<double>& frequencies,
                        const std::vector<double>& phases);

}  // namespace cgdbm
