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

#include <cstddef>
#include <vector>

#include "cgdbm/types.hpp"

namespace cgdbm {

/// Lower bound applied to every visible variance.
inline constexpr double kSigma2Floor = 1e-4;

/// Trainable parameters of a two-hidden-layer centered Gaussian-binary DBM.
///   W: L x M visible-to-hidden1 weights
///   U: M x N hidden1-to-hidden2 weights
///   sigma2: per-visible variances (the diagonal of Lambda)
struct ModelParams {
  Matrix W;
  Matrix U;
  Vector b_y;
  Vector b_z;
  Vector sigma2;

  static ModelParams zeros(Eigen::Index L, Eigen::Index M, Eigen::Index N);

  Eigen::Index visible() const { return W.rows(); }
  Eigen::Index hidden1() const { return W.cols(); }
  Eigen::Index hidden2() const { return U.cols(); }

  /// Throws DimensionError on inconsistent shapes and DomainError on
  /// non-positive or non-finite variances.
  void validate() const;
  /// Raises variances below kSigma2Floor to the floor.
  void clamp_sigma2();
  /// Variances with the floor applied.
  Vector variances() const { return sigma2.cwiseMax(kSigma2Floor); }
  bool finite() const;
};

/// Centering offsets. Training keeps c_y and c_z inside (0, 1); the math
/// here accepts any finite values (zero offsets give the plain GDBM).
struct Offsets {
  Vector c_x;
  Vector c_y;
  Vector c_z;

  static Offsets zeros(Eigen::Index L, Eigen::Index M, Eigen::Index N);
  void check_against(const ModelParams& p) const;
};

/// A joint configuration (x real, y and z binary).
struct FullState {
  Vector x;
  Vector y;
  Vector z;
};

/// Partial derivatives of -E at one state. dsigma is taken with respect to
/// the standard deviation sigma_i, not the variance.
struct EnergyGradient {
  Matrix dW;
  Matrix dU;
  Vector db_y;
  Vector db_z;
  Vector dsigma;
};

double energy(const FullState& s, const ModelParams& p, const Offsets& c);

/// -energy; the joint density is proportional to exp of this value.
double unnormalized_log_prob(const FullState& s, const ModelParams& p, const Offsets& c);

struct VisibleConditional {
  Vector mean;
  Vector variance;
};

/// P(X | y): independent Gaussians with mean W (y - c_y) + c_x.
VisibleConditional cond_visible(const Vector& y, const ModelParams& p, const Offsets& c);

/// P(Y_j = 1 | x, z). The bottom-up input is (x - c_x)^T Lambda^-1 w_{*j},
/// matching the coupling term of the energy.
Vector cond_hidden1(const Vector& x, const Vector& z, const ModelParams& p, const Offsets& c);

/// P(Z_k = 1 | y).
Vector cond_hidden2(const Vector& y, const ModelParams& p, const Offsets& c);

EnergyGradient energy_gradients(const FullState& s, const ModelParams& p, const Offsets& c);

/// F(y, z) with exp(-F) equal to the integral of exp(-E(x, y, z)) over x.
double hidden_free_energy(const Vector& y, const Vector& z, const ModelParams& p, const Offsets& c);

/// Exact distribution over all hidden configurations. Configuration index i
/// encodes y_j in bit j and z_k in bit M + k.
struct HiddenTable {
  Eigen::Index M = 0;
  Eigen::Index N = 0;
  std::vector<double> prob;

  std::size_t size() const { return prob.size(); }
  Vector y_of(std::size_t index) const;
  Vector z_of(std::size_t index) const;
  static std::size_t index_of(const Vector& y, const Vector& z);
  /// Marginal P(y_j = 1).
  Vector hidden1_marginal() const;
};

inline constexpr Eigen::Index kMaxEnumeratedUnits = 20;

/// Enumerates 2^(M+N) hidden configurations; refuses (DomainError) when
/// M + N exceeds kMaxEnumeratedUnits.
HiddenTable brute_force_hidden_marginal(const ModelParams& p, const Offsets& c);

/// Plain GDBM equivalent of a centered model: hidden offsets are zero and
/// the Gaussian visible mean is kept explicitly.
struct UncenteredModel {
  ModelParams params;
  Vector visible_mean;

  /// The same model expressed with centered offsets (c_x = visible mean,
  /// c_y = c_z = 0) so the centered routines evaluate it directly.
  Offsets as_offsets() const;
};

/// Folds the hidden offsets into biases and the visible mean. Energies of
/// the two models differ by a state-independent constant.
UncenteredModel to_uncentered(const ModelParams& p, const Offsets& c);

// Batched forms used by training and sampling. Rows are samples.

/// Row-wise P(Y = 1 | x, z).
Matrix hidden1_probs(const Matrix& X, const Matrix& Z, const ModelParams& p, const Offsets& c);
/// Row-wise P(Z = 1 | y).
Matrix hidden2_probs(const Matrix& Y, const ModelParams& p, const Offsets& c);
/// Row-wise mean of P(X | y).
Matrix visible_means(const Matrix& Y, const ModelParams& p, const Offsets& c);
/// Bottom-up input to hidden1: (X - c_x) Lambda^-1 W.
Matrix bottom_up_input(const Matrix& X, const ModelParams& p, const Offsets& c);

/// Average of energy_gradients over rows of a batch of states.
EnergyGradient mean_energy_gradients(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                     const ModelParams& p, const Offsets& c);

}  // namespace cgdbm
