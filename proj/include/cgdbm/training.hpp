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
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "cgdbm/error.hpp"
#include "cgdbm/gdbm.hpp"
#include "cgdbm/rng.hpp"

namespace cgdbm {

/// Hyperparameters of the centered training algorithm. Defaults follow the
/// natural-image setup: lr 0.03 -> 0.001, momentum 0.9 -> 0, sigma learning
/// rate a tenth of the weight rate, batches of 100, offset rate 0.001.
struct TrainConfig {
  double learning_rate_start = 0.03;
  double learning_rate_end = 0.001;
  double momentum_start = 0.9;
  double momentum_end = 0.0;
  double sigma_lr_factor = 0.1;
  int batch_size = 100;
  double offset_rate = 0.001;
  int epochs_max = 100;
  int mean_field_max_iters = 30;
  double mean_field_tol = 1e-4;
  bool mean_field_damping = true;
  int gibbs_steps_per_batch = 5;
  // Epochs without validation improvement before stopping.
  int patience = 10;
  // Largest sigma change a single update may apply.
  double sigma_step_clip = 0.05;
  std::uint64_t seed = 1;
  int workers = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Persistent model-phase chains, one row and one random stream per chain.
/// y_prob holds P(Y | x, z) from the latest sweep.
struct PersistentChains {
  Matrix x;
  Matrix y;
  Matrix z;
  Matrix y_prob;
  std::vector<Rng> rngs;

  /// Chains with zeroed state and streams derived from (seed, chain index).
  static PersistentChains create(std::size_t count, const ModelParams& p, std::uint64_t seed);
  std::size_t size() const { return rngs.size(); }
  /// Draws every chain's y from Bernoulli(probs).
  void reset_hidden1(const Vector& probs);
};

struct MeanFieldState {
  Matrix y;
  Matrix z;
  int iterations_used = 0;
  double residual = 0.0;
};

/// Random initial parameters; offsets start at the data mean and at the
/// logistic of the hidden biases.
std::pair<ModelParams, Offsets> initialize(Eigen::Index L, Eigen::Index M, Eigen::Index N,
                                           const Vector& data_mean, Rng& rng);

/// Fixed point of y <- P(Y | x, z), z <- P(Z | y) with x clamped to each row,
/// starting from z = c_z. Rows are iterated independently, so a row's result
/// does not depend on the rest of the batch.
MeanFieldState mean_field_data(const Matrix& X, const ModelParams& p, const Offsets& c,
                               const TrainConfig& cfg);

/// One Gibbs sweep of every chain: z ~ P(Z|y), x ~ P(X|y), y ~ P(Y|x,z).
void gibbs_model_step(PersistentChains& chains, const ModelParams& p, const Offsets& c,
                      int workers = 1);

/// Momentum buffers, shaped like the parameters (sigma buffer per visible).
struct OptimizerState {
  Matrix vW;
  Matrix vU;
  Vector vb_y;
  Vector vb_z;
  Vector vsigma;

  static OptimizerState zeros(const ModelParams& p);
};

/// Gradient ascent step with momentum on W, U, b_y, b_z and (at a reduced
/// rate, with a per-update clip) on sigma. data_stats and model_stats are
/// batch means of energy_gradients under the two phases.
void apply_updates(ModelParams& p, OptimizerState& opt, const EnergyGradient& data_stats,
                   const EnergyGradient& model_stats, double learning_rate, double momentum,
                   const TrainConfig& cfg);

struct OffsetUpdate {
  Offsets offsets;
  Vector delta_b_y;
  Vector delta_b_z;
};

/// Moves every offset a fraction nu toward the batch means and returns the
/// bias corrections that keep the distribution over hidden configurations
/// unchanged:
///   delta_b_y = W^T Lambda^-1 W dc_y + U dc_z
///   delta_b_z = U^T dc_y
/// The hidden marginal does not depend on c_x, so dc_x needs no correction.
OffsetUpdate update_offsets(const Offsets& c, const Vector& batch_mean_y,
                            const Vector& batch_mean_z, const Vector& batch_mean_x,
                            const ModelParams& p, double nu);

/// Applies an OffsetUpdate in place.
void commit_offsets(ModelParams& p, Offsets& c, const OffsetUpdate& update);

struct Schedule {
  double learning_rate;
  double momentum;
};

/// Linear per-epoch interpolation from the start to the end values.
Schedule anneal(const TrainConfig& cfg, int epoch, int epochs_max);

/// Mean squared distance between each row and the visible mean at its
/// mean-field hidden1 activation.
double reconstruction_error(const ModelParams& p, const Offsets& c, const Matrix& data,
                            const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double recon_error = 0.0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double grad_norm_W = 0.0;
  double grad_norm_U = 0.0;
  double mean_sigma = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// CSV with header: epoch,recon_error,lr,momentum,grad_norm_W,grad_norm_U,mean_sigma
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  ModelParams params;
  Offsets offsets;
  TrainLog log;
  int best_epoch = -1;
  bool stopped_early = false;
};

/// Raised when parameters become non-finite; carries the state at the end
/// of the last finite epoch.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, ModelParams params, Offsets offsets, TrainLog log)
      : NumericError(what),
        last_good_params(std::move(params)),
        last_good_offsets(std::move(offsets)),
        log(std::move(log)) {}

  ModelParams last_good_params;
  Offsets last_good_offsets;
  TrainLog log;
};

using EpochCallback =
    std::function<void(const EpochRecord&, const ModelParams&, const Offsets&)>;

/// Full training loop. The validation rows drive early stopping; when empty
/// the training rows are used instead. epochs_max = 0 returns the
/// initialized model.
TrainResult train(const Matrix& data, const Matrix& validation, Eigen::Index hidden1,
                  Eigen::Index hidden2, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace cgdbm
