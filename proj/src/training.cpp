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

#include "cgdbm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "cgdbm/parallel.hpp"

namespace cgdbm {
namespace {

// Purposes for derived random streams.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kChainStreams = 2;

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void TrainConfig::validate() const {
  check_range(learning_rate_start > 0 && learning_rate_end > 0, "learning rates must be positive");
  check_range(momentum_start >= 0 && momentum_start < 1 && momentum_end >= 0 && momentum_end < 1,
              "momentum must lie in [0, 1)");
  check_range(sigma_lr_factor >= 0, "sigma_lr_factor must be non-negative");
  check_range(batch_size >= 1, "batch_size must be at least 1");
  check_range(offset_rate > 0 && offset_rate < 1, "offset_rate must lie in (0, 1)");
  check_range(epochs_max >= 0, "epochs_max must be non-negative");
  check_range(mean_field_max_iters >= 1, "mean_field_max_iters must be at least 1");
  check_range(mean_field_tol >= 0, "mean_field_tol must be non-negative");
  check_range(gibbs_steps_per_batch >= 1, "gibbs_steps_per_batch must be at least 1");
  check_range(patience >= 1, "patience must be at least 1");
  check_range(sigma_step_clip > 0, "sigma_step_clip must be positive");
}

PersistentChains PersistentChains::create(std::size_t count, const ModelParams& p,
                                          std::uint64_t seed) {
  PersistentChains chains;
  const auto n = static_cast<Eigen::Index>(count);
  chains.x = Matrix::Zero(n, p.visible());
  chains.y = Matrix::Zero(n, p.hidden1());
  chains.z = Matrix::Zero(n, p.hidden2());
  chains.y_prob = Matrix::Zero(n, p.hidden1());
  chains.rngs = make_streams(seed, count);
  return chains;
}

void PersistentChains::reset_hidden1(const Vector& probs) {
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto& rng = rngs[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(r, j) = rng.bernoulli(probs[j]) ? 1.0 : 0.0;
  }
  y_prob = probs.transpose().replicate(y.rows(), 1);
}

std::pair<ModelParams, Offsets> initialize(Eigen::Index L, Eigen::Index M, Eigen::Index N,
                                           const Vector& data_mean, Rng& rng) {
  if (L < 1 || M < 1 || N < 1)
    throw DimensionError("layer sizes must be positive, got " + std::to_string(L) + "/" +
                         std::to_string(M) + "/" + std::to_string(N));
  if (data_mean.size() != L)
    throw DimensionError("data mean has length " + std::to_string(data_mean.size()) +
                         ", expected " + std::to_string(L));
  ModelParams p = ModelParams::zeros(L, M, N);
  const double w_bound = std::sqrt(6.0 / static_cast<double>(L + M));
  const double u_bound = std::sqrt(6.0 / static_cast<double>(M + N));
  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = 0; j < M; ++j) p.W(i, j) = (2.0 * rng.uniform() - 1.0) * w_bound;
  for (Eigen::Index j = 0; j < M; ++j)
    for (Eigen::Index k = 0; k < N; ++k) p.U(j, k) = (2.0 * rng.uniform() - 1.0) * u_bound;
  // N(mean, variance 0.01): standard deviation 0.1.
  for (Eigen::Index i = 0; i < L; ++i) p.sigma2[i] = 0.5 + 0.1 * rng.normal();
  for (Eigen::Index j = 0; j < M; ++j) p.b_y[j] = -4.0 + 0.1 * rng.normal();
  for (Eigen::Index k = 0; k < N; ++k) p.b_z[k] = -4.0 + 0.1 * rng.normal();
  p.clamp_sigma2();

  Offsets c{data_mean, sigmoid(p.b_y), sigmoid(p.b_z)};
  return {std::move(p), std::move(c)};
}

MeanFieldState mean_field_data(const Matrix& X, const ModelParams& p, const Offsets& c,
                               const TrainConfig& cfg) {
  p.validate();
  c.check_against(p);
  const Eigen::Index B = X.rows();
  const Eigen::Index M = p.hidden1();
  const Eigen::Index N = p.hidden2();
  const Matrix bottom_up = bottom_up_input(X, p, c);

  MeanFieldState out;
  out.y.resize(B, M);
  out.z.resize(B, N);
  std::vector<int> iters(static_cast<std::size_t>(B), 0);
  std::vector<double> residuals(static_cast<std::size_t>(B), 0.0);

  parallel_for(static_cast<std::size_t>(B), cfg.workers, [&](std::size_t row) {
    const auto r = static_cast<Eigen::Index>(row);
    const Vector drive = bottom_up.row(r).transpose() + p.b_y;
    Vector y = c.c_y;
    Vector z = c.c_z;
    double residual = std::numeric_limits<double>::infinity();
    double previous = residual;
    bool damped = false;
    int t = 0;
    while (t < cfg.mean_field_max_iters) {
      ++t;
      Vector y_new = sigmoid(drive + p.U * (z - c.c_z));
      if (damped) y_new = 0.5 * (y + y_new);
      Vector z_new = sigmoid(p.U.transpose() * (y_new - c.c_y) + p.b_z);
      if (damped) z_new = 0.5 * (z + z_new);
      if (!y_new.allFinite() || !z_new.allFinite()) {
        std::ostringstream msg;
        msg << "mean-field iteration produced non-finite values (row " << r << ", sweep " << t
            << ", max |input| " << drive.cwiseAbs().maxCoeff() << ")";
        throw NumericError(msg.str());
      }
      residual = std::max((y_new - y).cwiseAbs().maxCoeff(), (z_new - z).cwiseAbs().maxCoeff());
      y = std::move(y_new);
      z = std::move(z_new);
      if (residual <= cfg.mean_field_tol) break;
      if (cfg.mean_field_damping && t > 1 && residual > previous) damped = true;
      previous = residual;
    }
    out.y.row(r) = y.transpose();
    out.z.row(r) = z.transpose();
    iters[row] = t;
    residuals[row] = residual;
  });

  out.iterations_used = B > 0 ? *std::max_element(iters.begin(), iters.end()) : 0;
  out.residual = B > 0 ? *std::max_element(residuals.begin(), residuals.end()) : 0.0;
  return out;
}

void gibbs_model_step(PersistentChains& chains, const ModelParams& p, const Offsets& c,
                      int workers) {
  const Vector sd = p.variances().cwiseSqrt();
  const Vector inv_var = p.variances().cwiseInverse();
  const Eigen::Index M = p.hidden1();
  const Eigen::Index N = p.hidden2();
  const Eigen::Index L = p.visible();
  parallel_for(chains.size(), workers, [&](std::size_t chain) {
    const auto r = static_cast<Eigen::Index>(chain);
    Rng& rng = chains.rngs[chain];
    const Vector yc = chains.y.row(r).transpose() - c.c_y;

    const Vector pz = sigmoid(p.U.transpose() * yc + p.b_z);
    for (Eigen::Index k = 0; k < N; ++k) chains.z(r, k) = rng.bernoulli(pz[k]) ? 1.0 : 0.0;

    const Vector mean = p.W * yc + c.c_x;
    for (Eigen::Index i = 0; i < L; ++i) chains.x(r, i) = mean[i] + sd[i] * rng.normal();

    const Vector xc = chains.x.row(r).transpose() - c.c_x;
    const Vector zc = chains.z.row(r).transpose() - c.c_z;
    const Vector py = sigmoid(p.W.transpose() * xc.cwiseProduct(inv_var) + p.U * zc + p.b_y);
    for (Eigen::Index j = 0; j < M; ++j) chains.y(r, j) = rng.bernoulli(py[j]) ? 1.0 : 0.0;
    chains.y_prob.row(r) = py.transpose();
  });
}

OptimizerState OptimizerState::zeros(const ModelParams& p) {
  return OptimizerState{Matrix::Zero(p.W.rows(), p.W.cols()), Matrix::Zero(p.U.rows(), p.U.cols()),
                        Vector::Zero(p.b_y.size()), Vector::Zero(p.b_z.size()),
                        Vector::Zero(p.sigma2.size())};
}

void apply_updates(ModelParams& p, OptimizerState& opt, const EnergyGradient& data_stats,
                   const EnergyGradient& model_stats, double learning_rate, double momentum,
                   const TrainConfig& cfg) {
  const double sigma_rate = cfg.sigma_lr_factor * learning_rate;
  opt.vW = momentum * opt.vW + learning_rate * (data_stats.dW - model_stats.dW);
  opt.vU = momentum * opt.vU + learning_rate * (data_stats.dU - model_stats.dU);
  opt.vb_y = momentum * opt.vb_y + learning_rate * (data_stats.db_y - model_stats.db_y);
  opt.vb_z = momentum * opt.vb_z + learning_rate * (data_stats.db_z - model_stats.db_z);
  opt.vsigma = (momentum * opt.vsigma + sigma_rate * (data_stats.dsigma - model_stats.dsigma))
                   .cwiseMax(-cfg.sigma_step_clip)
                   .cwiseMin(cfg.sigma_step_clip);
  if (!opt.vW.allFinite() || !opt.vU.allFinite() || !opt.vb_y.allFinite() ||
      !opt.vb_z.allFinite() || !opt.vsigma.allFinite())
    throw NumericError("parameter update is not finite");

  p.W += opt.vW;
  p.U += opt.vU;
  p.b_y += opt.vb_y;
  p.b_z += opt.vb_z;
  const Vector sigma = (p.sigma2.cwiseSqrt() + opt.vsigma).cwiseMax(std::sqrt(kSigma2Floor));
  p.sigma2 = sigma.cwiseProduct(sigma);
  p.clamp_sigma2();
}

OffsetUpdate update_offsets(const Offsets& c, const Vector& batch_mean_y,
                            const Vector& batch_mean_z, const Vector& batch_mean_x,
                            const ModelParams& p, double nu) {
  c.check_against(p);
  if (batch_mean_x.size() != c.c_x.size() || batch_mean_y.size() != c.c_y.size() ||
      batch_mean_z.size() != c.c_z.size())
    throw DimensionError("batch means do not match offset lengths");
  OffsetUpdate out;
  out.offsets.c_x = (1.0 - nu) * c.c_x + nu * batch_mean_x;
  out.offsets.c_y = (1.0 - nu) * c.c_y + nu * batch_mean_y;
  out.offsets.c_z = (1.0 - nu) * c.c_z + nu * batch_mean_z;
  const Vector dc_y = out.offsets.c_y - c.c_y;
  const Vector dc_z = out.offsets.c_z - c.c_z;
  out.delta_b_y =
      p.W.transpose() * (p.W * dc_y).cwiseQuotient(p.variances()) + p.U * dc_z;
  out.delta_b_z = p.U.transpose() * dc_y;
  return out;
}

void commit_offsets(ModelParams& p, Offsets& c, const OffsetUpdate& update) {
  p.b_y += update.delta_b_y;
  p.b_z += update.delta_b_z;
  c = update.offsets;
}

Schedule anneal(const TrainConfig& cfg, int epoch, int epochs_max) {
  if (epochs_max < 1 || epoch < 0 || epoch >= epochs_max)
    throw DomainError("epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(epochs_max) + ")");
  const double t =
      epochs_max == 1 ? 0.0 : static_cast<double>(epoch) / static_cast<double>(epochs_max - 1);
  return Schedule{cfg.learning_rate_start + t * (cfg.learning_rate_end - cfg.learning_rate_start),
                  cfg.momentum_start + t * (cfg.momentum_end - cfg.momentum_start)};
}

double reconstruction_error(const ModelParams& p, const Offsets& c, const Matrix& data,
                            const TrainConfig& cfg) {
  if (data.rows() == 0) return 0.0;
  const MeanFieldState mf = mean_field_data(data, p, c, cfg);
  const Matrix recon = visible_means(mf.y, p, c);
  return (data - recon).rowwise().squaredNorm().mean();
}

void TrainLog::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "epoch,recon_error,lr,momentum,grad_norm_W,grad_norm_U,mean_sigma\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.recon_error << ',' << e.learning_rate << ',' << e.momentum << ','
        << e.grad_norm_W << ',' << e.grad_norm_U << ',' << e.mean_sigma << '\n';
  out.precision(old_precision);
}

TrainResult train(const Matrix& data, const Matrix& validation, Eigen::Index hidden1,
                  Eigen::Index hidden2, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.rows() == 0) throw DomainError("training set is empty");
  if (!data.allFinite()) throw NumericError("training data contains non-finite values");
  if (validation.rows() > 0 && validation.cols() != data.cols())
    throw DimensionError("validation width differs from training width");
  const Matrix& holdout = validation.rows() > 0 ? validation : data;

  Rng init_rng(stream_seed(cfg.seed, kInitStream));
  auto [p, c] = initialize(data.cols(), hidden1, hidden2, data.colwise().mean().transpose(),
                           init_rng);

  TrainResult result;
  if (cfg.epochs_max == 0) {
    result.params = std::move(p);
    result.offsets = std::move(c);
    return result;
  }

  Rng shuffle_rng(stream_seed(cfg.seed, kShuffleStream));
  auto chains = PersistentChains::create(static_cast<std::size_t>(cfg.batch_size), p,
                                         stream_seed(cfg.seed, kChainStreams));
  OptimizerState opt = OptimizerState::zeros(p);
  const auto rows = static_cast<std::size_t>(data.rows());
  std::vector<Eigen::Index> order(rows);

  ModelParams good_p = p;
  Offsets good_c = c;
  double best_error = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    const Schedule sched = anneal(cfg, epoch, cfg.epochs_max);
    chains.reset_hidden1(c.c_y);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double norm_w = 0.0;
    double norm_u = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < rows; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(rows, start + static_cast<std::size_t>(cfg.batch_size));
      Matrix batch(static_cast<Eigen::Index>(stop - start), data.cols());
      for (std::size_t i = start; i < stop; ++i)
        batch.row(static_cast<Eigen::Index>(i - start)) = data.row(order[i]);

      try {
        const MeanFieldState mf = mean_field_data(batch, p, c, cfg);
        for (int k = 0; k < cfg.gibbs_steps_per_batch; ++k)
          gibbs_model_step(chains, p, c, cfg.workers);

        // Model-phase statistics use P(Y | x, z) in place of the binary y
        // sample; every gradient term is linear in y given (x, z).
        const EnergyGradient data_stats = mean_energy_gradients(batch, mf.y, mf.z, p, c);
        const EnergyGradient model_stats =
            mean_energy_gradients(chains.x, chains.y_prob, chains.z, p, c);
        norm_w += (data_stats.dW - model_stats.dW).norm();
        norm_u += (data_stats.dU - model_stats.dU).norm();
        ++batches;

        apply_updates(p, opt, data_stats, model_stats, sched.learning_rate, sched.momentum, cfg);
        const OffsetUpdate moved =
            update_offsets(c, mf.y.colwise().mean().transpose(), mf.z.colwise().mean().transpose(),
                           batch.colwise().mean().transpose(), p, cfg.offset_rate);
        commit_offsets(p, c, moved);
        if (!p.finite() || !c.c_y.allFinite() || !c.c_z.allFinite())
          throw NumericError("parameters became non-finite");
      } catch (const NumericError& e) {
        throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch) + ": " +
                                   e.what(),
                               good_p, good_c, result.log);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.recon_error = reconstruction_error(p, c, holdout, cfg);
    rec.learning_rate = sched.learning_rate;
    rec.momentum = sched.momentum;
    rec.grad_norm_W = norm_w / std::max(batches, 1);
    rec.grad_norm_U = norm_u / std::max(batches, 1);
    rec.mean_sigma = p.sigma2.cwiseSqrt().mean();
    if (!std::isfinite(rec.recon_error))
      throw TrainingDiverged("reconstruction error is not finite after epoch " +
                                 std::to_string(epoch),
                             good_p, good_c, result.log);
    result.log.epochs.push_back(rec);
    good_p = p;
    good_c = c;
    if (on_epoch) on_epoch(rec, p, c);

    if (rec.recon_error < best_error) {
      best_error = rec.recon_error;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }

  result.params = std::move(p);
  result.offsets = std::move(c);
  return result;
}

}  // namespace cgdbm
