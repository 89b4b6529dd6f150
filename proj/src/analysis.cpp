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

#include "cgdbm/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "cgdbm/error.hpp"
#include "cgdbm/parallel.hpp"
#include "cgdbm/rng.hpp"

namespace cgdbm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Pearson r, or NaN when either side has zero variance.
double pearson_or_nan(const Vector& a, const Vector& b) {
  if (a.maxCoeff() == a.minCoeff() || b.maxCoeff() == b.minCoeff()) return kNaN;
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) return kNaN;
  const double r = (da * db).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace

std::vector<std::vector<Grating>> group_by_orientation(const std::vector<Grating>& gratings) {
  std::map<double, std::vector<Grating>> by_angle;
  for (const auto& g : gratings) by_angle[g.spec.orientation].push_back(g);
  std::vector<std::vector<Grating>> out;
  for (auto& [angle, group] : by_angle) out.push_back(std::move(group));
  return out;
}

OrientationMapSet orientation_maps(const ModelParams& p, const Offsets& c,
                                   const std::vector<std::vector<Grating>>& groups,
                                   const Whitener& whitener, const TrainConfig& cfg) {
  if (groups.empty()) throw DomainError("no orientation groups given");
  OrientationMapSet out;
  out.maps.resize(static_cast<Eigen::Index>(groups.size()), p.hidden1());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.empty())
      throw DomainError("orientation group " + std::to_string(g) + " is empty");
    Matrix pixels(static_cast<Eigen::Index>(group.size()), whitener.input_dim());
    for (std::size_t s = 0; s < group.size(); ++s) {
      if (group[s].pixels.size() != whitener.input_dim())
        throw DimensionError("grating size does not match the whitener input");
      pixels.row(static_cast<Eigen::Index>(s)) = (group[s].pixels + whitener.mean).transpose();
    }
    const MeanFieldState mf = mean_field_data(whiten(pixels, whitener), p, c, cfg);
    out.maps.row(static_cast<Eigen::Index>(g)) = mf.y.colwise().mean();
    out.orientations.push_back(group.front().spec.orientation);
  }
  return out;
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw DimensionError("pearson arguments differ in length (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  if (a.size() < 3) throw DomainError("pearson needs at least 3 samples");
  const double r = pearson_or_nan(a, b);
  if (std::isnan(r)) throw DomainError("correlation is undefined for a constant vector");
  return r;
}

double significance_threshold(int n, double alpha) {
  if (n < 4) throw DomainError("significance threshold needs n >= 4, got " + std::to_string(n));
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double dof = static_cast<double>(n - 2);
  const boost::math::students_t dist(dof);
  const double t = boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
  return t / std::sqrt(t * t + dof);
}

CorrelationReport correlate(const FrameSet& frames, const OrientationMapSet& maps,
                            double threshold, int workers) {
  if (frames.width() != maps.maps.cols())
    throw DimensionError("frames have " + std::to_string(frames.width()) + " units, maps have " +
                         std::to_string(maps.maps.cols()));
  const Eigen::Index F = frames.count();
  const Eigen::Index K = maps.count();
  CorrelationReport rep;
  rep.threshold = threshold;
  rep.r = Matrix::Zero(F, K);
  std::vector<Vector> map_rows;
  for (Eigen::Index k = 0; k < K; ++k) map_rows.push_back(maps.maps.row(k).transpose());

  parallel_for(static_cast<std::size_t>(F), workers, [&](std::size_t i) {
    const auto f = static_cast<Eigen::Index>(i);
    const Vector frame = frames.frames.row(f).transpose();
    for (Eigen::Index k = 0; k < K; ++k) {
      const double r = pearson_or_nan(frame, map_rows[static_cast<std::size_t>(k)]);
      rep.r(f, k) = std::isnan(r) ? 0.0 : r;
    }
  });

  rep.preference.assign(static_cast<std::size_t>(F), -1);
  rep.preference_counts = Vector::Zero(K);
  rep.max_r_per_orientation = Vector::Constant(K, kNaN);
  rep.max_r = F > 0 && K > 0 ? rep.r.maxCoeff() : 0.0;
  Eigen::Index significant = 0;
  for (Eigen::Index f = 0; f < F; ++f) {
    if (K == 0 || rep.r.row(f).cwiseAbs().maxCoeff() < threshold) continue;
    ++significant;
    Eigen::Index best = 0;
    rep.r.row(f).maxCoeff(&best);
    rep.preference[static_cast<std::size_t>(f)] = static_cast<int>(best);
    rep.preference_counts[best] += 1.0;
    const double r = rep.r(f, best);
    if (std::isnan(rep.max_r_per_orientation[best]) || r > rep.max_r_per_orientation[best])
      rep.max_r_per_orientation[best] = r;
  }
  rep.significant_fraction = F > 0 ? static_cast<double>(significant) / static_cast<double>(F) : 0.0;
  rep.preference_hist = K > 0 && rep.preference_counts[0] > 0
                            ? Vector(rep.preference_counts / rep.preference_counts[0])
                            : Vector::Constant(K, kNaN);
  return rep;
}

void SomConfig::validate() const {
  if (nodes < 2) throw ConfigError("a SOM needs at least 2 nodes");
  if (epochs < 1) throw ConfigError("SOM epochs must be at least 1");
  if (!(learning_rate_start > 0) || !(learning_rate_end > 0))
    throw ConfigError("SOM learning rates must be positive");
  if (!(radius_start > 0) || !(radius_end > 0)) throw ConfigError("SOM radii must be positive");
}

int circular_distance(int i, int j, int n) {
  const int d = std::abs(i - j) % n;
  return std::min(d, n - d);
}

Eigen::Index best_matching_unit(const Matrix& nodes, const Vector& v) {
  Eigen::Index best = 0;
  (nodes.rowwise() - v.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return best;
}

double quantization_error(const Matrix& nodes, const Matrix& data) {
  if (data.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    total += std::sqrt((nodes.rowwise() - data.row(r)).rowwise().squaredNorm().minCoeff());
  return total / static_cast<double>(data.rows());
}

SomModel train_som(const FrameSet& frames, const SomConfig& cfg) {
  cfg.validate();
  const Eigen::Index F = frames.count();
  if (F < cfg.nodes)
    throw DomainError("SOM with " + std::to_string(cfg.nodes) + " nodes needs at least that many "
                      "frames, got " + std::to_string(F));
  Rng rng(cfg.seed);
  SomModel som;
  som.nodes.resize(cfg.nodes, frames.width());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(F));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  // Nodes start bunched near the data mean and unfold during training.
  const Eigen::RowVectorXd mean = frames.frames.colwise().mean();
  const Eigen::RowVectorXd spread =
      ((frames.frames.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (int n = 0; n < cfg.nodes; ++n)
    for (Eigen::Index i = 0; i < frames.width(); ++i)
      som.nodes(n, i) = mean[i] + 0.01 * spread[i] * rng.normal();

  std::vector<double> weights(static_cast<std::size_t>(cfg.nodes / 2 + 1));
  const double total = static_cast<double>(cfg.epochs) * static_cast<double>(F) - 1.0;
  std::size_t step = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Eigen::Index idx : order) {
      // Rate and radius fall linearly per presentation over the whole run.
      const double t = total > 0.0 ? static_cast<double>(step++) / total : 0.0;
      const double lr = cfg.learning_rate_start + t * (cfg.learning_rate_end - cfg.learning_rate_start);
      const double radius = cfg.radius_start + t * (cfg.radius_end - cfg.radius_start);
      for (std::size_t d = 0; d < weights.size(); ++d)
        weights[d] = lr * std::exp(-static_cast<double>(d * d) / (2.0 * radius * radius));
      const auto v = frames.frames.row(idx);
      const auto bmu = static_cast<int>(best_matching_unit(som.nodes, v.transpose()));
      for (int n = 0; n < cfg.nodes; ++n) {
        const double h = weights[static_cast<std::size_t>(circular_distance(n, bmu, cfg.nodes))];
        if (h < 1e-12) continue;
        som.nodes.row(n) += h * (v - som.nodes.row(n));
      }
    }
    som.quantization_error.push_back(quantization_error(som.nodes, frames.frames));
  }
  return som;
}

std::vector<NodeMatch> correlate_som(const SomModel& som, const OrientationMapSet& maps) {
  if (som.nodes.cols() != maps.maps.cols())
    throw DimensionError("SOM nodes have width " + std::to_string(som.nodes.cols()) +
                         ", maps have " + std::to_string(maps.maps.cols()));
  std::vector<NodeMatch> out;
  for (Eigen::Index n = 0; n < som.size(); ++n) {
    NodeMatch best;
    best.r = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < maps.count(); ++k) {
      const double r = pearson_or_nan(som.nodes.row(n).transpose(), maps.maps.row(k).transpose());
      if (!std::isnan(r) && r > best.r) {
        best.r = r;
        best.orientation = static_cast<int>(k);
      }
    }
    if (best.orientation < 0) best.r = 0.0;
    out.push_back(best);
  }
  return out;
}

std::vector<Eigen::Index> top_active_filters(const Vector& activity, std::size_t k) {
  if (k > static_cast<std::size_t>(activity.size()))
    throw DomainError("asked for " + std::to_string(k) + " filters out of " +
                      std::to_string(activity.size()));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(activity.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return activity[a] > activity[b]; });
  idx.resize(k);
  return idx;
}

ReceptiveField second_layer_rf(const ModelParams& p, const Whitener& whitener, Eigen::Index unit,
                               std::size_t top) {
  if (unit < 0 || unit >= p.hidden2())
    throw DomainError("hidden2 unit " + std::to_string(unit) + " does not exist (N = " +
                      std::to_string(p.hidden2()) + ")");
  if (p.visible() != whitener.k())
    throw DimensionError("model visible size does not match the whitener dimension");
  const Vector column = p.U.col(unit);
  const std::size_t take = std::min<std::size_t>(top, static_cast<std::size_t>(column.size()));
  const std::vector<Eigen::Index> order = top_active_filters(column.cwiseAbs(), take);
  ReceptiveField rf;
  Vector combined = Vector::Zero(p.visible());
  for (Eigen::Index j : order) {
    rf.filters.push_back(j);
    rf.weights.push_back(column[j]);
    combined += column[j] * p.W.col(j);
  }
  rf.image = dewhiten_directions(combined.transpose(), whitener).row(0).transpose();
  return rf;
}

Vector orientation_selectivity(const OrientationMapSet& maps) {
  const Eigen::Index K = maps.count();
  if (K < 2 || K % 2 != 0)
    throw DomainError("orientation selectivity needs an even number of evenly spaced maps");
  Vector osi(maps.maps.cols());
  for (Eigen::Index j = 0; j < maps.maps.cols(); ++j) {
    Eigen::Index best = 0;
    const double r_max = maps.maps.col(j).maxCoeff(&best);
    const double r_orth = maps.maps((best + K / 2) % K, j);
    const double denom = r_max + r_orth;
    osi[j] = denom > 0.0 ? (r_max - r_orth) / denom : 0.0;
  }
  return osi;
}

Vector orientation_selectivity(const ModelParams& p, const Offsets& c,
                               const std::vector<std::vector<Grating>>& groups,
                               const Whitener& whitener, const TrainConfig& cfg) {
  return orientation_selectivity(orientation_maps(p, c, groups, whitener, cfg));
}

}  // namespace cgdbm
