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

#include "cgdbm/gdbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cgdbm/error.hpp"

namespace cgdbm {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void check_state(const FullState& s, const ModelParams& p) {
  require(s.x.size() == p.visible(), "state x has length " + std::to_string(s.x.size()) +
                                         ", model expects " + std::to_string(p.visible()));
  require(s.y.size() == p.hidden1(), "state y has length " + std::to_string(s.y.size()) +
                                         ", model expects " + std::to_string(p.hidden1()));
  require(s.z.size() == p.hidden2(), "state z has length " + std::to_string(s.z.size()) +
                                         ", model expects " + std::to_string(p.hidden2()));
}

void check_model(const ModelParams& p, const Offsets& c) {
  p.validate();
  c.check_against(p);
}

}  // namespace

ModelParams ModelParams::zeros(Eigen::Index L, Eigen::Index M, Eigen::Index N) {
  ModelParams p;
  p.W = Matrix::Zero(L, M);
  p.U = Matrix::Zero(M, N);
  p.b_y = Vector::Zero(M);
  p.b_z = Vector::Zero(N);
  p.sigma2 = Vector::Ones(L);
  return p;
}

void ModelParams::validate() const {
  require(U.rows() == W.cols(), "U is " + shape(U) + " but W is " + shape(W));
  require(b_y.size() == W.cols(), "b_y has length " + std::to_string(b_y.size()) +
                                      ", expected " + std::to_string(W.cols()));
  require(b_z.size() == U.cols(), "b_z has length " + std::to_string(b_z.size()) +
                                      ", expected " + std::to_string(U.cols()));
  require(sigma2.size() == W.rows(), "sigma2 has length " + std::to_string(sigma2.size()) +
                                         ", expected " + std::to_string(W.rows()));
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    if (!(sigma2[i] > 0.0) || !std::isfinite(sigma2[i]))
      throw DomainError("sigma2[" + std::to_string(i) + "] = " + std::to_string(sigma2[i]) +
                        " is not a positive finite variance");
  }
}

void ModelParams::clamp_sigma2() { sigma2 = sigma2.cwiseMax(kSigma2Floor); }

bool ModelParams::finite() const {
  return W.allFinite() && U.allFinite() && b_y.allFinite() && b_z.allFinite() &&
         sigma2.allFinite();
}

Offsets Offsets::zeros(Eigen::Index L, Eigen::Index M, Eigen::Index N) {
  return Offsets{Vector::Zero(L), Vector::Zero(M), Vector::Zero(N)};
}

void Offsets::check_against(const ModelParams& p) const {
  require(c_x.size() == p.visible() && c_y.size() == p.hidden1() && c_z.size() == p.hidden2(),
          "offset lengths (" + std::to_string(c_x.size()) + ", " + std::to_string(c_y.size()) +
              ", " + std::to_string(c_z.size()) + ") do not match model (" +
              std::to_string(p.visible()) + ", " + std::to_string(p.hidden1()) + ", " +
              std::to_string(p.hidden2()) + ")");
}

double energy(const FullState& s, const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  check_state(s, p);
  const Vector var = p.variances();
  const Vector xc = s.x - c.c_x;
  const Vector yc = s.y - c.c_y;
  const Vector zc = s.z - c.c_z;
  const Vector scaled = xc.cwiseQuotient(var);  // Lambda^-1 (x - c_x)
  return 0.5 * xc.dot(scaled) - scaled.dot(p.W * yc) - p.b_y.dot(yc) - p.b_z.dot(zc) -
         yc.dot(p.U * zc);
}

double unnormalized_log_prob(const FullState& s, const ModelParams& p, const Offsets& c) {
  return -energy(s, p, c);
}

VisibleConditional cond_visible(const Vector& y, const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  require(y.size() == p.hidden1(), "y has length " + std::to_string(y.size()) + ", expected " +
                                       std::to_string(p.hidden1()));
  return {p.W * (y - c.c_y) + c.c_x, p.variances()};
}

Vector cond_hidden1(const Vector& x, const Vector& z, const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  require(x.size() == p.visible(), "x has length " + std::to_string(x.size()) + ", expected " +
                                       std::to_string(p.visible()));
  require(z.size() == p.hidden2(), "z has length " + std::to_string(z.size()) + ", expected " +
                                       std::to_string(p.hidden2()));
  const Vector scaled = (x - c.c_x).cwiseQuotient(p.variances());
  const Vector input = p.W.transpose() * scaled + p.U * (z - c.c_z) + p.b_y;
  return sigmoid(input);
}

Vector cond_hidden2(const Vector& y, const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  require(y.size() == p.hidden1(), "y has length " + std::to_string(y.size()) + ", expected " +
                                       std::to_string(p.hidden1()));
  const Vector input = p.U.transpose() * (y - c.c_y) + p.b_z;
  return sigmoid(input);
}

EnergyGradient energy_gradients(const FullState& s, const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  check_state(s, p);
  const Vector var = p.variances();
  const Vector xc = s.x - c.c_x;
  const Vector yc = s.y - c.c_y;
  const Vector zc = s.z - c.c_z;
  const Vector sigma3 = var.cwiseProduct(var.cwiseSqrt());
  const Vector top_down = p.W * yc;

  EnergyGradient g;
  g.dW = xc.cwiseQuotient(var) * yc.transpose();
  g.dU = yc * zc.transpose();
  g.db_y = yc;
  g.db_z = zc;
  g.dsigma = (xc.array().square() - 2.0 * xc.array() * top_down.array()) / sigma3.array();
  return g;
}

double hidden_free_energy(const Vector& y, const Vector& z, const ModelParams& p,
                          const Offsets& c) {
  check_model(p, c);
  require(y.size() == p.hidden1() && z.size() == p.hidden2(),
          "hidden state lengths do not match the model");
  const Vector var = p.variances();
  const Vector yc = y - c.c_y;
  const Vector zc = z - c.c_z;
  const Vector m = p.W * yc;
  const double log_norm = (2.0 * std::numbers::pi * var.array()).log().sum();
  return -0.5 * m.dot(m.cwiseQuotient(var)) - p.b_y.dot(yc) - p.b_z.dot(zc) - yc.dot(p.U * zc) -
         0.5 * log_norm;
}

Vector HiddenTable::y_of(std::size_t index) const {
  Vector y(M);
  for (Eigen::Index j = 0; j < M; ++j) y[j] = static_cast<double>((index >> j) & 1U);
  return y;
}

Vector HiddenTable::z_of(std::size_t index) const {
  Vector z(N);
  for (Eigen::Index k = 0; k < N; ++k) z[k] = static_cast<double>((index >> (M + k)) & 1U);
  return z;
}

std::size_t HiddenTable::index_of(const Vector& y, const Vector& z) {
  std::size_t index = 0;
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (y[j] > 0.5) index |= std::size_t{1} << j;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (z[k] > 0.5) index |= std::size_t{1} << (y.size() + k);
  return index;
}

Vector HiddenTable::hidden1_marginal() const {
  Vector marginal = Vector::Zero(M);
  for (std::size_t i = 0; i < prob.size(); ++i)
    for (Eigen::Index j = 0; j < M; ++j)
      if ((i >> j) & 1U) marginal[j] += prob[i];
  return marginal;
}

HiddenTable brute_force_hidden_marginal(const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  const Eigen::Index M = p.hidden1();
  const Eigen::Index N = p.hidden2();
  if (M + N > kMaxEnumeratedUnits)
    throw DomainError("refusing to enumerate 2^" + std::to_string(M + N) +
                      " hidden configurations (limit 2^" + std::to_string(kMaxEnumeratedUnits) +
                      ")");
  HiddenTable table;
  table.M = M;
  table.N = N;
  const std::size_t count = std::size_t{1} << (M + N);
  table.prob.resize(count);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    table.prob[i] = -hidden_free_energy(table.y_of(i), table.z_of(i), p, c);
    max_log = std::max(max_log, table.prob[i]);
  }
  double total = 0.0;
  for (double& v : table.prob) {
    v = std::exp(v - max_log);
    total += v;
  }
  for (double& v : table.prob) v /= total;
  return table;
}

Offsets UncenteredModel::as_offsets() const {
  return Offsets{visible_mean, Vector::Zero(params.hidden1()), Vector::Zero(params.hidden2())};
}

UncenteredModel to_uncentered(const ModelParams& p, const Offsets& c) {
  check_model(p, c);
  // Expanding the centered energy around zero hidden offsets:
  //   visible mean  a   = c_x - W c_y
  //   hidden1 bias  b_y' = b_y - U c_z - W^T Lambda^-1 W c_y
  //   hidden2 bias  b_z' = b_z - U^T c_y
  const Vector var = p.variances();
  const Vector w_cy = p.W * c.c_y;
  UncenteredModel out;
  out.params = p;
  out.params.b_y = p.b_y - p.U * c.c_z - p.W.transpose() * w_cy.cwiseQuotient(var);
  out.params.b_z = p.b_z - p.U.transpose() * c.c_y;
  out.visible_mean = c.c_x - w_cy;
  return out;
}

Matrix bottom_up_input(const Matrix& X, const ModelParams& p, const Offsets& c) {
  require(X.cols() == p.visible(), "batch has width " + std::to_string(X.cols()) +
                                       ", model expects " + std::to_string(p.visible()));
  const Vector inv_var = p.variances().cwiseInverse();
  Matrix scaled = (X.rowwise() - c.c_x.transpose()) * inv_var.asDiagonal();
  return scaled * p.W;
}

Matrix hidden1_probs(const Matrix& X, const Matrix& Z, const ModelParams& p, const Offsets& c) {
  require(Z.rows() == X.rows() && Z.cols() == p.hidden2(), "hidden2 batch has shape " + shape(Z));
  Matrix input = bottom_up_input(X, p, c) + (Z.rowwise() - c.c_z.transpose()) * p.U.transpose();
  input.rowwise() += p.b_y.transpose();
  return sigmoid(input);
}

Matrix hidden2_probs(const Matrix& Y, const ModelParams& p, const Offsets& c) {
  require(Y.cols() == p.hidden1(), "hidden1 batch has shape " + shape(Y));
  Matrix input = (Y.rowwise() - c.c_y.transpose()) * p.U;
  input.rowwise() += p.b_z.transpose();
  return sigmoid(input);
}

Matrix visible_means(const Matrix& Y, const ModelParams& p, const Offsets& c) {
  require(Y.cols() == p.hidden1(), "hidden1 batch has shape " + shape(Y));
  Matrix out = (Y.rowwise() - c.c_y.transpose()) * p.W.transpose();
  out.rowwise() += c.c_x.transpose();
  return out;
}

EnergyGradient mean_energy_gradients(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                     const ModelParams& p, const Offsets& c) {
  require(X.rows() == Y.rows() && Y.rows() == Z.rows() && X.rows() > 0,
          "phase batches must have equal, non-zero row counts");
  require(X.cols() == p.visible() && Y.cols() == p.hidden1() && Z.cols() == p.hidden2(),
          "phase batch widths do not match the model");
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  const Vector var = p.variances();
  const Vector sigma3 = var.cwiseProduct(var.cwiseSqrt());
  const Matrix xc = X.rowwise() - c.c_x.transpose();
  const Matrix yc = Y.rowwise() - c.c_y.transpose();
  const Matrix zc = Z.rowwise() - c.c_z.transpose();
  const Matrix top_down = yc * p.W.transpose();

  EnergyGradient g;
  g.dW = var.cwiseInverse().asDiagonal() * (xc.transpose() * yc) * inv_n;
  g.dU = yc.transpose() * zc * inv_n;
  g.db_y = yc.colwise().mean().transpose();
  g.db_z = zc.colwise().mean().transpose();
  const Vector sq =
      (xc.array().square() - 2.0 * xc.array() * top_down.array()).matrix().colwise().mean().transpose();
  g.dsigma = sq.cwiseQuotient(sigma3);
  return g;
}

}  // namespace cgdbm
