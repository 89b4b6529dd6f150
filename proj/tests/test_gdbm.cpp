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
#include <numbers>

#include "cgdbm/error.hpp"
#include "cgdbm/gdbm.hpp"
#include "test_util.hpp"

using namespace cgdbm;
using cgdbm::testing::random_model;
using cgdbm::testing::random_state;

namespace {

ModelParams unit_model() {
  ModelParams p = ModelParams::zeros(1, 1, 1);
  p.W(0, 0) = 1.0;
  p.U(0, 0) = 1.0;
  return p;
}

FullState ones_state() { return {Vector::Ones(1), Vector::Ones(1), Vector::Ones(1)}; }

// P(y_j = 1 | rest) from two energy evaluations.
double hidden1_ratio(FullState s, Eigen::Index j, const ModelParams& p, const Offsets& c) {
  s.y[j] = 1.0;
  const double e1 = energy(s, p, c);
  s.y[j] = 0.0;
  const double e0 = energy(s, p, c);
  return 1.0 / (1.0 + std::exp(e1 - e0));
}

double hidden2_ratio(FullState s, Eigen::Index k, const ModelParams& p, const Offsets& c) {
  s.z[k] = 1.0;
  const double e1 = energy(s, p, c);
  s.z[k] = 0.0;
  const double e0 = energy(s, p, c);
  return 1.0 / (1.0 + std::exp(e1 - e0));
}

}  // namespace

TEST_CASE("energy of hand-computed states") {
  const auto zero_c = Offsets::zeros(1, 1, 1);
  CHECK(energy({Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)}, ModelParams::zeros(1, 1, 1),
               zero_c) == 0.0);
  // 0.5 - 1 - 0 - 0 - 1
  CHECK(energy(ones_state(), unit_model(), zero_c) == doctest::Approx(-1.5).epsilon(1e-15));

  auto m = random_model(3, 4, 2, 7);
  m.c.c_y.setZero();
  m.c.c_z.setZero();
  const FullState centered{m.c.c_x, Vector::Zero(4), Vector::Zero(2)};
  CHECK(energy(centered, m.p, m.c) == 0.0);
}

TEST_CASE("unnormalized log probability is negated energy") {
  const auto zero_c = Offsets::zeros(1, 1, 1);
  CHECK(unnormalized_log_prob(ones_state(), unit_model(), zero_c) == doctest::Approx(1.5));

  auto m = random_model(3, 4, 2, 11);
  Rng rng(3);
  const auto s1 = random_state(m.p, rng);
  const auto s2 = random_state(m.p, rng);
  const double d = unnormalized_log_prob(s1, m.p, m.c) - unnormalized_log_prob(s2, m.p, m.c);
  CHECK(d == doctest::Approx(energy(s2, m.p, m.c) - energy(s1, m.p, m.c)).epsilon(1e-12));
  if (energy(s1, m.p, m.c) < energy(s2, m.p, m.c))
    CHECK(unnormalized_log_prob(s1, m.p, m.c) > unnormalized_log_prob(s2, m.p, m.c));
  else
    CHECK(unnormalized_log_prob(s1, m.p, m.c) <= unnormalized_log_prob(s2, m.p, m.c));
}

TEST_CASE("errors on bad shapes and variances") {
  auto p = unit_model();
  const auto c = Offsets::zeros(1, 1, 1);
  CHECK_THROWS_AS(energy({Vector::Zero(2), Vector::Zero(1), Vector::Zero(1)}, p, c),
                  DimensionError);
  CHECK_THROWS_AS(energy(ones_state(), p, Offsets::zeros(1, 2, 1)), DimensionError);
  p.sigma2[0] = 0.0;
  CHECK_THROWS_AS(energy(ones_state(), p, c), DomainError);
  p.sigma2[0] = -1.0;
  CHECK_THROWS_AS(cond_hidden1(Vector::Zero(1), Vector::Zero(1), p, c), DomainError);
  CHECK_THROWS_AS(cond_hidden2(Vector::Zero(3), unit_model(), c), DimensionError);
}

TEST_CASE("variance floor") {
  auto p = unit_model();
  p.sigma2[0] = 1e-9;
  CHECK(p.variances()[0] == kSigma2Floor);
  p.clamp_sigma2();
  CHECK(p.sigma2[0] == kSigma2Floor);
}

TEST_CASE("visible conditional") {
  auto m = random_model(3, 4, 2, 5);
  m.c.c_y.setZero();
  const auto cv = cond_visible(Vector::Zero(4), m.p, m.c);
  CHECK((cv.mean - m.c.c_x).norm() == 0.0);
  CHECK((cv.variance - m.p.sigma2).norm() == 0.0);

  ModelParams p = ModelParams::zeros(1, 1, 1);
  p.W(0, 0) = 2.0;
  Offsets c = Offsets::zeros(1, 1, 1);
  c.c_y[0] = 0.5;
  c.c_x[0] = 1.0;
  CHECK(cond_visible(Vector::Ones(1), p, c).mean[0] == doctest::Approx(2.0).epsilon(1e-15));

  auto zeroed = random_model(3, 4, 2, 6);
  zeroed.p.W.setZero();
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    const auto s = random_state(zeroed.p, rng);
    CHECK((cond_visible(s.y, zeroed.p, zeroed.c).mean - zeroed.c.c_x).norm() == 0.0);
  }
}

TEST_CASE("hidden1 conditional") {
  const auto c0 = Offsets::zeros(3, 4, 2);
  const Vector p0 = cond_hidden1(Vector::Random(3), Vector::Ones(2), ModelParams::zeros(3, 4, 2), c0);
  CHECK((p0.array() == 0.5).all());

  const Vector p1 = cond_hidden1(Vector::Ones(1), Vector::Zero(1), unit_model(), Offsets::zeros(1, 1, 1));
  CHECK(p1[0] == doctest::Approx(0.7310585786300049).epsilon(1e-14));

  // Variances other than one: the bottom-up term carries Lambda^-1.
  auto m = random_model(3, 4, 2, 9);
  Rng rng(4);
  const auto s = random_state(m.p, rng);
  const Vector probs = cond_hidden1(s.x, s.z, m.p, m.c);
  for (Eigen::Index j = 0; j < 4; ++j)
    CHECK(std::abs(probs[j] - hidden1_ratio(s, j, m.p, m.c)) <= 1e-12);
}

TEST_CASE("hidden2 conditional") {
  const Vector p0 = cond_hidden2(Vector::Ones(4), ModelParams::zeros(3, 4, 2), Offsets::zeros(3, 4, 2));
  CHECK((p0.array() == 0.5).all());

  ModelParams p = ModelParams::zeros(1, 1, 1);
  p.U(0, 0) = 2.0;
  p.b_z[0] = -1.0;
  Offsets c = Offsets::zeros(1, 1, 1);
  c.c_y[0] = 0.5;
  CHECK(cond_hidden2(Vector::Ones(1), p, c)[0] == doctest::Approx(0.5).epsilon(1e-15));

  auto m = random_model(3, 4, 2, 10);
  Rng rng(5);
  const auto s = random_state(m.p, rng);
  const Vector probs = cond_hidden2(s.y, m.p, m.c);
  for (Eigen::Index k = 0; k < 2; ++k)
    CHECK(std::abs(probs[k] - hidden2_ratio(s, k, m.p, m.c)) <= 1e-12);
}

TEST_CASE("conditionals equal enumerated energy ratios on models with M + N <= 12") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index M = 1 + static_cast<Eigen::Index>(rng.below(7));
    const Eigen::Index N = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(12 - M)));
    auto m = random_model(1 + static_cast<Eigen::Index>(rng.below(4)), M, N, 1000 + trial, 1.5);
    const auto s = random_state(m.p, rng);
    const Vector py = cond_hidden1(s.x, s.z, m.p, m.c);
    const Vector pz = cond_hidden2(s.y, m.p, m.c);
    for (Eigen::Index j = 0; j < M; ++j)
      CHECK(std::abs(py[j] - hidden1_ratio(s, j, m.p, m.c)) <= 1e-12);
    for (Eigen::Index k = 0; k < N; ++k)
      CHECK(std::abs(pz[k] - hidden2_ratio(s, k, m.p, m.c)) <= 1e-12);
  }
}

TEST_CASE("gradients vanish at the centered state") {
  auto m = random_model(3, 4, 2, 21);
  m.c.c_y.setZero();
  m.c.c_z.setZero();
  const auto g = energy_gradients({m.c.c_x, Vector::Zero(4), Vector::Zero(2)}, m.p, m.c);
  CHECK(g.dW.norm() == 0.0);
  CHECK(g.dU.norm() == 0.0);
  CHECK(g.db_y.norm() == 0.0);
  CHECK(g.db_z.norm() == 0.0);
  CHECK(g.dsigma.norm() == 0.0);
}

TEST_CASE("sigma gradient hand example") {
  // x = 2, y = 1, w = 1, sigma = 1: 4 - 4 = 0
  ModelParams p = ModelParams::zeros(1, 1, 1);
  p.W(0, 0) = 1.0;
  const auto g = energy_gradients({Vector::Constant(1, 2.0), Vector::Ones(1), Vector::Zero(1)}, p,
                                  Offsets::zeros(1, 1, 1));
  CHECK(g.dsigma[0] == 0.0);
}

TEST_CASE("gradients match central differences of -energy") {
  const double h = 1e-5;
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto m = random_model(3, 4, 2, 500 + trial);
    const auto s = random_state(m.p, rng);
    const auto g = energy_gradients(s, m.p, m.c);
    auto neg_e = [&](ModelParams q) { return -energy(s, q, m.c); };

    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) {
        const double fd = testing::central_difference(
            [&](double v) { auto q = m.p; q.W(i, j) = v; return neg_e(q); }, m.p.W(i, j), h);
        worst = std::max(worst, testing::relative_error(g.dW(i, j), fd));
      }
    for (Eigen::Index j = 0; j < 4; ++j)
      for (Eigen::Index k = 0; k < 2; ++k) {
        const double fd = testing::central_difference(
            [&](double v) { auto q = m.p; q.U(j, k) = v; return neg_e(q); }, m.p.U(j, k), h);
        worst = std::max(worst, testing::relative_error(g.dU(j, k), fd));
      }
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double fd = testing::central_difference(
          [&](double v) { auto q = m.p; q.b_y[j] = v; return neg_e(q); }, m.p.b_y[j], h);
      worst = std::max(worst, testing::relative_error(g.db_y[j], fd));
    }
    for (Eigen::Index k = 0; k < 2; ++k) {
      const double fd = testing::central_difference(
          [&](double v) { auto q = m.p; q.b_z[k] = v; return neg_e(q); }, m.p.b_z[k], h);
      worst = std::max(worst, testing::relative_error(g.db_z[k], fd));
    }
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double fd = testing::central_difference(
          [&](double sd) { auto q = m.p; q.sigma2[i] = sd * sd; return neg_e(q); },
          std::sqrt(m.p.sigma2[i]), h);
      worst = std::max(worst, testing::relative_error(g.dsigma[i], fd));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("batched gradients average the per-state gradients") {
  auto m = random_model(3, 4, 2, 31);
  Rng rng(8);
  Matrix X(5, 3), Y(5, 4), Z(5, 2);
  EnergyGradient sum{Matrix::Zero(3, 4), Matrix::Zero(4, 2), Vector::Zero(4), Vector::Zero(2),
                     Vector::Zero(3)};
  for (int r = 0; r < 5; ++r) {
    const auto s = random_state(m.p, rng);
    X.row(r) = s.x.transpose();
    Y.row(r) = s.y.transpose();
    Z.row(r) = s.z.transpose();
    const auto g = energy_gradients(s, m.p, m.c);
    sum.dW += g.dW / 5.0;
    sum.dU += g.dU / 5.0;
    sum.db_y += g.db_y / 5.0;
    sum.db_z += g.db_z / 5.0;
    sum.dsigma += g.dsigma / 5.0;
  }
  const auto batch = mean_energy_gradients(X, Y, Z, m.p, m.c);
  CHECK((batch.dW - sum.dW).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((batch.dU - sum.dU).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((batch.db_y - sum.db_y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((batch.db_z - sum.db_z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((batch.dsigma - sum.dsigma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hidden free energy") {
  const double f0 = hidden_free_energy(Vector::Zero(1), Vector::Zero(1), ModelParams::zeros(1, 1, 1),
                                       Offsets::zeros(1, 1, 1));
  CHECK(f0 == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(f0 == doctest::Approx(-0.918939).epsilon(1e-6));

  auto m = random_model(1, 3, 2, 41, 1.5);
  for (std::size_t idx = 0; idx < 32; ++idx) {
    HiddenTable t;
    t.M = 3;
    t.N = 2;
    const Vector y = t.y_of(idx);
    const Vector z = t.z_of(idx);
    const double sd = std::sqrt(m.p.sigma2[0]);
    const double center = m.c.c_x[0] + (m.p.W * (y - m.c.c_y))[0];
    const double integral = testing::simpson(
        [&](double x) { return std::exp(-energy({Vector::Constant(1, x), y, z}, m.p, m.c)); },
        center - 20 * sd, center + 20 * sd, 4000);
    const double closed = std::exp(-hidden_free_energy(y, z, m.p, m.c));
    CHECK(testing::relative_error(closed, integral) <= 1e-6);
  }

  // Shifting b_y by d shifts F by -d^T (y - c_y).
  const Vector y = Vector::Ones(3);
  const Vector z = Vector::Zero(2);
  auto shifted = m;
  const Vector d = Vector::Constant(3, 0.7);
  shifted.p.b_y += d;
  CHECK(hidden_free_energy(y, z, shifted.p, shifted.c) ==
        doctest::Approx(hidden_free_energy(y, z, m.p, m.c) - d.dot(y - m.c.c_y)).epsilon(1e-13));
}

TEST_CASE("enumerated hidden marginal") {
  const auto uniform = brute_force_hidden_marginal(ModelParams::zeros(2, 3, 2), Offsets::zeros(2, 3, 2));
  REQUIRE(uniform.size() == 32);
  for (double v : uniform.prob) CHECK(v == doctest::Approx(1.0 / 32).epsilon(1e-14));

  auto big = random_model(2, 12, 9, 1);
  CHECK_THROWS_AS(brute_force_hidden_marginal(big.p, big.c), DomainError);

  for (std::uint64_t seed : {51, 52, 53}) {
    auto m = random_model(3, 5, 4, seed, 1.5);
    const auto t = brute_force_hidden_marginal(m.p, m.c);
    double total = 0.0;
    for (double v : t.prob) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("enumerated marginal matches grid integration over x") {
  auto m = random_model(2, 2, 1, 61, 1.2);
  const auto table = brute_force_hidden_marginal(m.p, m.c);
  std::vector<double> grid(table.size());
  double total = 0.0;
  const double sd0 = std::sqrt(m.p.sigma2[0]);
  const double sd1 = std::sqrt(m.p.sigma2[1]);
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    const Vector y = table.y_of(idx);
    const Vector z = table.z_of(idx);
    const Vector mean = cond_visible(y, m.p, m.c).mean;
    const int n = 400;
    const double lo0 = mean[0] - 12 * sd0, hi0 = mean[0] + 12 * sd0;
    const double lo1 = mean[1] - 12 * sd1, hi1 = mean[1] + 12 * sd1;
    const double h0 = (hi0 - lo0) / n, h1 = (hi1 - lo1) / n;
    double sum = 0.0;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const double w = (a == 0 || a == n ? 0.5 : 1.0) * (b == 0 || b == n ? 0.5 : 1.0);
        const Vector x{{lo0 + a * h0, lo1 + b * h1}};
        sum += w * std::exp(-energy({x, y, z}, m.p, m.c));
      }
    grid[idx] = sum * h0 * h1;
    total += grid[idx];
  }
  for (double& v : grid) v /= total;
  CHECK(testing::total_variation(table.prob, grid) <= 1e-4);
}

TEST_CASE("hidden2 conditional reconstructed from the table") {
  auto m = random_model(2, 3, 2, 71, 1.3);
  const auto t = brute_force_hidden_marginal(m.p, m.c);
  for (std::size_t yi = 0; yi < 8; ++yi) {
    double mass = 0.0;
    Vector on = Vector::Zero(2);
    for (std::size_t zi = 0; zi < 4; ++zi) {
      const std::size_t idx = yi | (zi << 3);
      mass += t.prob[idx];
      for (int k = 0; k < 2; ++k)
        if ((zi >> k) & 1U) on[k] += t.prob[idx];
    }
    const Vector expected = cond_hidden2(t.y_of(yi), m.p, m.c);
    CHECK(((on / mass) - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("uncentered reparameterization") {
  auto m = random_model(3, 4, 2, 81);
  auto plain = m;
  plain.c.c_y.setZero();
  plain.c.c_z.setZero();
  const auto same = to_uncentered(plain.p, plain.c);
  CHECK((same.params.b_y - plain.p.b_y).norm() == 0.0);
  CHECK((same.params.b_z - plain.p.b_z).norm() == 0.0);
  CHECK((same.params.W - plain.p.W).norm() == 0.0);
  CHECK((same.params.U - plain.p.U).norm() == 0.0);

  const auto u = to_uncentered(m.p, m.c);
  const Offsets uc = u.as_offsets();
  Rng rng(99);
  double first = 0.0, spread = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto s = random_state(m.p, rng);
    const double diff = energy(s, m.p, m.c) - energy(s, u.params, uc);
    if (t == 0) first = diff;
    spread = std::max(spread, std::abs(diff - first));
  }
  CHECK(spread <= 1e-9);

  auto small = random_model(2, 3, 2, 82, 1.5);
  const auto us = to_uncentered(small.p, small.c);
  const auto before = brute_force_hidden_marginal(small.p, small.c);
  const auto after = brute_force_hidden_marginal(us.params, us.as_offsets());
  double worst = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i)
    worst = std::max(worst, std::abs(before.prob[i] - after.prob[i]));
  CHECK(worst <= 1e-10);
}
