#include "helpers.hpp"

#include "optima/perturbation.hpp"

#include <doctest.h>

#include <cmath>

using namespace optima;
using testing::gaussian;
using testing::same_bits;

TEST_CASE("projection examples") {
  Matrix inside(1, 2);
  inside << 0.3, 0.4;  // norm 0.5
  CHECK(same_bits(project(inside, 1.0), inside));

  Matrix outside(1, 2);
  outside << 1.2, 1.6;  // norm 2
  const Matrix p = project(outside, 1.0);
  CHECK(p(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(project(outside, 0.0).isZero(0.0));
  CHECK(project(Matrix::Zero(2, 3), 0.0).isZero(0.0));
}

TEST_CASE("init_delta examples") {
  const std::vector<int> lengths{3, 1};
  Rng a(5), b(5);
  const PerturbationBatch huge = init_delta(lengths, 4, 3, std::sqrt(4.0 * 3.0) + 1.0, a);
  const PerturbationBatch again = init_delta(lengths, 4, 3, std::sqrt(4.0 * 3.0) + 1.0, b);
  REQUIRE(huge.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(same_bits(huge.deltas[i], again.deltas[i]));
    CHECK(huge.deltas[i].cwiseAbs().maxCoeff() <= 1.0);
    CHECK(huge.deltas[i].bottomRows(4 - lengths[i]).isZero(0.0));
  }
  // the cube [-1, 1]^(nd) sits inside a ball of radius sqrt(nd): draws are untouched
  Rng c(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix first(4, 3);
  for (Eigen::Index i = 0; i < first.size(); ++i) first.data()[i] = u(c);
  first.bottomRows(1).setZero();
  CHECK(same_bits(huge.deltas[0], first));

  Rng d(5);
  const PerturbationBatch none = init_delta(lengths, 4, 3, 0.0, d);
  for (const auto& m : none.deltas) CHECK(m.isZero(0.0));

  Rng e(6);
  PerturbationMonitor monitor;
  const PerturbationBatch small = init_delta(lengths, 4, 3, 0.1, e, &monitor);
  for (const auto& m : small.deltas) CHECK(m.norm() <= 0.1 + kBallTolerance);
  CHECK(monitor.projections.load() == 2);
  CHECK(monitor.violations.load() == 0);
}

TEST_CASE("ascend examples") {
  Rng rng(7);
  PerturbationBatch batch = init_delta(std::vector<int>{2, 2}, 2, 3, 0.5, rng);
  const PerturbationBatch start = batch;
  int calls = 0;
  const AscentGradient noisy = [&](std::size_t, const Matrix& d) {
    ++calls;
    return Matrix(Matrix::Ones(d.rows(), d.cols()));
  };
  ascend(batch, noisy, 0, 1.0);
  CHECK(calls == 0);
  for (std::size_t i = 0; i < 2; ++i) CHECK(same_bits(batch.deltas[i], start.deltas[i]));

  PerturbationMonitor monitor;
  const AscentGradient flat = [](std::size_t, const Matrix& d) { return Matrix(Matrix::Zero(d.rows(), d.cols())); };
  ascend(batch, flat, 5, 1.0, &monitor);
  for (std::size_t i = 0; i < 2; ++i) CHECK(same_bits(batch.deltas[i], start.deltas[i]));
  CHECK(monitor.skipped_updates.load() == 10);

  const AscentGradient broken = [](std::size_t, const Matrix& d) {
    Matrix g = Matrix::Ones(d.rows(), d.cols());
    g(0, 0) = std::nan("");
    return g;
  };
  CHECK_THROWS_AS(ascend(batch, broken, 1, 1.0), NumericalError);
}

TEST_CASE("ascend reaches the boundary maximizer of a quadratic") {
  // maximize -||delta - c||^2 over the disk of radius eps; c lies outside, so
  // the maximizer is eps * c / ||c||
  Rng rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix c(1, 2);
    c << 3.0 * n(rng), 3.0 * n(rng);
    const double eps = 0.8;
    if (c.norm() <= eps * 1.5) continue;
    PerturbationBatch batch = init_delta(std::vector<int>{1}, 1, 2, eps, rng);
    const AscentGradient grad = [&](std::size_t, const Matrix& d) { return Matrix(-2.0 * (d - c)); };
    ascend(batch, grad, 200, 0.1);
    const Matrix expect = c * (eps / c.norm());
    CHECK((batch.deltas[0] - expect).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("ascend keeps every iterate in the ball") {
  Rng rng(13);
  PerturbationMonitor monitor;
  PerturbationBatch batch = init_delta(std::vector<int>{3, 2, 1}, 3, 4, 0.7, rng, &monitor);
  const Matrix dir = gaussian(3, 4, rng);
  const AscentGradient grad = [&](std::size_t i, const Matrix& d) { return Matrix(dir * double(i + 1) + d); };
  ascend(batch, grad, 10, 2.0, &monitor);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch.deltas[i].norm() <= 0.7 + kBallTolerance);
    CHECK(batch.deltas[i].bottomRows(3 - batch.input_lengths[i]).isZero(0.0));
  }
  CHECK(monitor.violations.load() == 0);
  CHECK(monitor.projections.load() == 3 + 30);
}
