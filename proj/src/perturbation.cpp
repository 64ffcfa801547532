#include "optima/perturbation.hpp"

#include <cmath>
#include <string>

namespace optima {

namespace {

void zero_padding(Matrix& delta, int input_len) {
  if (input_len < delta.rows()) delta.bottomRows(delta.rows() - input_len).setZero();
}

Matrix project_checked(const Matrix& phi, double epsilon, PerturbationMonitor* monitor) {
  Matrix out = project(phi, epsilon);
  if (monitor != nullptr) {
    monitor->projections.fetch_add(1, std::memory_order_relaxed);
    if (out.norm() > epsilon + kBallTolerance) monitor->violations.fetch_add(1, std::memory_order_relaxed);
  }
  return out;
}

}  // namespace

void PerturbationMonitor::reset() {
  projections = 0;
  ascend_calls = 0;
  ascent_steps = 0;
  skipped_updates = 0;
  violations = 0;
}

Matrix project(const Matrix& phi, double epsilon) {
  if (epsilon < 0.0) throw InputError("project: negative radius");
  if (epsilon == 0.0) return Matrix::Zero(phi.rows(), phi.cols());
  const double norm = phi.norm();
  if (norm <= epsilon) return phi;
  return phi * (epsilon / norm);
}

PerturbationBatch init_delta(std::span<const int> input_lengths, int max_input_len, int dim, double epsilon,
                             Rng& rng, PerturbationMonitor* monitor) {
  if (epsilon < 0.0) throw InputError("init_delta: negative radius");
  PerturbationBatch batch;
  batch.epsilon = epsilon;
  batch.input_lengths.assign(input_lengths.begin(), input_lengths.end());
  batch.deltas.reserve(input_lengths.size());
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (int len : input_lengths) {
    if (len < 0 || len > max_input_len) throw InputError("init_delta: input length out of range");
    Matrix delta(max_input_len, dim);
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = uniform(rng);
    zero_padding(delta, len);
    batch.deltas.push_back(project_checked(delta, epsilon, monitor));
  }
  return batch;
}

void ascend(PerturbationBatch& batch, const AscentGradient& grad_fn, int steps, double step_size,
            PerturbationMonitor* monitor) {
  if (steps < 0) throw InputError("ascend: negative step count");
  if (monitor != nullptr) monitor->ascend_calls.fetch_add(1, std::memory_order_relaxed);
  for (int t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Matrix g = grad_fn(i, batch.deltas[i]);
      if (g.rows() != batch.deltas[i].rows() || g.cols() != batch.deltas[i].cols()) {
        throw InputError("ascend: gradient shape does not match delta");
      }
      if (!g.allFinite()) {
        throw NumericalError("ascend: non-finite gradient for example " + std::to_string(i) + " at step " +
                             std::to_string(t));
      }
      zero_padding(g, batch.input_lengths[i]);
      const double gnorm = g.norm();
      if (gnorm == 0.0) {
        if (monitor != nullptr) monitor->skipped_updates.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      batch.deltas[i] = project_checked(batch.deltas[i] + (step_size / gnorm) * g, batch.epsilon, monitor);
    }
    if (monitor != nullptr) monitor->ascent_steps.fetch_add(1, std::memory_order_relaxed);
  }
}

}  // namespace optima
