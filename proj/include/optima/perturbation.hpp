#pragma once

#include "optima/common.hpp"

#include <atomic>
#include <functional>
#include <span>
#include <vector>

namespace optima {

/// Per-example perturbations of the input-role rows, each inside an L2 ball.
struct PerturbationBatch {
  std::vector<Matrix> deltas;      // max_input_len x d each
  std::vector<int> input_lengths;  // rows at or past this index are padding
  double epsilon = 0.0;

  std::size_t size() const { return deltas.size(); }
};

/// Counters shared by every perturbation-based method. `violations` counts
/// post-projection norms above epsilon + 1e-9.
struct PerturbationMonitor {
  std::atomic<long> projections{0};
  std::atomic<long> ascend_calls{0};
  std::atomic<long> ascent_steps{0};
  std::atomic<long> skipped_updates{0};
  std::atomic<long> violations{0};

  void reset();
};

inline constexpr double kBallTolerance = 1e-9;

/// epsilon * phi / max(epsilon, ||phi||_2) over the flattened matrix.
Matrix project(const Matrix& phi, double epsilon);

/// Uniform(-1, 1) entries, padding rows zeroed, then projected onto the ball.
PerturbationBatch init_delta(std::span<const int> input_lengths, int max_input_len, int dim, double epsilon,
                             Rng& rng, PerturbationMonitor* monitor = nullptr);

/// Gradient of the ascent objective for example `i` at the given delta.
using AscentGradient = std::function<Matrix(std::size_t i, const Matrix& delta)>;

/// `steps` iterations of delta <- Proj(delta + step_size * g / ||g||_2) per
/// example. Examples whose gradient is exactly zero keep their delta.
void ascend(PerturbationBatch& batch, const AscentGradient& grad_fn, int steps, double step_size,
            PerturbationMonitor* monitor = nullptr);

}  // namespace optima
