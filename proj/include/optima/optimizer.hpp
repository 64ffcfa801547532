#pragma once

#include <span>
#include <string>
#include <vector>

namespace optima {

enum class OptimizerKind { sgd, sgd_momentum, adam };
enum class Schedule { constant, linear_decay };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);
Schedule parse_schedule(const std::string& name);
std::string to_string(Schedule schedule);

/// First-order optimizer over a flat parameter vector. State is plain data
/// so checkpoints can round-trip it exactly.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::adam;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long steps = 0;
  std::vector<double> first;
  std::vector<double> second;

  /// Throws NumericalError on non-finite gradients before mutating anything.
  void step(std::span<double> params, std::span<const double> grads, double lr);
};

/// Learning rate at `step` (0-based) of a run with `max_steps` steps.
double scheduled_lr(double base, Schedule schedule, long step, long max_steps);

}  // namespace optima
