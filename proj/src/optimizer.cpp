#include "optima/optimizer.hpp"

#include "optima/common.hpp"

#include <cmath>

namespace optima {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "sgd-momentum") return OptimizerKind::sgd_momentum;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (valid: sgd, sgd-momentum, adam)");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd-momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "adam";
}

Schedule parse_schedule(const std::string& name) {
  if (name == "constant") return Schedule::constant;
  if (name == "linear-decay") return Schedule::linear_decay;
  throw ConfigError("unknown scheduler '" + name + "' (valid: constant, linear-decay)");
}

std::string to_string(Schedule schedule) {
  return schedule == Schedule::constant ? "constant" : "linear-decay";
}

void Optimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw InputError("optimizer: parameter/gradient size mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericalError("optimizer: non-finite gradient");
  }
  const std::size_t n = params.size();
  ++steps;
  switch (kind) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < n; ++i) params[i] -= lr * grads[i];
      break;
    case OptimizerKind::sgd_momentum:
      first.resize(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        first[i] = momentum * first[i] + grads[i];
        params[i] -= lr * first[i];
      }
      break;
    case OptimizerKind::adam: {
      first.resize(n, 0.0);
      second.resize(n, 0.0);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
      for (std::size_t i = 0; i < n; ++i) {
        first[i] = beta1 * first[i] + (1.0 - beta1) * grads[i];
        second[i] = beta2 * second[i] + (1.0 - beta2) * grads[i] * grads[i];
        params[i] -= lr * (first[i] / c1) / (std::sqrt(second[i] / c2) + eps);
      }
      break;
    }
  }
}

double scheduled_lr(double base, Schedule schedule, long step, long max_steps) {
  if (schedule == Schedule::constant || max_steps <= 0) return base;
  const double frac = static_cast<double>(step) / static_cast<double>(max_steps);
  return base * std::max(0.0, 1.0 - frac);
}

}  // namespace optima
