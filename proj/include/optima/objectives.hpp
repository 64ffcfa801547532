#pragma once

#include "optima/common.hpp"

#include <span>
#include <vector>

namespace optima {

/// Scalar loss with its gradient w.r.t. the upstream quantity named by the
/// producing function (label logits for prediction losses).
struct LossValue {
  double value = 0.0;
  Vector grad;
};

/// -log max(p[y], 1e-12). Gradient is w.r.t. the logits that produced `probs`.
LossValue xent(const Vector& probs, int label);

/// KL(p_clean || p_pert). The clean distribution is a constant target; the
/// gradient is w.r.t. the logits that produced `p_pert`.
LossValue kl_consistency(const Vector& p_clean, const Vector& p_pert);

/// Batch loss over discriminator outputs z = P(source). Gradients are w.r.t.
/// each z; entries clamped to [1e-12, 1 - 1e-12] get zero gradient and are
/// counted in `clamp_events`.
struct DomainLoss {
  double value = 0.0;
  std::vector<double> d_source_clean;
  std::vector<double> d_source_pert;
  std::vector<double> d_target;
  int clamp_events = 0;
};

/// Domain discrimination loss: mean over the batch of
/// -log z(x_s + delta) - log z(x_s) - log(1 - z(x_t)).
DomainLoss disc_loss(std::span<const double> z_source_clean, std::span<const double> z_source_pert,
                     std::span<const double> z_target);

/// Adversarial loss -log z(x_s + delta) for one example; grad has size 1 (d/dz).
LossValue adv_loss(double z_source_pert);

struct RegularizedLoss {
  double value = 0.0;
  double xent_mean = 0.0;
  double kl_mean = 0.0;
  std::vector<Vector> d_clean_logits;
  std::vector<Vector> d_pert_logits;
};

/// Mean over the batch of xent(clean, y) + KL(clean || perturbed).
RegularizedLoss regularized_loss(std::span<const Vector> clean, std::span<const Vector> perturbed,
                                 std::span<const int> labels, double xent_weight = 1.0, double kl_weight = 1.0);

struct DannLoss {
  double value = 0.0;
  double xent_mean = 0.0;
  double domain_loss = 0.0;  // L_DD
  std::vector<Vector> d_logits;
  std::vector<double> d_source_z;
  std::vector<double> d_target_z;
  int clamp_events = 0;
};

/// E[xent] - weight * L_DD with L_DD = E[-log z(x_s) - log(1 - z(x_t))].
/// Gradients are those of the prompt-side objective (domain term negated).
DannLoss dann_objective(std::span<const Vector> source_probs, std::span<const int> labels,
                        std::span<const double> z_source, std::span<const double> z_target, double weight = 1.0);

/// Domain classification loss L_DD alone with gradients w.r.t. z, as
/// minimized by the discriminator.
DomainLoss domain_discrimination_loss(std::span<const double> z_source, std::span<const double> z_target);

}  // namespace optima
