#pragma once

#include "optima/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace optima {

/// Linear domain probe over pooled representations: two logits, column 0 is
/// "source".
struct DiscriminatorParams {
  Matrix weight;  // d x 2
  Vector bias;    // 2

  static DiscriminatorParams zeros(int dim);
  int dim() const { return static_cast<int>(weight.rows()); }
};

/// P(source | pooled).
double discriminate(const DiscriminatorParams& params, const Vector& pooled);
std::vector<double> discriminate(const DiscriminatorParams& params, std::span<const Vector> pooled);

struct DiscriminatorGrads {
  Matrix weight;
  Vector bias;

  static DiscriminatorGrads zeros(int dim);
};

/// Chains dL/dz for one example into parameter gradients (accumulated into
/// `grads`, may be null) and returns dL/dpooled.
Vector discriminator_backward(const DiscriminatorParams& params, const Vector& pooled, double d_loss_dz,
                              DiscriminatorGrads* grads);

/// One plain SGD step: params -= lr * grads. Throws NumericalError on a
/// non-finite gradient without touching the parameters.
void update(DiscriminatorParams& params, const DiscriminatorGrads& grads, double lr);

std::string digest(const DiscriminatorParams& params);

}  // namespace optima
