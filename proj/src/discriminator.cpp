#include "optima/discriminator.hpp"

#include "optima/hashing.hpp"

#include <cmath>

namespace optima {

DiscriminatorParams DiscriminatorParams::zeros(int dim) { return {Matrix::Zero(dim, 2), Vector::Zero(2)}; }

DiscriminatorGrads DiscriminatorGrads::zeros(int dim) { return {Matrix::Zero(dim, 2), Vector::Zero(2)}; }

double discriminate(const DiscriminatorParams& params, const Vector& pooled) {
  if (pooled.size() != params.weight.rows()) throw InputError("discriminate: pooled width mismatch");
  const Eigen::Vector2d logits = params.weight.transpose() * pooled + params.bias;
  // softmax over two logits, numerically stable form
  const double gap = logits[0] - logits[1];
  if (gap >= 0.0) return 1.0 / (1.0 + std::exp(-gap));
  const double e = std::exp(gap);
  return e / (1.0 + e);
}

std::vector<double> discriminate(const DiscriminatorParams& params, std::span<const Vector> pooled) {
  std::vector<double> out;
  out.reserve(pooled.size());
  for (const auto& p : pooled) out.push_back(discriminate(params, p));
  return out;
}

Vector discriminator_backward(const DiscriminatorParams& params, const Vector& pooled, double d_loss_dz,
                              DiscriminatorGrads* grads) {
  const double z = discriminate(params, pooled);
  // dz/dlogit0 = z(1-z), dz/dlogit1 = -z(1-z)
  const double dgap = d_loss_dz * z * (1.0 - z);
  const Eigen::Vector2d dlogits(dgap, -dgap);
  if (grads != nullptr) {
    grads->weight += pooled * dlogits.transpose();
    grads->bias += dlogits;
  }
  return params.weight * dlogits;
}

void update(DiscriminatorParams& params, const DiscriminatorGrads& grads, double lr) {
  if (!grads.weight.allFinite() || !grads.bias.allFinite()) {
    throw NumericalError("discriminator update: non-finite gradient");
  }
  params.weight -= lr * grads.weight;
  params.bias -= lr * grads.bias;
}

std::string digest(const DiscriminatorParams& params) {
  Sha256 h;
  h.update(params.weight);
  h.update(params.bias);
  return h.hex_digest();
}

}  // namespace optima
