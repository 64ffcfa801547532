#include "optima/objectives.hpp"

#include <cmath>
#include <string>

namespace optima {

namespace {

void check_distribution(const Vector& p, const char* what) {
  if (p.size() == 0 || !p.allFinite() || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-6) {
    throw InputError(std::string(what) + ": not a normalized probability vector");
  }
}

/// -log(z) with clamping; returns value and d/dz.
std::pair<double, double> neg_log(double z, int& clamp_events) {
  if (!(z >= 0.0 && z <= 1.0)) throw InputError("domain probability outside [0, 1]");
  if (z < kProbClamp) {
    ++clamp_events;
    return {-std::log(kProbClamp), 0.0};
  }
  return {-std::log(z), -1.0 / z};
}

/// -log(1 - z) with clamping; returns value and d/dz.
std::pair<double, double> neg_log_complement(double z, int& clamp_events) {
  if (!(z >= 0.0 && z <= 1.0)) throw InputError("domain probability outside [0, 1]");
  const double c = 1.0 - z;
  if (c < kProbClamp) {
    ++clamp_events;
    return {-std::log(kProbClamp), 0.0};
  }
  return {-std::log(c), 1.0 / c};
}

}  // namespace

LossValue xent(const Vector& probs, int label) {
  if (label < 0 || label >= probs.size()) {
    throw InputError("xent: label " + std::to_string(label) + " outside [0, " + std::to_string(probs.size()) + ")");
  }
  LossValue out;
  out.value = -std::log(std::max(probs[label], kProbClamp));
  out.grad = probs;
  out.grad[label] -= 1.0;
  return out;
}

LossValue kl_consistency(const Vector& p_clean, const Vector& p_pert) {
  check_distribution(p_clean, "kl_consistency");
  check_distribution(p_pert, "kl_consistency");
  if (p_clean.size() != p_pert.size()) throw InputError("kl_consistency: size mismatch");
  LossValue out;
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p_clean.size(); ++i) {
    if (p_clean[i] > 0.0) {
      kl += p_clean[i] * (std::log(std::max(p_clean[i], kProbClamp)) - std::log(std::max(p_pert[i], kProbClamp)));
    }
  }
  out.value = kl;
  out.grad = p_pert - p_clean;
  return out;
}

DomainLoss disc_loss(std::span<const double> z_sc, std::span<const double> z_sp, std::span<const double> z_t) {
  const std::size_t b = z_sc.size();
  if (b == 0 || z_sp.size() != b || z_t.size() != b) throw InputError("disc_loss: empty or mismatched batch");
  DomainLoss out;
  out.d_source_clean.resize(b);
  out.d_source_pert.resize(b);
  out.d_target.resize(b);
  const double inv = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto [vp, gp] = neg_log(z_sp[i], out.clamp_events);
    const auto [vc, gc] = neg_log(z_sc[i], out.clamp_events);
    const auto [vt, gt] = neg_log_complement(z_t[i], out.clamp_events);
    out.value += (vp + vc + vt) * inv;
    out.d_source_pert[i] = gp * inv;
    out.d_source_clean[i] = gc * inv;
    out.d_target[i] = gt * inv;
  }
  return out;
}

LossValue adv_loss(double z_source_pert) {
  int clamps = 0;
  const auto [v, g] = neg_log(z_source_pert, clamps);
  LossValue out;
  out.value = v;
  out.grad = Vector::Constant(1, g);
  return out;
}

RegularizedLoss regularized_loss(std::span<const Vector> clean, std::span<const Vector> perturbed,
                                 std::span<const int> labels, double xent_weight, double kl_weight) {
  const std::size_t b = clean.size();
  if (b == 0) throw InputError("regularized_loss: empty batch");
  if (perturbed.size() != b || labels.size() != b) throw InputError("regularized_loss: mismatched batch sizes");
  RegularizedLoss out;
  out.d_clean_logits.resize(b);
  out.d_pert_logits.resize(b);
  const double inv = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const LossValue xe = xent(clean[i], labels[i]);
    const LossValue kl = kl_consistency(clean[i], perturbed[i]);
    out.xent_mean += xe.value * inv;
    out.kl_mean += kl.value * inv;
    out.d_clean_logits[i] = xe.grad * (xent_weight * inv);
    out.d_pert_logits[i] = kl.grad * (kl_weight * inv);
  }
  out.value = xent_weight * out.xent_mean + kl_weight * out.kl_mean;
  return out;
}

DomainLoss domain_discrimination_loss(std::span<const double> z_source, std::span<const double> z_target) {
  const std::size_t bs = z_source.size();
  const std::size_t bt = z_target.size();
  if (bs == 0 || bt == 0) throw InputError("domain loss: empty batch");
  DomainLoss out;
  out.d_source_clean.resize(bs);
  out.d_target.resize(bt);
  for (std::size_t i = 0; i < bs; ++i) {
    const auto [v, g] = neg_log(z_source[i], out.clamp_events);
    out.value += v / static_cast<double>(bs);
    out.d_source_clean[i] = g / static_cast<double>(bs);
  }
  for (std::size_t i = 0; i < bt; ++i) {
    const auto [v, g] = neg_log_complement(z_target[i], out.clamp_events);
    out.value += v / static_cast<double>(bt);
    out.d_target[i] = g / static_cast<double>(bt);
  }
  return out;
}

DannLoss dann_objective(std::span<const Vector> source_probs, std::span<const int> labels,
                        std::span<const double> z_source, std::span<const double> z_target, double weight) {
  const std::size_t b = source_probs.size();
  if (b == 0) throw InputError("dann_objective: empty batch");
  if (labels.size() != b || z_source.size() != b) throw InputError("dann_objective: mismatched batch sizes");
  DannLoss out;
  out.d_logits.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    const LossValue xe = xent(source_probs[i], labels[i]);
    out.xent_mean += xe.value / static_cast<double>(b);
    out.d_logits[i] = xe.grad / static_cast<double>(b);
  }
  const DomainLoss dd = domain_discrimination_loss(z_source, z_target);
  out.domain_loss = dd.value;
  out.clamp_events = dd.clamp_events;
  out.d_source_z.resize(dd.d_source_clean.size());
  out.d_target_z.resize(dd.d_target.size());
  for (std::size_t i = 0; i < dd.d_source_clean.size(); ++i) out.d_source_z[i] = -weight * dd.d_source_clean[i];
  for (std::size_t i = 0; i < dd.d_target.size(); ++i) out.d_target_z[i] = -weight * dd.d_target[i];
  out.value = out.xent_mean - weight * dd.value;
  return out;
}

}  // namespace optima
