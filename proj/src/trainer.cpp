#include "optima/trainer.hpp"

#include "optima/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace optima {

namespace {

constexpr std::uint64_t kSourceStream = 11;
constexpr std::uint64_t kTargetStream = 12;
constexpr std::uint64_t kDeltaStream = 13;
constexpr std::uint64_t kPromptStream = 14;

const ForwardOptions kPredictOnly{true, false};

/// Forward options of the representation the discriminator reads. OPTIMA
/// keeps the prompt out of it; DANN lets it through.
ForwardOptions domain_view(Method method) { return {method == Method::dann, true}; }

struct GradientSink {
  int prompt_len;
  bool want_backbone;
  Matrix prompt;
  BackboneWeights backbone;

  GradientSink(const Model& model, int m, bool backbone_grads, const BackboneWeights& shape)
      : prompt_len(m), want_backbone(backbone_grads), prompt(Matrix::Zero(m, model.dim())) {
    if (want_backbone) {
      backbone = shape;
      backbone.set_zero();
    }
  }

  void add(const EncoderGradients& g) {
    if (prompt_len > 0) prompt += g.d_embeddings.topRows(prompt_len);
    if (want_backbone) backbone.axpy(1.0, g.d_weights);
  }
};

bool is_zero(const Vector& v) { return v.size() == 0 || v.isZero(0.0); }

void ensure_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("train_step: non-finite ") + what + " gradient");
}

}  // namespace

Method parse_method(const std::string& name) {
  const auto& names = method_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Method>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown method '" + name + "' (valid: " + valid + ")");
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"frozen", "pt", "ft", "pft", "spot", "freelb", "vat", "dann", "optima"};
  return names;
}

std::string to_string(Method method) { return method_names()[static_cast<std::size_t>(method)]; }

MethodSpec method_spec(Method method) {
  MethodSpec s;
  s.id = method;
  switch (method) {
    case Method::frozen:
      s.train_prompt = false;
      break;
    case Method::pt:
    case Method::spot:
      break;
    case Method::ft:
      s.train_prompt = false;
      s.train_backbone = true;
      break;
    case Method::pft:
      s.train_backbone = true;
      break;
    case Method::freelb:
    case Method::vat:
      s.uses_perturbation = true;
      break;
    case Method::dann:
      s.uses_target = true;
      s.uses_discriminator = true;
      break;
    case Method::optima:
      s.uses_target = true;
      s.uses_discriminator = true;
      s.uses_perturbation = true;
      break;
  }
  return s;
}

MethodSpec fewshot_spec(Method method) {
  MethodSpec s;
  s.id = Method::pt;
  s.train_prompt = method != Method::ft && method != Method::frozen;
  s.train_backbone = method == Method::ft || method == Method::pft;
  return s;
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (eval_interval <= 0) throw ConfigError("eval_interval must be positive");
  if (!(prompt_lr > 0.0) || !(backbone_lr > 0.0) || !(disc_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
  if (!(delta_step >= 0.0)) throw ConfigError("delta_step must be non-negative");
  if (ascent_steps < 0) throw ConfigError("ascent_steps must be non-negative");
}

std::vector<std::size_t> Sampler::next(std::size_t count) {
  if (population == 0) throw InputError("sampler: empty dataset");
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    if (cursor >= order.size()) {
      order.resize(population);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    out.push_back(order[cursor++]);
  }
  return out;
}

PromptParameters initial_prompt(const Model& model, PromptInit init, std::uint64_t seed) {
  const int m = model.prompt_len;
  const int d = model.dim();
  PromptParameters p{Matrix(m, d)};
  if (init == PromptInit::table_rows) {
    const auto& rows = model.frontend.table.rows();
    for (int i = 0; i < m; ++i) p.rows.row(i) = rows.row(i % rows.rows());
  } else {
    Rng rng = derive_rng(seed, kPromptStream);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    for (Eigen::Index i = 0; i < p.rows.size(); ++i) p.rows.data()[i] = normal(rng);
  }
  return p;
}

TrainState initial_state(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                         std::size_t source_size, std::size_t target_size) {
  TrainState s;
  s.prompt = initial_prompt(model, config.prompt_init, config.seed);
  s.backbone = model.backbone;
  if (spec.uses_discriminator) s.discriminator = DiscriminatorParams::zeros(model.dim());
  s.prompt_opt.kind = config.optimizer;
  s.backbone_opt.kind = config.optimizer;
  s.source_sampler.population = source_size;
  s.source_sampler.rng = derive_rng(config.seed, kSourceStream);
  s.target_sampler.population = target_size;
  s.target_sampler.rng = derive_rng(config.seed, kTargetStream);
  s.delta_rng = derive_rng(config.seed, kDeltaStream);
  return s;
}

Matrix ascent_gradient(const Model& model, Method method, const TrainConfig& config, const BackboneWeights& backbone,
                       const DiscriminatorParams* disc, const EmbeddedSequence& clean, const Vector& clean_probs,
                       int label, const Matrix& delta, double adv_scale) {
  const int n_max = model.max_input_len();
  const EmbeddedSequence seq = apply_perturbation(clean, delta);
  const ForwardPass fp = forward(seq, backbone, model.head, kPredictOnly);
  const LossValue loss = method == Method::freelb ? xent(fp.probs, label) : kl_consistency(clean_probs, fp.probs);
  Matrix g = input_gradient(seq, backward(fp, backbone, model.head, loss.grad, Vector()).d_embeddings, n_max);
  if (method == Method::optima && config.adv_weight != 0.0) {
    if (disc == nullptr) throw InputError("ascent_gradient: optima needs discriminator parameters");
    const ForwardPass dv = forward(seq, backbone, model.head, domain_view(Method::optima));
    const double z = discriminate(*disc, dv.pooled);
    const Vector d_pooled = discriminator_backward(*disc, dv.pooled, adv_loss(z).grad[0] * adv_scale, nullptr);
    g += config.adv_weight * input_gradient(seq, backward(dv, backbone, model.head, Vector(), d_pooled).d_embeddings, n_max);
  }
  return g;
}

StepGradients compute_gradients(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                                std::span<const LabeledExample> source, std::span<const Example> target,
                                const TrainState& state, Rng& delta_rng, PerturbationMonitor* monitor,
                                const PerturbationBatch* fixed_delta) {
  const std::size_t b = source.size();
  if (b == 0) throw InputError("train_step: empty source batch");
  if (spec.uses_target && target.size() != b) {
    throw InputError("train_step: source batch has " + std::to_string(b) + " examples, target batch " +
                     std::to_string(target.size()));
  }
  if (spec.uses_discriminator && !state.discriminator) throw InputError("train_step: discriminator not allocated");
  if (fixed_delta != nullptr && fixed_delta->size() != b) throw InputError("train_step: fixed perturbation batch size");

  const int m = static_cast<int>(state.prompt.rows.rows());
  const int d = model.dim();
  const int n_max = model.max_input_len();
  const BackboneWeights& backbone = state.backbone;
  const VerbalizerHead& head = model.head;
  const bool is_dann = spec.id == Method::dann;
  const double inv_b = 1.0 / static_cast<double>(b);
  const double xent_scale = config.xent_weight * inv_b;

  std::vector<int> labels(b);
  EmbeddedBatch clean(b);
  std::vector<ForwardPass> clean_pass(b);
  for (std::size_t i = 0; i < b; ++i) {
    labels[i] = source[i].label;
    clean[i] = model.frontend.build(state.prompt, source[i].input);
    clean_pass[i] = forward(clean[i], backbone, head, is_dann ? domain_view(Method::dann) : kPredictOnly);
  }

  GradientSink sink(model, m, spec.train_backbone, backbone);
  auto backprop = [&](const ForwardPass& pass, const Vector& d_logits, const Vector& d_pooled) {
    if (is_zero(d_logits) && is_zero(d_pooled)) return;
    sink.add(backward(pass, backbone, head, d_logits, d_pooled, spec.train_backbone));
  };

  StepGradients out;
  StepStats& stats = out.stats;
  stats.step = state.step + 1;

  if (spec.uses_perturbation) {
    PerturbationBatch delta;
    if (fixed_delta != nullptr) {
      delta = *fixed_delta;
    } else {
      std::vector<int> lengths(b);
      for (std::size_t i = 0; i < b; ++i) lengths[i] = clean[i].input_len;
      delta = init_delta(lengths, n_max, d, config.epsilon, delta_rng, monitor);
      const double adv_scale = config.ascent_objective == AscentObjective::disc ? inv_b : 1.0;
      const DiscriminatorParams* disc = state.discriminator ? &*state.discriminator : nullptr;
      auto grad_fn = [&](std::size_t i, const Matrix& di) -> Matrix {
        return ascent_gradient(model, spec.id, config, backbone, disc, clean[i], clean_pass[i].probs, labels[i], di,
                               adv_scale);
      };
      ascend(delta, grad_fn, config.ascent_steps, config.delta_step, monitor);
    }

    std::vector<EmbeddedSequence> perturbed(b);
    std::vector<ForwardPass> pert_pass(b);
    for (std::size_t i = 0; i < b; ++i) {
      perturbed[i] = apply_perturbation(clean[i], delta.deltas[i]);
      pert_pass[i] = forward(perturbed[i], backbone, head, kPredictOnly);
    }

    if (spec.id == Method::freelb) {
      for (std::size_t i = 0; i < b; ++i) {
        const LossValue xc = xent(clean_pass[i].probs, labels[i]);
        const LossValue xp = xent(pert_pass[i].probs, labels[i]);
        stats.xent += xc.value * inv_b;
        stats.adv += xp.value * inv_b;
        backprop(clean_pass[i], xc.grad * xent_scale, Vector());
        backprop(pert_pass[i], xp.grad * xent_scale, Vector());
      }
      stats.loss = config.xent_weight * (stats.xent + stats.adv);
    } else {
      std::vector<Vector> pc(b), pp(b);
      for (std::size_t i = 0; i < b; ++i) {
        pc[i] = clean_pass[i].probs;
        pp[i] = pert_pass[i].probs;
      }
      const RegularizedLoss reg = regularized_loss(pc, pp, labels, config.xent_weight, config.kl_weight);
      stats.xent = reg.xent_mean;
      stats.kl = reg.kl_mean;
      stats.loss = reg.value;
      for (std::size_t i = 0; i < b; ++i) {
        backprop(clean_pass[i], reg.d_clean_logits[i], Vector());
        backprop(pert_pass[i], reg.d_pert_logits[i], Vector());
      }
    }

    if (spec.id == Method::optima) {
      const auto& disc = *state.discriminator;
      const ForwardOptions view = domain_view(Method::optima);
      std::vector<Vector> pool_sp(b), pool_sc(b), pool_t(b);
      for (std::size_t i = 0; i < b; ++i) {
        pool_sp[i] = forward(perturbed[i], backbone, head, view).pooled;
        pool_sc[i] = forward(clean[i], backbone, head, view).pooled;
        pool_t[i] = forward(model.frontend.build(state.prompt, target[i]), backbone, head, view).pooled;
      }
      const auto z_sp = discriminate(disc, pool_sp);
      const auto z_sc = discriminate(disc, pool_sc);
      const auto z_t = discriminate(disc, pool_t);
      const DomainLoss dl = disc_loss(z_sc, z_sp, z_t);
      stats.disc = dl.value;
      stats.clamp_events += dl.clamp_events;
      for (double z : z_sp) stats.adv += adv_loss(z).value * inv_b;
      out.discriminator = DiscriminatorGrads::zeros(d);
      for (std::size_t i = 0; i < b; ++i) {
        discriminator_backward(disc, pool_sp[i], dl.d_source_pert[i], &*out.discriminator);
        discriminator_backward(disc, pool_sc[i], dl.d_source_clean[i], &*out.discriminator);
        discriminator_backward(disc, pool_t[i], dl.d_target[i], &*out.discriminator);
      }
    }
    out.delta = std::move(delta);
  } else if (is_dann) {
    const auto& disc = *state.discriminator;
    std::vector<ForwardPass> target_pass(b);
    std::vector<Vector> probs(b), pool_s(b), pool_t(b);
    for (std::size_t i = 0; i < b; ++i) {
      target_pass[i] = forward(model.frontend.build(state.prompt, target[i]), backbone, head, domain_view(Method::dann));
      probs[i] = clean_pass[i].probs;
      pool_s[i] = clean_pass[i].pooled;
      pool_t[i] = target_pass[i].pooled;
    }
    const auto z_s = discriminate(disc, pool_s);
    const auto z_t = discriminate(disc, pool_t);
    const DannLoss obj = dann_objective(probs, labels, z_s, z_t, config.dann_weight);
    stats.xent = obj.xent_mean;
    stats.disc = obj.domain_loss;
    stats.loss = config.xent_weight * obj.xent_mean - config.dann_weight * obj.domain_loss;
    stats.clamp_events += obj.clamp_events;
    for (std::size_t i = 0; i < b; ++i) {
      const Vector dps = config.dann_weight != 0.0
                             ? discriminator_backward(disc, pool_s[i], obj.d_source_z[i], nullptr)
                             : Vector();
      backprop(clean_pass[i], obj.d_logits[i] * config.xent_weight, dps);
      if (config.dann_weight != 0.0) {
        backprop(target_pass[i], Vector(), discriminator_backward(disc, pool_t[i], obj.d_target_z[i], nullptr));
      }
    }
    const DomainLoss dd = domain_discrimination_loss(z_s, z_t);
    out.discriminator = DiscriminatorGrads::zeros(d);
    for (std::size_t i = 0; i < b; ++i) {
      discriminator_backward(disc, pool_s[i], dd.d_source_clean[i], &*out.discriminator);
      discriminator_backward(disc, pool_t[i], dd.d_target[i], &*out.discriminator);
    }
  } else {
    for (std::size_t i = 0; i < b; ++i) {
      const LossValue xe = xent(clean_pass[i].probs, labels[i]);
      stats.xent += xe.value * inv_b;
      backprop(clean_pass[i], xe.grad * xent_scale, Vector());
    }
    stats.loss = config.xent_weight * stats.xent;
  }

  if (!std::isfinite(stats.loss)) throw NumericalError("train_step: non-finite training loss");
  ensure_finite(sink.prompt, "prompt");
  if (spec.train_backbone && !sink.backbone.all_finite()) throw NumericalError("train_step: non-finite backbone gradient");
  if (out.discriminator && (!out.discriminator->weight.allFinite() || !out.discriminator->bias.allFinite())) {
    throw NumericalError("train_step: non-finite discriminator gradient");
  }
  out.prompt = std::move(sink.prompt);
  if (spec.train_backbone) out.backbone = std::move(sink.backbone);
  return out;
}

void apply_gradients(const MethodSpec& spec, const TrainConfig& config, const StepGradients& grads, TrainState& state) {
  if (spec.train_prompt) {
    const double lr = scheduled_lr(config.prompt_lr, config.schedule, state.step, config.max_steps);
    state.prompt_opt.step(std::span<double>(state.prompt.rows.data(), static_cast<std::size_t>(state.prompt.rows.size())),
                          std::span<const double>(grads.prompt.data(), static_cast<std::size_t>(grads.prompt.size())), lr);
  }
  if (spec.train_backbone && grads.backbone) {
    const double lr = scheduled_lr(config.backbone_lr, config.schedule, state.step, config.max_steps);
    std::vector<double> flat = state.backbone.flatten();
    state.backbone_opt.step(flat, grads.backbone->flatten(), lr);
    state.backbone.assign(flat);
  }
  if (grads.discriminator) update(*state.discriminator, *grads.discriminator, config.disc_lr);
  ++state.step;
}

StepStats train_step(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                     std::span<const LabeledExample> source, std::span<const Example> target, TrainState& state,
                     PerturbationMonitor* monitor) {
  Rng delta_rng = state.delta_rng;
  const StepGradients grads = compute_gradients(model, spec, config, source, target, state, delta_rng, monitor);
  apply_gradients(spec, config, grads, state);
  state.delta_rng = delta_rng;
  return grads.stats;
}

StepStats train_step(const Model& model, const MethodSpec& spec, const TrainConfig& config, const LabeledSet& source,
                     const UnlabeledSet& target, TrainState& state, PerturbationMonitor* monitor) {
  const auto bs = static_cast<std::size_t>(config.batch_size);
  LabeledSet src;
  for (std::size_t i : state.source_sampler.next(bs)) src.push_back(source[i]);
  UnlabeledSet tgt;
  if (spec.uses_target) {
    for (std::size_t i : state.target_sampler.next(bs)) tgt.push_back(target[i]);
  }
  return train_step(model, spec, config, std::span<const LabeledExample>(src), std::span<const Example>(tgt), state,
                    monitor);
}

Matrix domain_prompt_gradient(const Model& model, Method method, const PromptParameters& prompt,
                              const DiscriminatorParams& disc, std::span<const Example> source,
                              std::span<const Example> target, const PerturbationBatch* delta) {
  const int m = static_cast<int>(prompt.rows.rows());
  const ForwardOptions view = domain_view(method);
  Matrix grad = Matrix::Zero(m, model.dim());
  auto push = [&](const EmbeddedSequence& seq, double d_loss_dz) {
    const ForwardPass pass = forward(seq, model.backbone, model.head, view);
    const Vector d_pooled = discriminator_backward(disc, pass.pooled, d_loss_dz, nullptr);
    const EncoderGradients g = backward(pass, model.backbone, model.head, Vector(), d_pooled);
    if (m > 0) grad += g.d_embeddings.topRows(m);
  };

  std::vector<EmbeddedSequence> src, pert, tgt;
  for (std::size_t i = 0; i < source.size(); ++i) {
    src.push_back(model.frontend.build(prompt, source[i]));
    if (delta != nullptr) pert.push_back(apply_perturbation(src.back(), delta->deltas[i]));
  }
  for (const auto& ex : target) tgt.push_back(model.frontend.build(prompt, ex));

  auto z_of = [&](const std::vector<EmbeddedSequence>& seqs) {
    std::vector<double> z;
    for (const auto& s : seqs) z.push_back(discriminate(disc, forward(s, model.backbone, model.head, view).pooled));
    return z;
  };
  const auto z_s = z_of(src);
  const auto z_t = z_of(tgt);

  if (method == Method::optima) {
    const auto& sp = delta != nullptr ? pert : src;
    const auto z_sp = z_of(sp);
    const DomainLoss dl = disc_loss(z_s, z_sp, z_t);
    for (std::size_t i = 0; i < src.size(); ++i) {
      push(sp[i], dl.d_source_pert[i] + adv_loss(z_sp[i]).grad[0]);
      push(src[i], dl.d_source_clean[i]);
      push(tgt[i], dl.d_target[i]);
    }
  } else {
    const DomainLoss dd = domain_discrimination_loss(z_s, z_t);
    for (std::size_t i = 0; i < src.size(); ++i) push(src[i], dd.d_source_clean[i]);
    for (std::size_t i = 0; i < tgt.size(); ++i) push(tgt[i], dd.d_target[i]);
  }
  return grad;
}

Evaluation evaluate(const Model& model, const PromptParameters& prompt, const BackboneWeights& backbone,
                    const LabeledSet& data) {
  Evaluation ev;
  if (data.empty()) return ev;
  int correct = 0;
  for (const auto& row : data) {
    const ForwardPass pass = forward(model.frontend.build(prompt, row.input), backbone, model.head, kPredictOnly);
    Eigen::Index arg = 0;
    pass.probs.maxCoeff(&arg);
    ev.predictions.push_back(static_cast<int>(arg));
    ev.probabilities.push_back(pass.probs);
    if (arg == row.label) ++correct;
    ev.mean_loss += xent(pass.probs, row.label).value;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  ev.mean_loss /= static_cast<double>(data.size());
  return ev;
}

namespace {

double selection_value(const Model& model, const TrainState& state, const LabeledSet& data, SelectionMetric metric) {
  const Evaluation ev = evaluate(model, state.prompt, state.backbone, data);
  return metric == SelectionMetric::accuracy ? ev.accuracy : ev.mean_loss;
}

bool improves(double candidate, double best, SelectionMetric metric) {
  return metric == SelectionMetric::accuracy ? candidate > best : candidate < best;
}

Checkpoint run_loop(const Model& model, const MethodSpec& spec, Method method, const TrainConfig& config,
                    const LabeledSet& train, const UnlabeledSet& target, const LabeledSet& validation,
                    TrainState state, const LogSink& log, PerturbationMonitor* monitor) {
  Checkpoint best;
  best.method = method;
  best.seed = config.seed;
  best.best_step = 0;
  best.best_metric = selection_value(model, state, validation, config.selection);
  best.state = state;
  if (log) log({StepStats{}, best.best_metric});
  if (!spec.train_prompt && !spec.train_backbone) return best;

  for (long s = 1; s <= config.max_steps; ++s) {
    StepStats stats;
    try {
      stats = train_step(model, spec, config, train, target, state, monitor);
    } catch (const NumericalError& e) {
      best.aborted = true;
      best.abort_reason = e.what();
      return best;
    }
    std::optional<double> val;
    if (s % config.eval_interval == 0 || s == config.max_steps) {
      val = selection_value(model, state, validation, config.selection);
      if (improves(*val, best.best_metric, config.selection)) {
        best.best_metric = *val;
        best.best_step = s;
        best.state = state;
      }
    }
    if (log) log({stats, val});
  }
  return best;
}

}  // namespace

Checkpoint pretrain(const Model& model, Method method, const TrainingData& data, const TrainConfig& config,
                    const LogSink& log, PerturbationMonitor* monitor) {
  config.validate();
  const MethodSpec spec = method_spec(method);
  if (data.train.empty()) throw InputError("pretrain: empty source training set");
  if (data.validation.empty()) throw InputError("pretrain: empty source validation set");
  if (spec.uses_target && data.target.empty()) throw InputError("pretrain: method needs unlabeled target data");
  const TrainState state = initial_state(model, spec, config, data.train.size(), data.target.size());
  return run_loop(model, spec, method, config, data.train, data.target, data.validation, state, log, monitor);
}

Checkpoint fewshot_finetune(const Model& model, const Checkpoint& start, const FewShotSplit& split,
                            const TrainConfig& config, int classes, const LogSink& log) {
  config.validate();
  for (const auto* part : {&split.train, &split.dev}) {
    std::vector<int> seen(static_cast<std::size_t>(classes), 0);
    for (const auto& row : *part) {
      if (row.label < 0 || row.label >= classes) throw InputError("fewshot_finetune: label out of range");
      seen[static_cast<std::size_t>(row.label)] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw InputError("fewshot_finetune: split does not cover every class");
    }
  }
  if (config.max_steps == 0 || start.method == Method::frozen) return start;

  const MethodSpec spec = fewshot_spec(start.method);
  TrainConfig cfg = config;
  cfg.batch_size = std::min<int>(config.batch_size, static_cast<int>(split.train.size()));
  TrainState state = start.state;
  state.step = 0;
  state.prompt_opt = Optimizer{};
  state.prompt_opt.kind = cfg.optimizer;
  state.backbone_opt = Optimizer{};
  state.backbone_opt.kind = cfg.optimizer;
  state.source_sampler = Sampler{};
  state.source_sampler.population = split.train.size();
  state.source_sampler.rng = derive_rng(cfg.seed ^ (static_cast<std::uint64_t>(split.sample_index) << 32), kSourceStream);
  Checkpoint out = run_loop(model, spec, start.method, cfg, split.train, {}, split.dev, state, log, nullptr);
  out.seed = start.seed;
  return out;
}

}  // namespace optima
