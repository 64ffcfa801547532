#pragma once

#include "optima/data.hpp"
#include "optima/discriminator.hpp"
#include "optima/model.hpp"
#include "optima/optimizer.hpp"
#include "optima/perturbation.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace optima {

enum class Method { frozen, pt, ft, pft, spot, freelb, vat, dann, optima };

Method parse_method(const std::string& name);  // ConfigError naming the valid ids
std::string to_string(Method method);
const std::vector<std::string>& method_names();

/// Which parameter groups a method trains and which signals drive them.
struct MethodSpec {
  Method id = Method::pt;
  bool train_prompt = true;
  bool train_backbone = false;
  bool uses_target = false;         // unlabeled target batches during training
  bool uses_discriminator = false;  // allocates and trains a domain probe
  bool uses_perturbation = false;   // inner ascent on the input embeddings
};

/// Spec of the source-pretraining (or direct training) phase.
MethodSpec method_spec(Method method);
/// Spec of the few-shot phase: plain cross-entropy on the few-shot split.
MethodSpec fewshot_spec(Method method);

enum class AscentObjective { adv, disc };
enum class SelectionMetric { accuracy, loss };
enum class PromptInit { table_rows, gaussian };

struct TrainConfig {
  int batch_size = 32;
  long max_steps = 300;
  long eval_interval = 50;
  double prompt_lr = 0.05;
  double backbone_lr = 0.001;
  double disc_lr = 0.1;
  double epsilon = 2.0;
  double delta_step = 1.0;
  int ascent_steps = 3;
  OptimizerKind optimizer = OptimizerKind::adam;
  Schedule schedule = Schedule::constant;
  std::uint64_t seed = 1;
  double xent_weight = 1.0;
  double kl_weight = 1.0;
  double adv_weight = 1.0;
  double dann_weight = 1.0;
  AscentObjective ascent_objective = AscentObjective::adv;
  SelectionMetric selection = SelectionMetric::accuracy;
  PromptInit prompt_init = PromptInit::table_rows;

  void validate() const;
};

/// Epoch-wise shuffled index stream; wraps around with a fresh shuffle.
struct Sampler {
  std::size_t population = 0;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  Rng rng;

  std::vector<std::size_t> next(std::size_t count);
};

/// Everything that evolves during training. Reloading it and continuing
/// reproduces the original run bit for bit.
struct TrainState {
  PromptParameters prompt;
  BackboneWeights backbone;
  std::optional<DiscriminatorParams> discriminator;
  Optimizer prompt_opt;
  Optimizer backbone_opt;
  long step = 0;
  Sampler source_sampler;
  Sampler target_sampler;
  Rng delta_rng;
};

PromptParameters initial_prompt(const Model& model, PromptInit init, std::uint64_t seed);

TrainState initial_state(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                         std::size_t source_size, std::size_t target_size);

struct StepStats {
  long step = 0;
  double loss = 0.0;
  double xent = 0.0;
  double kl = 0.0;
  double adv = 0.0;
  double disc = 0.0;
  int clamp_events = 0;
};

/// Losses and gradients of one step; no parameter is modified. The ascent
/// draws its starting point from `delta_rng`. When `fixed_delta` is given it
/// is used as the final perturbation instead (no initialization, no ascent).
struct StepGradients {
  StepStats stats;
  Matrix prompt;
  std::optional<BackboneWeights> backbone;
  std::optional<DiscriminatorGrads> discriminator;
  std::optional<PerturbationBatch> delta;
};

StepGradients compute_gradients(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                                std::span<const LabeledExample> source, std::span<const Example> target,
                                const TrainState& state, Rng& delta_rng, PerturbationMonitor* monitor = nullptr,
                                const PerturbationBatch* fixed_delta = nullptr);

/// Prompt step, backbone step, discriminator step, in that order.
void apply_gradients(const MethodSpec& spec, const TrainConfig& config, const StepGradients& grads, TrainState& state);

/// Gradient w.r.t. delta of one example's ascent objective:
///   freelb: xent(f(x + delta), y)
///   vat, optima: KL(p_clean || f(x + delta)) + adv_weight * adv_scale * adv(z(x + delta))
/// where the adversarial part only applies to optima.
Matrix ascent_gradient(const Model& model, Method method, const TrainConfig& config, const BackboneWeights& backbone,
                       const DiscriminatorParams* disc, const EmbeddedSequence& clean, const Vector& clean_probs,
                       int label, const Matrix& delta, double adv_scale = 1.0);

/// One update: compute_gradients then apply_gradients. A NumericalError
/// leaves `state` untouched.
StepStats train_step(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                     std::span<const LabeledExample> source, std::span<const Example> target, TrainState& state,
                     PerturbationMonitor* monitor = nullptr);

/// Samples the next batch pair from the state's samplers and calls train_step.
StepStats train_step(const Model& model, const MethodSpec& spec, const TrainConfig& config,
                     const LabeledSet& source, const UnlabeledSet& target, TrainState& state,
                     PerturbationMonitor* monitor = nullptr);

/// Gradients of the domain losses w.r.t. the prompt, routed exactly as the
/// trainer routes them. In OPTIMA the discriminator reads a view that excludes
/// the prompt, so this is identically zero; in DANN it reaches the prompt.
Matrix domain_prompt_gradient(const Model& model, Method method, const PromptParameters& prompt,
                              const DiscriminatorParams& disc, std::span<const Example> source,
                              std::span<const Example> target, const PerturbationBatch* delta = nullptr);

struct Evaluation {
  std::vector<int> predictions;
  std::vector<Vector> probabilities;
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

Evaluation evaluate(const Model& model, const PromptParameters& prompt, const BackboneWeights& backbone,
                    const LabeledSet& data);

struct Checkpoint {
  Method method = Method::pt;
  std::uint64_t seed = 0;
  TrainState state;  // the selected state
  long best_step = 0;
  double best_metric = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

struct LogRecord {
  StepStats stats;
  std::optional<double> validation;
};

using LogSink = std::function<void(const LogRecord&)>;

struct TrainingData {
  LabeledSet train;
  LabeledSet validation;
  UnlabeledSet target;  // unlabeled; empty for source-only methods
};

/// Trains for max_steps, evaluating every eval_interval steps (and at step 0)
/// on the validation set; returns the best state. A NumericalError during
/// training stops the run and returns the last selected state with
/// aborted = true.
Checkpoint pretrain(const Model& model, Method method, const TrainingData& data, const TrainConfig& config,
                    const LogSink& log = {}, PerturbationMonitor* monitor = nullptr);

/// Continues training from `start` on a few-shot split, selecting by dev
/// accuracy. Zero steps returns `start` unchanged.
Checkpoint fewshot_finetune(const Model& model, const Checkpoint& start, const FewShotSplit& split,
                            const TrainConfig& config, int classes, const LogSink& log = {});

}  // namespace optima
