#include "optima/baselines.hpp"

namespace optima {

namespace {

/// Source-only methods never see the unlabeled target set.
TrainingData source_only(const TrainingData& data) { return {data.train, data.validation, {}}; }

}  // namespace

Evaluation frozen_eval(const Model& model, const LabeledSet& data, PromptInit init, std::uint64_t seed) {
  return evaluate(model, initial_prompt(model, init, seed), model.backbone, data);
}

Checkpoint pt_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log) {
  return pretrain(model, Method::pt, source_only(data), config, log);
}

Checkpoint ft_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log) {
  return pretrain(model, Method::ft, source_only(data), config, log);
}

Checkpoint pft_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log) {
  return pretrain(model, Method::pft, source_only(data), config, log);
}

SpotResult spot_transfer(const Model& model, const TrainingData& source, const FewShotSplit& split,
                         const TrainConfig& pretrain_config, const TrainConfig& fewshot_config, int classes) {
  SpotResult r;
  r.pretrained = pretrain(model, Method::spot, source_only(source), pretrain_config);
  r.transferred = fewshot_finetune(model, r.pretrained, split, fewshot_config, classes);
  return r;
}

Checkpoint freelb_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log,
                        PerturbationMonitor* monitor) {
  return pretrain(model, Method::freelb, source_only(data), config, log, monitor);
}

Checkpoint vat_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log,
                     PerturbationMonitor* monitor) {
  return pretrain(model, Method::vat, source_only(data), config, log, monitor);
}

Checkpoint dann_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log) {
  return pretrain(model, Method::dann, data, config, log);
}

Checkpoint optima_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log,
                        PerturbationMonitor* monitor) {
  return pretrain(model, Method::optima, data, config, log, monitor);
}

Checkpoint train_method(const Model& model, Method method, const TrainingData& data, const TrainConfig& config,
                        const LogSink& log, PerturbationMonitor* monitor) {
  const MethodSpec spec = method_spec(method);
  return pretrain(model, method, spec.uses_target ? data : source_only(data), config, log, monitor);
}

}  // namespace optima
