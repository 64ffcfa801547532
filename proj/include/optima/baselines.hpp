#pragma once

#include "optima/trainer.hpp"

namespace optima {

/// Prediction with the untrained prompt; no parameter changes.
Evaluation frozen_eval(const Model& model, const LabeledSet& data, PromptInit init = PromptInit::table_rows,
                       std::uint64_t seed = 1);

Checkpoint pt_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log = {});
Checkpoint ft_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log = {});
Checkpoint pft_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log = {});

/// Source-only prompt pretraining (validation-selected) followed by few-shot
/// tuning on the target split.
struct SpotResult {
  Checkpoint pretrained;
  Checkpoint transferred;
};
SpotResult spot_transfer(const Model& model, const TrainingData& source, const FewShotSplit& split,
                         const TrainConfig& pretrain_config, const TrainConfig& fewshot_config, int classes);

Checkpoint freelb_train(const Model& model, const TrainingData& data, const TrainConfig& config,
                        const LogSink& log = {}, PerturbationMonitor* monitor = nullptr);
Checkpoint vat_train(const Model& model, const TrainingData& data, const TrainConfig& config,
                     const LogSink& log = {}, PerturbationMonitor* monitor = nullptr);
Checkpoint dann_train(const Model& model, const TrainingData& data, const TrainConfig& config, const LogSink& log = {});
Checkpoint optima_train(const Model& model, const TrainingData& data, const TrainConfig& config,
                        const LogSink& log = {}, PerturbationMonitor* monitor = nullptr);

/// Dispatch by method id.
Checkpoint train_method(const Model& model, Method method, const TrainingData& data, const TrainConfig& config,
                        const LogSink& log = {}, PerturbationMonitor* monitor = nullptr);

}  // namespace optima
