#pragma once

#include "optima/data.hpp"
#include "optima/metrics.hpp"
#include "optima/model.hpp"
#include "optima/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace optima {

struct PretrainProtocol {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double validation_fraction = 0.1;
};

struct FewShotProtocol {
  int per_class = 8;
  int splits = 16;
  long max_steps = 100;
  long eval_interval = 4;
  int batch_size = 32;
  double prompt_lr = 0.05;
  double backbone_lr = 0.001;
};

struct ReportOptions {
  std::string reference = "optima";
  TTestKind test = TTestKind::welch;
};

struct PlotOptions {
  int grid = 200;
  double extent = 3.0;
  int points = 200;  // per domain, overlaid on decision-boundary plots
};

/// Optional external corpora; empty paths mean "generate synthetically".
struct ExternalData {
  std::string source_jsonl;
  std::string target_jsonl;
  std::string eval_jsonl;
};

/// Fully resolved experiment configuration. `seed` drives data generation
/// and the seeded model; `pretrain.seeds` are the training seeds.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  DomainPairSpec task;
  ModelSpec model;
  TrainConfig train;
  PretrainProtocol pretrain;
  FewShotProtocol fewshot;
  ReportOptions report;
  PlotOptions plot;
  ExternalData data;

  void validate() const;
  /// Task spec and model spec with the experiment seed applied.
  DomainPairSpec task_spec() const;
  ModelSpec model_spec() const;
  /// Training config for one training seed.
  TrainConfig train_config(std::uint64_t training_seed) const;
  TrainConfig fewshot_config(std::uint64_t training_seed) const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Strict: every key must be known and every value well typed.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Defaults, then the optional file, then `key.path=value` overrides. Values
/// are parsed as JSON when possible, otherwise taken as strings. Throws
/// ConfigError on unknown keys or mistyped values.
ExperimentConfig resolve_config(const std::filesystem::path* file, const std::vector<std::string>& overrides);

/// Sorted-key compact JSON of the resolved config.
std::string canonical_config(const ExperimentConfig& config);
/// SHA-256 of the canonical config, hex.
std::string config_hash(const ExperimentConfig& config);

}  // namespace optima
