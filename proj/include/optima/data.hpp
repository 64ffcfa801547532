#pragma once

#include "optima/embedding.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace optima {

enum class TaskKind { token_stats, toy2d };

TaskKind parse_task(const std::string& name);
std::string to_string(TaskKind task);

/// Synthetic two-domain task. shift = 0 gives identical domains; shift = 1
/// remaps every indicator token to its synonym (token-stats) or rotates the
/// clusters by 90 degrees (toy2d).
struct DomainPairSpec {
  TaskKind task = TaskKind::token_stats;
  int vocab = 64;
  int length = 16;
  int classes = 3;
  double shift = 0.5;
  int source_size = 2000;
  int target_size = 2000;
  int eval_size = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Vocabulary of the token-stats task:
///   [0, C*b)        class-indicator blocks, block c = [c*b, (c+1)*b)
///   [C*b, 2*C*b)    synonym blocks, same order
///   [2*C*b, V)      filler
/// with b = V / (2C + 2).
struct TokenStatsLayout {
  int vocab = 64;
  int classes = 3;
  int block = 8;

  static TokenStatsLayout for_spec(const DomainPairSpec& spec);
  int indicator(int c, int offset) const { return c * block + offset; }
  int synonym(int c, int offset) const { return (classes + c) * block + offset; }
  int filler_begin() const { return 2 * classes * block; }
  /// Class a token votes for (indicators and synonyms), nullopt for filler.
  std::optional<int> class_of(int token) const;
  bool is_synonym(int token) const { return token >= classes * block && token < filler_begin(); }
};

/// Unlabeled target training data. Labels live in a separate vector that only
/// few-shot sampling and evaluation read; trainers receive `examples` alone.
struct TargetPool {
  UnlabeledSet examples;
  std::vector<int> hidden_labels;
};

struct DomainPair {
  LabeledSet source;
  TargetPool target;
  LabeledSet target_eval;
};

DomainPair generate_pair(const DomainPairSpec& spec);

struct ValidationSplit {
  LabeledSet train;
  LabeledSet validation;
};

/// Holds out the last `fraction` of the set (at least one example each side).
ValidationSplit split_validation(const LabeledSet& data, double fraction);

struct FewShotSplit {
  LabeledSet train;
  LabeledSet dev;
  int sample_index = 1;
  std::uint64_t seed = 0;
};

/// Stratified draw without replacement of `per_class` train and `per_class`
/// dev examples per class from the target pool.
FewShotSplit sample_fewshot(const TargetPool& pool, int classes, int sample_index, std::uint64_t seed,
                            int per_class = 8);

/// Label names used in JSONL files.
struct Verbalizer {
  std::vector<std::string> labels;

  int id(const std::string& name) const;  // throws InputError on unknown names
  const std::string& name(int id) const;
  int classes() const { return static_cast<int>(labels.size()); }
};

Verbalizer default_verbalizer(int classes);

struct JsonlDataset {
  std::vector<Example> inputs;
  std::vector<std::optional<int>> labels;
  int warnings = 0;

  LabeledSet labeled() const;  // throws InputError when a row has no label
  UnlabeledSet unlabeled() const;
};

JsonlDataset load_jsonl(const std::filesystem::path& path, const Verbalizer& verbalizer);
std::string to_jsonl(const LabeledSet& data, const Verbalizer& verbalizer);
std::string to_jsonl(const UnlabeledSet& data);

}  // namespace optima
