#pragma once

#include "optima/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace optima {

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

/// Result of evaluating one model on one labeled set.
struct RunReport {
  std::string method;
  std::string phase = "zeroshot";  // "zeroshot" or "fewshot"
  std::string config_hash;
  std::uint64_t seed = 0;
  std::optional<int> sample_index;  // few-shot only
  double accuracy = 0.0;
  double f1 = 0.0;  // positive-class F1 for two classes, macro F1 otherwise
  std::vector<ClassStats> per_class;
  std::vector<std::vector<long>> confusion;  // [gold][predicted]
  std::string predictions_ref;
};

/// Class 1 is the positive class for binary F1.
RunReport compute_metrics(std::span<const int> predictions, std::span<const int> gold, int classes);

enum class TTestKind { welch, pooled, paired };

TTestKind parse_ttest(const std::string& name);
std::string to_string(TTestKind kind);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Two-sided two-sample t-test. With zero variance on both sides the result
/// is p = 1 for equal means and p = 0 (t = +-inf) otherwise.
TTestResult ttest(std::span<const double> a, std::span<const double> b, TTestKind kind = TTestKind::welch);

/// Class-level TF-IDF cosine similarity. Each class of each corpus is one
/// document (all its sequences concatenated); IDF = ln((1+N)/(1+df)) + 1 over
/// the N documents of both corpora; vectors are L2-normalized. Returns a
/// (classes of a) x (classes of b) matrix.
using ClassCorpus = std::vector<std::vector<std::vector<int>>>;
Matrix tfidf_class_similarity(const ClassCorpus& corpus_a, const ClassCorpus& corpus_b);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

struct MethodAggregate {
  std::string method;
  int runs = 0;   // reports consumed
  int units = 0;  // values entering mean/std (split averages or seeds)
  MetricSummary accuracy;
  MetricSummary f1;
  bool std_defined = false;
  bool complete = false;
  std::optional<TTestResult> vs_reference;
  std::vector<double> unit_accuracies;
};

struct AggregateReport {
  std::string phase;
  std::string reference_method;
  std::string test;
  int expected_runs = 0;
  bool complete = false;
  std::vector<MethodAggregate> methods;
};

struct AggregateOptions {
  std::string reference_method = "optima";
  TTestKind test = TTestKind::welch;
  int expected_splits = 16;
  int expected_seeds = 3;
};

/// Groups reports by method. Few-shot reports are first averaged over seeds
/// within each split, then summarized over split averages; zero-shot reports
/// are summarized over seeds. Independent of the input order.
AggregateReport aggregate(std::span<const RunReport> reports, const AggregateOptions& options = {});

}  // namespace optima
