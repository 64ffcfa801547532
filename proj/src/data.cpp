#include "optima/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace optima {

using nlohmann::json;

TaskKind parse_task(const std::string& name) {
  if (name == "token-stats") return TaskKind::token_stats;
  if (name == "toy2d") return TaskKind::toy2d;
  throw ConfigError("unknown task '" + name + "' (valid: token-stats, toy2d)");
}

std::string to_string(TaskKind task) { return task == TaskKind::token_stats ? "token-stats" : "toy2d"; }

void DomainPairSpec::validate() const {
  if (!(shift >= 0.0 && shift <= 1.0)) throw InputError("shift must lie in [0, 1]");
  if (classes < 2) throw InputError("need at least two classes");
  if (source_size <= 0 || target_size <= 0 || eval_size <= 0) throw InputError("dataset sizes must be positive");
  if (task == TaskKind::token_stats) {
    if (length <= 0) throw InputError("sequence length must be positive");
    if (vocab / (2 * classes + 2) < 1) throw InputError("vocabulary too small for the class count");
  }
}

TokenStatsLayout TokenStatsLayout::for_spec(const DomainPairSpec& spec) {
  return {spec.vocab, spec.classes, spec.vocab / (2 * spec.classes + 2)};
}

std::optional<int> TokenStatsLayout::class_of(int token) const {
  if (token < 0 || token >= filler_begin()) return std::nullopt;
  return (token / block) % classes;
}

namespace {

std::vector<int> balanced_labels(int n, int classes, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

Example token_example(const TokenStatsLayout& layout, int length, int label, int remapped, Domain domain,
                      Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, layout.classes - 1);
  std::uniform_int_distribution<int> pick_offset(0, layout.block - 1);
  const int filler = layout.vocab - layout.filler_begin();
  std::uniform_int_distribution<int> pick_filler(0, std::max(filler - 1, 0));

  Example ex;
  ex.domain = domain;
  ex.tokens.resize(static_cast<std::size_t>(length));
  std::vector<int> counts(static_cast<std::size_t>(layout.classes));
  while (true) {
    std::fill(counts.begin(), counts.end(), 0);
    for (auto& tok : ex.tokens) {
      const double r = unit(rng);
      int c = -1;
      if (r < 0.4) {
        c = label;
      } else if (r < 0.6 || filler == 0) {
        c = pick_class(rng);
      }
      if (c < 0) {
        tok = layout.filler_begin() + pick_filler(rng);
        continue;
      }
      const int offset = pick_offset(rng);
      tok = offset < remapped ? layout.synonym(c, offset) : layout.indicator(c, offset);
      ++counts[static_cast<std::size_t>(c)];
    }
    bool strict = true;
    for (int c = 0; c < layout.classes; ++c) {
      if (c != label && counts[static_cast<std::size_t>(c)] >= counts[static_cast<std::size_t>(label)]) strict = false;
    }
    if (strict) return ex;
  }
}

Example point_example(int classes, int label, double shift, Domain domain, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 0.5);
  const double angle = 2.0 * std::numbers::pi * label / classes;
  double x = 2.0 * std::cos(angle) + noise(rng);
  double y = 2.0 * std::sin(angle) + noise(rng);
  if (domain == Domain::target) {
    const double rot = shift * std::numbers::pi / 2.0;
    const double rx = std::cos(rot) * x - std::sin(rot) * y;
    const double ry = std::sin(rot) * x + std::cos(rot) * y;
    x = rx + 0.5 * shift;
    y = ry + 0.5 * shift;
  }
  Example ex;
  ex.domain = domain;
  ex.point = Point2{x, y};
  return ex;
}

LabeledSet draw(const DomainPairSpec& spec, int n, Domain domain, Rng& rng) {
  const auto labels = balanced_labels(n, spec.classes, rng);
  LabeledSet out;
  out.reserve(static_cast<std::size_t>(n));
  if (spec.task == TaskKind::token_stats) {
    const auto layout = TokenStatsLayout::for_spec(spec);
    const int remapped =
        domain == Domain::target ? static_cast<int>(std::lround(spec.shift * layout.block)) : 0;
    for (int y : labels) out.push_back({token_example(layout, spec.length, y, remapped, domain, rng), y});
  } else {
    for (int y : labels) out.push_back({point_example(spec.classes, y, spec.shift, domain, rng), y});
  }
  return out;
}

}  // namespace

DomainPair generate_pair(const DomainPairSpec& spec) {
  spec.validate();
  Rng source_rng = derive_rng(spec.seed, 1);
  Rng target_rng = derive_rng(spec.seed, 2);
  Rng eval_rng = derive_rng(spec.seed, 3);
  DomainPair pair;
  pair.source = draw(spec, spec.source_size, Domain::source, source_rng);
  for (auto& row : draw(spec, spec.target_size, Domain::target, target_rng)) {
    pair.target.examples.push_back(std::move(row.input));
    pair.target.hidden_labels.push_back(row.label);
  }
  pair.target_eval = draw(spec, spec.eval_size, Domain::target, eval_rng);
  return pair;
}

ValidationSplit split_validation(const LabeledSet& data, double fraction) {
  if (data.size() < 2) throw InputError("split_validation: need at least two examples");
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split_validation: fraction must be in (0, 1)");
  auto held = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(data.size())));
  held = std::clamp<std::size_t>(held, 1, data.size() - 1);
  ValidationSplit out;
  out.train.assign(data.begin(), data.end() - static_cast<std::ptrdiff_t>(held));
  out.validation.assign(data.end() - static_cast<std::ptrdiff_t>(held), data.end());
  return out;
}

FewShotSplit sample_fewshot(const TargetPool& pool, int classes, int sample_index, std::uint64_t seed,
                            int per_class) {
  if (pool.examples.size() != pool.hidden_labels.size()) throw InputError("sample_fewshot: pool labels misaligned");
  if (per_class <= 0) throw InputError("sample_fewshot: per_class must be positive");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < pool.hidden_labels.size(); ++i) {
    const int y = pool.hidden_labels[i];
    if (y < 0 || y >= classes) throw InputError("sample_fewshot: label outside class range");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  Rng rng = derive_rng(seed, 0xf5000000ULL + static_cast<std::uint64_t>(sample_index));
  FewShotSplit split;
  split.sample_index = sample_index;
  split.seed = seed;
  for (int c = 0; c < classes; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(idx.size()) < 2 * per_class) {
      throw InputError("sample_fewshot: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                       " examples, need " + std::to_string(2 * per_class));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int j = 0; j < per_class; ++j) {
      split.train.push_back({pool.examples[idx[static_cast<std::size_t>(j)]], c});
      split.dev.push_back({pool.examples[idx[static_cast<std::size_t>(per_class + j)]], c});
    }
  }
  return split;
}

int Verbalizer::id(const std::string& name) const {
  const auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw InputError("unknown label '" + name + "'");
  return static_cast<int>(it - labels.begin());
}

const std::string& Verbalizer::name(int id) const {
  if (id < 0 || id >= classes()) throw InputError("label id " + std::to_string(id) + " out of range");
  return labels[static_cast<std::size_t>(id)];
}

Verbalizer default_verbalizer(int classes) {
  if (classes == 2) return {{"No", "Yes"}};
  if (classes == 3) return {{"Yes", "Neutral", "No"}};
  Verbalizer v;
  for (int c = 0; c < classes; ++c) v.labels.push_back("L" + std::to_string(c));
  return v;
}

LabeledSet JsonlDataset::labeled() const {
  LabeledSet out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!labels[i]) throw InputError("row " + std::to_string(i + 1) + " has no label");
    out.push_back({inputs[i], *labels[i]});
  }
  return out;
}

UnlabeledSet JsonlDataset::unlabeled() const { return inputs; }

JsonlDataset load_jsonl(const std::filesystem::path& path, const Verbalizer& verbalizer) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  JsonlDataset out;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) -> InputError {
    return InputError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!row.is_object()) throw fail("expected a JSON object");
    Example ex;
    const bool has_tokens = row.contains("tokens");
    const bool has_point = row.contains("point");
    if (has_tokens == has_point) throw fail("exactly one of 'tokens' or 'point' is required");
    try {
      if (has_tokens) {
        ex.tokens = row.at("tokens").get<std::vector<int>>();
      } else {
        const auto pt = row.at("point").get<std::vector<double>>();
        if (pt.size() != 2) throw fail("'point' must hold two numbers");
        ex.point = Point2{pt[0], pt[1]};
      }
      if (row.contains("domain")) {
        const auto dom = row.at("domain").get<std::string>();
        if (dom == "source") {
          ex.domain = Domain::source;
        } else if (dom == "target") {
          ex.domain = Domain::target;
        } else {
          throw fail("domain must be 'source' or 'target'");
        }
      }
      std::optional<int> label;
      if (row.contains("label")) {
        const auto name = row.at("label").get<std::string>();
        try {
          label = verbalizer.id(name);
        } catch (const InputError&) {
          throw fail("unknown label '" + name + "'");
        }
      }
      out.inputs.push_back(std::move(ex));
      out.labels.push_back(label);
    } catch (const json::exception& e) {
      throw fail(std::string("bad field type (") + e.what() + ")");
    }
  }
  if (out.inputs.empty()) ++out.warnings;
  return out;
}

namespace {

json example_json(const Example& ex) {
  json row;
  if (ex.point) {
    row["point"] = {(*ex.point)[0], (*ex.point)[1]};
  } else {
    row["tokens"] = ex.tokens;
  }
  row["domain"] = ex.domain == Domain::source ? "source" : "target";
  return row;
}

}  // namespace

std::string to_jsonl(const LabeledSet& data, const Verbalizer& verbalizer) {
  std::ostringstream out;
  for (const auto& row : data) {
    json j = example_json(row.input);
    j["label"] = verbalizer.name(row.label);
    out << j.dump() << '\n';
  }
  return out.str();
}

std::string to_jsonl(const UnlabeledSet& data) {
  std::ostringstream out;
  for (const auto& ex : data) out << example_json(ex).dump() << '\n';
  return out.str();
}

}  // namespace optima
