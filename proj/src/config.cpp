#include "optima/config.hpp"

#include "optima/hashing.hpp"

#include <fstream>

namespace optima {

using nlohmann::json;

namespace {

std::string to_string(AscentObjective o) { return o == AscentObjective::adv ? "adv" : "disc"; }
std::string to_string(SelectionMetric s) { return s == SelectionMetric::accuracy ? "accuracy" : "loss"; }
std::string to_string(PromptInit p) { return p == PromptInit::table_rows ? "table_rows" : "gaussian"; }

AscentObjective parse_ascent(const std::string& s) {
  if (s == "adv") return AscentObjective::adv;
  if (s == "disc") return AscentObjective::disc;
  throw ConfigError("train.ascent_objective must be 'adv' or 'disc', got '" + s + "'");
}

SelectionMetric parse_selection(const std::string& s) {
  if (s == "accuracy") return SelectionMetric::accuracy;
  if (s == "loss") return SelectionMetric::loss;
  throw ConfigError("train.selection must be 'accuracy' or 'loss', got '" + s + "'");
}

PromptInit parse_prompt_init(const std::string& s) {
  if (s == "table_rows") return PromptInit::table_rows;
  if (s == "gaussian") return PromptInit::gaussian;
  throw ConfigError("train.prompt_init must be 'table_rows' or 'gaussian', got '" + s + "'");
}

bool same_kind(const json& dflt, const json& value) {
  if (dflt.is_number_float()) return value.is_number();
  if (dflt.is_number_unsigned() || dflt.is_number_integer()) return value.is_number_integer() || value.is_number_unsigned();
  if (dflt.is_array()) return value.is_array();
  return dflt.type() == value.type();
}

void merge_strict(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config" + (prefix.empty() ? "" : " section '" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else if (!same_kind(slot, value)) {
      throw ConfigError("config key '" + path + "' expects " + std::string(slot.type_name()) + ", got " +
                        std::string(value.type_name()));
    } else {
      slot = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + section + "." + key + "': " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    task.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("task: ") + e.what());
  }
  train.validate();
  if (model.dim <= 0) throw ConfigError("model.dim must be positive");
  if (model.prompt_len < 0 || model.hard_len < 0) throw ConfigError("model prompt lengths must be non-negative");
  if (pretrain.seeds.empty()) throw ConfigError("pretrain.seeds must not be empty");
  if (!(pretrain.validation_fraction > 0.0 && pretrain.validation_fraction < 1.0)) {
    throw ConfigError("pretrain.validation_fraction must lie in (0, 1)");
  }
  if (fewshot.per_class <= 0 || fewshot.splits <= 0) throw ConfigError("fewshot.per_class and fewshot.splits must be positive");
  if (fewshot.max_steps < 0 || fewshot.eval_interval <= 0 || fewshot.batch_size <= 0) {
    throw ConfigError("fewshot step settings must be positive");
  }
  if (plot.grid < 2 || !(plot.extent > 0.0) || plot.points < 0) throw ConfigError("plot settings out of range");
  parse_method(report.reference);
}

DomainPairSpec ExperimentConfig::task_spec() const {
  DomainPairSpec s = task;
  s.seed = seed;
  return s;
}

ModelSpec ExperimentConfig::model_spec() const {
  ModelSpec s = model;
  s.seed = seed;
  return s;
}

TrainConfig ExperimentConfig::train_config(std::uint64_t training_seed) const {
  TrainConfig c = train;
  c.seed = training_seed;
  return c;
}

TrainConfig ExperimentConfig::fewshot_config(std::uint64_t training_seed) const {
  TrainConfig c = train_config(training_seed);
  c.max_steps = fewshot.max_steps;
  c.eval_interval = fewshot.eval_interval;
  c.batch_size = fewshot.batch_size;
  c.prompt_lr = fewshot.prompt_lr;
  c.backbone_lr = fewshot.backbone_lr;
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["task"] = {{"name", to_string(c.task.task)},    {"vocab", c.task.vocab},
               {"length", c.task.length},           {"classes", c.task.classes},
               {"shift", c.task.shift},             {"source_size", c.task.source_size},
               {"target_size", c.task.target_size}, {"eval_size", c.task.eval_size}};
  j["model"] = {{"dim", c.model.dim},
                {"prompt_len", c.model.prompt_len},
                {"hard_len", c.model.hard_len},
                {"head_scale", c.model.head_scale},
                {"copy_strength", c.model.copy_strength},
                {"copy_noise", c.model.copy_noise},
                {"layer_scale", c.model.layer_scale},
                {"table",
                 {{"semantic", c.model.table.semantic},
                  {"synonym_semantic", c.model.table.synonym_semantic},
                  {"domain_offset", c.model.table.domain_offset},
                  {"token_noise", c.model.table.token_noise}}}};
  const TrainConfig& t = c.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"max_steps", t.max_steps},
                {"eval_interval", t.eval_interval},
                {"prompt_lr", t.prompt_lr},
                {"backbone_lr", t.backbone_lr},
                {"disc_lr", t.disc_lr},
                {"epsilon", t.epsilon},
                {"delta_step", t.delta_step},
                {"ascent_steps", t.ascent_steps},
                {"optimizer", to_string(t.optimizer)},
                {"schedule", to_string(t.schedule)},
                {"xent_weight", t.xent_weight},
                {"kl_weight", t.kl_weight},
                {"adv_weight", t.adv_weight},
                {"dann_weight", t.dann_weight},
                {"ascent_objective", to_string(t.ascent_objective)},
                {"selection", to_string(t.selection)},
                {"prompt_init", to_string(t.prompt_init)}};
  j["pretrain"] = {{"seeds", c.pretrain.seeds}, {"validation_fraction", c.pretrain.validation_fraction}};
  j["fewshot"] = {{"per_class", c.fewshot.per_class},     {"splits", c.fewshot.splits},
                  {"max_steps", c.fewshot.max_steps},     {"eval_interval", c.fewshot.eval_interval},
                  {"batch_size", c.fewshot.batch_size},   {"prompt_lr", c.fewshot.prompt_lr},
                  {"backbone_lr", c.fewshot.backbone_lr}};
  j["report"] = {{"reference", c.report.reference}, {"test", to_string(c.report.test)}};
  j["plot"] = {{"grid", c.plot.grid}, {"extent", c.plot.extent}, {"points", c.plot.points}};
  j["data"] = {{"source_jsonl", c.data.source_jsonl},
               {"target_jsonl", c.data.target_jsonl},
               {"eval_jsonl", c.data.eval_jsonl}};
  return j;
}

ExperimentConfig config_from_json(const json& input) {
  json j = to_json(ExperimentConfig{});
  merge_strict(j, input, "");
  ExperimentConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.task.task = parse_task(get<std::string>(j, "task", "name"));
  c.task.vocab = get<int>(j, "task", "vocab");
  c.task.length = get<int>(j, "task", "length");
  c.task.classes = get<int>(j, "task", "classes");
  c.task.shift = get<double>(j, "task", "shift");
  c.task.source_size = get<int>(j, "task", "source_size");
  c.task.target_size = get<int>(j, "task", "target_size");
  c.task.eval_size = get<int>(j, "task", "eval_size");

  c.model.dim = get<int>(j, "model", "dim");
  c.model.prompt_len = get<int>(j, "model", "prompt_len");
  c.model.hard_len = get<int>(j, "model", "hard_len");
  c.model.head_scale = get<double>(j, "model", "head_scale");
  c.model.copy_strength = get<double>(j, "model", "copy_strength");
  c.model.copy_noise = get<double>(j, "model", "copy_noise");
  c.model.layer_scale = get<double>(j, "model", "layer_scale");
  const json& table = j.at("model").at("table");
  c.model.table.semantic = table.at("semantic").get<double>();
  c.model.table.synonym_semantic = table.at("synonym_semantic").get<double>();
  c.model.table.domain_offset = table.at("domain_offset").get<double>();
  c.model.table.token_noise = table.at("token_noise").get<double>();

  TrainConfig& t = c.train;
  t.batch_size = get<int>(j, "train", "batch_size");
  t.max_steps = get<long>(j, "train", "max_steps");
  t.eval_interval = get<long>(j, "train", "eval_interval");
  t.prompt_lr = get<double>(j, "train", "prompt_lr");
  t.backbone_lr = get<double>(j, "train", "backbone_lr");
  t.disc_lr = get<double>(j, "train", "disc_lr");
  t.epsilon = get<double>(j, "train", "epsilon");
  t.delta_step = get<double>(j, "train", "delta_step");
  t.ascent_steps = get<int>(j, "train", "ascent_steps");
  t.optimizer = parse_optimizer(get<std::string>(j, "train", "optimizer"));
  t.schedule = parse_schedule(get<std::string>(j, "train", "schedule"));
  t.xent_weight = get<double>(j, "train", "xent_weight");
  t.kl_weight = get<double>(j, "train", "kl_weight");
  t.adv_weight = get<double>(j, "train", "adv_weight");
  t.dann_weight = get<double>(j, "train", "dann_weight");
  t.ascent_objective = parse_ascent(get<std::string>(j, "train", "ascent_objective"));
  t.selection = parse_selection(get<std::string>(j, "train", "selection"));
  t.prompt_init = parse_prompt_init(get<std::string>(j, "train", "prompt_init"));

  c.pretrain.seeds = get<std::vector<std::uint64_t>>(j, "pretrain", "seeds");
  c.pretrain.validation_fraction = get<double>(j, "pretrain", "validation_fraction");
  c.fewshot.per_class = get<int>(j, "fewshot", "per_class");
  c.fewshot.splits = get<int>(j, "fewshot", "splits");
  c.fewshot.max_steps = get<long>(j, "fewshot", "max_steps");
  c.fewshot.eval_interval = get<long>(j, "fewshot", "eval_interval");
  c.fewshot.batch_size = get<int>(j, "fewshot", "batch_size");
  c.fewshot.prompt_lr = get<double>(j, "fewshot", "prompt_lr");
  c.fewshot.backbone_lr = get<double>(j, "fewshot", "backbone_lr");
  c.report.reference = get<std::string>(j, "report", "reference");
  c.report.test = parse_ttest(get<std::string>(j, "report", "test"));
  c.plot.grid = get<int>(j, "plot", "grid");
  c.plot.extent = get<double>(j, "plot", "extent");
  c.plot.points = get<int>(j, "plot", "points");
  c.data.source_jsonl = get<std::string>(j, "data", "source_jsonl");
  c.data.target_jsonl = get<std::string>(j, "data", "target_jsonl");
  c.data.eval_jsonl = get<std::string>(j, "data", "eval_jsonl");
  c.validate();
  return c;
}

ExperimentConfig resolve_config(const std::filesystem::path* file, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (file != nullptr) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file '" + file->string() + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + file->string() + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* slot = &j;
    std::size_t begin = 0;
    while (true) {
      const auto dot = key.find('.', begin);
      const std::string part = key.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      if (dot == std::string::npos) {
        (*slot)[part] = value;
        break;
      }
      json& next = (*slot)[part];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
      slot = &next;
      begin = dot + 1;
    }
  }
  return config_from_json(j);
}

std::string canonical_config(const ExperimentConfig& config) { return to_json(config).dump(); }

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(canonical_config(config)); }

}  // namespace optima
