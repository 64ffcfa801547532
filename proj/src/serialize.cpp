#include "optima/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace optima {

using nlohmann::json;

namespace {

void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw InputError(std::string("not a ") + format + " document");
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw InputError(std::string(format) + ": unsupported version " + std::to_string(j.value("version", 0)));
  }
}

json optimizer_to_json(const Optimizer& o) {
  return {{"kind", to_string(o.kind)}, {"momentum", o.momentum}, {"beta1", o.beta1}, {"beta2", o.beta2},
          {"eps", o.eps},              {"steps", o.steps},       {"first", o.first}, {"second", o.second}};
}

Optimizer optimizer_from_json(const json& j) {
  Optimizer o;
  o.kind = parse_optimizer(j.at("kind").get<std::string>());
  o.momentum = j.at("momentum").get<double>();
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = j.at("beta2").get<double>();
  o.eps = j.at("eps").get<double>();
  o.steps = j.at("steps").get<long>();
  o.first = j.at("first").get<std::vector<double>>();
  o.second = j.at("second").get<std::vector<double>>();
  return o;
}

json sampler_to_json(const Sampler& s) {
  return {{"population", s.population}, {"order", s.order}, {"cursor", s.cursor}, {"rng", rng_state(s.rng)}};
}

Sampler sampler_from_json(const json& j) {
  Sampler s;
  s.population = j.at("population").get<std::size_t>();
  s.order = j.at("order").get<std::vector<std::size_t>>();
  s.cursor = j.at("cursor").get<std::size_t>();
  s.rng = rng_from_state(j.at("rng").get<std::string>());
  return s;
}

json backbone_fields(const BackboneWeights& w) {
  return {{"query", matrix_to_json(w.query)},       {"key", matrix_to_json(w.key)},
          {"value", matrix_to_json(w.value)},       {"output", matrix_to_json(w.output)},
          {"ffn_in", matrix_to_json(w.ffn_in)},     {"ffn_out", matrix_to_json(w.ffn_out)},
          {"scale_attn", vector_to_json(w.scale_attn)}, {"scale_ffn", vector_to_json(w.scale_ffn)}};
}

BackboneWeights backbone_from_fields(const json& j) {
  BackboneWeights w;
  w.query = matrix_from_json(j.at("query"));
  w.key = matrix_from_json(j.at("key"));
  w.value = matrix_from_json(j.at("value"));
  w.output = matrix_from_json(j.at("output"));
  w.ffn_in = matrix_from_json(j.at("ffn_in"));
  w.ffn_out = matrix_from_json(j.at("ffn_out"));
  w.scale_attn = vector_from_json(j.at("scale_attn"));
  w.scale_ffn = vector_from_json(j.at("scale_ffn"));
  const Eigen::Index d = w.query.rows();
  const bool ok = w.query.cols() == d && w.key.rows() == d && w.key.cols() == d && w.value.rows() == d &&
                  w.value.cols() == d && w.output.rows() == d && w.output.cols() == d && w.ffn_in.rows() == d &&
                  w.ffn_out.cols() == d && w.ffn_in.cols() == w.ffn_out.rows() && w.scale_attn.size() == d &&
                  w.scale_ffn.size() == d;
  if (!ok) throw InputError("backbone weights: inconsistent shapes");
  return w;
}

std::string csv_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw InputError("matrix: data length does not match shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(data.size()));
  std::copy(data.begin(), data.end(), v.data());
  return v;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_state(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  in >> rng;
  if (in.fail()) throw InputError("invalid random engine state");
  return rng;
}

json weights_to_json(const BackboneWeights& weights, std::uint64_t seed) {
  json j = {{"format", "optima-weights"}, {"version", kFormatVersion}, {"seed", seed}, {"dim", weights.dim()}};
  j["weights"] = backbone_fields(weights);
  return j;
}

BackboneWeights weights_from_json(const json& j) {
  expect_format(j, "optima-weights");
  return backbone_from_fields(j.at("weights"));
}

json state_to_json(const TrainState& s) {
  json j = {{"prompt", matrix_to_json(s.prompt.rows)},
            {"backbone", backbone_fields(s.backbone)},
            {"prompt_opt", optimizer_to_json(s.prompt_opt)},
            {"backbone_opt", optimizer_to_json(s.backbone_opt)},
            {"step", s.step},
            {"source_sampler", sampler_to_json(s.source_sampler)},
            {"target_sampler", sampler_to_json(s.target_sampler)},
            {"delta_rng", rng_state(s.delta_rng)}};
  if (s.discriminator) {
    j["discriminator"] = {{"weight", matrix_to_json(s.discriminator->weight)},
                          {"bias", vector_to_json(s.discriminator->bias)}};
  } else {
    j["discriminator"] = nullptr;
  }
  return j;
}

TrainState state_from_json(const json& j) {
  TrainState s;
  s.prompt.rows = matrix_from_json(j.at("prompt"));
  s.backbone = backbone_from_fields(j.at("backbone"));
  s.prompt_opt = optimizer_from_json(j.at("prompt_opt"));
  s.backbone_opt = optimizer_from_json(j.at("backbone_opt"));
  s.step = j.at("step").get<long>();
  s.source_sampler = sampler_from_json(j.at("source_sampler"));
  s.target_sampler = sampler_from_json(j.at("target_sampler"));
  s.delta_rng = rng_from_state(j.at("delta_rng").get<std::string>());
  if (!j.at("discriminator").is_null()) {
    DiscriminatorParams d;
    d.weight = matrix_from_json(j.at("discriminator").at("weight"));
    d.bias = vector_from_json(j.at("discriminator").at("bias"));
    if (d.weight.cols() != 2 || d.bias.size() != 2) throw InputError("discriminator: wrong shape");
    s.discriminator = std::move(d);
  }
  return s;
}

json checkpoint_to_json(const Checkpoint& c) {
  return {{"format", "optima-checkpoint"},
          {"version", kFormatVersion},
          {"method", to_string(c.method)},
          {"seed", c.seed},
          {"best_step", c.best_step},
          {"best_metric", c.best_metric},
          {"aborted", c.aborted},
          {"abort_reason", c.abort_reason},
          {"backbone_digest", digest(c.state.backbone)},
          {"state", state_to_json(c.state)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  expect_format(j, "optima-checkpoint");
  try {
    Checkpoint c;
    c.method = parse_method(j.at("method").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.best_step = j.at("best_step").get<long>();
    c.best_metric = j.at("best_metric").get<double>();
    c.aborted = j.at("aborted").get<bool>();
    c.abort_reason = j.at("abort_reason").get<std::string>();
    c.state = state_from_json(j.at("state"));
    if (digest(c.state.backbone) != j.at("backbone_digest").get<std::string>()) {
      throw InputError("checkpoint: backbone digest mismatch");
    }
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

json report_to_json(const RunReport& r) {
  json per_class = json::array();
  for (const auto& s : r.per_class) {
    per_class.push_back({{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}});
  }
  return {{"format", "optima-report"},
          {"version", kFormatVersion},
          {"method", r.method},
          {"phase", r.phase},
          {"config_hash", r.config_hash},
          {"seed", r.seed},
          {"sample_index", r.sample_index ? json(*r.sample_index) : json(nullptr)},
          {"metrics", {{"accuracy", r.accuracy}, {"f1", r.f1}}},
          {"per_class", per_class},
          {"confusion", r.confusion},
          {"predictions", r.predictions_ref}};
}

RunReport report_from_json(const json& j) {
  expect_format(j, "optima-report");
  try {
    RunReport r;
    r.method = j.at("method").get<std::string>();
    r.phase = j.at("phase").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("sample_index").is_null()) r.sample_index = j.at("sample_index").get<int>();
    r.accuracy = j.at("metrics").at("accuracy").get<double>();
    r.f1 = j.at("metrics").at("f1").get<double>();
    for (const auto& s : j.at("per_class")) {
      r.per_class.push_back({s.at("precision").get<double>(), s.at("recall").get<double>(), s.at("f1").get<double>(),
                             s.at("support").get<long>()});
    }
    r.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    r.predictions_ref = j.at("predictions").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
}

json aggregate_to_json(const AggregateReport& a) {
  json methods = json::array();
  for (const auto& m : a.methods) {
    json entry = {{"method", m.method},
                  {"runs", m.runs},
                  {"units", m.units},
                  {"accuracy", {{"mean", m.accuracy.mean}, {"std", m.accuracy.std}}},
                  {"f1", {{"mean", m.f1.mean}, {"std", m.f1.std}}},
                  {"std_defined", m.std_defined},
                  {"complete", m.complete},
                  {"unit_accuracies", m.unit_accuracies}};
    if (m.vs_reference) {
      const double t = m.vs_reference->t;
      entry["vs_reference"] = {{"t", std::isfinite(t) ? json(t) : json(t > 0 ? "inf" : "-inf")},
                               {"p", m.vs_reference->p},
                               {"df", m.vs_reference->df},
                               {"significant", m.vs_reference->p < 0.05}};
    } else {
      entry["vs_reference"] = nullptr;
    }
    methods.push_back(entry);
  }
  return {{"format", "optima-aggregate"},
          {"version", kFormatVersion},
          {"phase", a.phase},
          {"reference", a.reference_method},
          {"test", a.test},
          {"expected_runs", a.expected_runs},
          {"complete", a.complete},
          {"methods", methods}};
}

std::string aggregate_to_csv(const AggregateReport& a) {
  std::ostringstream out;
  out << "method,runs,units,accuracy_mean,accuracy_std,f1_mean,f1_std,t,p,complete\n";
  for (const auto& m : a.methods) {
    out << m.method << ',' << m.runs << ',' << m.units << ',' << csv_number(m.accuracy.mean) << ','
        << csv_number(m.accuracy.std) << ',' << csv_number(m.f1.mean) << ',' << csv_number(m.f1.std) << ',';
    if (m.vs_reference) {
      out << csv_number(m.vs_reference->t) << ',' << csv_number(m.vs_reference->p);
    } else {
      out << ',';
    }
    out << ',' << (m.complete ? "true" : "false") << '\n';
  }
  return out.str();
}

json log_record_to_json(const LogRecord& r) {
  json j = {{"step", r.stats.step}, {"loss", r.stats.loss}, {"xent", r.stats.xent},
            {"kl", r.stats.kl},     {"adv", r.stats.adv},   {"disc", r.stats.disc},
            {"clamp_events", r.stats.clamp_events}};
  j["validation"] = r.validation ? json(*r.validation) : json(nullptr);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace optima
