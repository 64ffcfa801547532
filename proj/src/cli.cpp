#include "optima/cli.hpp"

#include "optima/baselines.hpp"
#include "optima/config.hpp"
#include "optima/serialize.hpp"
#include "optima/svg.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace optima {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  ExperimentConfig config;
  std::string hash;
  fs::path dir;
  int workers = 1;
  Verbalizer verbalizer;
  std::ostream* out = nullptr;

  fs::path data() const { return dir / "data"; }
  fs::path checkpoints() const { return dir / "checkpoints"; }
  fs::path reports() const { return dir / "reports"; }
  fs::path plots() const { return dir / "plots"; }
  fs::path logs() const { return dir / "logs"; }
  int classes() const { return config.task.classes; }
};

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::string split_tag(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "split%02d", index);
  return buf;
}

fs::path checkpoint_path(const Context& ctx, const std::string& method, std::uint64_t seed) {
  return ctx.checkpoints() / (method + "_" + seed_tag(seed) + ".json");
}

/// Runs independent jobs on a fixed pool. Each job writes its own files, so
/// the artifacts do not depend on scheduling. The first failure in job order
/// is rethrown after all workers finish.
void run_jobs(const std::vector<std::function<void()>>& jobs, int workers) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&] {
    while (true) {
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json manifest(const Context& ctx) {
  const std::string eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
  const std::string nlohmann = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return {{"format", "optima-manifest"},
          {"version", kFormatVersion},
          {"tool_version", kToolVersion},
          {"config_hash", ctx.hash},
          {"seed", ctx.config.seed},
          {"libraries", {{"eigen", eigen}, {"boost", BOOST_LIB_VERSION}, {"nlohmann_json", nlohmann}, {"cli11", CLI11_VERSION}}},
          {"layout", {"manifest.json", "config.json", "data/", "checkpoints/", "reports/", "plots/", "logs/"}},
          {"config", to_json(ctx.config)}};
}

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir;
  int workers = 0;
};

Context make_context(const GlobalOptions& opts, std::ostream& out) {
  Context ctx;
  ctx.out = &out;
  const bool explicit_config = !opts.config_path.empty() || !opts.overrides.empty();
  if (!opts.run_dir.empty() && !explicit_config && fs::exists(fs::path(opts.run_dir) / "config.json")) {
    ctx.config = config_from_json(read_json(fs::path(opts.run_dir) / "config.json"));
  } else {
    const fs::path file(opts.config_path);
    ctx.config = resolve_config(opts.config_path.empty() ? nullptr : &file, opts.overrides);
  }
  ctx.hash = config_hash(ctx.config);
  ctx.dir = opts.run_dir.empty() ? fs::path("runs") / ctx.hash.substr(0, 12) : fs::path(opts.run_dir);
  const fs::path manifest_path = ctx.dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    const json existing = read_json(manifest_path);
    const std::string other = existing.value("config_hash", "");
    if (other != ctx.hash) {
      throw ConfigError("run directory '" + ctx.dir.string() + "' belongs to config " + other +
                        "; this invocation resolves to " + ctx.hash + " (use a fresh --run-dir)");
    }
  }
  ctx.workers = opts.workers > 0 ? opts.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ctx.verbalizer = default_verbalizer(ctx.config.task.classes);
  write_json(manifest_path, manifest(ctx));
  write_json(ctx.dir / "config.json", to_json(ctx.config));
  return ctx;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    const Method m = parse_method(n);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

Model make_model(const Context& ctx) {
  return build_model(ctx.config.model_spec(), ctx.config.task_spec(), ctx.verbalizer.labels);
}

// ---- data ------------------------------------------------------------------

void write_pair(const Context& ctx, const DomainPair& pair) {
  write_text(ctx.data() / "source.jsonl", to_jsonl(pair.source, ctx.verbalizer));
  write_text(ctx.data() / "target_unlabeled.jsonl", to_jsonl(pair.target.examples));
  write_json(ctx.data() / "target_hidden_labels.json",
             {{"format", "optima-hidden-labels"}, {"version", kFormatVersion}, {"labels", pair.target.hidden_labels}});
  write_text(ctx.data() / "target_eval.jsonl", to_jsonl(pair.target_eval, ctx.verbalizer));
}

DomainPair load_external(const Context& ctx) {
  const auto& d = ctx.config.data;
  if (d.source_jsonl.empty() || d.target_jsonl.empty() || d.eval_jsonl.empty()) {
    throw ConfigError("data.source_jsonl, data.target_jsonl and data.eval_jsonl must be set together");
  }
  DomainPair pair;
  pair.source = load_jsonl(d.source_jsonl, ctx.verbalizer).labeled();
  const JsonlDataset target = load_jsonl(d.target_jsonl, ctx.verbalizer);
  pair.target.examples = target.unlabeled();
  bool all_labeled = !target.labels.empty();
  for (const auto& l : target.labels) all_labeled = all_labeled && l.has_value();
  if (all_labeled) {
    for (const auto& l : target.labels) pair.target.hidden_labels.push_back(*l);
  }
  pair.target_eval = load_jsonl(d.eval_jsonl, ctx.verbalizer).labeled();
  for (auto& row : pair.source) row.input.domain = Domain::source;
  for (auto& ex : pair.target.examples) ex.domain = Domain::target;
  for (auto& row : pair.target_eval) row.input.domain = Domain::target;
  return pair;
}

DomainPair load_pair(const Context& ctx) {
  if (!fs::exists(ctx.data() / "source.jsonl")) {
    throw InputError("run directory '" + ctx.dir.string() + "' has no data; run generate-data first");
  }
  DomainPair pair;
  pair.source = load_jsonl(ctx.data() / "source.jsonl", ctx.verbalizer).labeled();
  pair.target.examples = load_jsonl(ctx.data() / "target_unlabeled.jsonl", ctx.verbalizer).unlabeled();
  pair.target.hidden_labels = read_json(ctx.data() / "target_hidden_labels.json").at("labels").get<std::vector<int>>();
  pair.target_eval = load_jsonl(ctx.data() / "target_eval.jsonl", ctx.verbalizer).labeled();
  for (auto& ex : pair.target.examples) ex.domain = Domain::target;
  for (auto& row : pair.target_eval) row.input.domain = Domain::target;
  return pair;
}

int cmd_generate(const Context& ctx) {
  const auto& d = ctx.config.data;
  const bool external = !d.source_jsonl.empty() || !d.target_jsonl.empty() || !d.eval_jsonl.empty();
  const DomainPair pair = external ? load_external(ctx) : generate_pair(ctx.config.task_spec());
  write_pair(ctx, pair);
  const Model model = make_model(ctx);
  const auto& layout = model.frontend.table.layout();
  write_json(ctx.data() / "embedding_table.json",
             {{"format", "optima-table"},
              {"version", kFormatVersion},
              {"seed", ctx.config.seed},
              {"layout", {{"data_vocab", layout.data_vocab}, {"hard_tokens", layout.hard_tokens}, {"classes", layout.classes}}},
              {"rows", matrix_to_json(model.frontend.table.rows())},
              {"lifting", model.frontend.lifting ? matrix_to_json(*model.frontend.lifting) : json(nullptr)}});
  write_json(ctx.checkpoints() / "backbone_weights.json", weights_to_json(model.backbone, ctx.config.seed));
  *ctx.out << "generated " << pair.source.size() << " source, " << pair.target.examples.size()
           << " unlabeled target, " << pair.target_eval.size() << " target eval examples in " << ctx.dir.string()
           << "\n";
  return kExitOk;
}

// ---- training and evaluation ------------------------------------------------

std::vector<int> gold_labels(const LabeledSet& data) {
  std::vector<int> gold;
  for (const auto& row : data) gold.push_back(row.label);
  return gold;
}

/// Writes the prediction dump and returns the report that points at it.
RunReport write_report(const Context& ctx, const std::string& method, const std::string& phase, std::uint64_t seed,
                       std::optional<int> sample_index, const Evaluation& ev, const LabeledSet& data,
                       const fs::path& report_rel, const fs::path& predictions_rel) {
  const std::vector<int> gold = gold_labels(data);
  RunReport r = compute_metrics(ev.predictions, gold, ctx.classes());
  r.method = method;
  r.phase = phase;
  r.config_hash = ctx.hash;
  r.seed = seed;
  r.sample_index = sample_index;
  r.predictions_ref = predictions_rel.generic_string();
  write_json(ctx.dir / predictions_rel,
             {{"format", "optima-predictions"}, {"version", kFormatVersion}, {"predictions", ev.predictions}, {"gold", gold}});
  write_json(ctx.dir / report_rel, report_to_json(r));
  return r;
}

std::string format_acc(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int cmd_pretrain(const Context& ctx, const std::vector<Method>& methods) {
  const DomainPair pair = load_pair(ctx);
  const Model model = make_model(ctx);
  const ValidationSplit split = split_validation(pair.source, ctx.config.pretrain.validation_fraction);
  const TrainingData data{split.train, split.validation, pair.target.examples};

  struct Outcome {
    std::string line;
  };
  std::vector<std::pair<Method, std::uint64_t>> runs;
  for (Method m : methods) {
    for (std::uint64_t s : ctx.config.pretrain.seeds) runs.emplace_back(m, s);
  }
  std::vector<Outcome> outcomes(runs.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    jobs.emplace_back([&, k] {
      const auto [method, seed] = runs[k];
      const std::string name = to_string(method);
      const std::string tag = name + "_" + seed_tag(seed);
      PerturbationMonitor monitor;
      std::string log;
      const LogSink sink = [&log](const LogRecord& r) { log += log_record_to_json(r).dump() + "\n"; };
      const std::string digest_before = digest(model.backbone);
      const Checkpoint ck = train_method(model, method, data, ctx.config.train_config(seed), sink, &monitor);
      write_text(ctx.logs() / "pretrain" / (tag + ".jsonl"), log);
      write_json(checkpoint_path(ctx, name, seed), checkpoint_to_json(ck));
      write_json(ctx.logs() / "pretrain" / (tag + "_summary.json"),
                 {{"method", name},
                  {"seed", seed},
                  {"best_step", ck.best_step},
                  {"best_metric", ck.best_metric},
                  {"aborted", ck.aborted},
                  {"abort_reason", ck.abort_reason},
                  {"backbone_digest_before", digest_before},
                  {"backbone_digest_after", digest(ck.state.backbone)},
                  {"perturbation",
                   {{"projections", monitor.projections.load()},
                    {"ascend_calls", monitor.ascend_calls.load()},
                    {"ascent_steps", monitor.ascent_steps.load()},
                    {"skipped_updates", monitor.skipped_updates.load()},
                    {"violations", monitor.violations.load()}}}});
      const Evaluation ev = evaluate(model, ck.state.prompt, ck.state.backbone, pair.target_eval);
      write_report(ctx, name, "zeroshot", seed, std::nullopt, ev, pair.target_eval,
                   fs::path("reports") / "zeroshot" / (tag + ".json"),
                   fs::path("reports") / "predictions" / ("zeroshot_" + tag + ".json"));
      outcomes[k].line = name + " " + seed_tag(seed) + ": best step " + std::to_string(ck.best_step) +
                         ", source validation " + format_acc(ck.best_metric) + ", target accuracy " +
                         format_acc(ev.accuracy) + (ck.aborted ? " (aborted: " + ck.abort_reason + ")" : "");
    });
  }
  run_jobs(jobs, ctx.workers);
  for (const auto& o : outcomes) *ctx.out << o.line << "\n";
  return kExitOk;
}

std::vector<Method> methods_with_checkpoints(const Context& ctx) {
  std::vector<Method> out;
  for (const auto& name : method_names()) {
    bool all = true;
    for (std::uint64_t s : ctx.config.pretrain.seeds) all = all && fs::exists(checkpoint_path(ctx, name, s));
    if (all) out.push_back(parse_method(name));
  }
  return out;
}

Checkpoint load_checkpoint(const Context& ctx, Method method, std::uint64_t seed) {
  const fs::path path = checkpoint_path(ctx, to_string(method), seed);
  if (!fs::exists(path)) {
    throw InputError("missing checkpoint '" + path.string() + "'; run pretrain --method " + to_string(method) + " first");
  }
  return checkpoint_from_json(read_json(path));
}

int cmd_fewshot(const Context& ctx, std::vector<Method> methods) {
  const DomainPair pair = load_pair(ctx);
  if (pair.target.hidden_labels.size() != pair.target.examples.size()) {
    throw InputError("few-shot sampling needs target labels; the target pool of this run has none");
  }
  if (methods.empty()) methods = methods_with_checkpoints(ctx);
  if (methods.empty()) throw InputError("no pretrained checkpoints found; run pretrain first");
  const Model model = make_model(ctx);
  const auto& fc = ctx.config.fewshot;

  std::vector<FewShotSplit> splits;
  for (int idx = 1; idx <= fc.splits; ++idx) {
    FewShotSplit s = sample_fewshot(pair.target, ctx.classes(), idx, ctx.config.seed, fc.per_class);
    write_text(ctx.data() / "fewshot" / (split_tag(idx) + "_train.jsonl"), to_jsonl(s.train, ctx.verbalizer));
    write_text(ctx.data() / "fewshot" / (split_tag(idx) + "_dev.jsonl"), to_jsonl(s.dev, ctx.verbalizer));
    splits.push_back(std::move(s));
  }

  std::map<std::pair<Method, std::uint64_t>, Checkpoint> starts;
  for (Method m : methods) {
    for (std::uint64_t s : ctx.config.pretrain.seeds) starts[{m, s}] = load_checkpoint(ctx, m, s);
  }

  std::vector<std::function<void()>> jobs;
  for (Method m : methods) {
    for (std::uint64_t seed : ctx.config.pretrain.seeds) {
      for (const auto& split : splits) {
        jobs.emplace_back([&, m, seed] {
          const std::string name = to_string(m);
          const std::string tag = split_tag(split.sample_index) + "_" + seed_tag(seed);
          std::string log;
          const LogSink sink = [&log](const LogRecord& r) { log += log_record_to_json(r).dump() + "\n"; };
          const Checkpoint ck =
              fewshot_finetune(model, starts.at({m, seed}), split, ctx.config.fewshot_config(seed), ctx.classes(), sink);
          write_text(ctx.logs() / "fewshot" / name / (tag + ".jsonl"), log);
          const Evaluation ev = evaluate(model, ck.state.prompt, ck.state.backbone, pair.target_eval);
          write_report(ctx, name, "fewshot", seed, split.sample_index, ev, pair.target_eval,
                       fs::path("reports") / "fewshot" / name / (tag + ".json"),
                       fs::path("reports") / "predictions" / ("fewshot_" + name + "_" + tag + ".json"));
        });
      }
    }
  }
  run_jobs(jobs, ctx.workers);
  for (Method m : methods) {
    *ctx.out << to_string(m) << ": " << splits.size() * ctx.config.pretrain.seeds.size() << " few-shot runs ("
             << splits.size() << " splits x " << ctx.config.pretrain.seeds.size() << " seeds)\n";
  }
  return kExitOk;
}

int cmd_evaluate(const Context& ctx, std::vector<Method> methods, const std::string& data_path) {
  const DomainPair pair = load_pair(ctx);
  if (methods.empty()) methods = methods_with_checkpoints(ctx);
  if (methods.empty()) throw InputError("no pretrained checkpoints found; run pretrain first");
  const Model model = make_model(ctx);
  LabeledSet data = pair.target_eval;
  std::string stem = "target_eval";
  if (!data_path.empty()) {
    data = load_jsonl(data_path, ctx.verbalizer).labeled();
    stem = fs::path(data_path).stem().string();
  }
  for (Method m : methods) {
    for (std::uint64_t seed : ctx.config.pretrain.seeds) {
      const Checkpoint ck = load_checkpoint(ctx, m, seed);
      const Evaluation ev = evaluate(model, ck.state.prompt, ck.state.backbone, data);
      const std::string tag = to_string(m) + "_" + seed_tag(seed);
      if (data_path.empty()) {
        write_report(ctx, to_string(m), "zeroshot", seed, std::nullopt, ev, data,
                     fs::path("reports") / "zeroshot" / (tag + ".json"),
                     fs::path("reports") / "predictions" / ("zeroshot_" + tag + ".json"));
      } else {
        write_report(ctx, to_string(m), "zeroshot", seed, std::nullopt, ev, data,
                     fs::path("reports") / "evaluate" / stem / (tag + ".json"),
                     fs::path("reports") / "predictions" / ("evaluate_" + stem + "_" + tag + ".json"));
      }
      *ctx.out << tag << " on " << stem << ": accuracy " << format_acc(ev.accuracy) << "\n";
    }
  }
  return kExitOk;
}

std::vector<fs::path> sorted_files(const fs::path& root, const std::string& extension) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RunReport> load_reports(const Context& ctx, const std::string& phase) {
  std::vector<RunReport> out;
  for (const auto& p : sorted_files(ctx.reports() / phase, ".json")) out.push_back(report_from_json(read_json(p)));
  return out;
}

int cmd_report(const Context& ctx) {
  bool any = false;
  for (const std::string phase : {"zeroshot", "fewshot"}) {
    const std::vector<RunReport> reports = load_reports(ctx, phase);
    if (reports.empty()) continue;
    any = true;
    AggregateOptions opts;
    opts.reference_method = ctx.config.report.reference;
    opts.test = ctx.config.report.test;
    opts.expected_splits = ctx.config.fewshot.splits;
    opts.expected_seeds = static_cast<int>(ctx.config.pretrain.seeds.size());
    const AggregateReport agg = aggregate(reports, opts);
    write_json(ctx.reports() / ("aggregate_" + phase + ".json"), aggregate_to_json(agg));
    write_text(ctx.reports() / ("aggregate_" + phase + ".csv"), aggregate_to_csv(agg));
    *ctx.out << phase << " (" << (agg.complete ? "complete" : "INCOMPLETE") << ", reference " << agg.reference_method
             << ", " << agg.test << " t-test)\n";
    for (const auto& m : agg.methods) {
      *ctx.out << "  " << m.method << ": accuracy " << format_acc(m.accuracy.mean) << " +- " << format_acc(m.accuracy.std)
               << ", F1 " << format_acc(m.f1.mean) << " +- " << format_acc(m.f1.std) << ", runs " << m.runs;
      if (m.vs_reference) *ctx.out << ", p " << m.vs_reference->p;
      *ctx.out << "\n";
    }
  }
  if (!any) throw InputError("no reports found in '" + ctx.reports().string() + "'; run pretrain or fewshot first");
  return kExitOk;
}

// ---- analysis and plots -------------------------------------------------------

struct Analysis {
  std::optional<Matrix> tfidf;
  std::vector<std::string> tfidf_rows;
  std::vector<std::string> tfidf_cols;
  struct Confusion {
    std::string method;
    std::string phase;
    int runs = 0;
    Matrix counts;
  };
  std::vector<Confusion> confusions;
};

Analysis analyze(const Context& ctx) {
  Analysis a;
  const DomainPair pair = load_pair(ctx);
  const int c = ctx.classes();
  if (ctx.config.task.task == TaskKind::token_stats) {
    ClassCorpus source(static_cast<std::size_t>(c)), target(static_cast<std::size_t>(c));
    for (const auto& row : pair.source) source[static_cast<std::size_t>(row.label)].push_back(row.input.tokens);
    for (const auto& row : pair.target_eval) target[static_cast<std::size_t>(row.label)].push_back(row.input.tokens);
    a.tfidf = tfidf_class_similarity(source, target);
    for (int k = 0; k < c; ++k) {
      a.tfidf_rows.push_back("source " + ctx.verbalizer.name(k));
      a.tfidf_cols.push_back("target " + ctx.verbalizer.name(k));
    }
    write_json(ctx.reports() / "analysis" / "tfidf_similarity.json",
               {{"format", "optima-tfidf"},
                {"version", kFormatVersion},
                {"rows", a.tfidf_rows},
                {"cols", a.tfidf_cols},
                {"matrix", matrix_to_json(*a.tfidf)}});
  }
  for (const std::string phase : {"zeroshot", "fewshot"}) {
    std::map<std::string, std::pair<int, Matrix>> sums;
    std::map<std::string, std::vector<double>> f1_sums;
    for (const auto& r : load_reports(ctx, phase)) {
      auto& [runs, m] = sums.try_emplace(r.method, 0, Matrix::Zero(c, c)).first->second;
      ++runs;
      for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) += static_cast<double>(r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      }
      auto& f1 = f1_sums.try_emplace(r.method, std::vector<double>(static_cast<std::size_t>(c), 0.0)).first->second;
      for (int k = 0; k < c; ++k) f1[static_cast<std::size_t>(k)] += r.per_class[static_cast<std::size_t>(k)].f1;
    }
    for (auto& [method, entry] : sums) {
      std::vector<double> f1 = f1_sums[method];
      for (double& v : f1) v /= entry.first;
      write_json(ctx.reports() / "analysis" / ("confusion_" + phase + "_" + method + ".json"),
                 {{"format", "optima-confusion"},
                  {"version", kFormatVersion},
                  {"method", method},
                  {"phase", phase},
                  {"runs", entry.first},
                  {"labels", ctx.verbalizer.labels},
                  {"confusion", matrix_to_json(entry.second)},
                  {"per_class_f1_mean", f1}});
      a.confusions.push_back({method, phase, entry.first, entry.second});
    }
  }
  return a;
}

int cmd_analyze(const Context& ctx) {
  const Analysis a = analyze(ctx);
  if (a.tfidf) {
    *ctx.out << "tf-idf class similarity (rows source, columns target):\n";
    for (Eigen::Index i = 0; i < a.tfidf->rows(); ++i) {
      *ctx.out << "  ";
      for (Eigen::Index j = 0; j < a.tfidf->cols(); ++j) *ctx.out << format_acc((*a.tfidf)(i, j)) << " ";
      *ctx.out << "\n";
    }
  } else {
    *ctx.out << "tf-idf similarity skipped (feature-mode task has no tokens)\n";
  }
  *ctx.out << a.confusions.size() << " confusion matrices written\n";
  return kExitOk;
}

int cmd_plot(const Context& ctx) {
  const Analysis a = analyze(ctx);
  std::vector<std::string> written;
  auto emit = [&](const fs::path& rel, const std::string& svg) {
    write_text(ctx.dir / rel, svg);
    written.push_back(rel.generic_string());
  };
  if (a.tfidf) {
    HeatmapSpec spec{"TF-IDF class similarity", a.tfidf_rows, a.tfidf_cols, "source class", "target class", 0.0, 1.0};
    emit(fs::path("plots") / "tfidf_similarity.svg", heatmap_svg(*a.tfidf, spec));
  }
  for (const auto& c : a.confusions) {
    HeatmapSpec spec{"Confusion " + c.method + " (" + c.phase + ", " + std::to_string(c.runs) + " runs)",
                     ctx.verbalizer.labels, ctx.verbalizer.labels, "gold", "predicted", 0.0, 0.0};
    emit(fs::path("plots") / ("confusion_" + c.phase + "_" + c.method + ".svg"), heatmap_svg(c.counts, spec));
  }

  for (const auto& name : method_names()) {
    std::vector<Series> val, loss;
    for (std::uint64_t seed : ctx.config.pretrain.seeds) {
      const fs::path log = ctx.logs() / "pretrain" / (name + "_" + seed_tag(seed) + ".jsonl");
      if (!fs::exists(log)) continue;
      Series v{seed_tag(seed), {}, {}};
      Series l{seed_tag(seed), {}, {}};
      std::istringstream in(read_text(log));
      std::string line;
      while (std::getline(in, line)) {
        const json r = json::parse(line);
        const double step = r.at("step").get<double>();
        if (!r.at("validation").is_null()) {
          v.x.push_back(step);
          v.y.push_back(r.at("validation").get<double>());
        }
        if (step > 0) {
          l.x.push_back(step);
          l.y.push_back(r.at("loss").get<double>());
        }
      }
      val.push_back(std::move(v));
      loss.push_back(std::move(l));
    }
    if (val.empty()) continue;
    emit(fs::path("plots") / ("learning_" + name + ".svg"),
         line_chart_svg(val, name + ": source validation", "step", "validation metric"));
    emit(fs::path("plots") / ("loss_" + name + ".svg"), line_chart_svg(loss, name + ": training loss", "step", "loss"));
  }

  if (ctx.config.task.task == TaskKind::toy2d) {
    const DomainPair pair = load_pair(ctx);
    const Model model = make_model(ctx);
    const int n = ctx.config.plot.grid;
    const double extent = ctx.config.plot.extent;
    std::vector<ScatterPoint> points;
    const auto limit = static_cast<std::size_t>(ctx.config.plot.points);
    for (std::size_t i = 0; i < pair.source.size() && i < limit; ++i) {
      const auto& p = *pair.source[i].input.point;
      points.push_back({p[0], p[1], pair.source[i].label, false});
    }
    for (std::size_t i = 0; i < pair.target_eval.size() && i < limit; ++i) {
      const auto& p = *pair.target_eval[i].input.point;
      points.push_back({p[0], p[1], pair.target_eval[i].label, true});
    }
    for (Method m : methods_with_checkpoints(ctx)) {
      const std::uint64_t seed = ctx.config.pretrain.seeds.front();
      const Checkpoint ck = load_checkpoint(ctx, m, seed);
      LabeledSet grid;
      grid.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
      const double cell = 2.0 * extent / n;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          LabeledExample e;
          e.input.point = Point2{-extent + (j + 0.5) * cell, extent - (i + 0.5) * cell};
          grid.push_back(std::move(e));
        }
      }
      const Evaluation ev = evaluate(model, ck.state.prompt, ck.state.backbone, grid);
      std::vector<std::vector<int>> regions(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          regions[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              ev.predictions[static_cast<std::size_t>(i * n + j)];
        }
      }
      const std::string name = to_string(m);
      emit(fs::path("plots") / ("boundary_" + name + "_" + seed_tag(seed) + ".svg"),
           decision_boundary_svg(regions, extent, points, ctx.classes(), name + " decision regions (" + seed_tag(seed) + ")"));
    }
  }
  for (const auto& w : written) *ctx.out << "wrote " << w << "\n";
  return kExitOk;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-adaptation lab for soft-prompt tuning with adversarial input perturbations", "optima"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1, 1);

  GlobalOptions opts;
  std::vector<std::string> method_args;
  std::string data_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    sub->add_option("--set", opts.overrides, "override a config value, e.g. --set train.epsilon=1.5 (repeatable)");
    sub->add_option("--run-dir", opts.run_dir, "run directory (default runs/<config hash prefix>)");
    sub->add_option("--workers", opts.workers, "parallel workers, 0 = all hardware threads")->check(CLI::NonNegativeNumber);
  };
  CLI::App* gen = app.add_subcommand("generate-data", "generate (or import) the source/target data of a run");
  CLI::App* pre = app.add_subcommand("pretrain", "train on labeled source (+ unlabeled target) data");
  CLI::App* few = app.add_subcommand("fewshot", "few-shot protocol: splits x pretrained seeds per method");
  CLI::App* eva = app.add_subcommand("evaluate", "evaluate pretrained checkpoints");
  CLI::App* ana = app.add_subcommand("analyze", "TF-IDF class similarity and confusion matrices");
  CLI::App* rep = app.add_subcommand("report", "aggregate run reports");
  CLI::App* plt = app.add_subcommand("plot", "SVG heatmaps, learning curves and decision regions");
  for (CLI::App* sub : {gen, pre, few, eva, ana, rep, plt}) add_common(sub);
  pre->add_option("--method", method_args, "method id(s)")->required()->delimiter(',');
  few->add_option("--method", method_args, "method id(s); default: every method with checkpoints")->delimiter(',');
  eva->add_option("--method", method_args, "method id(s); default: every method with checkpoints")->delimiter(',');
  eva->add_option("--data", data_path, "labeled JSONL file to evaluate on instead of the target eval set");

  std::vector<std::string> argv_storage{"optima"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        if (dynamic_cast<const CLI::CallForVersion*>(&e) != nullptr) {
          out << kToolVersion << "\n";
        } else {
          const CLI::App* target = &app;
          for (CLI::App* sub : app.get_subcommands()) target = sub;
          out << target->help();
        }
        return kExitOk;
      }
      emit_error(err, "usage", e.what(), kExitConfig);
      return kExitConfig;
    }
    const std::vector<Method> methods = parse_methods(method_args);
    const Context ctx = make_context(opts, out);
    if (gen->parsed()) return cmd_generate(ctx);
    if (pre->parsed()) return cmd_pretrain(ctx, methods);
    if (few->parsed()) return cmd_fewshot(ctx, methods);
    if (eva->parsed()) return cmd_evaluate(ctx, methods, data_path);
    if (ana->parsed()) return cmd_analyze(ctx);
    if (rep->parsed()) return cmd_report(ctx);
    if (plt->parsed()) return cmd_plot(ctx);
    return kExitConfig;
  } catch (const ConfigError& e) {
    emit_error(err, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const InputError& e) {
    emit_error(err, "input", e.what(), kExitRuntime);
    return kExitRuntime;
  } catch (const NumericalError& e) {
    emit_error(err, "numerical", e.what(), kExitRuntime);
    return kExitRuntime;
  } catch (const std::exception& e) {
    emit_error(err, "runtime", e.what(), kExitRuntime);
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace optima
