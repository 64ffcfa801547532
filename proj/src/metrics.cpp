#include "optima/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace optima {

RunReport compute_metrics(std::span<const int> predictions, std::span<const int> gold, int classes) {
  if (predictions.size() != gold.size()) {
    throw InputError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(gold.size()) + " gold labels");
  }
  if (classes < 2) throw InputError("compute_metrics: need at least two classes");
  const auto c = static_cast<std::size_t>(classes);
  RunReport r;
  r.confusion.assign(c, std::vector<long>(c, 0));
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i];
    const int p = predictions[i];
    if (g < 0 || g >= classes || p < 0 || p >= classes) throw InputError("compute_metrics: label out of range");
    ++r.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    if (g == p) ++correct;
  }
  r.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());

  r.per_class.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    long tp = r.confusion[k][k];
    long predicted = 0;
    long support = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += r.confusion[j][k];
      support += r.confusion[k][j];
    }
    ClassStats& s = r.per_class[k];
    s.support = support;
    s.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = support > 0 ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  if (classes == 2) {
    r.f1 = r.per_class[1].f1;
  } else {
    double sum = 0.0;
    for (const auto& s : r.per_class) sum += s.f1;
    r.f1 = sum / static_cast<double>(classes);
  }
  return r;
}

TTestKind parse_ttest(const std::string& name) {
  if (name == "welch") return TTestKind::welch;
  if (name == "pooled") return TTestKind::pooled;
  if (name == "paired") return TTestKind::paired;
  throw ConfigError("unknown t-test '" + name + "' (valid: welch, pooled, paired)");
}

std::string to_string(TTestKind kind) {
  switch (kind) {
    case TTestKind::welch: return "welch";
    case TTestKind::pooled: return "pooled";
    case TTestKind::paired: return "paired";
  }
  return "welch";
}

namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_var(std::span<const double> x, double mean) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

TTestResult finish(double diff, double se, double df) {
  TTestResult r;
  r.df = df;
  if (se == 0.0) {
    if (diff == 0.0) return {0.0, 1.0, df};
    return {diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0, df};
  }
  r.t = diff / se;
  boost::math::students_t dist(df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.p = std::min(1.0, r.p);
  return r;
}

}  // namespace

TTestResult ttest(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) throw InputError("ttest: each sample needs at least two values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  if (kind == TTestKind::paired) {
    if (a.size() != b.size()) throw InputError("ttest: paired samples must have equal length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double md = mean_of(d);
    const double vd = sample_var(d, md);
    return finish(md, std::sqrt(vd / na), na - 1.0);
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_var(a, ma);
  const double vb = sample_var(b, mb);
  if (kind == TTestKind::pooled) {
    const double df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    return finish(ma - mb, std::sqrt(sp2 * (1.0 / na + 1.0 / nb)), df);
  }
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;
  const double df = se2 > 0.0 ? se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0)) : na + nb - 2.0;
  return finish(ma - mb, std::sqrt(se2), df);
}

Matrix tfidf_class_similarity(const ClassCorpus& corpus_a, const ClassCorpus& corpus_b) {
  std::vector<std::map<int, double>> docs;
  for (const auto* corpus : {&corpus_a, &corpus_b}) {
    for (std::size_t c = 0; c < corpus->size(); ++c) {
      std::map<int, double> tf;
      for (const auto& seq : (*corpus)[c]) {
        for (int tok : seq) tf[tok] += 1.0;
      }
      if (tf.empty()) throw InputError("tfidf_class_similarity: class " + std::to_string(c) + " has no tokens");
      docs.push_back(std::move(tf));
    }
  }
  std::map<int, int> df;
  for (const auto& doc : docs) {
    for (const auto& [tok, _] : doc) ++df[tok];
  }
  const double n_docs = static_cast<double>(docs.size());
  for (auto& doc : docs) {
    double norm = 0.0;
    for (auto& [tok, w] : doc) {
      w *= std::log((1.0 + n_docs) / (1.0 + df[tok])) + 1.0;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    for (auto& [tok, w] : doc) w /= norm;
  }
  const std::size_t ca = corpus_a.size();
  Matrix sim(static_cast<Eigen::Index>(ca), static_cast<Eigen::Index>(corpus_b.size()));
  for (std::size_t i = 0; i < ca; ++i) {
    for (std::size_t j = 0; j < corpus_b.size(); ++j) {
      const auto& x = docs[i];
      const auto& y = docs[ca + j];
      double dot = 0.0;
      for (const auto& [tok, w] : x) {
        const auto it = y.find(tok);
        if (it != y.end()) dot += w * it->second;
      }
      sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::clamp(dot, 0.0, 1.0);
    }
  }
  return sim;
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.mean = mean_of(values);
  s.std = std::sqrt(sample_var(values, s.mean));
  return s;
}

struct Unit {
  int key = 0;  // sample index (few-shot) or seed (zero-shot)
  double accuracy = 0.0;
  double f1 = 0.0;
};

}  // namespace

AggregateReport aggregate(std::span<const RunReport> reports, const AggregateOptions& options) {
  AggregateReport out;
  out.reference_method = options.reference_method;
  out.test = to_string(options.test);
  if (reports.empty()) return out;

  std::vector<const RunReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunReport* x, const RunReport* y) {
    return std::tie(x->method, x->phase, x->sample_index, x->seed) < std::tie(y->method, y->phase, y->sample_index, y->seed);
  });
  const bool fewshot = sorted.front()->phase == "fewshot";
  out.phase = fewshot ? "fewshot" : "zeroshot";
  out.expected_runs = fewshot ? options.expected_splits * options.expected_seeds : options.expected_seeds;

  std::map<std::string, std::vector<const RunReport*>> by_method;
  for (const auto* r : sorted) {
    if (r->phase != out.phase) throw InputError("aggregate: mixed zero-shot and few-shot reports");
    by_method[r->method].push_back(r);
  }

  std::map<std::string, std::vector<Unit>> units;
  out.complete = true;
  for (const auto& [method, rs] : by_method) {
    MethodAggregate agg;
    agg.method = method;
    agg.runs = static_cast<int>(rs.size());
    std::vector<Unit> us;
    if (fewshot) {
      std::map<int, std::vector<const RunReport*>> by_split;
      for (const auto* r : rs) {
        if (!r->sample_index) throw InputError("aggregate: few-shot report without sample index");
        by_split[*r->sample_index].push_back(r);
      }
      bool seeds_ok = true;
      for (const auto& [idx, group] : by_split) {
        Unit u{idx, 0.0, 0.0};
        std::set<std::uint64_t> seeds;
        for (const auto* r : group) {
          u.accuracy += r->accuracy / static_cast<double>(group.size());
          u.f1 += r->f1 / static_cast<double>(group.size());
          seeds.insert(r->seed);
        }
        if (static_cast<int>(seeds.size()) != options.expected_seeds || seeds.size() != group.size()) seeds_ok = false;
        us.push_back(u);
      }
      agg.complete = seeds_ok && static_cast<int>(by_split.size()) == options.expected_splits;
    } else {
      std::set<std::uint64_t> seeds;
      for (const auto* r : rs) {
        us.push_back({static_cast<int>(r->seed), r->accuracy, r->f1});
        seeds.insert(r->seed);
      }
      agg.complete = static_cast<int>(seeds.size()) == options.expected_seeds && seeds.size() == rs.size();
    }
    std::vector<double> acc, f1;
    for (const auto& u : us) {
      acc.push_back(u.accuracy);
      f1.push_back(u.f1);
    }
    agg.units = static_cast<int>(us.size());
    agg.accuracy = summarize(acc);
    agg.f1 = summarize(f1);
    agg.std_defined = us.size() >= 2;
    agg.unit_accuracies = acc;
    out.complete = out.complete && agg.complete;
    units[method] = us;
    out.methods.push_back(std::move(agg));
  }

  const auto ref = units.find(options.reference_method);
  if (ref != units.end()) {
    for (auto& agg : out.methods) {
      if (agg.method == options.reference_method) continue;
      const auto& mine = units[agg.method];
      std::vector<double> a, b;
      if (options.test == TTestKind::paired) {
        std::map<int, double> ref_by_key;
        for (const auto& u : ref->second) ref_by_key[u.key] = u.accuracy;
        for (const auto& u : mine) {
          const auto it = ref_by_key.find(u.key);
          if (it == ref_by_key.end()) continue;
          a.push_back(it->second);
          b.push_back(u.accuracy);
        }
      } else {
        for (const auto& u : ref->second) a.push_back(u.accuracy);
        for (const auto& u : mine) b.push_back(u.accuracy);
      }
      if (a.size() >= 2 && b.size() >= 2) agg.vs_reference = ttest(a, b, options.test);
    }
  }
  return out;
}

}  // namespace optima
