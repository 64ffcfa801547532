// Acceptance checks. Run without arguments for all criteria or with one id
// ("c1" .. "c10"). Prints one PASS/FAIL line per criterion.

#include "optima/baselines.hpp"
#include "optima/cli.hpp"
#include "optima/config.hpp"
#include "optima/objectives.hpp"
#include "optima/serialize.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace optima;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("optima-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  if (err_text != nullptr) *err_text = err.str();
  if (rc != 0) std::cerr << "cli " << args.front() << " failed: " << err.str();
  return rc;
}

// ---- C1 ---------------------------------------------------------------------

/// Nearest feasible point of a refining grid search. Cartesian grids resolve
/// interior optima, polar grids resolve optima on the circle; the closer of
/// the two candidates is returned.
std::array<double, 2> grid_nearest(double px, double py, double eps) {
  const int n = 40;
  auto dist = [&](double x, double y) { return (x - px) * (x - px) + (y - py) * (y - py); };

  double cx = 0.0, cy = 0.0, half = eps;
  std::array<double, 2> cart{0.0, 0.0};
  for (int level = 0; level < 16; ++level) {
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double x = cx - half + 2.0 * half * i / n;
        const double y = cy - half + 2.0 * half * j / n;
        if (x * x + y * y <= eps * eps && dist(x, y) < dist(cart[0], cart[1])) cart = {x, y};
      }
    }
    cx = cart[0];
    cy = cart[1];
    half *= 0.2;
  }

  double r_lo = 0.0, r_hi = eps, t_lo = -M_PI, t_hi = M_PI;
  double best_r = 0.0, best_t = 0.0;
  for (int level = 0; level < 16; ++level) {
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double r = r_lo + (r_hi - r_lo) * i / n;
        const double t = t_lo + (t_hi - t_lo) * j / n;
        if (dist(r * std::cos(t), r * std::sin(t)) < dist(best_r * std::cos(best_t), best_r * std::sin(best_t))) {
          best_r = r;
          best_t = t;
        }
      }
    }
    const double hr = (r_hi - r_lo) * 0.1;
    const double ht = (t_hi - t_lo) * 0.1;
    r_lo = std::max(0.0, best_r - hr);
    r_hi = std::min(eps, best_r + hr);
    t_lo = best_t - ht;
    t_hi = best_t + ht;
  }
  const std::array<double, 2> polar{best_r * std::cos(best_t), best_r * std::sin(best_t)};
  return dist(polar[0], polar[1]) < dist(cart[0], cart[1]) ? polar : cart;
}

Outcome c1() {
  Rng rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> rows_d(1, 6), cols_d(1, 8);
  double worst_closed = 0.0, worst_grid = 0.0, worst_idem = 0.0;
  int grid_cases = 0;
  bool inside = true;
  for (int k = 0; k < 1000; ++k) {
    const bool planar = k % 4 == 0;
    const Eigen::Index r = planar ? 1 : rows_d(rng);
    const Eigen::Index c = planar ? 2 : cols_d(rng);
    const double scale = std::pow(10.0, -3.0 + 4.0 * u(rng));
    const double eps = std::pow(10.0, -2.0 + 3.0 * u(rng));
    const Matrix phi = gaussian(r, c, rng, scale);
    const Matrix p = project(phi, eps);

    const double norm = std::sqrt(phi.array().square().sum());
    const Matrix closed = norm <= eps ? phi : Matrix(phi * (eps / norm));
    worst_closed = std::max(worst_closed, (p - closed).cwiseAbs().maxCoeff());
    worst_idem = std::max(worst_idem, (project(p, eps) - p).cwiseAbs().maxCoeff());
    inside = inside && p.norm() <= eps + 1e-9;
    if (planar) {
      const auto g = grid_nearest(phi(0, 0), phi(0, 1), eps);
      worst_grid = std::max({worst_grid, std::abs(g[0] - p(0, 0)), std::abs(g[1] - p(0, 1))});
      ++grid_cases;
    }
  }
  const bool pass = worst_closed <= 1e-6 && worst_grid <= 1e-6 && worst_idem <= 1e-12 && inside;
  return {pass, "1000 cases, max |closed form diff| " + fmt(worst_closed) + ", max |grid oracle diff| " +
                    fmt(worst_grid) + " (" + std::to_string(grid_cases) + " planar), max idempotence diff " +
                    fmt(worst_idem)};
}

// ---- C2 ---------------------------------------------------------------------

struct Instance {
  DomainPairSpec task;
  Model model;
  DomainPair pair;
  PromptParameters prompt;
  DiscriminatorParams disc;
  PerturbationBatch delta;
  std::size_t batch = 1;
};

Instance make_instance(std::uint64_t seed, Rng& rng) {
  Instance in;
  std::uniform_int_distribution<int> len_d(2, 4), cls_d(2, 3), batch_d(1, 4), prompt_d(1, 3);
  in.task.vocab = 16;
  in.task.length = len_d(rng);
  in.task.classes = cls_d(rng);
  in.task.source_size = 8;
  in.task.target_size = 8;
  in.task.eval_size = 4;
  in.task.seed = seed;
  ModelSpec ms;
  ms.dim = 8;
  ms.prompt_len = prompt_d(rng);
  ms.seed = seed + 1000;
  const Verbalizer verbalizer = default_verbalizer(in.task.classes);
  in.model = build_model(ms, in.task, verbalizer.labels);
  in.pair = generate_pair(in.task);
  in.batch = static_cast<std::size_t>(batch_d(rng));
  in.prompt.rows = gaussian(ms.prompt_len, ms.dim, rng);
  in.disc.weight = gaussian(ms.dim, 2, rng);
  in.disc.bias = gaussian(2, 1, rng).col(0);
  in.delta.epsilon = 1.0;
  for (std::size_t i = 0; i < in.batch; ++i) {
    const int n = static_cast<int>(in.pair.source[i].input.tokens.size());
    Matrix dl = Matrix::Zero(in.model.max_input_len(), ms.dim);
    dl.topRows(n) = gaussian(n, ms.dim, rng, 0.3);
    in.delta.deltas.push_back(project(dl, in.delta.epsilon));
    in.delta.input_lengths.push_back(n);
  }
  return in;
}

/// Entrywise relative error with a 1e-6 floor on the magnitude.
double rel_error(const Matrix& analytic, const Matrix& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}));
  }
  return worst;
}

Matrix central_difference(Matrix& x, const std::function<double()>& f) {
  const double h = 1e-5;
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f();
    x.data()[i] = keep - h;
    const double down = f();
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Oracles for the loss values, written out from their definitions.
double oracle_xent(const Vector& probs, int y) { return -std::log(probs[y]); }
double oracle_kl(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) s += p[k] * (std::log(p[k]) - std::log(q[k]));
  return s;
}
double oracle_z(const DiscriminatorParams& d, const Vector& pooled) {
  const double a = d.weight.col(0).dot(pooled) + d.bias[0];
  const double b = d.weight.col(1).dot(pooled) + d.bias[1];
  return 1.0 / (1.0 + std::exp(b - a));
}

const ForwardOptions kPredict{true, false};
const ForwardOptions kPromptFreeView{false, true};
const ForwardOptions kFullView{true, true};

Outcome c2() {
  Rng rng(202);
  std::map<std::string, double> worst;
  auto record = [&](const std::string& name, double err) { worst[name] = std::max(worst[name], err); };

  for (int inst = 0; inst < 50; ++inst) {
    Instance in = make_instance(static_cast<std::uint64_t>(inst + 1), rng);
    const Model& model = in.model;
    const auto& bw = model.backbone;
    const std::size_t b = in.batch;
    const std::span<const LabeledExample> src(in.pair.source.data(), b);
    const std::span<const Example> tgt(in.pair.target.examples.data(), b);
    TrainConfig config;
    config.adv_weight = 0.5 + rng() % 1000 / 1000.0;

    auto state_for = [&](Method m) {
      TrainState s = initial_state(model, method_spec(m), config, in.pair.source.size(), in.pair.target.examples.size());
      s.prompt = in.prompt;
      if (s.discriminator) s.discriminator = in.disc;
      return s;
    };

    // xent w.r.t. the prompt (prompt tuning objective)
    {
      TrainState s = state_for(Method::pt);
      Rng r(1);
      const StepGradients g = compute_gradients(model, method_spec(Method::pt), config, src, tgt, s, r);
      const Matrix num = central_difference(s.prompt.rows, [&] {
        double v = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          v += oracle_xent(forward(model.frontend.build(s.prompt, src[i].input), bw, model.head, kPredict).probs, src[i].label);
        }
        return v / static_cast<double>(b);
      });
      record("xent/prompt", rel_error(g.prompt, num));
    }

    // L_R = mean(xent + KL) w.r.t. the prompt; clean distribution held fixed
    {
      TrainState s = state_for(Method::vat);
      Rng r(1);
      const StepGradients g = compute_gradients(model, method_spec(Method::vat), config, src, tgt, s, r, nullptr, &in.delta);
      std::vector<Vector> clean0;
      for (std::size_t i = 0; i < b; ++i) {
        clean0.push_back(forward(model.frontend.build(s.prompt, src[i].input), bw, model.head, kPredict).probs);
      }
      const Matrix num = central_difference(s.prompt.rows, [&] {
        double v = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          const EmbeddedSequence seq = model.frontend.build(s.prompt, src[i].input);
          const Vector pc = forward(seq, bw, model.head, kPredict).probs;
          const Vector pp = forward(apply_perturbation(seq, in.delta.deltas[i]), bw, model.head, kPredict).probs;
          v += oracle_xent(pc, src[i].label) + oracle_kl(clean0[i], pp);
        }
        return v / static_cast<double>(b);
      });
      record("L_R/prompt", rel_error(g.prompt, num));
    }

    // L_disc w.r.t. the discriminator parameters
    {
      TrainState s = state_for(Method::optima);
      Rng r(1);
      const StepGradients g =
          compute_gradients(model, method_spec(Method::optima), config, src, tgt, s, r, nullptr, &in.delta);
      std::vector<Vector> pool_sc, pool_sp, pool_t;
      for (std::size_t i = 0; i < b; ++i) {
        const EmbeddedSequence seq = model.frontend.build(s.prompt, src[i].input);
        pool_sc.push_back(forward(seq, bw, model.head, kPromptFreeView).pooled);
        pool_sp.push_back(forward(apply_perturbation(seq, in.delta.deltas[i]), bw, model.head, kPromptFreeView).pooled);
        pool_t.push_back(forward(model.frontend.build(s.prompt, tgt[i]), bw, model.head, kPromptFreeView).pooled);
      }
      DiscriminatorParams d = in.disc;
      auto l_disc = [&] {
        double v = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          v += -std::log(oracle_z(d, pool_sp[i])) - std::log(oracle_z(d, pool_sc[i])) - std::log(1.0 - oracle_z(d, pool_t[i]));
        }
        return v / static_cast<double>(b);
      };
      const Matrix num_w = central_difference(d.weight, l_disc);
      Matrix bias(2, 1);
      bias.col(0) = d.bias;
      const Matrix num_b = central_difference(bias, [&] {
        d.bias = bias.col(0);
        return l_disc();
      });
      Matrix ab(2, 1);
      ab.col(0) = g.discriminator->bias;
      record("L_disc/theta_d", std::max(rel_error(g.discriminator->weight, num_w), rel_error(ab, num_b)));
    }

    // Per-example losses w.r.t. input embeddings and delta
    for (std::size_t i = 0; i < b; ++i) {
      const int y = src[i].label;
      EmbeddedSequence seq = model.frontend.build(in.prompt, src[i].input);
      const int begin = seq.input_begin();
      const int n = seq.input_len;
      const Vector clean_probs = forward(seq, bw, model.head, kPredict).probs;

      auto input_block = [&](const Matrix& full) { return Matrix(full.middleRows(begin, n)); };
      Matrix x = input_block(seq.embeddings);
      auto with_x = [&] {
        EmbeddedSequence s2 = seq;
        s2.embeddings.middleRows(begin, n) = x;
        return s2;
      };

      {
        const ForwardPass fp = forward(seq, bw, model.head, kPredict);
        const Matrix a = input_block(backward(fp, bw, model.head, xent(fp.probs, y).grad, Vector()).d_embeddings);
        record("xent/input", rel_error(a, central_difference(x, [&] {
                 return oracle_xent(forward(with_x(), bw, model.head, kPredict).probs, y);
               })));
      }
      {
        // KL against a fixed reference distribution, evaluated off the clean point
        EmbeddedSequence moved = apply_perturbation(seq, in.delta.deltas[i]);
        const ForwardPass fp = forward(moved, bw, model.head, kPredict);
        const Matrix a =
            input_block(backward(fp, bw, model.head, kl_consistency(clean_probs, fp.probs).grad, Vector()).d_embeddings);
        Matrix xm = input_block(moved.embeddings);
        record("KL/input", rel_error(a, central_difference(xm, [&] {
                 EmbeddedSequence s2 = moved;
                 s2.embeddings.middleRows(begin, n) = xm;
                 return oracle_kl(clean_probs, forward(s2, bw, model.head, kPredict).probs);
               })));
      }
      {
        const ForwardPass dv = forward(seq, bw, model.head, kPromptFreeView);
        const double z = discriminate(in.disc, dv.pooled);
        const Vector dp = discriminator_backward(in.disc, dv.pooled, adv_loss(z).grad[0], nullptr);
        const Matrix a = input_block(backward(dv, bw, model.head, Vector(), dp).d_embeddings);
        record("adv/input", rel_error(a, central_difference(x, [&] {
                 return -std::log(oracle_z(in.disc, forward(with_x(), bw, model.head, kPromptFreeView).pooled));
               })));
      }

      Matrix delta = in.delta.deltas[i];
      Matrix dn = delta.topRows(n);
      auto at_delta = [&] {
        Matrix full = Matrix::Zero(delta.rows(), delta.cols());
        full.topRows(n) = dn;
        return apply_perturbation(seq, full);
      };
      {
        const Matrix a = ascent_gradient(model, Method::freelb, config, bw, nullptr, seq, clean_probs, y, delta);
        record("xent/delta", rel_error(a.topRows(n), central_difference(dn, [&] {
                 return oracle_xent(forward(at_delta(), bw, model.head, kPredict).probs, y);
               })));
      }
      {
        const Matrix a = ascent_gradient(model, Method::vat, config, bw, nullptr, seq, clean_probs, y, delta);
        record("KL/delta", rel_error(a.topRows(n), central_difference(dn, [&] {
                 return oracle_kl(clean_probs, forward(at_delta(), bw, model.head, kPredict).probs);
               })));
      }
      {
        const Matrix a = ascent_gradient(model, Method::optima, config, bw, &in.disc, seq, clean_probs, y, delta);
        record("KL+adv/delta", rel_error(a.topRows(n), central_difference(dn, [&] {
                 const EmbeddedSequence s2 = at_delta();
                 return oracle_kl(clean_probs, forward(s2, bw, model.head, kPredict).probs) -
                        config.adv_weight * std::log(oracle_z(in.disc, forward(s2, bw, model.head, kPromptFreeView).pooled));
               })));
      }
    }

    // Domain-classification loss w.r.t. the prompt in DANN routing
    {
      PromptParameters p = in.prompt;
      std::vector<Example> s_in;
      for (const auto& row : src) s_in.push_back(row.input);
      const Matrix a = domain_prompt_gradient(model, Method::dann, p, in.disc, s_in, tgt);
      record("L_DD/prompt (dann)", rel_error(a, central_difference(p.rows, [&] {
               double v = 0.0;
               for (std::size_t i = 0; i < b; ++i) {
                 v -= std::log(oracle_z(in.disc, forward(model.frontend.build(p, s_in[i]), bw, model.head, kFullView).pooled));
                 v -= std::log(1.0 - oracle_z(in.disc, forward(model.frontend.build(p, tgt[i]), bw, model.head, kFullView).pooled));
               }
               return v / static_cast<double>(b);
             })));
    }
  }

  double overall = 0.0;
  std::string detail = "50 instances;";
  for (const auto& [name, err] : worst) {
    overall = std::max(overall, err);
    detail += " " + name + " " + fmt(err, 2);
  }
  return {overall < 1e-4, detail};
}

// ---- shared default setup -------------------------------------------------------

struct DefaultRun {
  ExperimentConfig cfg;
  DomainPair pair;
  Model model;
  ValidationSplit split;
};

DefaultRun default_run(std::uint64_t seed) {
  DefaultRun r;
  r.cfg.seed = seed;
  r.pair = generate_pair(r.cfg.task_spec());
  r.model = build_model(r.cfg.model_spec(), r.cfg.task_spec(), default_verbalizer(r.cfg.task.classes).labels);
  r.split = split_validation(r.pair.source, r.cfg.pretrain.validation_fraction);
  return r;
}

// ---- C3 ---------------------------------------------------------------------

Outcome c3() {
  const DefaultRun run = default_run(1);
  const TrainConfig config = run.cfg.train_config(1);
  const TrainingData data{run.split.train, run.split.validation, run.pair.target.examples};

  PerturbationMonitor monitor;
  const Checkpoint ck = optima_train(run.model, data, config, {}, &monitor);

  // Replay of the same run, checking every final delta outside the library.
  const MethodSpec spec = method_spec(Method::optima);
  TrainState state = initial_state(run.model, spec, config, data.train.size(), data.target.size());
  long checked = 0;
  double max_norm = 0.0;
  for (long step = 0; step < config.max_steps; ++step) {
    LabeledSet src;
    for (std::size_t i : state.source_sampler.next(static_cast<std::size_t>(config.batch_size))) src.push_back(data.train[i]);
    UnlabeledSet tgt;
    for (std::size_t i : state.target_sampler.next(static_cast<std::size_t>(config.batch_size))) tgt.push_back(data.target[i]);
    Rng delta_rng = state.delta_rng;
    const StepGradients g = compute_gradients(run.model, spec, config, src, tgt, state, delta_rng);
    for (const Matrix& d : g.delta->deltas) {
      max_norm = std::max(max_norm, std::sqrt(d.array().square().sum()));
      ++checked;
    }
    apply_gradients(spec, config, g, state);
    state.delta_rng = delta_rng;
  }
  const bool pass = !ck.aborted && monitor.violations.load() == 0 && monitor.projections.load() > 0 &&
                    max_norm <= config.epsilon + kBallTolerance;
  return {pass, "violations " + std::to_string(monitor.violations.load()) + " over " +
                    std::to_string(monitor.projections.load()) + " projections; replay checked " +
                    std::to_string(checked) + " deltas, max norm " + fmt(max_norm, 12) + " (epsilon " +
                    fmt(config.epsilon) + ")"};
}

// ---- C4 ---------------------------------------------------------------------

/// Number of leading steps on which the two prompt trajectories agree bit for bit.
long identical_steps(const Model& model, const TrainingData& data, Method ma, const TrainConfig& ca, Method mb,
                     const TrainConfig& cb, long steps) {
  const MethodSpec sa = method_spec(ma);
  const MethodSpec sb = method_spec(mb);
  TrainState a = initial_state(model, sa, ca, data.train.size(), data.target.size());
  TrainState b = initial_state(model, sb, cb, data.train.size(), data.target.size());
  if (!same_bits(a.prompt.rows, b.prompt.rows)) return -1;
  for (long s = 0; s < steps; ++s) {
    train_step(model, sa, ca, data.train, data.target, a);
    train_step(model, sb, cb, data.train, data.target, b);
    if (!same_bits(a.prompt.rows, b.prompt.rows)) return s;
  }
  return steps;
}

Outcome c4() {
  const DefaultRun run = default_run(1);
  const TrainingData data{run.split.train, run.split.validation, run.pair.target.examples};
  TrainConfig base = run.cfg.train_config(1);
  base.max_steps = 200;

  TrainConfig no_adv = base;
  no_adv.adv_weight = 0.0;
  const long a = identical_steps(run.model, data, Method::optima, no_adv, Method::vat, base, 200);

  TrainConfig no_ball = base;
  no_ball.ascent_steps = 0;
  no_ball.epsilon = 0.0;
  const long b = identical_steps(run.model, data, Method::optima, no_ball, Method::pt, base, 200);

  // Control: with the adversarial term on, the trajectories must differ.
  const long control = identical_steps(run.model, data, Method::optima, base, Method::vat, base, 5);
  const bool pass = a == 200 && b == 200 && control < 5;
  return {pass, "optima(adv 0) vs vat identical for " + std::to_string(a) + "/200 steps; optima(K 0, eps 0) vs pt " +
                    std::to_string(b) + "/200; control optima vs vat diverges at step " + std::to_string(control)};
}

// ---- C5 ---------------------------------------------------------------------

Outcome c5() {
  Rng rng(505);
  int optima_zero = 0, optima_invariant = 0, dann_nonzero = 0;
  for (int inst = 0; inst < 100; ++inst) {
    Instance in = make_instance(static_cast<std::uint64_t>(inst + 1), rng);
    std::vector<Example> s_in, t_in;
    for (std::size_t i = 0; i < in.batch; ++i) {
      s_in.push_back(in.pair.source[i].input);
      t_in.push_back(in.pair.target.examples[i]);
    }
    const Matrix go = domain_prompt_gradient(in.model, Method::optima, in.prompt, in.disc, s_in, t_in, &in.delta);
    if (go.isZero(0.0)) ++optima_zero;
    const Matrix gd = domain_prompt_gradient(in.model, Method::dann, in.prompt, in.disc, s_in, t_in);
    if (!gd.isZero(0.0)) ++dann_nonzero;

    // Independent view of the same claim: the discriminator outputs that feed
    // the domain losses do not move when the prompt is replaced.
    PromptParameters other{gaussian(in.prompt.rows.rows(), in.prompt.rows.cols(), rng, 3.0)};
    bool invariant = true;
    for (std::size_t i = 0; i < in.batch; ++i) {
      for (const Example* ex : {&s_in[i], &t_in[i]}) {
        const double z1 = discriminate(in.disc, forward(in.model.frontend.build(in.prompt, *ex), in.model.backbone,
                                                         in.model.head, kPromptFreeView).pooled);
        const double z2 = discriminate(in.disc, forward(in.model.frontend.build(other, *ex), in.model.backbone,
                                                         in.model.head, kPromptFreeView).pooled);
        invariant = invariant && z1 == z2;
      }
    }
    if (invariant) ++optima_invariant;
  }
  const bool pass = optima_zero == 100 && optima_invariant == 100 && dann_nonzero >= 95;
  return {pass, "optima prompt gradient exactly zero on " + std::to_string(optima_zero) +
                    "/100 (prompt-invariant domain outputs on " + std::to_string(optima_invariant) +
                    "/100); dann nonzero on " + std::to_string(dann_nonzero) + "/100"};
}

// ---- C6 ---------------------------------------------------------------------

Outcome c6() {
  double sum_pt = 0.0, sum_vat = 0.0, sum_opt = 0.0;
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const DefaultRun run = default_run(s);
    const TrainConfig config = run.cfg.train_config(s);
    const TrainingData data{run.split.train, run.split.validation, run.pair.target.examples};
    auto target_acc = [&](Method m) {
      const Checkpoint ck = train_method(run.model, m, data, config);
      return evaluate(run.model, ck.state.prompt, ck.state.backbone, run.pair.target_eval).accuracy;
    };
    const double pt = target_acc(Method::pt);
    const double vat = target_acc(Method::vat);
    const double opt = target_acc(Method::optima);
    sum_pt += pt;
    sum_vat += vat;
    sum_opt += opt;
    if (opt > pt) ++wins;
    per_seed += " s" + std::to_string(s) + "(pt " + fmt(pt, 3) + ", vat " + fmt(vat, 3) + ", optima " + fmt(opt, 3) + ")";
  }
  const double margin = (sum_opt - sum_pt) / 5.0 * 100.0;
  const bool pass = wins >= 4 && margin >= 3.0 && sum_opt >= sum_vat;
  return {pass, "optima > pt on " + std::to_string(wins) + "/5 seeds, mean margin " + fmt(margin, 3) +
                    " points, mean pt " + fmt(sum_pt / 5, 4) + " vat " + fmt(sum_vat / 5, 4) + " optima " +
                    fmt(sum_opt / 5, 4) + ";" + per_seed};
}

// ---- C7 ---------------------------------------------------------------------

std::map<int, int> class_counts(const fs::path& jsonl, const Verbalizer& v) {
  std::map<int, int> counts;
  for (const auto& row : load_jsonl(jsonl, v).labeled()) ++counts[row.label];
  return counts;
}

Outcome c7() {
  const fs::path dir = scratch_dir("c7");
  const std::string rd = (dir / "run").string();
  for (const auto& args : std::vector<std::vector<std::string>>{{"generate-data", "--run-dir", rd},
                                                                {"pretrain", "--run-dir", rd, "--method", "pt"},
                                                                {"fewshot", "--run-dir", rd, "--method", "pt"},
                                                                {"report", "--run-dir", rd}}) {
    if (cli(args) != 0) return {false, "cli " + args.front() + " failed"};
  }
  const fs::path run(rd);
  const ExperimentConfig cfg = config_from_json(read_json(run / "config.json"));
  const Verbalizer v = default_verbalizer(cfg.task.classes);

  // Reports: exactly one per (split, seed).
  std::set<std::pair<int, std::uint64_t>> keys;
  std::map<int, std::vector<double>> by_split;
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(run / "reports" / "fewshot")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const json j = read_json(e.path());
    const int split = j.at("sample_index").get<int>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    keys.insert({split, seed});
    by_split[split].push_back(j.at("metrics").at("accuracy").get<double>());
  }
  bool keys_ok = files == 48 && keys.size() == 48;
  for (int s = 1; s <= 16; ++s) {
    for (std::uint64_t seed : {1, 2, 3}) keys_ok = keys_ok && keys.count({s, seed}) == 1;
  }

  // Splits: 8 train and 8 dev per class, no example shared between them.
  bool splits_ok = true;
  int split_files = 0;
  for (int s = 1; s <= 16; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "split%02d", s);
    const fs::path tr = run / "data" / "fewshot" / (std::string(name) + "_train.jsonl");
    const fs::path dv = run / "data" / "fewshot" / (std::string(name) + "_dev.jsonl");
    if (!fs::exists(tr) || !fs::exists(dv)) {
      splits_ok = false;
      continue;
    }
    split_files += 2;
    for (const auto& f : {tr, dv}) {
      const auto counts = class_counts(f, v);
      splits_ok = splits_ok && static_cast<int>(counts.size()) == cfg.task.classes;
      for (const auto& [c, k] : counts) splits_ok = splits_ok && k == 8;
    }
    std::set<std::vector<int>> train_rows;
    for (const auto& row : load_jsonl(tr, v).labeled()) train_rows.insert(row.input.tokens);
    for (const auto& row : load_jsonl(dv, v).labeled()) splits_ok = splits_ok && train_rows.count(row.input.tokens) == 0;
  }

  // Seed-first aggregation recomputed from the report files.
  std::vector<double> split_means;
  for (const auto& [s, accs] : by_split) {
    double m = 0.0;
    for (double a : accs) m += a;
    split_means.push_back(m / static_cast<double>(accs.size()));
  }
  double mean = 0.0;
  for (double m : split_means) mean += m;
  mean /= static_cast<double>(split_means.size());
  double var = 0.0;
  for (double m : split_means) var += (m - mean) * (m - mean);
  const double sd = std::sqrt(var / static_cast<double>(split_means.size() - 1));

  const json agg = read_json(run / "reports" / "aggregate_fewshot.json");
  json entry;
  for (const auto& m : agg.at("methods")) {
    if (m.at("method") == "pt") entry = m;
  }
  const bool agg_ok = !entry.is_null() && entry.at("runs") == 48 && entry.at("units") == 16 &&
                      std::abs(entry.at("accuracy").at("mean").get<double>() - mean) <= 1e-12 &&
                      std::abs(entry.at("accuracy").at("std").get<double>() - sd) <= 1e-12 && agg.at("complete") == true;
  fs::remove_all(dir);
  return {keys_ok && splits_ok && agg_ok,
          std::to_string(files) + " reports over " + std::to_string(keys.size()) + " (split, seed) keys; " +
              std::to_string(split_files) + " split files with 8 per class: " + (splits_ok ? "yes" : "no") +
              "; seed-first mean " + fmt(mean, 6) + " sd " + fmt(sd, 6) + " matches aggregate: " + (agg_ok ? "yes" : "no")};
}

// ---- C8 ---------------------------------------------------------------------

double student_pdf(double x, double df) {
  return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI) -
                  (df + 1) / 2 * std::log1p(x * x / df));
}

/// Two-sided tail mass by composite Simpson on x = t + u / (1 - u).
double two_sided_p(double t, double df) {
  const double a = std::abs(t);
  const int n = 200000;
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double w = 1.0 - u;
    return student_pdf(a + u / w, df) / (w * w);
  };
  double s = g(0.0) + g(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * g(static_cast<double>(i) / n);
  return std::min(1.0, 2.0 * s / (3.0 * n));
}

Outcome c8() {
  Rng rng(808);
  std::uniform_int_distribution<int> n_d(3, 12);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_t = 0.0, worst_p = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int na = n_d(rng), nb = n_d(rng);
    const double shift = 2.0 * u(rng) - 1.0;
    std::vector<double> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
    for (double& x : a) x = 0.7 + 0.05 * nd(rng) * (1.0 + u(rng));
    for (double& x : b) x = 0.7 + 0.05 * shift + 0.05 * nd(rng);
    double ma = 0, mb = 0;
    for (double x : a) ma += x;
    for (double x : b) mb += x;
    ma /= na;
    mb /= nb;
    double va = 0, vb = 0;
    for (double x : a) va += (x - ma) * (x - ma);
    for (double x : b) vb += (x - mb) * (x - mb);
    va /= (na - 1);
    vb /= (nb - 1);
    const double se = std::sqrt(va / na + vb / nb);
    const double t = (ma - mb) / se;
    const double df = std::pow(va / na + vb / nb, 2) /
                      (std::pow(va / na, 2) / (na - 1) + std::pow(vb / nb, 2) / (nb - 1));
    const TTestResult r = ttest(a, b, TTestKind::welch);
    worst_t = std::max(worst_t, std::abs(r.t - t));
    worst_p = std::max(worst_p, std::abs(r.p - two_sided_p(t, df)));
  }

  int exact = 0;
  for (int k = 0; k < 20; ++k) {
    const int classes = 2 + k % 3;
    const int n = 20 + static_cast<int>(rng() % 200);
    std::vector<int> pred(static_cast<std::size_t>(n)), gold(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      gold[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(classes));
      pred[static_cast<std::size_t>(i)] = u(rng) < 0.6 ? gold[static_cast<std::size_t>(i)]
                                                       : static_cast<int>(rng() % static_cast<unsigned>(classes));
    }
    const RunReport r = compute_metrics(pred, gold, classes);
    bool ok = true;
    long correct = 0;
    for (int i = 0; i < n; ++i) correct += pred[static_cast<std::size_t>(i)] == gold[static_cast<std::size_t>(i)];
    ok = ok && r.accuracy == static_cast<double>(correct) / n;
    double f1_sum = 0.0;
    for (int c = 0; c < classes; ++c) {
      long tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < n; ++i) {
        const int p = pred[static_cast<std::size_t>(i)], g = gold[static_cast<std::size_t>(i)];
        tp += p == c && g == c;
        fp += p == c && g != c;
        fn += p != c && g == c;
      }
      for (int c2 = 0; c2 < classes; ++c2) {
        long cnt = 0;
        for (int i = 0; i < n; ++i) cnt += gold[static_cast<std::size_t>(i)] == c && pred[static_cast<std::size_t>(i)] == c2;
        ok = ok && r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c2)] == cnt;
      }
      const double prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
      const double rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
      const double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
      const auto& s = r.per_class[static_cast<std::size_t>(c)];
      ok = ok && s.precision == prec && s.recall == rec && s.f1 == f1 && s.support == tp + fn;
      f1_sum += f1;
    }
    const double f1 = classes == 2 ? r.per_class[1].f1 : f1_sum / classes;
    ok = ok && r.f1 == f1;
    exact += ok;
  }
  const bool pass = worst_t <= 1e-6 && worst_p <= 1e-6 && exact == 20;
  return {pass, "20 t-tests: max |t diff| " + fmt(worst_t) + ", max |p diff| vs quadrature " + fmt(worst_p) +
                    "; metrics exact on " + std::to_string(exact) + "/20"};
}

// ---- C9 ---------------------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
  }
  return files;
}

Outcome c9() {
  const fs::path dir = scratch_dir("c9");
  std::vector<std::map<std::string, std::string>> trees;
  for (const std::string run : {"a", "b"}) {
    const std::string rd = (dir / run).string();
    const std::string workers = run == "a" ? "1" : "3";
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"generate-data", "--run-dir", rd},
             {"pretrain", "--run-dir", rd, "--method", "pt,optima", "--workers", workers},
             {"fewshot", "--run-dir", rd, "--workers", workers},
             {"report", "--run-dir", rd}}) {
      if (cli(args) != 0) return {false, "cli " + args.front() + " failed"};
    }
    trees.push_back(tree(dir / run));
  }
  int reports = 0;
  for (const auto& [name, _] : trees[0]) reports += name.rfind("reports/", 0) == 0;
  std::string first_diff;
  for (const auto& [name, text] : trees[0]) {
    auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != text) {
      first_diff = name;
      break;
    }
  }
  const bool pass = trees[0].size() == trees[1].size() && first_diff.empty() && reports > 0;
  fs::remove_all(dir);
  return {pass, std::to_string(trees[0].size()) + " files (" + std::to_string(reports) +
                    " under reports/) compared byte for byte between a 1-worker and a 3-worker run" +
                    (first_diff.empty() ? "" : "; first difference: " + first_diff)};
}

// ---- C10 --------------------------------------------------------------------

Outcome c10() {
  const DefaultRun run = default_run(1);
  TrainConfig config = run.cfg.train_config(1);
  config.max_steps = 20;
  config.eval_interval = 10;
  const std::string before = digest(run.model.backbone);
  const std::vector<double> flat_before = run.model.backbone.flatten();
  bool pass = true;
  std::string detail;
  for (const auto& name : method_names()) {
    const Method m = parse_method(name);
    TrainingData data{run.split.train, run.split.validation, {}};
    if (method_spec(m).uses_target) data.target = run.pair.target.examples;
    const Checkpoint ck = train_method(run.model, m, data, config);
    const bool changed = digest(ck.state.backbone) != before;
    const bool flat_changed = ck.state.backbone.flatten() != flat_before;
    const bool expect_change = m == Method::ft || m == Method::pft;
    pass = pass && changed == expect_change && flat_changed == expect_change;
    detail += " " + name + (changed ? ":changed" : ":unchanged");
  }
  pass = pass && digest(run.model.backbone) == before;
  return {pass, "backbone digest" + detail};
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"c1", "projection matches closed form and grid oracle", c1},
      {"c2", "gradients match central differences", c2},
      {"c3", "perturbations stay in the ball during a default run", c3},
      {"c4", "ablation trajectories are bitwise identical", c4},
      {"c5", "domain losses never reach the prompt (dann contrast)", c5},
      {"c6", "zero-shot target ordering optima > pt, optima >= vat", c6},
      {"c7", "few-shot protocol: 48 reports, 8 per class, seed-first aggregation", c7},
      {"c8", "t-test and metrics match oracles", c8},
      {"c9", "end-to-end runs are byte identical", c9},
      {"c10", "frozen backbone contract", c10},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && only != c.id) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.title << " [" << fmt(secs, 3) << " s]: " << o.detail
              << std::endl;
    failures += !o.pass;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
