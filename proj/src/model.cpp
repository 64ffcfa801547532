#include "optima/model.hpp"

#include <cmath>

namespace optima {

namespace {

Eigen::RowVectorXd gaussian_row(int d, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::RowVectorXd r(d);
  for (int i = 0; i < d; ++i) r[i] = scale * normal(rng);
  return r;
}

Eigen::RowVectorXd unit_row(int d, Rng& rng) {
  Eigen::RowVectorXd r = gaussian_row(d, 1.0, rng);
  return r / r.norm();
}

void fill_reserved(Matrix& rows, const VocabularyLayout& layout, const std::vector<Eigen::RowVectorXd>& class_dirs,
                   int d, Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < layout.hard_tokens; ++i) rows.row(layout.hard_id(i)) = gaussian_row(d, sd, rng);
  rows.row(layout.mask_id()) = gaussian_row(d, sd, rng);
  for (int c = 0; c < layout.classes; ++c) rows.row(layout.verbalizer_id(c)) = class_dirs[static_cast<std::size_t>(c)];
}

}  // namespace

EmbeddingTable make_token_table(const ModelSpec& spec, const TokenStatsLayout& tl, int classes) {
  const int d = spec.dim;
  Rng rng = derive_rng(spec.seed, 0x7ab1e);
  std::vector<Eigen::RowVectorXd> class_dirs;
  for (int c = 0; c < classes; ++c) class_dirs.push_back(unit_row(d, rng));
  const Eigen::RowVectorXd domain_dir = unit_row(d, rng);
  const double noise = spec.table.token_noise / std::sqrt(static_cast<double>(d));

  VocabularyLayout layout{tl.vocab, spec.hard_len, classes};
  Matrix rows = Matrix::Zero(layout.total(), d);
  for (int c = 0; c < tl.classes; ++c) {
    for (int j = 0; j < tl.block; ++j) {
      rows.row(tl.indicator(c, j)) = spec.table.semantic * class_dirs[static_cast<std::size_t>(c)] +
                                     gaussian_row(d, noise, rng);
      rows.row(tl.synonym(c, j)) = spec.table.synonym_semantic * class_dirs[static_cast<std::size_t>(c)] +
                                   spec.table.domain_offset * domain_dir + gaussian_row(d, noise, rng);
    }
  }
  for (int t = tl.filler_begin(); t < tl.vocab; ++t) rows.row(t) = gaussian_row(d, noise, rng);
  fill_reserved(rows, layout, class_dirs, d, rng);
  return EmbeddingTable(layout, std::move(rows));
}

EmbeddingTable make_feature_table(const ModelSpec& spec, int classes) {
  const int d = spec.dim;
  Rng rng = derive_rng(spec.seed, 0x7ab1e);
  std::vector<Eigen::RowVectorXd> class_dirs;
  for (int c = 0; c < classes; ++c) class_dirs.push_back(unit_row(d, rng));
  VocabularyLayout layout{0, spec.hard_len, classes};
  Matrix rows = Matrix::Zero(layout.total(), d);
  fill_reserved(rows, layout, class_dirs, d, rng);
  return EmbeddingTable(layout, std::move(rows));
}

Matrix make_lifting(const ModelSpec& spec) {
  Rng rng = derive_rng(spec.seed, 0x11f7);
  Matrix lift(2, spec.dim);
  lift.row(0) = gaussian_row(spec.dim, 1.0 / std::sqrt(2.0), rng);
  lift.row(1) = gaussian_row(spec.dim, 1.0 / std::sqrt(2.0), rng);
  return lift;
}

Model build_model(const ModelSpec& spec, const DomainPairSpec& task, const std::vector<std::string>& labels) {
  if (spec.prompt_len < 0 || spec.hard_len < 0) throw InputError("prompt lengths must be non-negative");
  if (static_cast<int>(labels.size()) != task.classes) throw InputError("label names do not match class count");
  Model model;
  model.prompt_len = spec.prompt_len;
  if (task.task == TaskKind::token_stats) {
    model.frontend.table = make_token_table(spec, TokenStatsLayout::for_spec(task), task.classes);
    model.frontend.max_input_len = task.length;
  } else {
    model.frontend.table = make_feature_table(spec, task.classes);
    model.frontend.lifting = make_lifting(spec);
    model.frontend.max_input_len = 1;
  }
  model.backbone = make_backbone({spec.dim, spec.copy_strength, spec.copy_noise, spec.layer_scale, spec.seed});
  model.head = make_verbalizer(model.frontend.table, labels, spec.head_scale);
  return model;
}

}  // namespace optima
