#include "optima/embedding.hpp"

#include <string>

namespace optima {

EmbeddingTable::EmbeddingTable(VocabularyLayout layout, Matrix rows)
    : layout_(layout), rows_(std::move(rows)) {
  if (rows_.rows() != layout_.total()) {
    throw InputError("embedding table has " + std::to_string(rows_.rows()) + " rows, layout needs " +
                     std::to_string(layout_.total()));
  }
  if (!rows_.allFinite()) throw InputError("embedding table contains non-finite entries");
}

Matrix embed(const Example& example, const EmbeddingTable& table) {
  const auto n = static_cast<Eigen::Index>(example.tokens.size());
  Matrix out(n, table.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int id = example.tokens[static_cast<std::size_t>(i)];
    if (id < 0 || id >= table.data_vocab()) {
      throw InputError("token id " + std::to_string(id) + " at position " + std::to_string(i) +
                       " outside [0, " + std::to_string(table.data_vocab()) + ")");
    }
    out.row(i) = table.rows().row(id);
  }
  return out;
}

Matrix lift_point(const Point2& point, const Matrix& lifting) {
  if (lifting.rows() != 2) throw InputError("lifting matrix must have 2 rows");
  Matrix out(1, lifting.cols());
  out.row(0) = point[0] * lifting.row(0) + point[1] * lifting.row(1);
  return out;
}

EmbeddedSequence assemble(const PromptParameters& prompt, const Matrix& hard, const Matrix& x,
                          const Eigen::RowVectorXd& mask_row, int total_length) {
  const auto d = prompt.rows.cols();
  if ((hard.rows() > 0 && hard.cols() != d) || (x.rows() > 0 && x.cols() != d) || mask_row.size() != d) {
    throw InputError("assemble: embedding dimension mismatch between prompt, hard prompt, input and mask");
  }
  const int m = static_cast<int>(prompt.rows.rows());
  const int k = static_cast<int>(hard.rows());
  const int n = static_cast<int>(x.rows());
  const int natural = m + k + n + 1;
  const int length = total_length == 0 ? natural : total_length;
  if (length < natural) {
    throw InputError("assemble: sequence of length " + std::to_string(natural) + " exceeds " +
                     std::to_string(length));
  }

  EmbeddedSequence seq;
  seq.embeddings = Matrix::Zero(length, d);
  seq.roles.assign(static_cast<std::size_t>(length), Role::pad);
  seq.prompt_len = m;
  seq.hard_len = k;
  seq.input_len = n;
  seq.mask_position = m + k + n;

  if (m > 0) seq.embeddings.topRows(m) = prompt.rows;
  if (k > 0) seq.embeddings.middleRows(m, k) = hard;
  if (n > 0) seq.embeddings.middleRows(m + k, n) = x;
  seq.embeddings.row(seq.mask_position) = mask_row;

  auto fill = [&](int begin, int count, Role r) {
    for (int i = begin; i < begin + count; ++i) seq.roles[static_cast<std::size_t>(i)] = r;
  };
  fill(0, m, Role::prompt);
  fill(m, k, Role::hard);
  fill(m + k, n, Role::input);
  fill(seq.mask_position, 1, Role::mask);
  return seq;
}

EmbeddedSequence apply_perturbation(const EmbeddedSequence& seq, const Matrix& delta) {
  if (delta.cols() != seq.embeddings.cols() || delta.rows() < seq.input_len) {
    throw InputError("apply_perturbation: delta is " + std::to_string(delta.rows()) + "x" +
                     std::to_string(delta.cols()) + ", sequence has " + std::to_string(seq.input_len) +
                     " input rows of width " + std::to_string(seq.embeddings.cols()));
  }
  EmbeddedSequence out = seq;
  if (seq.input_len > 0) {
    out.embeddings.middleRows(seq.input_begin(), seq.input_len) += delta.topRows(seq.input_len);
  }
  return out;
}

SequenceParts split_by_role(const EmbeddedSequence& seq) {
  SequenceParts parts;
  parts.prompt = seq.embeddings.topRows(seq.prompt_len);
  parts.hard = seq.embeddings.middleRows(seq.prompt_len, seq.hard_len);
  parts.input = seq.embeddings.middleRows(seq.input_begin(), seq.input_len);
  parts.mask = seq.embeddings.row(seq.mask_position);
  return parts;
}

Matrix Frontend::hard_rows() const {
  const auto& layout = table.layout();
  Matrix out(layout.hard_tokens, dim());
  for (int i = 0; i < layout.hard_tokens; ++i) out.row(i) = table.rows().row(layout.hard_id(i));
  return out;
}

Eigen::RowVectorXd Frontend::mask_row() const { return table.rows().row(table.layout().mask_id()); }

Matrix Frontend::input_rows(const Example& example) const {
  Matrix x;
  if (example.point) {
    if (!lifting) throw InputError("point example given to a token-mode frontend");
    x = lift_point(*example.point, *lifting);
  } else {
    x = embed(example, table);
  }
  if (x.rows() > max_input_len) {
    throw InputError("example has " + std::to_string(x.rows()) + " input rows, maximum is " +
                     std::to_string(max_input_len));
  }
  return x;
}

EmbeddedSequence Frontend::build(const PromptParameters& prompt, const Example& example) const {
  return assemble(prompt, hard_rows(), input_rows(example), mask_row(),
                  sequence_length(static_cast<int>(prompt.rows.rows())));
}

EmbeddedBatch Frontend::build_batch(const PromptParameters& prompt, std::span<const Example> examples) const {
  EmbeddedBatch batch;
  batch.reserve(examples.size());
  for (const auto& ex : examples) batch.push_back(build(prompt, ex));
  return batch;
}

}  // namespace optima
