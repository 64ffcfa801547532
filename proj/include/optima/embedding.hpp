#pragma once

#include "optima/common.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace optima {

enum class Domain { source, target };

/// Position tag inside an assembled sequence <prompt; hard; input; mask; pad>.
enum class Role : std::uint8_t { prompt, hard, input, mask, pad };

using Point2 = std::array<double, 2>;

/// One raw input: either a token sequence or a 2D point (feature mode).
struct Example {
  std::vector<int> tokens;
  std::optional<Point2> point;
  Domain domain = Domain::source;
};

struct LabeledExample {
  Example input;
  int label = 0;
};

using LabeledSet = std::vector<LabeledExample>;
using UnlabeledSet = std::vector<Example>;

/// Id map of an embedding table. Data tokens occupy [0, data_vocab); the
/// reserved ids after them are the hard-prompt tokens, [MASK] and one
/// verbalizer token per class.
struct VocabularyLayout {
  int data_vocab = 0;
  int hard_tokens = 2;
  int classes = 2;

  int hard_id(int i) const { return data_vocab + i; }
  int mask_id() const { return data_vocab + hard_tokens; }
  int verbalizer_id(int c) const { return data_vocab + hard_tokens + 1 + c; }
  int total() const { return data_vocab + hard_tokens + 1 + classes; }
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(VocabularyLayout layout, Matrix rows);

  const VocabularyLayout& layout() const { return layout_; }
  const Matrix& rows() const { return rows_; }
  int dim() const { return static_cast<int>(rows_.cols()); }
  int data_vocab() const { return layout_.data_vocab; }

 private:
  VocabularyLayout layout_;
  Matrix rows_;
};

/// Trainable soft prompt, m x d.
struct PromptParameters {
  Matrix rows;
};

/// One assembled example: embeddings L x d plus per-position role tags.
struct EmbeddedSequence {
  Matrix embeddings;
  std::vector<Role> roles;
  int prompt_len = 0;
  int hard_len = 0;
  int input_len = 0;
  int mask_position = 0;

  int input_begin() const { return prompt_len + hard_len; }
  int length() const { return static_cast<int>(embeddings.rows()); }
};

using EmbeddedBatch = std::vector<EmbeddedSequence>;

/// Looks up table rows for a token sequence; throws InputError on ids outside
/// the data vocabulary.
Matrix embed(const Example& example, const EmbeddingTable& table);

/// Maps a 2D point to a single input row through a fixed 2 x d lifting matrix.
Matrix lift_point(const Point2& point, const Matrix& lifting);

/// Concatenates <prompt; hard; x; mask> and right-pads to `total_length`
/// (0 means no padding).
EmbeddedSequence assemble(const PromptParameters& prompt, const Matrix& hard, const Matrix& x,
                          const Eigen::RowVectorXd& mask_row, int total_length = 0);

/// Adds `delta` to the input-role rows. `delta` has one row per input slot
/// (max input length of the run); rows past the example's input length are
/// padding and are ignored.
EmbeddedSequence apply_perturbation(const EmbeddedSequence& seq, const Matrix& delta);

struct SequenceParts {
  Matrix prompt;
  Matrix hard;
  Matrix input;
  Eigen::RowVectorXd mask;
};

/// Inverse of assemble: slices the rows back out by role.
SequenceParts split_by_role(const EmbeddedSequence& seq);

/// Everything needed to turn an Example into an EmbeddedSequence for a run.
struct Frontend {
  EmbeddingTable table;
  std::optional<Matrix> lifting;  // 2 x d, feature mode only
  int max_input_len = 1;

  int dim() const { return table.dim(); }
  int hard_len() const { return table.layout().hard_tokens; }
  Matrix hard_rows() const;
  Eigen::RowVectorXd mask_row() const;
  Matrix input_rows(const Example& example) const;
  int sequence_length(int prompt_len) const { return prompt_len + hard_len() + max_input_len + 1; }

  EmbeddedSequence build(const PromptParameters& prompt, const Example& example) const;
  EmbeddedBatch build_batch(const PromptParameters& prompt, std::span<const Example> examples) const;
};

}  // namespace optima
