#pragma once

#include "optima/common.hpp"
#include "optima/embedding.hpp"

#include <string>
#include <vector>

namespace optima {

/// Frozen single-block, single-head self-attention encoder.
///
///   H1 = X + (softmax(X Wq (X Wk)^T / sqrt(d)) X Wv Wo) * scale_attn
///   H2 = H1 + (gelu(H1 W1) W2) * scale_ffn
///
/// Predictions read the mask row of H2 through the verbalizer head.
struct BackboneWeights {
  Matrix query;       // d x d
  Matrix key;         // d x d
  Matrix value;       // d x d
  Matrix output;      // d x d
  Matrix ffn_in;      // d x 4d
  Matrix ffn_out;     // 4d x d
  Vector scale_attn;  // d
  Vector scale_ffn;   // d

  int dim() const { return static_cast<int>(query.rows()); }
  std::size_t parameter_count() const;
  void set_zero();
  /// this += alpha * other
  void axpy(double alpha, const BackboneWeights& other);
  bool all_finite() const;

  /// Flattened view in a fixed order (query, key, value, output, ffn_in, ffn_out, scales).
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct BackboneSpec {
  int dim = 32;
  /// Identity component of the value and output projections.
  double copy_strength = 1.0;
  /// Scale of the random component of the value and output projections.
  double copy_noise = 0.5;
  double layer_scale = 1.0;
  std::uint64_t seed = 7;
};

BackboneWeights make_backbone(const BackboneSpec& spec);

/// Readout of label logits at the mask position: logits = readout * h_mask.
struct VerbalizerHead {
  Matrix readout;  // C x d
  std::vector<std::string> labels;

  int classes() const { return static_cast<int>(readout.rows()); }
};

/// `scale` times the table rows of the verbalizer tokens.
VerbalizerHead make_verbalizer(const EmbeddingTable& table, std::vector<std::string> labels, double scale);

struct ForwardOptions {
  /// When false, prompt rows are removed from attention entirely (neither
  /// query nor key). Used for the prompt-independent domain view.
  bool attend_prompt = true;
  /// When false only the mask row is computed; `pooled` stays empty.
  bool need_pooled = true;
};

/// Activations retained for backward.
struct ForwardPass {
  ForwardOptions options;
  int length = 0;
  int dim = 0;
  std::vector<int> query_rows;  // sequence positions with computed outputs
  std::vector<int> key_rows;    // sequence positions visible to attention
  int mask_local = -1;          // index of the mask row inside query_rows
  std::vector<int> input_local; // indices of input rows inside query_rows

  Matrix xq, xk;
  Matrix q, k, v;
  Matrix attn;  // rq x rk
  Matrix ctx, att_out, h1, pre_act, act, ffn, h2;

  Vector logits;
  Vector probs;
  Vector pooled;
};

ForwardPass forward(const EmbeddedSequence& seq, const BackboneWeights& weights, const VerbalizerHead& head,
                    const ForwardOptions& options = {});

std::vector<ForwardPass> forward_batch(const EmbeddedBatch& batch, const BackboneWeights& weights,
                                       const VerbalizerHead& head, const ForwardOptions& options = {});

struct EncoderGradients {
  Matrix d_embeddings;  // L x d, zero at positions outside the computation
  BackboneWeights d_weights;
  bool has_weight_grads = false;
};

/// Reverse-mode pass for upstream gradients w.r.t. the label logits and/or
/// the pooled representation. Either upstream may be empty (size 0).
EncoderGradients backward(const ForwardPass& pass, const BackboneWeights& weights, const VerbalizerHead& head,
                          const Vector& d_logits, const Vector& d_pooled, bool weight_grads = false);

/// Input-role slice of an L x d gradient, padded with zero rows to `max_input_len`.
Matrix input_gradient(const EmbeddedSequence& seq, const Matrix& d_embeddings, int max_input_len);

/// SHA-256 over the raw bytes of all weight matrices, hex encoded.
std::string digest(const BackboneWeights& weights);

double gelu(double u);
double gelu_grad(double u);

}  // namespace optima
