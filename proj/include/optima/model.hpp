#pragma once

#include "optima/data.hpp"
#include "optima/embedding.hpp"
#include "optima/encoder.hpp"

namespace optima {

/// Structure of the seeded embedding table. Token-stats rows are built from
/// unit class directions and one shared domain direction:
///   indicator token of class c:  semantic * u_c + noise
///   synonym token of class c:    synonym_semantic * u_c + domain_offset * u_dom + noise
///   filler token:                noise
/// Verbalizer token c is u_c itself, so the readout is aligned with the
/// class directions the way tied input/output embeddings are in a pretrained
/// language model.
struct TableSpec {
  double semantic = 1.0;
  double synonym_semantic = 0.5;
  double domain_offset = 2.0;
  double token_noise = 0.5;
};

struct ModelSpec {
  int dim = 32;
  int prompt_len = 8;
  int hard_len = 2;
  double head_scale = 4.0;
  double copy_strength = 1.0;
  double copy_noise = 0.5;
  double layer_scale = 1.0;
  TableSpec table;
  std::uint64_t seed = 7;
};

/// The frozen part of the pipeline: input frontend, backbone and verbalizer.
struct Model {
  Frontend frontend;
  BackboneWeights backbone;
  VerbalizerHead head;
  int prompt_len = 8;

  int dim() const { return backbone.dim(); }
  int classes() const { return head.classes(); }
  int max_input_len() const { return frontend.max_input_len; }
};

EmbeddingTable make_token_table(const ModelSpec& spec, const TokenStatsLayout& layout, int max_classes);
/// Table holding only reserved rows (hard prompt, mask, verbalizers) for feature mode.
EmbeddingTable make_feature_table(const ModelSpec& spec, int classes);
Matrix make_lifting(const ModelSpec& spec);

Model build_model(const ModelSpec& spec, const DomainPairSpec& task, const std::vector<std::string>& labels);

}  // namespace optima
