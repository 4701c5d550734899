#pragma once

#include "retkit/reranker.hpp"

namespace retkit {

struct LayerRange {
  int lo = 1;
  int hi = 1;

  static LayerRange full(const CausalBackend& backend) {
    return {1, backend.descriptor().layers};
  }
};

struct ProbeRow {
  int layer = 0;
  std::string sublayer;  // "attn" / "mlp"; empty for non-layer rows
  std::string label;     // framing preset name etc.
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Aggregated probe output: per-(layer, sublayer) mean and standard
/// deviation over the sampled inputs, sorted by layer then sublayer.
struct ProbeReport {
  std::string kind;
  std::string backend_id;
  int samples = 0;
  std::vector<ProbeRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Representation shift across consecutive sub-layers:
///   alpha_attn(l) = cos(mlp(l-1), attn(l)), alpha_mlp(l) = cos(attn(l), mlp(l)).
/// States are read at the last token of the one-word summary prompt built
/// with `flags`. The attn row needs the previous layer, so it starts at
/// layer 2.
ProbeReport sublayer_shift_profile(const CausalBackend& backend,
                                   const std::vector<ModalityInput>& inputs, LayerRange range,
                                   const PromptFlags& flags = {});

/// Alignment of each sub-layer state with the LM-head column of the token
/// the model would greedily emit: beta(l) = cos(h(l), w_y*).
ProbeReport lexical_alignment_profile(const CausalBackend& backend,
                                      const std::vector<ModalityInput>& inputs, LayerRange range,
                                      const PromptFlags& flags = {});

/// Per-layer cosine between the states of the two texts of each pair, read
/// at the last token of the summary prompt.
ProbeReport synonym_similarity(const CausalBackend& backend,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               LayerRange range);

/// Top-k next-token probabilities at the embedding position (the LM head is
/// applied to the full residual stream, final MLP included). Descending by
/// probability, ties by token id; k is clipped to the vocabulary size.
std::vector<std::pair<int, double>> word_probability_table(const CausalBackend& backend,
                                                           const ModalityInput& input,
                                                           const PromptFlags& flags, int top_k);

struct FramingBias {
  double bias = 0.0;        // |p - 0.5| * 2, in [0, 1]
  double p_positive = 0.5;  // two-way softmax of the order-averaged logits
  double averaged_gap = 0.0;
};

/// Context-free label preference of the backend: renders the instruction in
/// both label orders, averages each option's logits across orders, and maps
/// the two-way softmax to a skew scalar (0 = balanced, 1 = maximal). The
/// order averaging makes the bias exactly invariant to swapping the labels.
FramingBias framing_bias(const CausalBackend& backend, const FramingConfig& framing,
                         const PromptTemplates& templates = PromptTemplates::builtin());

struct GradientCheckReport {
  Vector analytic;
  Vector numeric;
  double max_abs_diff = 0.0;
  double span_residual = 0.0;  // least-squares residual of analytic onto span(W)
};

/// Cross-entropy gradient identity at the LM head: the analytic gradient
/// sum_v p(v|h') w_v - w_target against central finite differences, plus the
/// residual of the analytic gradient outside span(W).
GradientCheckReport gradient_identity_check(const CausalBackend& backend, const Vector& h_prime,
                                            int target_token, double step = 1e-3);

/// 20 fixed phrases used as the desk-scale probe sample.
const std::vector<std::string>& default_probe_strings();

/// Shipped 50-pair synonym list for the layer sweep.
const std::vector<std::pair<std::string, std::string>>& default_synonym_pairs();

}  // namespace retkit
