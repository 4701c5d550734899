#pragma once

#include "retkit/backend.hpp"

#include <map>

namespace retkit {

struct ScriptedConfig {
  int dim = 128;
  int layers = 2;
  int vocab = 128;
  std::uint64_t seed = 7;
  /// Extra logit added for a single-character token, e.g. {"Y": ln(3)}.
  std::map<std::string, double> option_bias;
  /// Logit swing applied to the preset option letters on a qid/match hit.
  double match_logit = 8.0;

  static ScriptedConfig from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
  std::string backend_id() const;
  void validate() const;
};

/// Deterministic fixture backend whose outputs are scripted by directives in
/// the input text instead of learned weights. Used to exercise the retrieval
/// pipeline, the reranker, and the framing probes with known answers.
///
/// Embeddings: a "vec=<g>:<angle>" directive places the state on the unit
/// circle of coordinate plane (2g, 2g+1); without a directive the state is a
/// seeded hash of the full text. Either way identical text gives identical
/// states at every tap.
///
/// Logits: zero everywhere, plus `option_bias`, plus a +/- `match_logit`
/// swing on the option letters A/Y/T/R (positive) and B/N/F/W (negative)
/// when the text carries both "qid=<id>" and "match=<id>" directives: the
/// swing favors the positive letters exactly when the ids agree.
///
/// Tokenization is byte-level like the toy backend.
class ScriptedBackend final : public CausalBackend {
 public:
  explicit ScriptedBackend(ScriptedConfig config);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  const ScriptedConfig& config() const { return config_; }

  TokenSequence tokenize(const std::string& text) const override;
  std::string detokenize(const std::vector<int>& ids) const override;
  HiddenStateBundle forward_with_taps(const TokenSequence& tokens,
                                      const std::vector<SubLayerTap>& taps) const override;
  Vector lm_head_column(int token_id) const override;

  /// The state vector the backend would produce for `text` (exposed so
  /// fixtures can pre-compute expected rankings).
  Vector scripted_state(const std::string& text) const;

 private:
  ScriptedConfig config_;
  BackendDescriptor descriptor_;
};

}  // namespace retkit
