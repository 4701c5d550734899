#pragma once

#include "retkit/embedder.hpp"

#include <array>

namespace retkit {

enum class FramingKind { Mcq, BinaryWords };

struct FramingOption {
  std::string label_text;   // wording used inside the prompt
  std::string option_text;  // scored token; must be single-token on the bound backend
};

/// Label scheme for pointwise reranking: option 0 is the positive answer.
/// Shipped presets: mcq (default), yes_no, true_false, right_wrong. Their
/// scored tokens are the option letters / initials, which are single tokens
/// on the byte-level backends; adapters for other tokenizers may substitute
/// their own single-token labels.
struct FramingConfig {
  FramingKind kind = FramingKind::Mcq;
  std::string name = "mcq";
  std::array<FramingOption, 2> options;
  std::string prompt_template;

  static FramingConfig preset(std::string_view name,
                              const PromptTemplates& templates = PromptTemplates::builtin(),
                              const std::string& task_id = "");
  static std::vector<std::string> preset_names();

  FramingConfig swapped() const;  // options reversed (diagnostics only)
};

struct RerankCandidate {
  std::string id;
  ModalityInput input;
  double embed_score = 0.0;  // stage-1 cosine when known
};

struct CandidateScore {
  std::string candidate_id;
  double relevance = 0.0;    // probability in [0, 1]
  double embed_score = 0.0;  // cosine in [-1, 1]
  int rank = 0;              // 1..n
  bool reranked = true;      // false for pipeline tail entries
  bool failed = false;       // scoring failed; sunk to the bottom

  nlohmann::json to_json() const;
};

enum class TieBreak { EmbedThenId, IdOnly };

/// Renders the two-choice block (MCQ) or the binary-word question with the
/// query and candidate content substituted. Media segments of both sides are
/// included in input order.
PromptSpec build_rerank_prompt(const ModalityInput& query, const ModalityInput& candidate,
                               const FramingConfig& framing);

/// exp(z_pos) / (exp(z_pos) + exp(z_neg)) over the two option-token logits
/// at the final position.
double relevance_score(const CausalBackend& backend, const ModalityInput& query,
                       const ModalityInput& candidate, const FramingConfig& framing);

/// Scores every candidate and sorts by relevance descending; ties break by
/// embed_score descending then candidate id ascending (TieBreak::EmbedThenId)
/// or by id alone. Failed candidates keep relevance 0 and sink to the bottom.
/// The ranking never depends on input order.
std::vector<CandidateScore> rerank(const CausalBackend& backend, const ModalityInput& query,
                                   const std::vector<RerankCandidate>& candidates,
                                   const FramingConfig& framing,
                                   TieBreak tie_break = TieBreak::EmbedThenId, int jobs = 1);

}  // namespace retkit
