#include "retkit/reranker.hpp"

#include <algorithm>

namespace retkit {

namespace {

std::string replace_all(std::string text, std::string_view name, std::string_view value) {
  const std::string needle = "{" + std::string(name) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

FramingConfig FramingConfig::preset(std::string_view name, const PromptTemplates& templates,
                                    const std::string& task_id) {
  FramingConfig config;
  config.name = std::string(name);
  if (name == "mcq") {
    config.kind = FramingKind::Mcq;
    config.options = {FramingOption{"A", "A"}, FramingOption{"B", "B"}};
    config.prompt_template = templates.mcq_for_task(task_id);
    return config;
  }
  config.kind = FramingKind::BinaryWords;
  config.prompt_template = templates.rerank_binary;
  if (name == "yes_no") {
    config.options = {FramingOption{"Yes", "Y"}, FramingOption{"No", "N"}};
  } else if (name == "true_false") {
    config.options = {FramingOption{"True", "T"}, FramingOption{"False", "F"}};
  } else if (name == "right_wrong") {
    config.options = {FramingOption{"Right", "R"}, FramingOption{"Wrong", "W"}};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown framing preset '" + std::string(name) + "'");
  }
  return config;
}

std::vector<std::string> FramingConfig::preset_names() {
  return {"mcq", "yes_no", "true_false", "right_wrong"};
}

FramingConfig FramingConfig::swapped() const {
  FramingConfig out = *this;
  std::swap(out.options[0], out.options[1]);
  return out;
}

nlohmann::json CandidateScore::to_json() const {
  return {{"id", candidate_id}, {"relevance", relevance}, {"embed_score", embed_score},
          {"rank", rank},       {"reranked", reranked},   {"failed", failed}};
}

PromptSpec build_rerank_prompt(const ModalityInput& query, const ModalityInput& candidate,
                               const FramingConfig& framing) {
  query.validate();
  candidate.validate();
  PromptSpec spec;
  spec.template_id = "rerank/" + framing.name;
  std::string text = replace_all(framing.prompt_template, "query", query.rendered_content());
  text = replace_all(text, "candidate", candidate.rendered_content());
  text = replace_all(text, "label1", framing.options[0].label_text);
  text = replace_all(text, "label2", framing.options[1].label_text);
  spec.rendered_text = std::move(text);
  return spec;
}

double relevance_score(const CausalBackend& backend, const ModalityInput& query,
                       const ModalityInput& candidate, const FramingConfig& framing) {
  const PromptSpec spec = build_rerank_prompt(query, candidate, framing);
  const TokenSequence tokens = backend.tokenize(spec.rendered_text);
  const std::vector<int> option_ids = {backend.resolve_option_token(framing.options[0].option_text),
                                       backend.resolve_option_token(framing.options[1].option_text)};
  const std::vector<double> logits = backend.option_logits(tokens, option_ids);
  return two_way_softmax(logits[0], logits[1]);
}

std::vector<CandidateScore> rerank(const CausalBackend& backend, const ModalityInput& query,
                                   const std::vector<RerankCandidate>& candidates,
                                   const FramingConfig& framing, TieBreak tie_break, int jobs) {
  if (candidates.empty()) {
    throw Error(ErrorCode::EmptyInput, "rerank needs at least one candidate");
  }
  std::vector<CandidateScore> scores(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    auto& score = scores[i];
    score.candidate_id = candidates[i].id;
    score.embed_score = candidates[i].embed_score;
    try {
      score.relevance = relevance_score(backend, query, candidates[i].input, framing);
    } catch (const std::exception&) {
      score.relevance = 0.0;
      score.failed = true;
    }
  });

  std::sort(scores.begin(), scores.end(), [&](const CandidateScore& a, const CandidateScore& b) {
    if (a.failed != b.failed) return b.failed;
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    if (tie_break == TieBreak::EmbedThenId && a.embed_score != b.embed_score) {
      return a.embed_score > b.embed_score;
    }
    return a.candidate_id < b.candidate_id;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = static_cast<int>(i) + 1;
  return scores;
}

}  // namespace retkit
