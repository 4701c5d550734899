#include "retkit/scripted_backend.hpp"

#include "retkit/toy_backend.hpp"

#include <cctype>
#include <cmath>

namespace retkit {

namespace {

constexpr std::string_view kPositiveLetters = "AYTR";
constexpr std::string_view kNegativeLetters = "BNFW";

/// Extracts the [A-Za-z0-9_]+ value after the first `key` occurrence.
std::string directive_value(const std::string& text, std::string_view key) {
  auto pos = text.find(key);
  if (pos == std::string::npos) return {};
  pos += key.size();
  std::string out;
  while (pos < text.size() &&
         (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
    out += text[pos++];
  }
  return out;
}

}  // namespace

ScriptedConfig ScriptedConfig::from_json(const nlohmann::json& params) {
  ScriptedConfig config;
  if (params.contains("dim")) config.dim = params.at("dim").get<int>();
  if (params.contains("layers")) config.layers = params.at("layers").get<int>();
  if (params.contains("vocab")) config.vocab = params.at("vocab").get<int>();
  if (params.contains("seed")) config.seed = params.at("seed").get<std::uint64_t>();
  if (params.contains("match_logit")) config.match_logit = params.at("match_logit").get<double>();
  if (params.contains("option_bias")) {
    for (const auto& [key, value] : params.at("option_bias").items()) {
      config.option_bias[key] = value.get<double>();
    }
  }
  config.validate();
  return config;
}

nlohmann::json ScriptedConfig::to_json() const {
  nlohmann::json bias = nlohmann::json::object();
  for (const auto& [key, value] : option_bias) bias[key] = value;
  return {{"dim", dim},       {"layers", layers},           {"vocab", vocab},
          {"seed", seed},     {"match_logit", match_logit}, {"option_bias", bias}};
}

void ScriptedConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "scripted backend needs dim >= 2");
  if (layers < 2) throw Error(ErrorCode::InvalidArgument, "scripted backend needs layers >= 2");
  if (vocab < 4 || vocab > 256) {
    throw Error(ErrorCode::InvalidArgument, "scripted backend needs 4 <= vocab <= 256");
  }
  for (const auto& [key, _] : option_bias) {
    if (key.size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "option_bias keys must be single characters");
    }
  }
}

std::string ScriptedConfig::backend_id() const {
  std::string id = "scripted-d" + std::to_string(dim) + "-V" + std::to_string(vocab) + "-s" +
                   std::to_string(seed);
  if (!option_bias.empty() || match_logit != 8.0) {
    nlohmann::json extras = {{"option_bias", to_json().at("option_bias")},
                             {"match_logit", match_logit}};
    id += "-x" + fnv1a64_hex(extras.dump());
  }
  return id;
}

ScriptedBackend::ScriptedBackend(ScriptedConfig config) : config_(config) {
  config_.validate();
  descriptor_ = {config_.backend_id(), config_.layers, config_.dim, config_.vocab,
                 NormStyle::PreNorm};
}

TokenSequence ScriptedBackend::tokenize(const std::string& text) const {
  if (text.empty()) throw Error(ErrorCode::EmptyInput, "cannot tokenize empty text");
  TokenSequence seq;
  seq.text = text;
  const std::string marker = kMediaMarker;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.compare(pos, marker.size(), marker) == 0) {
      seq.ids.push_back(kMediaTokenId);
      pos += marker.size();
      continue;
    }
    const int id = static_cast<unsigned char>(text[pos]);
    if (id >= config_.vocab) {
      throw Error(ErrorCode::InvalidToken,
                  "byte " + std::to_string(id) + " outside scripted vocabulary");
    }
    seq.ids.push_back(id);
    ++pos;
  }
  return seq;
}

std::string ScriptedBackend::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
    }
    out += id == kMediaTokenId ? std::string(kMediaMarker) : std::string(1, static_cast<char>(id));
  }
  return out;
}

Vector ScriptedBackend::scripted_state(const std::string& text) const {
  Vector state = Vector::Zero(config_.dim);
  const std::string vec = directive_value(text, "vec=");
  if (!vec.empty()) {
    // "vec=<group>_<milliradians>": plane (2g, 2g+1), angle in radians/1000.
    const auto sep = vec.find('_');
    int group = 0;
    double angle = 0.0;
    if (sep == std::string::npos) {
      angle = std::stod(vec) / 1000.0;
    } else {
      group = std::stoi(vec.substr(0, sep));
      angle = std::stod(vec.substr(sep + 1)) / 1000.0;
    }
    const int planes = config_.dim / 2;
    const int base = 2 * (group % planes);
    state[base] = std::cos(angle);
    state[base + 1] = std::sin(angle);
    return state;
  }
  SplitMix64 rng(fnv1a64(text) ^ config_.seed);
  for (Eigen::Index i = 0; i < state.size(); ++i) state[i] = rng.symmetric(1.0);
  return l2_normalized(state);
}

Vector ScriptedBackend::lm_head_column(int token_id) const {
  if (token_id < 0 || token_id >= config_.vocab) {
    throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(token_id) + " out of range");
  }
  // The fixture has no learned head; columns are one-hot in a dim-sized box.
  Vector col = Vector::Zero(config_.dim);
  col[token_id % config_.dim] = 1.0;
  return col;
}

HiddenStateBundle ScriptedBackend::forward_with_taps(const TokenSequence& tokens,
                                                     const std::vector<SubLayerTap>& taps) const {
  validate_forward_args(tokens, taps);
  const std::string text = tokens.text.empty() ? detokenize(tokens.ids) : tokens.text;

  HiddenStateBundle bundle;
  const Vector state = scripted_state(text);
  for (const auto& tap : taps) bundle.states[tap] = state;

  Vector logits = Vector::Zero(config_.vocab);
  for (const auto& [key, value] : config_.option_bias) {
    const int id = static_cast<unsigned char>(key[0]);
    if (id < config_.vocab) logits[id] += value;
  }
  const std::string qid = directive_value(text, "qid=");
  const std::string match = directive_value(text, "match=");
  if (!qid.empty() && !match.empty()) {
    const double swing = qid == match ? config_.match_logit : -config_.match_logit;
    for (char c : kPositiveLetters) {
      const int id = static_cast<unsigned char>(c);
      if (id < config_.vocab) logits[id] += swing;
    }
    for (char c : kNegativeLetters) {
      const int id = static_cast<unsigned char>(c);
      if (id < config_.vocab) logits[id] -= swing;
    }
  }
  bundle.final_logits = logits;
  bundle.predicted_token = argmax_lowest(logits);
  return bundle;
}

}  // namespace retkit
