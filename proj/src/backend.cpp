#include "retkit/backend.hpp"

#include "retkit/scripted_backend.hpp"
#include "retkit/toy_backend.hpp"

#include <charconv>

namespace retkit {

std::string_view to_string(SubLayer s) {
  return s == SubLayer::AttnOut ? "attn" : "mlp";
}

SubLayer sublayer_from_string(std::string_view s) {
  if (s == "attn") return SubLayer::AttnOut;
  if (s == "mlp") return SubLayer::MlpOut;
  throw Error(ErrorCode::InvalidArgument, "unknown sublayer '" + std::string(s) + "'");
}

std::string to_string(const SubLayerTap& tap) {
  std::string out = std::string(to_string(tap.sublayer)) + "@" + std::to_string(tap.layer);
  if (tap.position != kLastToken) out += ":pos=" + std::to_string(tap.position);
  return out;
}

namespace {

int parse_layer_expr(std::string_view expr, int layers) {
  if (expr.empty()) throw Error(ErrorCode::InvalidArgument, "empty layer in tap spec");
  if (expr[0] == 'L') {
    int offset = 0;
    if (expr.size() > 1) {
      if (expr[1] != '-') {
        throw Error(ErrorCode::InvalidArgument, "bad layer expression '" + std::string(expr) + "'");
      }
      auto rest = expr.substr(2);
      auto res = std::from_chars(rest.data(), rest.data() + rest.size(), offset);
      if (res.ec != std::errc{} || res.ptr != rest.data() + rest.size()) {
        throw Error(ErrorCode::InvalidArgument, "bad layer expression '" + std::string(expr) + "'");
      }
    }
    return layers - offset;
  }
  int value = 0;
  auto res = std::from_chars(expr.data(), expr.data() + expr.size(), value);
  if (res.ec != std::errc{} || res.ptr != expr.data() + expr.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad layer expression '" + std::string(expr) + "'");
  }
  return value;
}

}  // namespace

SubLayerTap parse_tap(std::string_view spec, int layers) {
  int position = kLastToken;
  if (auto colon = spec.find(':'); colon != std::string_view::npos) {
    std::string_view pos_part = spec.substr(colon + 1);
    if (!pos_part.starts_with("pos=")) {
      throw Error(ErrorCode::InvalidArgument, "bad tap spec '" + std::string(spec) + "'");
    }
    pos_part.remove_prefix(4);
    auto res = std::from_chars(pos_part.data(), pos_part.data() + pos_part.size(), position);
    if (res.ec != std::errc{} || res.ptr != pos_part.data() + pos_part.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad tap position in '" + std::string(spec) + "'");
    }
    spec = spec.substr(0, colon);
  }
  auto at = spec.find('@');
  if (at == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "tap spec '" + std::string(spec) + "' missing '@'");
  }
  SubLayer sub = sublayer_from_string(spec.substr(0, at));
  int layer = parse_layer_expr(spec.substr(at + 1), layers);
  return {layer, sub, position};
}

const Vector& HiddenStateBundle::state(const SubLayerTap& tap) const {
  auto it = states.find(tap);
  if (it == states.end()) {
    throw Error(ErrorCode::InvalidTap, "tap " + to_string(tap) + " not present in bundle");
  }
  return it->second;
}

void CausalBackend::validate_forward_args(const TokenSequence& tokens,
                                          const std::vector<SubLayerTap>& taps) const {
  const auto& desc = descriptor();
  if (tokens.ids.empty()) {
    throw Error(ErrorCode::EmptyInput, "token sequence is empty");
  }
  for (int id : tokens.ids) {
    if (id < 0 || id >= desc.vocab_size) {
      throw Error(ErrorCode::InvalidToken,
                  "token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(desc.vocab_size));
    }
  }
  const int n = static_cast<int>(tokens.ids.size());
  for (const auto& tap : taps) {
    if (tap.layer < 1 || tap.layer > desc.layers) {
      throw Error(ErrorCode::InvalidTap,
                  "tap " + to_string(tap) + " beyond layer count " + std::to_string(desc.layers));
    }
    if (tap.position != kLastToken && (tap.position < 0 || tap.position >= n)) {
      throw Error(ErrorCode::InvalidTap,
                  "tap " + to_string(tap) + " position outside sequence of length " +
                      std::to_string(n));
    }
  }
}

std::vector<SubLayerTap> CausalBackend::all_last_token_taps() const {
  std::vector<SubLayerTap> taps;
  const int layers = descriptor().layers;
  taps.reserve(static_cast<std::size_t>(layers) * 2);
  for (int l = 1; l <= layers; ++l) {
    taps.push_back(SubLayerTap::attn(l));
    taps.push_back(SubLayerTap::mlp(l));
  }
  return taps;
}

std::pair<int, HiddenStateBundle> CausalBackend::generate_greedy_token(
    const TokenSequence& tokens) const {
  HiddenStateBundle bundle = forward_with_taps(tokens, all_last_token_taps());
  return {bundle.predicted_token, std::move(bundle)};
}

std::vector<double> CausalBackend::option_logits(const TokenSequence& tokens,
                                                 const std::vector<int>& option_ids) const {
  const auto& desc = descriptor();
  for (int id : option_ids) {
    if (id < 0 || id >= desc.vocab_size) {
      throw Error(ErrorCode::InvalidToken,
                  "option token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  HiddenStateBundle bundle = forward_with_taps(tokens, {});
  std::vector<double> out;
  out.reserve(option_ids.size());
  for (int id : option_ids) out.push_back(bundle.final_logits[id]);
  return out;
}

int CausalBackend::resolve_option_token(const std::string& text) const {
  TokenSequence seq = tokenize(text);
  if (seq.ids.size() != 1) {
    throw Error(ErrorCode::UnsupportedOption,
                "option '" + text + "' is " + std::to_string(seq.ids.size()) +
                    " tokens; pick a single-token label");
  }
  return seq.ids[0];
}

BackendRegistry::BackendRegistry() {
  factories_["toy"] = [](const nlohmann::json& params) -> BackendPtr {
    return std::make_shared<ToyBackend>(ToyConfig::from_json(params));
  };
  factories_["scripted"] = [](const nlohmann::json& params) -> BackendPtr {
    return std::make_shared<ScriptedBackend>(ScriptedConfig::from_json(params));
  };
}

BackendRegistry& BackendRegistry::instance() {
  static BackendRegistry registry;
  return registry;
}

void BackendRegistry::register_factory(const std::string& id, Factory factory) {
  factories_[id] = std::move(factory);
}

BackendPtr BackendRegistry::create(const std::string& id, const nlohmann::json& params) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) {
    throw Error(ErrorCode::InvalidArgument, "no backend registered under id '" + id + "'");
  }
  return it->second(params);
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(factories_.size());
  for (const auto& [id, _] : factories_) out.push_back(id);
  return out;
}

}  // namespace retkit
