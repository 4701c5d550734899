#pragma once

#include "retkit/core.hpp"

#include <nlohmann/json.hpp>

#include <compare>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace retkit {

/// Sentinel position meaning "last token of the sequence".
inline constexpr int kLastToken = -1;

/// Marker the prompt builders emit for media segments. Byte-level backends
/// collapse it to the single reserved token id below; real adapters splice
/// their own media embeddings at marker positions.
inline constexpr const char* kMediaMarker = "<|media|>";
inline constexpr int kMediaTokenId = 1;

enum class SubLayer { AttnOut, MlpOut };

std::string_view to_string(SubLayer s);
SubLayer sublayer_from_string(std::string_view s);

/// A read point on the residual stream: the post-residual output of one
/// attention or MLP sub-layer, at one token position.
struct SubLayerTap {
  int layer = 1;  // 1..L
  SubLayer sublayer = SubLayer::AttnOut;
  int position = kLastToken;

  static SubLayerTap attn(int layer, int position = kLastToken) {
    return {layer, SubLayer::AttnOut, position};
  }
  static SubLayerTap mlp(int layer, int position = kLastToken) {
    return {layer, SubLayer::MlpOut, position};
  }

  auto operator<=>(const SubLayerTap&) const = default;
};

/// "attn@3", "mlp@4", or "attn@3:pos=7" for an explicit token position.
std::string to_string(const SubLayerTap& tap);

/// Parses the format produced by to_string. `layers` resolves the symbolic
/// forms "L", "L-1", ... to concrete indices.
SubLayerTap parse_tap(std::string_view spec, int layers);

struct TokenSequence {
  std::vector<int> ids;
  std::string text;             // original string, optional
  std::vector<int> media_slots; // positions of spliced media embeddings; empty on the toy backend
};

struct HiddenStateBundle {
  std::map<SubLayerTap, Vector> states;
  Vector final_logits;
  int predicted_token = -1;  // argmax of final_logits, ties -> lowest id

  const Vector& state(const SubLayerTap& tap) const;
};

enum class NormStyle { PreNorm };

struct BackendDescriptor {
  std::string id;
  int layers = 0;       // L
  int hidden_dim = 0;   // d
  int vocab_size = 0;   // |V|
  NormStyle norm_style = NormStyle::PreNorm;
};

/// Uniform interface over causal LM backbones: tokenization, forward passes
/// with sub-layer state capture, LM-head access, greedy one-token decoding.
///
/// Implementations must be immutable after construction; forward passes are
/// read-only and may run concurrently.
class CausalBackend {
 public:
  virtual ~CausalBackend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  virtual TokenSequence tokenize(const std::string& text) const = 0;
  virtual std::string detokenize(const std::vector<int>& ids) const = 0;

  /// Runs one forward pass and captures every requested tap plus the final
  /// logits at the last position. Deterministic for identical inputs.
  virtual HiddenStateBundle forward_with_taps(const TokenSequence& tokens,
                                              const std::vector<SubLayerTap>& taps) const = 0;

  /// Column w_id of the unembedding matrix W (d x |V|).
  virtual Vector lm_head_column(int token_id) const = 0;

  /// Greedy one-token decode. The bundle carries last-token taps for every
  /// (layer, sublayer) pair.
  std::pair<int, HiddenStateBundle> generate_greedy_token(const TokenSequence& tokens) const;

  /// Final-position logits restricted to `option_ids`, in input order.
  std::vector<double> option_logits(const TokenSequence& tokens,
                                    const std::vector<int>& option_ids) const;

  /// Maps option text to its single token id; throws unsupported-option if
  /// the text does not tokenize to exactly one token.
  int resolve_option_token(const std::string& text) const;

  std::vector<SubLayerTap> all_last_token_taps() const;

 protected:
  /// Shared precondition checks for forward passes.
  void validate_forward_args(const TokenSequence& tokens,
                             const std::vector<SubLayerTap>& taps) const;
};

using BackendPtr = std::shared_ptr<const CausalBackend>;

/// Registry keyed by string id ("toy", "scripted", plus any plugged-in
/// adapters). Params are backend-specific JSON.
class BackendRegistry {
 public:
  using Factory = std::function<BackendPtr(const nlohmann::json& params)>;

  static BackendRegistry& instance();

  void register_factory(const std::string& id, Factory factory);
  BackendPtr create(const std::string& id, const nlohmann::json& params) const;
  std::vector<std::string> ids() const;

 private:
  BackendRegistry();
  std::map<std::string, Factory> factories_;
};

}  // namespace retkit
