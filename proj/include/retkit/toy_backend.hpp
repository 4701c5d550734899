#pragma once

#include "retkit/backend.hpp"

namespace retkit {

struct ToyConfig {
  std::uint64_t seed = 1729;
  int layers = 4;
  int dim = 32;
  int heads = 4;
  int vocab = 128;
  int mlp_mult = 4;
  int max_seq = 512;
  bool zero_mlp = false;  // zeroes every MLP output projection, so mlp(x) == attn(x)

  static ToyConfig from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
  std::string backend_id() const;
  void validate() const;
};

/// All parameters of the toy backbone. Generated entry by entry from a
/// SplitMix64 stream in a fixed order (see ToyWeights::generate), so a seed
/// pins every weight. Public so tests and fixtures can craft variants.
struct ToyWeights {
  struct Layer {
    Vector ln1_gain, ln1_bias;
    Matrix wq, wk, wv, wo;  // d x d
    Vector bq, bk, bv, bo;
    Vector ln2_gain, ln2_bias;
    Matrix w_in;   // (mlp_mult*d) x d
    Vector b_in;
    Matrix w_out;  // d x (mlp_mult*d)
    Vector b_out;
  };

  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_seq x d
  std::vector<Layer> layers;
  Vector lnf_gain, lnf_bias;
  Matrix lm_head;  // d x vocab, column v = w_v

  static ToyWeights generate(const ToyConfig& config);
};

/// Deterministic pre-norm decoder-only transformer, small enough for a
/// straight-line oracle to re-derive every state:
///
///   x_0      = token_embedding + position_embedding
///   attn_l   = x_{l-1} + Wo * mha(LN1(x_{l-1}))          (residual stream)
///   mlp_l    = attn_l + W_out * gelu(W_in * LN2(attn_l)) (residual stream)
///   logits   = lm_head^T * LNf(mlp_L)
///
/// Multi-head attention is causal with softmax over scaled dot products;
/// GELU is the exact erf form; LayerNorm uses eps = 1e-5.
///
/// Tokenization is byte-level over the 128-entry ASCII range (id = byte
/// value). The marker "<|media|>" collapses to the single reserved token id
/// 1; any other byte outside the vocabulary is rejected.
class ToyBackend final : public CausalBackend {
 public:
  explicit ToyBackend(ToyConfig config);
  ToyBackend(ToyConfig config, ToyWeights weights);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  const ToyConfig& config() const { return config_; }
  const ToyWeights& weights() const { return weights_; }

  TokenSequence tokenize(const std::string& text) const override;
  std::string detokenize(const std::vector<int>& ids) const override;
  HiddenStateBundle forward_with_taps(const TokenSequence& tokens,
                                      const std::vector<SubLayerTap>& taps) const override;
  Vector lm_head_column(int token_id) const override;

 private:
  ToyConfig config_;
  ToyWeights weights_;
  BackendDescriptor descriptor_;
};

}  // namespace retkit
