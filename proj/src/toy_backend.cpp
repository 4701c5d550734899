#include "retkit/toy_backend.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace retkit {

namespace {

constexpr double kLnEps = 1e-5;

double gelu_erf(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

Matrix layer_norm_rows(const Matrix& x, const Vector& gain, const Vector& bias) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    out.row(i) = ((x.row(i).array() - mu) / std::sqrt(var + kLnEps)) * gain.transpose().array() +
                 bias.transpose().array();
  }
  return out;
}

void fill_matrix(Matrix& m, SplitMix64& rng, double scale) {
  // Row-major scan; the fill order is part of the weight-generation contract.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.symmetric(scale);
  }
}

void fill_vector(Vector& v, SplitMix64& rng, double scale) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.symmetric(scale);
}

void fill_ln(Vector& gain, Vector& bias, SplitMix64& rng) {
  for (Eigen::Index i = 0; i < gain.size(); ++i) gain[i] = 1.0 + rng.symmetric(0.1);
  fill_vector(bias, rng, 0.05);
}

}  // namespace

ToyConfig ToyConfig::from_json(const nlohmann::json& params) {
  ToyConfig config;
  if (params.contains("seed")) config.seed = params.at("seed").get<std::uint64_t>();
  if (params.contains("layers")) config.layers = params.at("layers").get<int>();
  if (params.contains("dim")) config.dim = params.at("dim").get<int>();
  if (params.contains("heads")) config.heads = params.at("heads").get<int>();
  if (params.contains("vocab")) config.vocab = params.at("vocab").get<int>();
  if (params.contains("mlp_mult")) config.mlp_mult = params.at("mlp_mult").get<int>();
  if (params.contains("max_seq")) config.max_seq = params.at("max_seq").get<int>();
  if (params.contains("zero_mlp")) config.zero_mlp = params.at("zero_mlp").get<bool>();
  config.validate();
  return config;
}

nlohmann::json ToyConfig::to_json() const {
  return {{"seed", seed},       {"layers", layers},     {"dim", dim},
          {"heads", heads},     {"vocab", vocab},       {"mlp_mult", mlp_mult},
          {"max_seq", max_seq}, {"zero_mlp", zero_mlp}};
}

void ToyConfig::validate() const {
  if (layers < 2) throw Error(ErrorCode::InvalidArgument, "toy backend needs layers >= 2");
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "toy backend needs dim >= 2");
  if (vocab < 4 || vocab > 256) {
    throw Error(ErrorCode::InvalidArgument, "toy backend needs 4 <= vocab <= 256");
  }
  if (heads < 1 || dim % heads != 0) {
    throw Error(ErrorCode::InvalidArgument, "toy backend needs heads >= 1 dividing dim");
  }
  if (mlp_mult < 1) throw Error(ErrorCode::InvalidArgument, "toy backend needs mlp_mult >= 1");
  if (max_seq < 1) throw Error(ErrorCode::InvalidArgument, "toy backend needs max_seq >= 1");
}

std::string ToyConfig::backend_id() const {
  std::string id = "toy-" + std::to_string(seed) + "-L" + std::to_string(layers) + "-d" +
                   std::to_string(dim) + "-h" + std::to_string(heads) + "-V" +
                   std::to_string(vocab) + "-m" + std::to_string(mlp_mult);
  if (zero_mlp) id += "-zmlp";
  return id;
}

ToyWeights ToyWeights::generate(const ToyConfig& config) {
  config.validate();
  const int d = config.dim;
  const int mlp_dim = config.mlp_mult * d;
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double w_out_scale = 1.0 / std::sqrt(static_cast<double>(mlp_dim));
  const double bias_scale = 0.05;

  SplitMix64 rng(config.seed);
  ToyWeights w;

  // Generation order: embeddings, then per layer (ln1, attention, ln2, mlp),
  // then the final norm and LM head. Changing this order changes every model.
  w.token_embedding.resize(config.vocab, d);
  fill_matrix(w.token_embedding, rng, w_scale);
  w.position_embedding.resize(config.max_seq, d);
  fill_matrix(w.position_embedding, rng, w_scale);

  w.layers.resize(static_cast<std::size_t>(config.layers));
  for (auto& layer : w.layers) {
    layer.ln1_gain.resize(d);
    layer.ln1_bias.resize(d);
    fill_ln(layer.ln1_gain, layer.ln1_bias, rng);
    for (Matrix* m : {&layer.wq, &layer.wk, &layer.wv, &layer.wo}) m->resize(d, d);
    for (Vector* v : {&layer.bq, &layer.bk, &layer.bv, &layer.bo}) v->resize(d);
    fill_matrix(layer.wq, rng, w_scale);
    fill_vector(layer.bq, rng, bias_scale);
    fill_matrix(layer.wk, rng, w_scale);
    fill_vector(layer.bk, rng, bias_scale);
    fill_matrix(layer.wv, rng, w_scale);
    fill_vector(layer.bv, rng, bias_scale);
    fill_matrix(layer.wo, rng, w_scale);
    fill_vector(layer.bo, rng, bias_scale);
    layer.ln2_gain.resize(d);
    layer.ln2_bias.resize(d);
    fill_ln(layer.ln2_gain, layer.ln2_bias, rng);
    layer.w_in.resize(mlp_dim, d);
    layer.b_in.resize(mlp_dim);
    fill_matrix(layer.w_in, rng, w_scale);
    fill_vector(layer.b_in, rng, bias_scale);
    layer.w_out.resize(d, mlp_dim);
    layer.b_out.resize(d);
    fill_matrix(layer.w_out, rng, w_out_scale);
    fill_vector(layer.b_out, rng, bias_scale);
  }

  w.lnf_gain.resize(d);
  w.lnf_bias.resize(d);
  fill_ln(w.lnf_gain, w.lnf_bias, rng);
  w.lm_head.resize(d, config.vocab);
  fill_matrix(w.lm_head, rng, w_scale);

  if (config.zero_mlp) {
    for (auto& layer : w.layers) {
      layer.w_out.setZero();
      layer.b_out.setZero();
    }
  }
  return w;
}

ToyBackend::ToyBackend(ToyConfig config) : ToyBackend(config, ToyWeights::generate(config)) {}

ToyBackend::ToyBackend(ToyConfig config, ToyWeights weights)
    : config_(config), weights_(std::move(weights)) {
  config_.validate();
  descriptor_ = {config_.backend_id(), config_.layers, config_.dim, config_.vocab,
                 NormStyle::PreNorm};
}

TokenSequence ToyBackend::tokenize(const std::string& text) const {
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
                  "byte " + std::to_string(id) + " at offset " + std::to_string(pos) +
                      " outside toy vocabulary");
    }
    seq.ids.push_back(id);
    ++pos;
  }
  return seq;
}

std::string ToyBackend::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab) {
      throw Error(ErrorCode::InvalidToken, "token id " + std::to_string(id) + " out of range");
    }
    if (id == kMediaTokenId) {
      out += kMediaMarker;
    } else {
      out += static_cast<char>(id);
    }
  }
  return out;
}

Vector ToyBackend::lm_head_column(int token_id) const {
  if (token_id < 0 || token_id >= config_.vocab) {
    throw Error(ErrorCode::InvalidToken,
                "token id " + std::to_string(token_id) + " outside vocabulary of size " +
                    std::to_string(config_.vocab));
  }
  return weights_.lm_head.col(token_id);
}

HiddenStateBundle ToyBackend::forward_with_taps(const TokenSequence& tokens,
                                                const std::vector<SubLayerTap>& taps) const {
  validate_forward_args(tokens, taps);
  const int n = static_cast<int>(tokens.ids.size());
  if (n > config_.max_seq) {
    throw Error(ErrorCode::SequenceTooLong,
                "sequence of length " + std::to_string(n) + " exceeds max_seq " +
                    std::to_string(config_.max_seq));
  }
  const int d = config_.dim;
  const int heads = config_.heads;
  const int head_dim = d / heads;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix x(n, d);
  for (int t = 0; t < n; ++t) {
    x.row(t) = weights_.token_embedding.row(tokens.ids[t]) + weights_.position_embedding.row(t);
  }

  HiddenStateBundle bundle;
  auto capture = [&](int layer, SubLayer sub, const Matrix& states) {
    for (const auto& tap : taps) {
      if (tap.layer != layer || tap.sublayer != sub) continue;
      const int row = tap.position == kLastToken ? n - 1 : tap.position;
      bundle.states[tap] = states.row(row);
    }
  };

  for (int l = 0; l < config_.layers; ++l) {
    const auto& w = weights_.layers[static_cast<std::size_t>(l)];

    Matrix u = layer_norm_rows(x, w.ln1_gain, w.ln1_bias);
    Matrix q = u * w.wq.transpose();
    q.rowwise() += w.bq.transpose();
    Matrix k = u * w.wk.transpose();
    k.rowwise() += w.bk.transpose();
    Matrix v = u * w.wv.transpose();
    v.rowwise() += w.bv.transpose();

    Matrix mixed(n, d);
    for (int h = 0; h < heads; ++h) {
      auto qh = q.middleCols(h * head_dim, head_dim);
      auto kh = k.middleCols(h * head_dim, head_dim);
      auto vh = v.middleCols(h * head_dim, head_dim);
      Matrix scores = qh * kh.transpose() * inv_sqrt_hd;
      // causal row softmax, in place over each prefix
      for (int i = 0; i < n; ++i) {
        auto prefix = scores.row(i).head(i + 1).array();
        prefix = (prefix - prefix.maxCoeff()).exp();
        prefix /= prefix.sum();
        if (i + 1 < n) scores.row(i).tail(n - i - 1).setZero();
      }
      mixed.middleCols(h * head_dim, head_dim) = scores * vh;
    }
    Matrix attn_out = mixed * w.wo.transpose();
    attn_out.rowwise() += w.bo.transpose();
    Matrix x_attn = x + attn_out;
    capture(l + 1, SubLayer::AttnOut, x_attn);

    Matrix pre = layer_norm_rows(x_attn, w.ln2_gain, w.ln2_bias) * w.w_in.transpose();
    pre.rowwise() += w.b_in.transpose();
    Matrix mlp_out = pre.unaryExpr(&gelu_erf) * w.w_out.transpose();
    mlp_out.rowwise() += w.b_out.transpose();
    x = x_attn + mlp_out;
    capture(l + 1, SubLayer::MlpOut, x);
  }

  Vector last = x.row(n - 1);
  const double mu = last.mean();
  const double var = (last.array() - mu).square().mean();
  Vector normed = ((last.array() - mu) / std::sqrt(var + kLnEps)) * weights_.lnf_gain.array() +
                  weights_.lnf_bias.array();
  bundle.final_logits = weights_.lm_head.transpose() * normed;
  bundle.predicted_token = argmax_lowest(bundle.final_logits);
  return bundle;
}

}  // namespace retkit
