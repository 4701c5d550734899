#include "retkit/probes.hpp"

#include <algorithm>
#include <sstream>

namespace retkit {

namespace {

void validate_range(const LayerRange& range, const CausalBackend& backend) {
  const int layers = backend.descriptor().layers;
  if (range.lo < 1 || range.hi > layers || range.lo > range.hi) {
    throw Error(ErrorCode::InvalidArgument,
                "layer range [" + std::to_string(range.lo) + ", " + std::to_string(range.hi) +
                    "] outside 1.." + std::to_string(layers));
  }
}

std::vector<SubLayerTap> range_taps(const LayerRange& range, bool include_prev_mlp) {
  std::vector<SubLayerTap> taps;
  const int lo = include_prev_mlp ? std::max(1, range.lo - 1) : range.lo;
  for (int l = lo; l <= range.hi; ++l) {
    taps.push_back(SubLayerTap::attn(l));
    taps.push_back(SubLayerTap::mlp(l));
  }
  return taps;
}

ProbeReport aggregate_rows(std::string kind, const CausalBackend& backend, int samples,
                           const std::vector<std::pair<std::pair<int, std::string>,
                                                       std::vector<double>>>& series) {
  ProbeReport report;
  report.kind = std::move(kind);
  report.backend_id = backend.descriptor().id;
  report.samples = samples;
  for (const auto& [key, values] : series) {
    const MeanStd stats = mean_std(values);
    report.rows.push_back({key.first, key.second, "", stats.mean, stats.std_dev});
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const ProbeRow& a, const ProbeRow& b) {
    return std::tie(a.layer, a.sublayer, a.label) < std::tie(b.layer, b.sublayer, b.label);
  });
  return report;
}

std::string wrap_prompt(const ModalityInput& input, const PromptFlags& flags) {
  return build_embed_prompt(input, flags).rendered_text;
}

}  // namespace

nlohmann::json ProbeReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    rows_json.push_back({{"layer", row.layer},
                         {"sublayer", row.sublayer},
                         {"label", row.label},
                         {"mean", row.mean},
                         {"std", row.std_dev}});
  }
  return {{"kind", kind},
          {"backend_id", backend_id},
          {"samples", samples},
          {"rows", rows_json},
          {"metadata", metadata}};
}

std::string ProbeReport::to_csv() const {
  std::ostringstream out;
  out << "layer,sublayer,label,mean,std\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.layer << ',' << row.sublayer << ',' << row.label << ',' << row.mean << ','
        << row.std_dev << '\n';
  }
  return out.str();
}

ProbeReport sublayer_shift_profile(const CausalBackend& backend,
                                   const std::vector<ModalityInput>& inputs, LayerRange range,
                                   const PromptFlags& flags) {
  validate_range(range, backend);
  if (inputs.empty()) throw Error(ErrorCode::EmptySample, "shift profile needs inputs");

  std::vector<std::pair<std::pair<int, std::string>, std::vector<double>>> series;
  auto values_for = [&](int layer, const char* sublayer) -> std::vector<double>& {
    for (auto& [key, values] : series) {
      if (key.first == layer && key.second == sublayer) return values;
    }
    series.push_back({{layer, sublayer}, {}});
    return series.back().second;
  };

  const auto taps = range_taps(range, /*include_prev_mlp=*/true);
  for (const auto& input : inputs) {
    const TokenSequence tokens = backend.tokenize(wrap_prompt(input, flags));
    const HiddenStateBundle bundle = backend.forward_with_taps(tokens, taps);
    for (int l = range.lo; l <= range.hi; ++l) {
      const Vector& attn = bundle.state(SubLayerTap::attn(l));
      const Vector& mlp = bundle.state(SubLayerTap::mlp(l));
      if (l >= 2) {
        values_for(l, "attn").push_back(cosine(bundle.state(SubLayerTap::mlp(l - 1)), attn));
      }
      values_for(l, "mlp").push_back(cosine(attn, mlp));
    }
  }
  return aggregate_rows("alpha", backend, static_cast<int>(inputs.size()), series);
}

ProbeReport lexical_alignment_profile(const CausalBackend& backend,
                                      const std::vector<ModalityInput>& inputs, LayerRange range,
                                      const PromptFlags& flags) {
  validate_range(range, backend);
  if (inputs.empty()) throw Error(ErrorCode::EmptySample, "alignment profile needs inputs");

  std::vector<std::pair<std::pair<int, std::string>, std::vector<double>>> series;
  for (int l = range.lo; l <= range.hi; ++l) {
    series.push_back({{l, "attn"}, {}});
    series.push_back({{l, "mlp"}, {}});
  }
  auto values_for = [&](int layer, const std::string& sub) -> std::vector<double>& {
    for (auto& [key, values] : series) {
      if (key.first == layer && key.second == sub) return values;
    }
    throw Error(ErrorCode::InvalidArgument, "missing series");
  };

  for (const auto& input : inputs) {
    const TokenSequence tokens = backend.tokenize(wrap_prompt(input, flags));
    const auto [y_star, bundle] = backend.generate_greedy_token(tokens);
    const Vector head_column = backend.lm_head_column(y_star);
    for (int l = range.lo; l <= range.hi; ++l) {
      values_for(l, "attn").push_back(cosine(bundle.state(SubLayerTap::attn(l)), head_column));
      values_for(l, "mlp").push_back(cosine(bundle.state(SubLayerTap::mlp(l)), head_column));
    }
  }
  return aggregate_rows("beta", backend, static_cast<int>(inputs.size()), series);
}

ProbeReport synonym_similarity(const CausalBackend& backend,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               LayerRange range) {
  validate_range(range, backend);
  if (pairs.empty()) throw Error(ErrorCode::EmptySample, "synonym probe needs pairs");

  std::vector<std::pair<std::pair<int, std::string>, std::vector<double>>> series;
  auto values_for = [&](int layer, const char* sub) -> std::vector<double>& {
    for (auto& [key, values] : series) {
      if (key.first == layer && key.second == sub) return values;
    }
    series.push_back({{layer, sub}, {}});
    return series.back().second;
  };

  const auto taps = range_taps(range, /*include_prev_mlp=*/false);
  for (const auto& [a, b] : pairs) {
    const HiddenStateBundle bundle_a =
        backend.forward_with_taps(backend.tokenize(wrap_prompt(ModalityInput::text(a), {})), taps);
    const HiddenStateBundle bundle_b =
        backend.forward_with_taps(backend.tokenize(wrap_prompt(ModalityInput::text(b), {})), taps);
    for (int l = range.lo; l <= range.hi; ++l) {
      values_for(l, "attn").push_back(
          cosine(bundle_a.state(SubLayerTap::attn(l)), bundle_b.state(SubLayerTap::attn(l))));
      values_for(l, "mlp").push_back(
          cosine(bundle_a.state(SubLayerTap::mlp(l)), bundle_b.state(SubLayerTap::mlp(l))));
    }
  }
  return aggregate_rows("synonym", backend, static_cast<int>(pairs.size()), series);
}

std::vector<std::pair<int, double>> word_probability_table(const CausalBackend& backend,
                                                           const ModalityInput& input,
                                                           const PromptFlags& flags, int top_k) {
  if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  const TokenSequence tokens = backend.tokenize(wrap_prompt(input, flags));
  const HiddenStateBundle bundle = backend.forward_with_taps(tokens, {});
  const Vector probs = softmax(bundle.final_logits);

  std::vector<std::pair<int, double>> table;
  table.reserve(static_cast<std::size_t>(probs.size()));
  for (int v = 0; v < probs.size(); ++v) table.push_back({v, probs[v]});
  std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), table.size());
  table.resize(k);
  return table;
}

FramingBias framing_bias(const CausalBackend& backend, const FramingConfig& framing,
                         const PromptTemplates& templates) {
  const std::vector<int> option_ids = {
      backend.resolve_option_token(framing.options[0].option_text),
      backend.resolve_option_token(framing.options[1].option_text)};

  auto logits_for_order = [&](const FramingOption& first, const FramingOption& second) {
    std::string text = templates.context_free;
    const std::string needle1 = "{label1}", needle2 = "{label2}";
    text.replace(text.find(needle1), needle1.size(), first.label_text);
    text.replace(text.find(needle2), needle2.size(), second.label_text);
    return backend.option_logits(backend.tokenize(text), option_ids);
  };

  const std::vector<double> forward = logits_for_order(framing.options[0], framing.options[1]);
  const std::vector<double> swapped = logits_for_order(framing.options[1], framing.options[0]);

  FramingBias result;
  result.averaged_gap =
      (forward[0] + swapped[0]) / 2.0 - (forward[1] + swapped[1]) / 2.0;
  result.p_positive = two_way_softmax(result.averaged_gap, 0.0);
  // |2p - 1| written as tanh(|gap| / 2): bitwise label-swap invariant.
  result.bias = std::tanh(std::abs(result.averaged_gap) / 2.0);
  return result;
}

GradientCheckReport gradient_identity_check(const CausalBackend& backend, const Vector& h_prime,
                                            int target_token, double step) {
  const auto& desc = backend.descriptor();
  if (h_prime.size() != desc.hidden_dim) {
    throw Error(ErrorCode::DimensionMismatch, "h' must have the backend hidden size");
  }
  if (target_token < 0 || target_token >= desc.vocab_size) {
    throw Error(ErrorCode::InvalidToken, "target token outside vocabulary");
  }

  Matrix head(desc.hidden_dim, desc.vocab_size);
  for (int v = 0; v < desc.vocab_size; ++v) head.col(v) = backend.lm_head_column(v);

  const auto loss = [&](const Vector& h) {
    const Vector logits = head.transpose() * h;
    return -logits[target_token] + log_sum_exp(logits);
  };

  GradientCheckReport report;
  report.analytic = head * softmax(head.transpose() * h_prime) - head.col(target_token);

  report.numeric.resize(h_prime.size());
  Vector probe = h_prime;
  for (Eigen::Index i = 0; i < h_prime.size(); ++i) {
    probe[i] = h_prime[i] + step;
    const double up = loss(probe);
    probe[i] = h_prime[i] - step;
    const double down = loss(probe);
    probe[i] = h_prime[i];
    report.numeric[i] = (up - down) / (2.0 * step);
  }
  report.max_abs_diff = (report.analytic - report.numeric).cwiseAbs().maxCoeff();

  const Vector coeffs = head.colPivHouseholderQr().solve(report.analytic);
  report.span_residual = (head * coeffs - report.analytic).norm();
  return report;
}

}  // namespace retkit
