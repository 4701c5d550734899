#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "retkit/probes.hpp"
#include "retkit/scripted_backend.hpp"
#include "retkit/toy_backend.hpp"
#include "support/test_util.hpp"
#include "support/toy_oracle.hpp"

using namespace retkit;
using namespace retkit::testing;

namespace {

std::shared_ptr<ToyBackend> make_toy(bool zero_mlp = false) {
  ToyConfig config;
  config.zero_mlp = zero_mlp;
  return std::make_shared<ToyBackend>(config);
}

std::vector<ModalityInput> probe_inputs() {
  std::vector<ModalityInput> inputs;
  for (const auto& text : default_probe_strings()) inputs.push_back(ModalityInput::text(text));
  return inputs;
}

const ProbeRow& row_of(const ProbeReport& report, int layer, const std::string& sublayer) {
  for (const auto& row : report.rows) {
    if (row.layer == layer && row.sublayer == sublayer) return row;
  }
  FAIL("missing row ", layer, "/", sublayer);
  static ProbeRow dummy;
  return dummy;
}

// Final layer norm of the toy backbone, re-derived for crafted fixtures.
Vector final_norm(const ToyWeights& weights, const Vector& h) {
  const double mu = h.mean();
  const double var = (h.array() - mu).square().mean();
  return ((h.array() - mu) / std::sqrt(var + 1e-5)) * weights.lnf_gain.array() +
         weights.lnf_bias.array();
}

}  // namespace

TEST_CASE("zero-MLP variant pins every alpha_mlp to exactly 1.0") {
  auto backend = make_toy(true);
  const auto report =
      sublayer_shift_profile(*backend, probe_inputs(), LayerRange::full(*backend));
  CHECK(report.samples == 20);
  for (int l = 1; l <= 4; ++l) {
    const auto& row = row_of(report, l, "mlp");
    CHECK(row.mean == 1.0);
    CHECK(row.std_dev == 0.0);
  }
}

TEST_CASE("alpha profile matches a direct cosine over oracle states") {
  ToyConfig config;
  auto backend = make_toy();
  const auto inputs = probe_inputs();
  const auto report = sublayer_shift_profile(*backend, inputs, LayerRange::full(*backend));

  // independent recomputation: oracle forward + hand cosine + two-pass stats
  std::map<std::pair<int, std::string>, std::vector<double>> values;
  for (const auto& input : inputs) {
    const auto prompt = build_embed_prompt(input, {}).rendered_text;
    const auto oracle = oracle_forward(config, backend->weights(), backend->tokenize(prompt).ids);
    for (int l = 1; l <= config.layers; ++l) {
      if (l >= 2) {
        values[{l, "attn"}].push_back(oracle_cosine(
            oracle.mlp_last[static_cast<std::size_t>(l - 2)],
            oracle.attn_last[static_cast<std::size_t>(l - 1)]));
      }
      values[{l, "mlp"}].push_back(oracle_cosine(oracle.attn_last[static_cast<std::size_t>(l - 1)],
                                                 oracle.mlp_last[static_cast<std::size_t>(l - 1)]));
    }
  }
  CHECK(report.rows.size() == values.size());
  for (const auto& [key, series] : values) {
    const auto stats = mean_std(series);
    const auto& row = row_of(report, key.first, key.second);
    CHECK(std::abs(row.mean - stats.mean) <= 1e-6);
    CHECK(std::abs(row.std_dev - stats.std_dev) <= 1e-6);
    CHECK(row.mean >= -1.0);
    CHECK(row.mean <= 1.0);
  }
}

TEST_CASE("alpha rows are sorted and the attn series starts at layer 2") {
  auto backend = make_toy();
  const auto report = sublayer_shift_profile(*backend, probe_inputs(), {1, 4});
  REQUIRE(report.rows.size() == 7);  // mlp@1 + (attn+mlp)@2..4
  CHECK(report.rows.front().layer == 1);
  CHECK(report.rows.front().sublayer == "mlp");
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& a = report.rows[i - 1];
    const auto& b = report.rows[i];
    CHECK(std::tie(a.layer, a.sublayer) < std::tie(b.layer, b.sublayer));
  }
  CHECK_THROWS_WITH_AS(sublayer_shift_profile(*backend, {}, {1, 4}),
                       doctest::Contains("empty-sample"), Error);
  CHECK_THROWS_AS(sublayer_shift_profile(*backend, probe_inputs(), {0, 9}), Error);
}

TEST_CASE("beta profile matches the oracle computation") {
  ToyConfig config;
  auto backend = make_toy();
  const auto inputs = probe_inputs();
  const auto report = lexical_alignment_profile(*backend, inputs, LayerRange::full(*backend));

  std::map<std::pair<int, std::string>, std::vector<double>> values;
  for (const auto& input : inputs) {
    const auto prompt = build_embed_prompt(input, {}).rendered_text;
    const auto oracle = oracle_forward(config, backend->weights(), backend->tokenize(prompt).ids);
    Row head_col(static_cast<std::size_t>(config.dim));
    for (int c = 0; c < config.dim; ++c) {
      head_col[static_cast<std::size_t>(c)] = backend->weights().lm_head(c, oracle.predicted);
    }
    for (int l = 1; l <= config.layers; ++l) {
      values[{l, "attn"}].push_back(
          oracle_cosine(oracle.attn_last[static_cast<std::size_t>(l - 1)], head_col));
      values[{l, "mlp"}].push_back(
          oracle_cosine(oracle.mlp_last[static_cast<std::size_t>(l - 1)], head_col));
    }
  }
  for (const auto& [key, series] : values) {
    const auto stats = mean_std(series);
    const auto& row = row_of(report, key.first, key.second);
    CHECK(std::abs(row.mean - stats.mean) <= 1e-6);
    CHECK(std::abs(row.std_dev - stats.std_dev) <= 1e-6);
  }
}

TEST_CASE("beta hits exactly 1.0 when the predicted column is parallel to the state") {
  ToyConfig config;
  ToyWeights weights = ToyWeights::generate(config);
  ToyBackend probe(config, weights);

  const ModalityInput input = ModalityInput::text("beta fixture");
  const auto prompt = build_embed_prompt(input, {}).rendered_text;
  const auto tokens = probe.tokenize(prompt);
  const Vector h = probe.forward_with_taps(tokens, {SubLayerTap::mlp(config.layers)})
                       .state(SubLayerTap::mlp(config.layers));

  // Crafted head: column c is h scaled by a power of two (cosine exactly 1),
  // every other column pushed far down so c is the argmax.
  const int c = 42;
  const Vector normed = final_norm(weights, h);
  const double own_logit = 4.0 * h.dot(normed);
  ToyWeights crafted = weights;
  const double k = std::max(1.0, 8.0 * std::abs(own_logit) / normed.squaredNorm());
  for (int v = 0; v < config.vocab; ++v) crafted.lm_head.col(v) = -k * normed;
  crafted.lm_head.col(c) = 4.0 * h;

  ToyBackend backend(config, crafted);
  const auto [y_star, bundle] = backend.generate_greedy_token(tokens);
  REQUIRE(y_star == c);
  (void)bundle;

  const auto report =
      lexical_alignment_profile(backend, {input}, {config.layers, config.layers});
  CHECK(row_of(report, config.layers, "mlp").mean == 1.0);
}

TEST_CASE("synonym similarity: identical texts give exactly 1.0 everywhere") {
  auto backend = make_toy();
  const auto report = synonym_similarity(*backend, {{"same words", "same words"}},
                                         LayerRange::full(*backend));
  for (const auto& row : report.rows) {
    CHECK(row.mean == 1.0);
    CHECK(row.std_dev == 0.0);
  }
  CHECK_THROWS_WITH_AS(synonym_similarity(*backend, {}, LayerRange::full(*backend)),
                       doctest::Contains("empty-sample"), Error);
}

TEST_CASE("synonym similarity matches the oracle on crafted pairs") {
  ToyConfig config;
  auto backend = make_toy();
  std::vector<std::pair<std::string, std::string>> pairs(default_synonym_pairs().begin(),
                                                         default_synonym_pairs().begin() + 10);
  const auto report = synonym_similarity(*backend, pairs, LayerRange::full(*backend));
  CHECK(report.samples == 10);

  std::map<std::pair<int, std::string>, std::vector<double>> values;
  for (const auto& [a, b] : pairs) {
    const auto oracle_a = oracle_forward(
        config, backend->weights(),
        backend->tokenize(build_embed_prompt(ModalityInput::text(a), {}).rendered_text).ids);
    const auto oracle_b = oracle_forward(
        config, backend->weights(),
        backend->tokenize(build_embed_prompt(ModalityInput::text(b), {}).rendered_text).ids);
    for (int l = 1; l <= config.layers; ++l) {
      values[{l, "attn"}].push_back(oracle_cosine(oracle_a.attn_last[static_cast<std::size_t>(l - 1)],
                                                  oracle_b.attn_last[static_cast<std::size_t>(l - 1)]));
      values[{l, "mlp"}].push_back(oracle_cosine(oracle_a.mlp_last[static_cast<std::size_t>(l - 1)],
                                                 oracle_b.mlp_last[static_cast<std::size_t>(l - 1)]));
    }
  }
  for (const auto& [key, series] : values) {
    const auto stats = mean_std(series);
    const auto& row = row_of(report, key.first, key.second);
    CHECK(std::abs(row.mean - stats.mean) <= 1e-6);
    CHECK(std::abs(row.std_dev - stats.std_dev) <= 1e-6);
  }
}

TEST_CASE("word probability table is a sorted softmax") {
  ToyConfig config;
  auto backend = make_toy();
  const ModalityInput input = ModalityInput::text("word probabilities");

  const auto full = word_probability_table(*backend, input, {}, config.vocab + 50);
  CHECK(full.size() == static_cast<std::size_t>(config.vocab));  // clipped to |V|
  double total = 0.0;
  for (const auto& [token, p] : full) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    total += p;
  }
  CHECK(std::abs(total - 1.0) <= 1e-6);
  for (std::size_t i = 1; i < full.size(); ++i) {
    const bool descending = full[i - 1].second > full[i].second ||
                            (full[i - 1].second == full[i].second &&
                             full[i - 1].first < full[i].first);
    CHECK(descending);
  }

  // oracle: softmax of the straight-line logits
  const auto prompt = build_embed_prompt(input, {}).rendered_text;
  const auto oracle = oracle_forward(config, backend->weights(), backend->tokenize(prompt).ids);
  double max_logit = oracle.logits[0];
  for (double z : oracle.logits) max_logit = std::max(max_logit, z);
  double denom = 0.0;
  for (double z : oracle.logits) denom += std::exp(z - max_logit);
  const auto top = word_probability_table(*backend, input, {}, 5);
  REQUIRE(top.size() == 5);
  for (const auto& [token, p] : top) {
    const double expected =
        std::exp(oracle.logits[static_cast<std::size_t>(token)] - max_logit) / denom;
    CHECK(std::abs(p - expected) <= 1e-6);
  }

  CHECK_THROWS_AS(word_probability_table(*backend, input, {}, 0), Error);
}

TEST_CASE("framing bias is zero for a backend with identical option columns") {
  ToyConfig config;
  ToyWeights weights = ToyWeights::generate(config);
  weights.lm_head.col('Y') = weights.lm_head.col('N');
  ToyBackend backend(config, weights);

  const auto result = framing_bias(backend, FramingConfig::preset("yes_no"));
  CHECK(result.averaged_gap == 0.0);
  CHECK(result.bias == 0.0);
  CHECK(result.p_positive == 0.5);
}

TEST_CASE("framing bias is exactly invariant to swapping the labels") {
  auto backend = make_toy();
  for (const auto& name : FramingConfig::preset_names()) {
    const FramingConfig preset = FramingConfig::preset(name);
    const auto direct = framing_bias(*backend, preset);
    const auto swapped = framing_bias(*backend, preset.swapped());
    CHECK(direct.bias == swapped.bias);  // bitwise, by construction
    CHECK(direct.bias >= 0.0);
    CHECK(direct.bias <= 1.0);
  }
}

TEST_CASE("a logit gap of ln(3) maps to p=0.75 and bias 0.5") {
  ScriptedConfig config;
  config.option_bias["Y"] = std::log(3.0);
  ScriptedBackend backend(config);

  const auto result = framing_bias(backend, FramingConfig::preset("yes_no"));
  CHECK(std::abs(result.averaged_gap - std::log(3.0)) <= 1e-12);
  CHECK(std::abs(result.p_positive - 0.75) <= 1e-6);
  CHECK(std::abs(result.bias - 0.5) <= 1e-6);
}

TEST_CASE("framing bias rejects multi-token labels") {
  auto backend = make_toy();
  FramingConfig framing = FramingConfig::preset("yes_no");
  framing.options[0].option_text = "Yes";  // three byte-tokens on the toy backend
  CHECK_THROWS_WITH_AS(framing_bias(*backend, framing), doctest::Contains("unsupported-option"),
                       Error);
}

TEST_CASE("gradient check: uniform distribution case has a closed form") {
  ToyConfig config;
  auto backend = make_toy();
  const int target = 3;
  const Vector h = Vector::Zero(config.dim);  // logits all equal -> p uniform

  const auto report = gradient_identity_check(*backend, h, target);
  Vector expected = Vector::Zero(config.dim);
  for (int v = 0; v < config.vocab; ++v) expected += backend->lm_head_column(v);
  expected /= static_cast<double>(config.vocab);
  expected -= backend->lm_head_column(target);
  CHECK(max_abs_diff(report.analytic, expected) <= 1e-12);
  CHECK(report.max_abs_diff <= 1e-4);
}

TEST_CASE("gradient check: analytic matches central differences on 100 draws") {
  ToyConfig config;
  auto backend = make_toy();
  SplitMix64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector h(config.dim);
    for (int i = 0; i < config.dim; ++i) h[i] = rng.symmetric(2.0);
    const int target = static_cast<int>(rng.next() % static_cast<std::uint64_t>(config.vocab));
    const auto report = gradient_identity_check(*backend, h, target);
    worst = std::max(worst, report.max_abs_diff);
    CHECK(report.max_abs_diff <= 1e-4);
  }
  CHECK(worst > 0.0);  // finite differences are not literally exact
}

TEST_CASE("gradient lies in span(W) even when the span is a proper subspace") {
  ToyConfig config;
  config.vocab = 8;  // 8 columns in a 32-dim space
  ToyBackend backend(config);
  SplitMix64 rng(77);

  Matrix head(config.dim, config.vocab);
  for (int v = 0; v < config.vocab; ++v) head.col(v) = backend.lm_head_column(v);

  for (int trial = 0; trial < 20; ++trial) {
    Vector h(config.dim);
    for (int i = 0; i < config.dim; ++i) h[i] = rng.symmetric(2.0);
    const auto report = gradient_identity_check(backend, h, trial % config.vocab);
    CHECK(report.span_residual <= 1e-6);

    // negative control: a random direction is far outside span(W)
    Vector random(config.dim);
    for (int i = 0; i < config.dim; ++i) random[i] = rng.symmetric(1.0);
    const Vector coeffs = head.colPivHouseholderQr().solve(random);
    CHECK((head * coeffs - random).norm() > 1e-3);
  }

  Vector wrong_size(5);
  CHECK_THROWS_WITH_AS(gradient_identity_check(backend, wrong_size, 0),
                       doctest::Contains("dimension-mismatch"), Error);
}

TEST_CASE("probe reports serialize to JSON and CSV") {
  auto backend = make_toy();
  std::vector<ModalityInput> inputs;
  for (int i = 0; i < 3; ++i) inputs.push_back(ModalityInput::text(default_probe_strings()[i]));
  const auto report = sublayer_shift_profile(*backend, inputs, {1, 2});

  const auto j = report.to_json();
  CHECK(j.at("kind") == "alpha");
  CHECK(j.at("samples") == 3);
  CHECK(j.at("rows").size() == report.rows.size());
  CHECK(j.at("backend_id") == backend->descriptor().id);

  const std::string csv = report.to_csv();
  CHECK(csv.starts_with("layer,sublayer,label,mean,std\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(report.rows.size()) + 1);
}
