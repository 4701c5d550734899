#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "retkit/config.hpp"

#include <fstream>

using namespace retkit;

TEST_CASE("defaults are a runnable toy configuration") {
  RunConfig config;
  CHECK(config.backend_id == "toy");
  CHECK(config.tap_spec == "attn@L");
  CHECK(config.top_k == 8);
  CHECK(config.rerank_pool == 4);

  const auto backend = config.make_backend();
  CHECK(backend->descriptor().layers == 4);
  CHECK(config.resolved_tap(*backend) == SubLayerTap::attn(4));
}

TEST_CASE("config files merge over defaults, keeping unset fields") {
  const auto path = std::filesystem::temp_directory_path() / "retkit_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"backend": {"id": "toy", "seed": 99, "zero_mlp": true},
               "tap": "mlp@L-1", "flags": "c", "K": 16, "fusion": 0.25})";
  }
  const RunConfig config = RunConfig::from_file(path);
  std::filesystem::remove(path);

  CHECK(config.backend_id == "toy");
  CHECK(config.backend_params.at("seed") == 99);
  CHECK(config.backend_params.at("zero_mlp") == true);
  CHECK(config.tap_spec == "mlp@L-1");
  CHECK(config.prompt_flags() ==
        PromptFlags{.semantic_ground = true, .noise_suppress = true});
  CHECK(config.top_k == 16);
  CHECK(config.rerank_pool == 4);  // untouched default
  CHECK(config.fusion_weight == 0.25);

  const auto backend = config.make_backend();
  CHECK(backend->descriptor().id == "toy-99-L4-d32-h4-V128-m4-zmlp");
  CHECK(config.resolved_tap(*backend) == SubLayerTap::mlp(3));
}

TEST_CASE("to_json round-trips through apply_json") {
  RunConfig config;
  config.backend_params["seed"] = 1234;
  config.flags_spec = "d";
  config.framing = "true_false";
  config.rerank_pool = 2;
  config.eval_axes = {{"pool_sizes", {1, 2}}};

  RunConfig copy;
  copy.apply_json(config.to_json());
  CHECK(copy.to_json() == config.to_json());
}

TEST_CASE("grid expansion covers the full cross product in axis order") {
  RunConfig config;
  config.eval_axes = {{"taps", {"attn@L", "mlp@L", "mlp@L-1", "mlp@L-2"}},
                      {"prompts", {"a", "b", "c", "d"}},
                      {"framings", {"mcq", "yes_no", "true_false", "right_wrong"}}};
  const auto cells = expand_eval_grid(config);
  REQUIRE(cells.size() == 64);
  CHECK(cells.front().tap == "attn@L");
  CHECK(cells.front().prompt == "a");
  CHECK(cells.front().framing == "mcq");
  CHECK(cells.front().rerank_pool == config.rerank_pool);
  CHECK(cells.back().tap == "mlp@L-2");
  CHECK(cells.back().framing == "right_wrong");

  // missing axes fall back to the configured single value
  RunConfig single;
  const auto one = expand_eval_grid(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].tap == "attn@L");
  CHECK(one[0].rerank_pool == 4);

  RunConfig pools;
  pools.eval_axes = {{"pool_sizes", {1, 2, 4, 8}}};
  CHECK(expand_eval_grid(pools).size() == 4);
}

TEST_CASE("cell file stems are filesystem-safe and unique per cell") {
  EvalCell cell{"mlp@L-2", "d", "yes_no", 8};
  CHECK(cell.file_stem() == "cell_mlp_Lm2__d__yes_no__M8");
  EvalCell positional{"attn@2:pos=3", "a", "mcq", 1};
  CHECK(positional.file_stem().find('@') == std::string::npos);
  CHECK(positional.file_stem().find('=') == std::string::npos);
}

TEST_CASE("framing and embed configs derive from the run config") {
  RunConfig config;
  config.framing = "right_wrong";
  config.flags_spec = "b";
  const auto backend = config.make_backend();
  const auto templates = config.templates();

  const FramingConfig framing = config.framing_config(templates);
  CHECK(framing.name == "right_wrong");
  CHECK(framing.options[0].label_text == "Right");

  const EmbedConfig embed = config.embed_config(*backend, templates);
  CHECK(embed.tap == SubLayerTap::attn(4));
  CHECK(embed.flags.semantic_ground);
  CHECK_FALSE(embed.flags.task_align);

  const PipelineConfig pipeline = config.pipeline_config(*backend, templates);
  CHECK(pipeline.framing.name == "right_wrong");
  CHECK(pipeline.fusion_weight == 0.0);
}

TEST_CASE("missing config files and bad json are io errors") {
  CHECK_THROWS_WITH_AS(RunConfig::from_file("/does/not/exist.json"), doctest::Contains("io"),
                       Error);
  const auto path = std::filesystem::temp_directory_path() / "retkit_bad_config.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains("io"), Error);
  std::filesystem::remove(path);
}
