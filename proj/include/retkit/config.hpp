#pragma once

#include "retkit/probes.hpp"
#include "retkit/retrieval.hpp"

namespace retkit {

/// Resolved run configuration shared by every CLI command. Values merge in
/// order: defaults, then the --config file, then explicit flags. The full
/// snapshot is embedded in every output artifact.
struct RunConfig {
  std::string backend_id = "toy";
  nlohmann::json backend_params = nlohmann::json::object();  // includes the seed
  std::string tap_spec = "attn@L";
  std::string flags_spec = "none";
  std::string task_hint;
  std::string framing = "mcq";
  std::string task_id;  // selects a per-task MCQ body when the template file has one
  int top_k = 8;        // K
  int rerank_pool = 4;  // M
  int jobs = 1;
  double fusion_weight = 0.0;
  int max_new_tokens = 16;
  std::string templates_path;
  nlohmann::json eval_axes = nlohmann::json::object();

  static RunConfig from_file(const std::filesystem::path& path);
  void apply_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  BackendPtr make_backend() const;
  PromptTemplates templates() const;
  SubLayerTap resolved_tap(const CausalBackend& backend) const;
  PromptFlags prompt_flags() const { return PromptFlags::parse(flags_spec); }
  FramingConfig framing_config(const PromptTemplates& templates) const;
  EmbedConfig embed_config(const CausalBackend& backend, const PromptTemplates& templates) const;
  PipelineConfig pipeline_config(const CausalBackend& backend,
                                 const PromptTemplates& templates) const;
};

/// One cell of an ablation grid: the run config with tap / prompt flags /
/// framing / pool size pinned to concrete values.
struct EvalCell {
  std::string tap;
  std::string prompt;
  std::string framing;
  int rerank_pool = 0;

  std::string file_stem() const;
};

/// Expands the config's eval axes (missing axes fall back to the single
/// configured value).
std::vector<EvalCell> expand_eval_grid(const RunConfig& config);

}  // namespace retkit
