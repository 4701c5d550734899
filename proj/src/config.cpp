#include "retkit/config.hpp"

#include <fstream>

namespace retkit {

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "config " + path.string() + ": " + e.what());
  }
  RunConfig config;
  config.apply_json(j);
  return config;
}

void RunConfig::apply_json(const nlohmann::json& j) {
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    if (b.is_string()) {
      backend_id = b.get<std::string>();
    } else {
      if (b.contains("id")) backend_id = b.at("id").get<std::string>();
      nlohmann::json params = b;
      params.erase("id");
      backend_params.update(params);
    }
  }
  if (j.contains("tap")) tap_spec = j.at("tap").get<std::string>();
  if (j.contains("flags")) flags_spec = j.at("flags").get<std::string>();
  if (j.contains("task_hint")) task_hint = j.at("task_hint").get<std::string>();
  if (j.contains("framing")) framing = j.at("framing").get<std::string>();
  if (j.contains("task")) task_id = j.at("task").get<std::string>();
  if (j.contains("K")) top_k = j.at("K").get<int>();
  if (j.contains("M")) rerank_pool = j.at("M").get<int>();
  if (j.contains("jobs")) jobs = j.at("jobs").get<int>();
  if (j.contains("fusion")) fusion_weight = j.at("fusion").get<double>();
  if (j.contains("max_new_tokens")) max_new_tokens = j.at("max_new_tokens").get<int>();
  if (j.contains("templates")) templates_path = j.at("templates").get<std::string>();
  if (j.contains("eval")) eval_axes = j.at("eval");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json backend = backend_params;
  backend["id"] = backend_id;
  return {{"backend", backend},
          {"tap", tap_spec},
          {"flags", flags_spec},
          {"task_hint", task_hint},
          {"framing", framing},
          {"task", task_id},
          {"K", top_k},
          {"M", rerank_pool},
          {"jobs", jobs},
          {"fusion", fusion_weight},
          {"max_new_tokens", max_new_tokens},
          {"templates", templates_path},
          {"eval", eval_axes}};
}

BackendPtr RunConfig::make_backend() const {
  return BackendRegistry::instance().create(backend_id, backend_params);
}

PromptTemplates RunConfig::templates() const {
  if (templates_path.empty()) return PromptTemplates::builtin();
  return PromptTemplates::load(templates_path);
}

SubLayerTap RunConfig::resolved_tap(const CausalBackend& backend) const {
  return parse_tap(tap_spec, backend.descriptor().layers);
}

FramingConfig RunConfig::framing_config(const PromptTemplates& templates) const {
  return FramingConfig::preset(framing, templates, task_id);
}

EmbedConfig RunConfig::embed_config(const CausalBackend& backend,
                                    const PromptTemplates& templates) const {
  EmbedConfig config;
  config.tap = resolved_tap(backend);
  config.flags = prompt_flags();
  config.task_hint = task_hint;
  config.templates = &templates;
  return config;
}

PipelineConfig RunConfig::pipeline_config(const CausalBackend& backend,
                                          const PromptTemplates& templates) const {
  PipelineConfig config;
  config.embed = embed_config(backend, templates);
  config.framing = framing_config(templates);
  config.fusion_weight = fusion_weight;
  config.jobs = jobs;
  config.max_new_tokens = max_new_tokens;
  return config;
}

std::string EvalCell::file_stem() const {
  std::string tap_part = tap;
  for (char& c : tap_part) {
    if (c == '@' || c == ':' || c == '=') c = '_';
    if (c == '-') c = 'm';
  }
  return "cell_" + tap_part + "__" + prompt + "__" + framing + "__M" + std::to_string(rerank_pool);
}

std::vector<EvalCell> expand_eval_grid(const RunConfig& config) {
  auto axis = [&](const char* name, const std::string& fallback) {
    std::vector<std::string> values;
    if (config.eval_axes.contains(name)) {
      for (const auto& v : config.eval_axes.at(name)) values.push_back(v.get<std::string>());
    }
    if (values.empty()) values.push_back(fallback);
    return values;
  };
  std::vector<int> pools;
  if (config.eval_axes.contains("pool_sizes")) {
    for (const auto& v : config.eval_axes.at("pool_sizes")) pools.push_back(v.get<int>());
  }
  if (pools.empty()) pools.push_back(config.rerank_pool);

  std::vector<EvalCell> cells;
  for (const auto& tap : axis("taps", config.tap_spec)) {
    for (const auto& prompt : axis("prompts", config.flags_spec)) {
      for (const auto& framing : axis("framings", config.framing)) {
        for (int pool : pools) {
          cells.push_back({tap, prompt, framing, pool});
        }
      }
    }
  }
  return cells;
}

}  // namespace retkit
