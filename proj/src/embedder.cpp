#include "retkit/embedder.hpp"

#include <bit>
#include <fstream>
#include <optional>

namespace retkit {

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Text: return "text";
    case SegmentKind::ImageRef: return "image";
    case SegmentKind::VideoRef: return "video";
    case SegmentKind::AudioRef: return "audio";
  }
  return "text";
}

SegmentKind segment_kind_from_string(std::string_view s) {
  if (s == "text") return SegmentKind::Text;
  if (s == "image") return SegmentKind::ImageRef;
  if (s == "video") return SegmentKind::VideoRef;
  if (s == "audio") return SegmentKind::AudioRef;
  throw Error(ErrorCode::InvalidArgument, "unknown segment kind '" + std::string(s) + "'");
}

ModalityInput ModalityInput::text(std::string payload, Role role) {
  ModalityInput input;
  input.segments.push_back({SegmentKind::Text, std::move(payload)});
  input.role = role;
  return input;
}

void ModalityInput::validate() const {
  if (segments.empty()) {
    throw Error(ErrorCode::EmptyInput, "input needs at least one segment");
  }
}

std::string ModalityInput::rendered_content() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out += ' ';
    out += segments[i].kind == SegmentKind::Text ? segments[i].payload : kMediaMarker;
  }
  return out;
}

PromptFlags PromptFlags::parse(std::string_view spec) {
  PromptFlags flags;
  if (spec.empty() || spec == "none" || spec == "a") return flags;
  if (spec == "b") return {.semantic_ground = true};
  if (spec == "c") return {.semantic_ground = true, .noise_suppress = true};
  if (spec == "d" || spec == "all") {
    return {.task_align = true, .semantic_ground = true, .noise_suppress = true};
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    std::string_view item = spec.substr(start, comma == std::string_view::npos ? spec.size() - start
                                                                               : comma - start);
    if (item == "task" || item == "task_align") {
      flags.task_align = true;
    } else if (item == "ground" || item == "semantic_ground") {
      flags.semantic_ground = true;
    } else if (item == "noise" || item == "noise_suppress") {
      flags.noise_suppress = true;
    } else if (!item.empty() && item != "none") {
      throw Error(ErrorCode::InvalidArgument, "unknown prompt flag '" + std::string(item) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return flags;
}

std::string PromptFlags::to_string() const {
  std::string out;
  if (task_align) out += "task,";
  if (semantic_ground) out += "ground,";
  if (noise_suppress) out += "noise,";
  if (out.empty()) return "none";
  out.pop_back();
  return out;
}

namespace {

std::string replace_all(std::string text, std::string_view name, std::string_view value) {
  const std::string needle = "{" + std::string(name) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

PromptTemplates make_builtin() {
  PromptTemplates t;
  t.summary_line = "Summary above content in one word:";
  t.task_align_query = "You are reqired to assess if the above content is related to {hint}.";
  t.task_align_target = "You are reqired to assess if {hint} is related to the above content.";
  t.semantic_ground = "Capture the semantics of the above content.";
  t.noise_suppress = "Do not use function words, prepositions, or symbols.";
  t.generic_task_hint = "the retrieval counterpart";
  t.rerank_mcq =
      "Task: Determine whether the candidate matches the query.\n"
      "Query: {query}\n"
      "Candidate: {candidate}\n"
      "A. Yes, the candidate fully matches the query.\n"
      "B. No, the candidate does not match or only partially matches.\n";
  t.rerank_binary =
      "Task: Determine whether the candidate matches the query.\n"
      "Query: {query}\n"
      "Candidate: {candidate}\n"
      "Answer only with '{label1}' or '{label2}'.\n";
  t.context_free = "Reply only with '{label1}' or '{label2}'";
  t.rag =
      "Context:\n"
      "{evidence}\n"
      "Question: {question}\n"
      "Answer:";
  return t;
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = make_builtin();
  return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read template file " + path.string());

  std::map<std::string, std::string> sections;
  std::string line, current;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      sections[current];
      continue;
    }
    if (current.empty()) continue;  // preamble comments
    sections[current] += line;
    sections[current] += '\n';
  }
  auto section = [&](const std::string& name) -> std::optional<std::string> {
    auto it = sections.find(name);
    if (it == sections.end()) return std::nullopt;
    std::string body = it->second;
    while (!body.empty() && body.back() == '\n') body.pop_back();
    return body;
  };

  PromptTemplates t = builtin();
  if (auto v = section("summary")) t.summary_line = *v;
  if (auto v = section("task_align_query")) t.task_align_query = *v;
  if (auto v = section("task_align_target")) t.task_align_target = *v;
  if (auto v = section("semantic_ground")) t.semantic_ground = *v;
  if (auto v = section("noise_suppress")) t.noise_suppress = *v;
  if (auto v = section("generic_task_hint")) t.generic_task_hint = *v;
  if (auto v = section("rerank_mcq")) t.rerank_mcq = *v + "\n";
  if (auto v = section("rerank_binary")) t.rerank_binary = *v + "\n";
  if (auto v = section("context_free")) t.context_free = *v;
  if (auto v = section("rag")) t.rag = *v;
  for (const auto& [name, _] : sections) {
    if (name.starts_with("rerank_mcq:")) {
      t.task_overrides[name.substr(std::string("rerank_mcq:").size())] = *section(name) + "\n";
    }
  }
  return t;
}

const std::string& PromptTemplates::mcq_for_task(const std::string& task_id) const {
  if (!task_id.empty()) {
    if (auto it = task_overrides.find(task_id); it != task_overrides.end()) return it->second;
  }
  return rerank_mcq;
}

PromptSpec build_embed_prompt(const ModalityInput& input, const PromptFlags& flags,
                              const std::string& task_hint, const PromptTemplates& templates) {
  input.validate();
  PromptSpec spec;
  spec.flags = flags;
  spec.task_hint = task_hint;
  spec.template_id = "embed";

  std::string text = input.rendered_content();
  if (flags.task_align) {
    spec.template_id += "+task";
    std::string hint = task_hint;
    if (hint.empty()) {
      hint = templates.generic_task_hint;
      spec.generic_task_hint = true;
    }
    const std::string& sentence =
        input.role == Role::Query ? templates.task_align_query : templates.task_align_target;
    text += '\n';
    text += replace_all(sentence, "hint", hint);
  }
  if (flags.semantic_ground) {
    spec.template_id += "+ground";
    text += '\n';
    text += templates.semantic_ground;
  }
  if (flags.noise_suppress) {
    spec.template_id += "+noise";
    text += '\n';
    text += templates.noise_suppress;
  }
  text += '\n';
  text += templates.summary_line;
  spec.rendered_text = std::move(text);
  return spec;
}

Embedder::Embedder(BackendPtr backend) : backend_(std::move(backend)) {
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "embedder needs a backend");
}

SubLayerTap Embedder::default_tap() const {
  return SubLayerTap::attn(backend_->descriptor().layers);
}

EmbeddingRecord Embedder::embed(const ModalityInput& input, const EmbedConfig& config,
                                const std::string& input_id) const {
  const PromptTemplates& templates =
      config.templates != nullptr ? *config.templates : PromptTemplates::builtin();
  PromptSpec spec = build_embed_prompt(input, config.flags, config.task_hint, templates);
  TokenSequence tokens = backend_->tokenize(spec.rendered_text);
  const SubLayerTap tap = config.tap.value_or(default_tap());

  // One forward pass covers both the greedy decode (y* is recorded in the
  // bundle for the probes) and every last-token tap.
  auto [y_star, bundle] = backend_->generate_greedy_token(tokens);
  (void)y_star;
  Vector state = tap.position == kLastToken
                     ? bundle.state(tap)
                     : backend_->forward_with_taps(tokens, {tap}).state(tap);

  EmbeddingRecord record;
  record.vector = l2_normalized(state);
  record.backend_id = backend_->descriptor().id;
  record.tap = tap;
  record.prompt_hash = fnv1a64_hex(spec.rendered_text);
  record.input_id = input_id;
  return record;
}

Embedder::BatchResult Embedder::embed_batch(const std::vector<ModalityInput>& inputs,
                                            const EmbedConfig& config,
                                            const std::vector<std::string>& input_ids,
                                            int jobs) const {
  if (!input_ids.empty() && input_ids.size() != inputs.size()) {
    throw Error(ErrorCode::InvalidArgument, "input_ids size does not match inputs");
  }
  BatchResult result;
  result.records.resize(inputs.size());
  std::vector<std::string> item_errors(inputs.size());

  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    const std::string& id = input_ids.empty() ? std::string() : input_ids[i];
    try {
      result.records[i] = embed(inputs[i], config, id);
    } catch (const std::exception& e) {
      item_errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!result.records[i].has_value()) {
      result.errors.push_back(
          {i, input_ids.empty() ? std::string() : input_ids[i], item_errors[i]});
    }
  }
  return result;
}

EmbeddingStore EmbeddingStore::from_records(const std::vector<EmbeddingRecord>& records) {
  EmbeddingStore store;
  if (records.empty()) return store;
  store.backend_id = records.front().backend_id;
  store.tap = records.front().tap;
  store.dim = static_cast<int>(records.front().vector.size());
  store.ids.reserve(records.size());
  store.vectors.resize(static_cast<Eigen::Index>(records.size()), store.dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.vector.size() != store.dim) {
      throw Error(ErrorCode::DimensionMismatch, "mixed embedding dimensions in store");
    }
    if (rec.backend_id != store.backend_id || rec.tap != store.tap) {
      throw Error(ErrorCode::InvalidArgument, "mixed backend or tap in store");
    }
    store.ids.push_back(rec.input_id);
    store.vectors.row(static_cast<Eigen::Index>(i)) = rec.vector;
  }
  return store;
}

std::vector<EmbeddingRecord> EmbeddingStore::to_records() const {
  std::vector<EmbeddingRecord> records;
  records.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EmbeddingRecord record;
    record.vector = vectors.row(static_cast<Eigen::Index>(i));
    record.backend_id = backend_id;
    record.tap = tap;
    record.input_id = ids[i];
    records.push_back(std::move(record));
  }
  return records;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little,
                "store format is little-endian only");
  nlohmann::json header = {{"backend_id", backend_id},
                           {"count", ids.size()},
                           {"d", dim},
                           {"ids", ids},
                           {"tap", to_string(tap)}};
  if (!config.empty()) header["config"] = config;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write store " + path.string());
  out << header.dump() << '\n';
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      const float value = static_cast<float>(vectors(i, j));
      out.write(reinterpret_cast<const char*>(&value), sizeof(float));
    }
  }
  if (!out) throw Error(ErrorCode::Io, "short write to store " + path.string());
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read store " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw Error(ErrorCode::Io, "store " + path.string() + " missing header");
  }
  nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded()) {
    throw Error(ErrorCode::Io, "store " + path.string() + " has a malformed header");
  }

  EmbeddingStore store;
  store.backend_id = header.at("backend_id").get<std::string>();
  store.dim = header.at("d").get<int>();
  store.ids = header.at("ids").get<std::vector<std::string>>();
  const auto count = header.at("count").get<std::size_t>();
  if (count != store.ids.size()) {
    throw Error(ErrorCode::Io, "store header count does not match ids");
  }
  // Tap layer is already concrete in stores; layer bound is not re-checked here.
  store.tap = parse_tap(header.at("tap").get<std::string>(), 1 << 20);
  if (header.contains("config")) store.config = header.at("config");

  store.vectors.resize(static_cast<Eigen::Index>(count), store.dim);
  for (Eigen::Index i = 0; i < store.vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < store.vectors.cols(); ++j) {
      float value = 0.0f;
      in.read(reinterpret_cast<char*>(&value), sizeof(float));
      store.vectors(i, j) = static_cast<double>(value);
    }
  }
  if (!in) throw Error(ErrorCode::Io, "store " + path.string() + " truncated");
  return store;
}

}  // namespace retkit
