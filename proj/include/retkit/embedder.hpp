#pragma once

#include "retkit/backend.hpp"

#include <filesystem>
#include <optional>

namespace retkit {

enum class SegmentKind { Text, ImageRef, VideoRef, AudioRef };

std::string_view to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(std::string_view s);

struct Segment {
  SegmentKind kind = SegmentKind::Text;
  std::string payload;  // text, or a media path
};

enum class Role { Query, Target };

/// One query or candidate: an ordered bundle of text segments and media
/// references. The toy backend renders every media segment as the single
/// reserved placeholder token; real adapters own true media encoding.
struct ModalityInput {
  std::vector<Segment> segments;
  Role role = Role::Target;

  static ModalityInput text(std::string payload, Role role = Role::Target);
  void validate() const;

  /// Segments joined with single spaces; media segments render as the
  /// placeholder marker. Exactly one expansion per segment.
  std::string rendered_content() const;
};

struct PromptFlags {
  bool task_align = false;
  bool semantic_ground = false;
  bool noise_suppress = false;

  bool operator==(const PromptFlags&) const = default;

  /// Cumulative presets "a".."d" (a = none, d = all three), or a comma list
  /// over {task, ground, noise, none}.
  static PromptFlags parse(std::string_view spec);
  std::string to_string() const;
};

struct PromptSpec {
  std::string template_id;
  std::string rendered_text;
  PromptFlags flags;
  std::string task_hint;
  bool generic_task_hint = false;  // set when task_align was requested without a hint
};

/// Named template set backing prompt construction. The built-in set is also
/// shipped verbatim as templates/default.tpl; load() reads that format
/// ("[section]" headers, body until the next header, "{name}" placeholders).
struct PromptTemplates {
  std::string summary_line;
  std::string task_align_query;
  std::string task_align_target;
  std::string semantic_ground;
  std::string noise_suppress;
  std::string generic_task_hint;
  std::string rerank_mcq;
  std::string rerank_binary;
  std::string context_free;
  std::string rag;
  std::map<std::string, std::string> task_overrides;  // "rerank_mcq:<task>" bodies

  static const PromptTemplates& builtin();
  static PromptTemplates load(const std::filesystem::path& path);

  /// MCQ body for a task id, falling back to the default block.
  const std::string& mcq_for_task(const std::string& task_id) const;
};

/// Renders the one-word summary prompt for an input. With all flags off the
/// result is exactly "<content>\n<summary line>"; each enabled flag inserts
/// its sentence (in task/ground/noise order) between content and summary.
PromptSpec build_embed_prompt(const ModalityInput& input, const PromptFlags& flags,
                              const std::string& task_hint = "",
                              const PromptTemplates& templates = PromptTemplates::builtin());

struct EmbedConfig {
  std::optional<SubLayerTap> tap;  // default: (L, AttnOut, LastToken)
  PromptFlags flags;
  std::string task_hint;
  const PromptTemplates* templates = nullptr;  // nullptr -> builtin
};

/// Unit-norm embedding with provenance.
struct EmbeddingRecord {
  Vector vector;
  std::string backend_id;
  SubLayerTap tap;
  std::string prompt_hash;
  std::string input_id;
};

class Embedder {
 public:
  explicit Embedder(BackendPtr backend);

  const CausalBackend& backend() const { return *backend_; }

  /// Tap used when EmbedConfig.tap is unset: final-layer attention output,
  /// last token.
  SubLayerTap default_tap() const;

  EmbeddingRecord embed(const ModalityInput& input, const EmbedConfig& config,
                        const std::string& input_id = "") const;

  struct BatchItemError {
    std::size_t index = 0;
    std::string input_id;
    std::string message;
  };
  struct BatchResult {
    std::vector<std::optional<EmbeddingRecord>> records;  // aligned with inputs
    std::vector<BatchItemError> errors;
  };

  /// Order-preserving batch embedding; per-item failures are collected
  /// instead of aborting the batch.
  BatchResult embed_batch(const std::vector<ModalityInput>& inputs, const EmbedConfig& config,
                          const std::vector<std::string>& input_ids = {}, int jobs = 1) const;

 private:
  BackendPtr backend_;
};

/// Flat embedding store: one JSON header line (backend_id, count, d, ids,
/// tap, plus the producing config when known) followed by count*d row-major
/// little-endian float32 values.
struct EmbeddingStore {
  std::string backend_id;
  int dim = 0;
  SubLayerTap tap;
  std::vector<std::string> ids;
  Matrix vectors;  // count x dim, row per record
  nlohmann::json config = nlohmann::json::object();

  static EmbeddingStore from_records(const std::vector<EmbeddingRecord>& records);
  std::vector<EmbeddingRecord> to_records() const;
  void save(const std::filesystem::path& path) const;
  static EmbeddingStore load(const std::filesystem::path& path);
};

}  // namespace retkit
