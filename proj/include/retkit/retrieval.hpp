#pragma once

#include "retkit/reranker.hpp"

#include <set>
#include <unordered_map>

namespace retkit {

/// Exact cosine index over unit-norm vectors. Search is a brute-force dot
/// product scan; any approximate drop-in must pass the same equivalence
/// tests at recall 1.0. Concurrent reads are safe; writes need exclusive
/// access.
class VectorIndex {
 public:
  explicit VectorIndex(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  struct AddReport {
    std::size_t added = 0;
    std::vector<std::string> replaced;  // duplicate ids, latest vector kept
  };

  AddReport add(const std::vector<EmbeddingRecord>& records);
  AddReport add(const std::string& id, const Vector& vector);

  /// Exact top-k by cosine, ties by id ascending; k past the record count
  /// returns everything.
  std::vector<std::pair<std::string, double>> search(const Vector& query, int k) const;

  bool contains(const std::string& id) const { return position_.count(id) > 0; }

  static VectorIndex from_store(const EmbeddingStore& store);

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::vector<Vector> vectors_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct CorpusRecord {
  std::string id;
  ModalityInput input;
  std::vector<std::string> gold_for;  // query ids this record is gold for (eval only)
  nlohmann::json meta = nlohmann::json::object();

  nlohmann::json to_json() const;
  static CorpusRecord from_json(const nlohmann::json& j);
};

struct CorpusLoadResult {
  std::vector<CorpusRecord> records;
  struct LineError {
    int line = 0;
    std::string message;
  };
  std::vector<LineError> errors;  // malformed lines, collected not fatal
};

/// JSONL corpus: {"id", "segments": [{"kind", "payload"}], "gold_for", "meta"}.
CorpusLoadResult load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

/// gold_for inverted into query id -> gold candidate ids.
std::map<std::string, std::set<std::string>> gold_map(const std::vector<CorpusRecord>& corpus);

struct PipelineConfig {
  EmbedConfig embed;        // used for both corpus and query embeddings
  FramingConfig framing;
  double fusion_weight = 0.0;  // 0 = pure rerank scores inside the pool
  int jobs = 1;
  int max_new_tokens = 16;  // RAG answer budget
};

struct RagResult {
  std::string answer_text;
  std::string prompt_text;  // rendered generation prompt, for auditing
  std::vector<CandidateScore> evidence;
  bool generation_failed = false;
};

/// Two-stage search: embedding top-K candidate retrieval, then reranking of
/// the top-M pool. The K-M tail keeps its embedding order below the pool.
class Pipeline {
 public:
  Pipeline(BackendPtr backend, PipelineConfig config);

  const CausalBackend& backend() const { return *backend_; }
  const PipelineConfig& config() const { return config_; }
  VectorIndex& index() { return index_; }
  const VectorIndex& index() const { return index_; }

  /// Embeds and indexes corpus records (Target role). Returns per-item
  /// embedding errors, if any.
  std::vector<Embedder::BatchItemError> add_corpus(const std::vector<CorpusRecord>& records);

  void add_embeddings(const std::vector<EmbeddingRecord>& records,
                      const std::vector<CorpusRecord>& contents);

  std::vector<CandidateScore> search(const ModalityInput& query, int top_k, int rerank_pool) const;

  /// search + answer generation over the reranked evidence, all on the same
  /// backend. Generation failures flag the result but keep the evidence.
  RagResult rag_answer(const ModalityInput& question, int top_k, int rerank_pool) const;

 private:
  BackendPtr backend_;
  Embedder embedder_;
  PipelineConfig config_;
  VectorIndex index_;
  std::map<std::string, CorpusRecord> contents_;
};

struct PerQueryResult {
  std::string query_id;
  std::string top1_id;
  bool hit = false;
};

struct EvalResult {
  double precision_at_1 = 0.0;  // hits / evaluated queries, exactly
  int hits = 0;
  int queries = 0;
  int skipped_no_gold = 0;
  std::vector<PerQueryResult> per_query;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Precision@1 over per-query result lists: hit iff the top-1 id is in the
/// query's gold set. Queries without gold are excluded and counted.
EvalResult precision_at_1(
    const std::vector<std::pair<std::string, std::vector<CandidateScore>>>& results_per_query,
    const std::map<std::string, std::set<std::string>>& gold,
    nlohmann::json config = nlohmann::json::object());

/// Full harness pass: index the corpus, run every query through the
/// two-stage search, score Precision@1.
EvalResult evaluate_pipeline(Pipeline& pipeline, const std::vector<CorpusRecord>& corpus,
                             const std::vector<CorpusRecord>& queries, int top_k, int rerank_pool,
                             nlohmann::json config_snapshot = nlohmann::json::object());

/// Same, over a pipeline whose index is already populated (lets ablation
/// grids reuse corpus embeddings across framing and pool-size cells).
EvalResult evaluate_prepared_pipeline(const Pipeline& pipeline,
                                      const std::vector<CorpusRecord>& queries,
                                      const std::map<std::string, std::set<std::string>>& gold,
                                      int top_k, int rerank_pool,
                                      nlohmann::json config_snapshot = nlohmann::json::object());

}  // namespace retkit
