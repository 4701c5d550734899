#include "retkit/retrieval.hpp"

#include <algorithm>
#include <fstream>

namespace retkit {

VectorIndex::VectorIndex(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "index dimension must be >= 1");
}

VectorIndex::AddReport VectorIndex::add(const std::string& id, const Vector& vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector of size " + std::to_string(vector.size()) + " in index of dim " +
                    std::to_string(dim_));
  }
  if (std::abs(vector.norm() - 1.0) > 1e-4) {
    throw Error(ErrorCode::InvalidArgument, "index stores unit-norm vectors; got norm " +
                                                std::to_string(vector.norm()));
  }
  AddReport report;
  if (auto it = position_.find(id); it != position_.end()) {
    vectors_[it->second] = vector;
    report.replaced.push_back(id);
    return report;
  }
  position_[id] = ids_.size();
  ids_.push_back(id);
  vectors_.push_back(vector);
  report.added = 1;
  return report;
}

VectorIndex::AddReport VectorIndex::add(const std::vector<EmbeddingRecord>& records) {
  AddReport report;
  for (const auto& record : records) {
    AddReport one = add(record.input_id, record.vector);
    report.added += one.added;
    report.replaced.insert(report.replaced.end(), one.replaced.begin(), one.replaced.end());
  }
  return report;
}

std::vector<std::pair<std::string, double>> VectorIndex::search(const Vector& query,
                                                                int k) const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "search k must be >= 1");
  if (query.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query dimension does not match index");
  }
  const Vector q = l2_normalized(query);

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    scored.push_back({ids_[i], q.dot(vectors_[i])});
  }
  const auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top),
                    scored.end(), better);
  scored.resize(top);
  return scored;
}

VectorIndex VectorIndex::from_store(const EmbeddingStore& store) {
  VectorIndex index(store.dim);
  for (std::size_t i = 0; i < store.ids.size(); ++i) {
    index.add(store.ids[i], store.vectors.row(static_cast<Eigen::Index>(i)));
  }
  return index;
}

nlohmann::json CorpusRecord::to_json() const {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& segment : input.segments) {
    segments.push_back({{"kind", std::string(to_string(segment.kind))},
                        {"payload", segment.payload}});
  }
  return {{"id", id}, {"segments", segments}, {"gold_for", gold_for}, {"meta", meta}};
}

CorpusRecord CorpusRecord::from_json(const nlohmann::json& j) {
  CorpusRecord record;
  if (!j.contains("id") || !j.at("id").is_string()) {
    throw Error(ErrorCode::InvalidArgument, "record missing string 'id'");
  }
  record.id = j.at("id").get<std::string>();
  if (!j.contains("segments") || !j.at("segments").is_array() || j.at("segments").empty()) {
    throw Error(ErrorCode::InvalidArgument, "record needs a nonempty 'segments' array");
  }
  for (const auto& seg : j.at("segments")) {
    record.input.segments.push_back(
        {segment_kind_from_string(seg.at("kind").get<std::string>()),
         seg.at("payload").get<std::string>()});
  }
  if (j.contains("gold_for")) record.gold_for = j.at("gold_for").get<std::vector<std::string>>();
  if (j.contains("meta")) record.meta = j.at("meta");
  return record;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read corpus " + path.string());
  CorpusLoadResult result;
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      CorpusRecord record = CorpusRecord::from_json(j);
      if (!seen.insert(record.id).second) {
        throw Error(ErrorCode::InvalidArgument, "duplicate id '" + record.id + "'");
      }
      result.records.push_back(std::move(record));
    } catch (const std::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

void save_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write corpus " + path.string());
  for (const auto& record : records) out << record.to_json().dump() << '\n';
}

std::map<std::string, std::set<std::string>> gold_map(const std::vector<CorpusRecord>& corpus) {
  std::map<std::string, std::set<std::string>> gold;
  for (const auto& record : corpus) {
    for (const auto& query_id : record.gold_for) gold[query_id].insert(record.id);
  }
  return gold;
}

Pipeline::Pipeline(BackendPtr backend, PipelineConfig config)
    : backend_(backend),
      embedder_(backend),
      config_(std::move(config)),
      index_(backend ? backend->descriptor().hidden_dim : 0) {}

std::vector<Embedder::BatchItemError> Pipeline::add_corpus(
    const std::vector<CorpusRecord>& records) {
  std::vector<ModalityInput> inputs;
  std::vector<std::string> input_ids;
  inputs.reserve(records.size());
  input_ids.reserve(records.size());
  for (const auto& record : records) {
    ModalityInput input = record.input;
    input.role = Role::Target;
    inputs.push_back(std::move(input));
    input_ids.push_back(record.id);
  }
  auto batch = embedder_.embed_batch(inputs, config_.embed, input_ids, config_.jobs);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (batch.records[i].has_value()) {
      index_.add(records[i].id, batch.records[i]->vector);
      contents_[records[i].id] = records[i];
    }
  }
  return batch.errors;
}

void Pipeline::add_embeddings(const std::vector<EmbeddingRecord>& records,
                              const std::vector<CorpusRecord>& contents) {
  index_.add(records);
  for (const auto& record : contents) contents_[record.id] = record;
}

std::vector<CandidateScore> Pipeline::search(const ModalityInput& query, int top_k,
                                             int rerank_pool) const {
  if (top_k < 1 || rerank_pool < 1 || rerank_pool > top_k) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= rerank_pool <= top_k");
  }
  if (index_.size() == 0) return {};

  ModalityInput q = query;
  q.role = Role::Query;
  const EmbeddingRecord query_embedding = embedder_.embed(q, config_.embed, "query");
  const auto stage1 = index_.search(query_embedding.vector, top_k);

  const std::size_t pool_size = std::min<std::size_t>(static_cast<std::size_t>(rerank_pool),
                                                      stage1.size());
  std::vector<RerankCandidate> pool;
  pool.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    RerankCandidate candidate;
    candidate.id = stage1[i].first;
    candidate.embed_score = stage1[i].second;
    if (auto it = contents_.find(candidate.id); it != contents_.end()) {
      candidate.input = it->second.input;
      candidate.input.role = Role::Target;
    }
    pool.push_back(std::move(candidate));
  }

  std::vector<CandidateScore> reranked =
      rerank(*backend_, q, pool, config_.framing, TieBreak::EmbedThenId, config_.jobs);
  if (config_.fusion_weight != 0.0) {
    // Optional fusion: blend the rerank probability with the stage-1 cosine
    // mapped to [0, 1]. Weight 0 keeps pure rerank scores.
    const double w = config_.fusion_weight;
    std::vector<CandidateScore>& pool_scores = reranked;
    std::sort(pool_scores.begin(), pool_scores.end(),
              [&](const CandidateScore& a, const CandidateScore& b) {
                if (a.failed != b.failed) return b.failed;
                const double fa = (1.0 - w) * a.relevance + w * (a.embed_score + 1.0) / 2.0;
                const double fb = (1.0 - w) * b.relevance + w * (b.embed_score + 1.0) / 2.0;
                if (fa != fb) return fa > fb;
                return a.candidate_id < b.candidate_id;
              });
  }

  std::vector<CandidateScore> final_scores = std::move(reranked);
  for (std::size_t i = pool_size; i < stage1.size(); ++i) {
    CandidateScore tail;
    tail.candidate_id = stage1[i].first;
    tail.embed_score = stage1[i].second;
    tail.relevance = 0.0;
    tail.reranked = false;
    final_scores.push_back(std::move(tail));
  }
  for (std::size_t i = 0; i < final_scores.size(); ++i) {
    final_scores[i].rank = static_cast<int>(i) + 1;
  }
  return final_scores;
}

RagResult Pipeline::rag_answer(const ModalityInput& question, int top_k, int rerank_pool) const {
  if (index_.size() == 0) throw Error(ErrorCode::EmptyInput, "rag needs a nonempty index");
  RagResult result;
  result.evidence = search(question, top_k, rerank_pool);

  std::string evidence_text;
  int block = 0;
  for (const auto& score : result.evidence) {
    if (!score.reranked) break;  // evidence is the reranked pool
    ++block;
    if (block > 1) evidence_text += '\n';
    evidence_text += '[' + std::to_string(block) + "] ";
    if (auto it = contents_.find(score.candidate_id); it != contents_.end()) {
      evidence_text += it->second.input.rendered_content();
    }
  }

  std::string prompt = PromptTemplates::builtin().rag;
  const auto fill = [&prompt](std::string_view name, const std::string& value) {
    const std::string needle = "{" + std::string(name) + "}";
    if (auto pos = prompt.find(needle); pos != std::string::npos) {
      prompt.replace(pos, needle.size(), value);
    }
  };
  fill("evidence", evidence_text);
  fill("question", question.rendered_content());
  result.prompt_text = prompt;

  try {
    TokenSequence tokens = backend_->tokenize(prompt);
    std::vector<int> generated;
    for (int step = 0; step < config_.max_new_tokens; ++step) {
      const auto [token, bundle] = backend_->generate_greedy_token(tokens);
      (void)bundle;
      if (token == 0 || token == '\n') break;
      generated.push_back(token);
      tokens.ids.push_back(token);
      tokens.text.clear();  // ids are now authoritative
    }
    result.answer_text = backend_->detokenize(generated);
  } catch (const std::exception&) {
    result.answer_text.clear();
    result.generation_failed = true;
  }
  return result;
}

nlohmann::json EvalResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : per_query) {
    rows.push_back({{"query_id", row.query_id}, {"top1_id", row.top1_id}, {"hit", row.hit}});
  }
  return {{"precision_at_1", precision_at_1},
          {"hits", hits},
          {"queries", queries},
          {"skipped_no_gold", skipped_no_gold},
          {"per_query", rows},
          {"config", config}};
}

EvalResult precision_at_1(
    const std::vector<std::pair<std::string, std::vector<CandidateScore>>>& results_per_query,
    const std::map<std::string, std::set<std::string>>& gold, nlohmann::json config) {
  EvalResult result;
  result.config = std::move(config);
  for (const auto& [query_id, scores] : results_per_query) {
    auto gold_it = gold.find(query_id);
    if (gold_it == gold.end() || gold_it->second.empty()) {
      ++result.skipped_no_gold;
      continue;
    }
    if (scores.empty()) {
      throw Error(ErrorCode::EmptyInput, "query '" + query_id + "' has no results");
    }
    PerQueryResult row;
    row.query_id = query_id;
    row.top1_id = scores.front().candidate_id;
    row.hit = gold_it->second.count(row.top1_id) > 0;
    result.hits += row.hit ? 1 : 0;
    result.per_query.push_back(std::move(row));
  }
  result.queries = static_cast<int>(result.per_query.size());
  result.precision_at_1 =
      result.queries == 0 ? 0.0 : static_cast<double>(result.hits) / result.queries;
  return result;
}

EvalResult evaluate_pipeline(Pipeline& pipeline, const std::vector<CorpusRecord>& corpus,
                             const std::vector<CorpusRecord>& queries, int top_k, int rerank_pool,
                             nlohmann::json config_snapshot) {
  const auto errors = pipeline.add_corpus(corpus);
  if (!errors.empty()) {
    throw Error(ErrorCode::BackendFailure,
                "corpus embedding failed for '" + errors.front().input_id + "': " +
                    errors.front().message);
  }
  return evaluate_prepared_pipeline(pipeline, queries, gold_map(corpus), top_k, rerank_pool,
                                    std::move(config_snapshot));
}

EvalResult evaluate_prepared_pipeline(const Pipeline& pipeline,
                                      const std::vector<CorpusRecord>& queries,
                                      const std::map<std::string, std::set<std::string>>& gold,
                                      int top_k, int rerank_pool,
                                      nlohmann::json config_snapshot) {
  std::vector<std::pair<std::string, std::vector<CandidateScore>>> results;
  results.reserve(queries.size());
  for (const auto& query : queries) {
    results.push_back({query.id, pipeline.search(query.input, top_k, rerank_pool)});
  }
  return precision_at_1(results, gold, std::move(config_snapshot));
}

}  // namespace retkit
