// retkit command line: embed / index / search / rerank / eval / probe / rag
// plus a fixture generator. Every artifact embeds its resolved config and is
// byte-identical across reruns with the same config and seed.

#include "retkit/config.hpp"
#include "retkit/fixtures.hpp"
#include "retkit/probes.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace retkit;

struct CliOverrides {
  std::string config_path;
  std::string backend;
  std::string tap;
  std::string flags;
  std::string framing;
  std::string templates;
  std::string task;
  std::int64_t seed = -1;
  int top_k = -1;
  int rerank_pool = -1;
  int jobs = -1;
  double fusion = -1.0;
};

void add_common_options(CLI::App* cmd, CliOverrides& overrides) {
  cmd->add_option("--config", overrides.config_path, "JSON config file (flags override it)");
  cmd->add_option("--backend", overrides.backend, "backend id (toy, scripted, ...)");
  cmd->add_option("--seed", overrides.seed, "backend seed override");
  cmd->add_option("--tap", overrides.tap, "embedding tap, e.g. attn@L, mlp@L-1");
  cmd->add_option("--flags", overrides.flags,
                  "prompt constraints: none|a..d or list of task,ground,noise");
  cmd->add_option("--framing", overrides.framing, "rerank framing preset");
  cmd->add_option("--K", overrides.top_k, "stage-1 candidates");
  cmd->add_option("--M", overrides.rerank_pool, "rerank pool size (<= K)");
  cmd->add_option("--jobs", overrides.jobs, "worker threads");
  cmd->add_option("--fusion", overrides.fusion, "embed-score fusion weight in the pool");
  cmd->add_option("--templates", overrides.templates, "prompt template file");
  cmd->add_option("--task", overrides.task, "task id for per-task MCQ templates");
}

RunConfig resolve_config(const CliOverrides& overrides) {
  RunConfig config;
  if (!overrides.config_path.empty()) config = RunConfig::from_file(overrides.config_path);
  if (!overrides.backend.empty()) config.backend_id = overrides.backend;
  if (overrides.seed >= 0) {
    config.backend_params["seed"] = static_cast<std::uint64_t>(overrides.seed);
  }
  if (!overrides.tap.empty()) config.tap_spec = overrides.tap;
  if (!overrides.flags.empty()) config.flags_spec = overrides.flags;
  if (!overrides.framing.empty()) config.framing = overrides.framing;
  if (!overrides.templates.empty()) config.templates_path = overrides.templates;
  if (!overrides.task.empty()) config.task_id = overrides.task;
  if (overrides.top_k > 0) config.top_k = overrides.top_k;
  if (overrides.rerank_pool > 0) config.rerank_pool = overrides.rerank_pool;
  if (overrides.jobs > 0) config.jobs = overrides.jobs;
  if (overrides.fusion >= 0.0) config.fusion_weight = overrides.fusion;
  return config;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string fmt_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void emit_json(const nlohmann::json& payload, const std::string& out_path) {
  const std::string text = payload.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

std::vector<CorpusRecord> load_corpus_strict(const std::filesystem::path& path,
                                             int& error_records) {
  const CorpusLoadResult loaded = load_corpus(path);
  for (const auto& err : loaded.errors) {
    std::cerr << path.string() << ":" << err.line << ": " << err.message << "\n";
  }
  error_records += static_cast<int>(loaded.errors.size());
  return loaded.records;
}

ModalityInput query_from_text(const std::string& text) {
  return ModalityInput::text(text, Role::Query);
}

// ---------------------------------------------------------------------------

int cmd_embed(const CliOverrides& overrides, const std::string& corpus_path,
              const std::string& out_path, const std::string& role) {
  const RunConfig config = resolve_config(overrides);
  int error_records = 0;
  const auto records = load_corpus_strict(corpus_path, error_records);

  const BackendPtr backend = config.make_backend();
  const PromptTemplates templates = config.templates();
  Embedder embedder(backend);
  const EmbedConfig embed_config = config.embed_config(*backend, templates);

  std::vector<ModalityInput> inputs;
  std::vector<std::string> ids;
  for (const auto& record : records) {
    ModalityInput input = record.input;
    input.role = role == "query" ? Role::Query : Role::Target;
    inputs.push_back(std::move(input));
    ids.push_back(record.id);
  }
  const auto batch = embedder.embed_batch(inputs, embed_config, ids, config.jobs);
  for (const auto& err : batch.errors) {
    std::cerr << "embed failed for '" << err.input_id << "': " << err.message << "\n";
    ++error_records;
  }

  std::vector<EmbeddingRecord> ok;
  for (const auto& record : batch.records) {
    if (record.has_value()) ok.push_back(*record);
  }
  EmbeddingStore store = EmbeddingStore::from_records(ok);
  if (ok.empty()) {
    store.backend_id = backend->descriptor().id;
    store.dim = backend->descriptor().hidden_dim;
    store.tap = config.resolved_tap(*backend);
  }
  store.config = config.to_json();
  store.save(out_path);
  std::cout << "wrote " << store.ids.size() << " embeddings of dim " << store.dim << " to "
            << out_path << "\n";
  return error_records == 0 ? 0 : 1;
}

int cmd_index(const CliOverrides& overrides, const std::string& corpus_path,
              const std::string& store_path, const std::string& out_path) {
  if (!corpus_path.empty() && !out_path.empty()) {
    return cmd_embed(overrides, corpus_path, out_path, "target");
  }
  const EmbeddingStore store = EmbeddingStore::load(store_path);
  const VectorIndex index = VectorIndex::from_store(store);  // validates norms and dims
  std::cout << "index ok: " << index.size() << " vectors of dim " << index.dim() << " from "
            << store.backend_id << " tap " << to_string(store.tap) << "\n";
  return 0;
}

Pipeline make_pipeline_from_store(const RunConfig& config, const BackendPtr& backend,
                                  const PromptTemplates& templates,
                                  const std::string& store_path,
                                  const std::vector<CorpusRecord>& corpus) {
  const EmbeddingStore store = EmbeddingStore::load(store_path);
  if (store.backend_id != backend->descriptor().id) {
    std::cerr << "warning: store was built by '" << store.backend_id << "', running with '"
              << backend->descriptor().id << "'\n";
  }
  Pipeline pipeline(backend, config.pipeline_config(*backend, templates));
  pipeline.add_embeddings(store.to_records(), corpus);
  return pipeline;
}

int cmd_search(const CliOverrides& overrides, const std::string& store_path,
               const std::string& corpus_path, const std::string& query_text,
               const std::string& queries_path, const std::string& out_path) {
  const RunConfig config = resolve_config(overrides);
  int error_records = 0;
  const auto corpus = load_corpus_strict(corpus_path, error_records);
  const BackendPtr backend = config.make_backend();
  const PromptTemplates templates = config.templates();
  Pipeline pipeline = make_pipeline_from_store(config, backend, templates, store_path, corpus);

  std::vector<std::pair<std::string, ModalityInput>> queries;
  if (!query_text.empty()) queries.push_back({"cli-query", query_from_text(query_text)});
  if (!queries_path.empty()) {
    for (const auto& record : load_corpus_strict(queries_path, error_records)) {
      queries.push_back({record.id, record.input});
    }
  }
  if (queries.empty()) {
    std::cerr << "search needs --query or --queries\n";
    return 2;
  }

  nlohmann::json results = nlohmann::json::array();
  for (const auto& [id, input] : queries) {
    nlohmann::json row = {{"query_id", id}, {"results", nlohmann::json::array()}};
    for (const auto& score : pipeline.search(input, config.top_k, config.rerank_pool)) {
      if (score.failed) ++error_records;
      row["results"].push_back(score.to_json());
    }
    results.push_back(std::move(row));
  }
  emit_json({{"config", config.to_json()}, {"queries", results}}, out_path);
  return error_records == 0 ? 0 : 1;
}

int cmd_rerank(const CliOverrides& overrides, const std::string& query_text,
               const std::string& candidates_path, const std::string& out_path) {
  const RunConfig config = resolve_config(overrides);
  int error_records = 0;
  const auto records = load_corpus_strict(candidates_path, error_records);
  if (records.empty()) {
    std::cerr << "no candidates in " << candidates_path << "\n";
    return 2;
  }
  const BackendPtr backend = config.make_backend();
  const PromptTemplates templates = config.templates();
  const FramingConfig framing = config.framing_config(templates);

  std::vector<RerankCandidate> candidates;
  for (const auto& record : records) candidates.push_back({record.id, record.input, 0.0});
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& score :
       rerank(*backend, query_from_text(query_text), candidates, framing,
              TieBreak::EmbedThenId, config.jobs)) {
    if (score.failed) ++error_records;
    scores.push_back(score.to_json());
  }
  emit_json({{"config", config.to_json()}, {"results", scores}}, out_path);
  return error_records == 0 ? 0 : 1;
}

int cmd_eval(const CliOverrides& overrides, const std::string& corpus_path,
             const std::string& queries_path, const std::string& out_dir) {
  const RunConfig base = resolve_config(overrides);
  int error_records = 0;
  const auto corpus = load_corpus_strict(corpus_path, error_records);
  const auto queries = load_corpus_strict(queries_path, error_records);
  std::filesystem::create_directories(out_dir);

  const auto cells = expand_eval_grid(base);
  const auto gold = gold_map(corpus);
  nlohmann::json summary = nlohmann::json::array();
  std::string csv = "tap,prompt,framing,M,precision_at_1,queries,hits\n";

  // Corpus embeddings depend only on (tap, prompt); reuse them across the
  // framing and pool-size cells.
  std::string cached_key;
  std::vector<EmbeddingRecord> cached_records;

  for (const auto& cell : cells) {
    RunConfig config = base;
    config.tap_spec = cell.tap;
    config.flags_spec = cell.prompt;
    config.framing = cell.framing;
    config.rerank_pool = cell.rerank_pool;
    config.eval_axes = nlohmann::json::object();

    const BackendPtr backend = config.make_backend();
    const PromptTemplates templates = config.templates();
    nlohmann::json cell_config = config.to_json();
    cell_config["tap"] = to_string(config.resolved_tap(*backend));
    cell_config.erase("eval");

    const std::string key = cell.tap + "\n" + cell.prompt;
    if (key != cached_key) {
      Embedder embedder(backend);
      std::vector<ModalityInput> inputs;
      std::vector<std::string> ids;
      for (const auto& record : corpus) {
        ModalityInput input = record.input;
        input.role = Role::Target;
        inputs.push_back(std::move(input));
        ids.push_back(record.id);
      }
      const auto batch =
          embedder.embed_batch(inputs, config.embed_config(*backend, templates), ids, config.jobs);
      if (!batch.errors.empty()) {
        throw Error(ErrorCode::BackendFailure,
                    "corpus embedding failed for '" + batch.errors.front().input_id + "': " +
                        batch.errors.front().message);
      }
      cached_records.clear();
      for (const auto& record : batch.records) cached_records.push_back(*record);
      cached_key = key;
    }

    Pipeline pipeline(backend, config.pipeline_config(*backend, templates));
    pipeline.add_embeddings(cached_records, corpus);
    const EvalResult eval = evaluate_prepared_pipeline(pipeline, queries, gold, config.top_k,
                                                       config.rerank_pool, cell_config);
    const auto path = std::filesystem::path(out_dir) / (cell.file_stem() + ".json");
    write_text(path, eval.to_json().dump(2) + "\n");

    summary.push_back({{"cell", cell.file_stem()},
                       {"tap", cell.tap},
                       {"prompt", cell.prompt},
                       {"framing", cell.framing},
                       {"M", cell.rerank_pool},
                       {"precision_at_1", eval.precision_at_1},
                       {"queries", eval.queries},
                       {"hits", eval.hits}});
    csv += cell.tap + "," + cell.prompt + "," + cell.framing + "," +
           std::to_string(cell.rerank_pool) + "," + fmt_double(eval.precision_at_1) + "," +
           std::to_string(eval.queries) + "," + std::to_string(eval.hits) + "\n";
    std::cout << cell.file_stem() << " p@1=" << eval.precision_at_1 << "\n";
  }
  write_text(std::filesystem::path(out_dir) / "summary.json",
             nlohmann::json({{"config", base.to_json()}, {"cells", summary}}).dump(2) + "\n");
  write_text(std::filesystem::path(out_dir) / "summary.csv", csv);
  return error_records == 0 ? 0 : 1;
}

int cmd_probe(const CliOverrides& overrides, const std::string& kind,
              const std::string& out_stem, const std::string& corpus_path,
              const std::string& pairs_path, const std::string& text, int top_k, int trials) {
  const RunConfig config = resolve_config(overrides);
  const BackendPtr backend = config.make_backend();
  const PromptTemplates templates = config.templates();
  const std::string stem = out_stem.empty() ? "probe_" + kind : out_stem;

  std::vector<ModalityInput> inputs;
  if (!corpus_path.empty()) {
    int errs = 0;
    for (const auto& record : load_corpus_strict(corpus_path, errs)) {
      inputs.push_back(record.input);
    }
  } else {
    for (const auto& s : default_probe_strings()) inputs.push_back(ModalityInput::text(s));
  }

  nlohmann::json payload;
  std::string csv;
  if (kind == "alpha" || kind == "beta") {
    const auto report =
        kind == "alpha"
            ? sublayer_shift_profile(*backend, inputs, LayerRange::full(*backend),
                                     config.prompt_flags())
            : lexical_alignment_profile(*backend, inputs, LayerRange::full(*backend),
                                        config.prompt_flags());
    payload = report.to_json();
    csv = report.to_csv();
  } else if (kind == "synonym") {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (pairs_path.empty()) {
      pairs = default_synonym_pairs();
    } else {
      std::ifstream in(pairs_path);
      if (!in) throw Error(ErrorCode::Io, "cannot read pairs file " + pairs_path);
      std::string line;
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.empty()) continue;
        pairs.push_back({line.substr(0, comma), line.substr(comma + 1)});
      }
    }
    const auto report = synonym_similarity(*backend, pairs, LayerRange::full(*backend));
    payload = report.to_json();
    csv = report.to_csv();
  } else if (kind == "wordprob") {
    if (text.empty()) {
      std::cerr << "probe wordprob needs --text\n";
      return 2;
    }
    if (top_k > backend->descriptor().vocab_size) {
      std::cerr << "warning: top_k clipped to vocabulary size "
                << backend->descriptor().vocab_size << "\n";
    }
    const auto table = word_probability_table(*backend, ModalityInput::text(text),
                                              config.prompt_flags(), top_k);
    nlohmann::json rows = nlohmann::json::array();
    csv = "token,text,probability\n";
    for (const auto& [token, p] : table) {
      const std::string token_text = backend->detokenize({token});
      rows.push_back({{"token", token}, {"text", token_text}, {"probability", p}});
      std::string safe_text;
      for (const unsigned char c : token_text) {
        if (std::isprint(c) && c != ',' && c != '"') {
          safe_text += static_cast<char>(c);
        } else {
          char hex[8];
          std::snprintf(hex, sizeof hex, "\\x%02x", c);
          safe_text += hex;
        }
      }
      csv += std::to_string(token) + "," + safe_text + "," + fmt_double(p) + "\n";
    }
    payload = {{"kind", "wordprob"},
               {"backend_id", backend->descriptor().id},
               {"input", text},
               {"rows", rows}};
  } else if (kind == "framing") {
    ProbeReport report;
    report.kind = "framing";
    report.backend_id = backend->descriptor().id;
    report.samples = 1;
    nlohmann::json detail = nlohmann::json::object();
    for (const auto& name : FramingConfig::preset_names()) {
      const auto result = framing_bias(*backend, FramingConfig::preset(name, templates), templates);
      report.rows.push_back({0, "", name, result.bias, 0.0});
      detail[name] = {{"bias", result.bias},
                      {"p_positive", result.p_positive},
                      {"averaged_gap", result.averaged_gap}};
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ProbeRow& a, const ProbeRow& b) { return a.label < b.label; });
    report.metadata = detail;
    payload = report.to_json();
    csv = report.to_csv();
  } else if (kind == "gradient") {
    SplitMix64 rng(config.backend_params.value("seed", std::uint64_t{1729}) ^ 0x9E37);
    const int dim = backend->descriptor().hidden_dim;
    const int vocab = backend->descriptor().vocab_size;
    double worst_diff = 0.0, worst_residual = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    csv = "trial,max_abs_diff,span_residual\n";
    for (int t = 0; t < trials; ++t) {
      Vector h(dim);
      for (int i = 0; i < dim; ++i) h[i] = rng.symmetric(2.0);
      const int target = static_cast<int>(rng.next() % static_cast<std::uint64_t>(vocab));
      const auto report = gradient_identity_check(*backend, h, target);
      worst_diff = std::max(worst_diff, report.max_abs_diff);
      worst_residual = std::max(worst_residual, report.span_residual);
      rows.push_back({{"trial", t},
                      {"max_abs_diff", report.max_abs_diff},
                      {"span_residual", report.span_residual}});
      csv += std::to_string(t) + "," + fmt_double(report.max_abs_diff) + "," +
             fmt_double(report.span_residual) + "\n";
    }
    payload = {{"kind", "gradient"},
               {"backend_id", backend->descriptor().id},
               {"trials", trials},
               {"max_abs_diff", worst_diff},
               {"span_residual_max", worst_residual},
               {"rows", rows}};
    std::cout << "gradient check: max_abs_diff=" << worst_diff
              << " span_residual_max=" << worst_residual << "\n";
  } else {
    std::cerr << "unknown probe kind '" << kind
              << "' (alpha|beta|synonym|wordprob|framing|gradient)\n";
    return 2;
  }

  payload["config"] = config.to_json();
  write_text(stem + ".json", payload.dump(2) + "\n");
  write_text(stem + ".csv", csv);
  std::cout << "wrote " << stem << ".json and " << stem << ".csv\n";
  return 0;
}

int cmd_rag(const CliOverrides& overrides, const std::string& store_path,
            const std::string& corpus_path, const std::string& question,
            const std::string& out_path) {
  const RunConfig config = resolve_config(overrides);
  int error_records = 0;
  const auto corpus = load_corpus_strict(corpus_path, error_records);
  const BackendPtr backend = config.make_backend();
  const PromptTemplates templates = config.templates();

  Pipeline pipeline = store_path.empty()
                          ? Pipeline(backend, config.pipeline_config(*backend, templates))
                          : make_pipeline_from_store(config, backend, templates, store_path,
                                                     corpus);
  if (store_path.empty()) {
    for (const auto& err : pipeline.add_corpus(corpus)) {
      std::cerr << "embed failed for '" << err.input_id << "': " << err.message << "\n";
      ++error_records;
    }
  }

  const RagResult result =
      pipeline.rag_answer(query_from_text(question), config.top_k, config.rerank_pool);
  if (result.generation_failed) ++error_records;
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& score : result.evidence) evidence.push_back(score.to_json());
  emit_json({{"config", config.to_json()},
             {"question", question},
             {"answer", result.answer_text},
             {"generation_failed", result.generation_failed},
             {"evidence", evidence}},
            out_path);
  return error_records == 0 ? 0 : 1;
}

int cmd_fixture(const std::string& kind, const std::string& corpus_path,
                const std::string& queries_path, int num_queries, int slots) {
  EvalFixture fixture;
  if (kind == "rank_sweep") {
    fixture = make_rank_sweep_fixture(num_queries, slots);
  } else if (kind == "text") {
    fixture = make_text_fixture(num_queries, slots);
  } else {
    std::cerr << "unknown fixture kind '" << kind << "' (rank_sweep|text)\n";
    return 2;
  }
  save_corpus(corpus_path, fixture.corpus);
  save_corpus(queries_path, fixture.queries);
  std::cout << "wrote " << fixture.corpus.size() << " candidates to " << corpus_path << " and "
            << fixture.queries.size() << " queries to " << queries_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training-free two-stage retrieval toolkit"};
  app.require_subcommand(1);

  CliOverrides overrides;
  std::string corpus_path, queries_path, store_path, out_path, role = "target";
  std::string query_text, probe_kind, probe_text, pairs_path, fixture_kind = "rank_sweep";
  int top_k_words = 10, trials = 100, fixture_queries = 50, fixture_slots = 8;

  auto* embed = app.add_subcommand("embed", "embed a corpus into a flat store");
  add_common_options(embed, overrides);
  embed->add_option("--corpus", corpus_path, "input JSONL corpus")->required();
  embed->add_option("--out", out_path, "output embedding store")->required();
  embed->add_option("--role", role, "embedding role: target (default) or query");

  auto* index = app.add_subcommand("index", "build or inspect an embedding store");
  add_common_options(index, overrides);
  index->add_option("--corpus", corpus_path, "corpus to embed (with --out)");
  index->add_option("--out", out_path, "store to write");
  index->add_option("--store", store_path, "existing store to validate");

  auto* search = app.add_subcommand("search", "two-stage search over an indexed corpus");
  add_common_options(search, overrides);
  search->add_option("--store", store_path, "embedding store")->required();
  search->add_option("--corpus", corpus_path, "corpus JSONL (candidate content)")->required();
  search->add_option("--query", query_text, "single query text");
  search->add_option("--queries", queries_path, "JSONL of query records");
  search->add_option("--out", out_path, "output JSON (stdout if omitted)");

  auto* rr = app.add_subcommand("rerank", "score candidates against one query");
  add_common_options(rr, overrides);
  rr->add_option("--query", query_text, "query text")->required();
  rr->add_option("--candidates", corpus_path, "candidate JSONL")->required();
  rr->add_option("--out", out_path, "output JSON (stdout if omitted)");

  auto* eval = app.add_subcommand("eval", "run the ablation grid and report Precision@1");
  add_common_options(eval, overrides);
  eval->add_option("--corpus", corpus_path, "candidate corpus JSONL")->required();
  eval->add_option("--queries", queries_path, "query JSONL")->required();
  eval->add_option("--out", out_path, "output directory")->required();

  auto* probe = app.add_subcommand("probe", "diagnostic probes over the backend");
  add_common_options(probe, overrides);
  probe->add_option("kind", probe_kind, "alpha|beta|synonym|wordprob|framing|gradient")
      ->required();
  probe->add_option("--out", out_path, "output stem (writes .json and .csv)");
  probe->add_option("--corpus", corpus_path, "probe inputs (default: built-in strings)");
  probe->add_option("--pairs", pairs_path, "synonym pairs file, one 'a,b' per line");
  probe->add_option("--text", probe_text, "input for wordprob");
  probe->add_option("--top-k", top_k_words, "wordprob table size");
  probe->add_option("--trials", trials, "gradient check trials");

  auto* rag = app.add_subcommand("rag", "retrieve evidence and answer with one model");
  add_common_options(rag, overrides);
  rag->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  rag->add_option("--store", store_path, "optional prebuilt embedding store");
  rag->add_option("--question", query_text, "question text")->required();
  rag->add_option("--out", out_path, "output JSON (stdout if omitted)");

  auto* fixture = app.add_subcommand("fixture", "generate synthetic eval corpora");
  fixture->add_option("kind", fixture_kind, "rank_sweep|text");
  fixture->add_option("--corpus", corpus_path, "candidate JSONL to write")->required();
  fixture->add_option("--queries", queries_path, "query JSONL to write")->required();
  fixture->add_option("--queries-count", fixture_queries, "number of queries");
  fixture->add_option("--slots", fixture_slots, "candidates per query / distractors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(embed)) return cmd_embed(overrides, corpus_path, out_path, role);
    if (app.got_subcommand(index)) {
      if (store_path.empty() && (corpus_path.empty() || out_path.empty())) {
        std::cerr << "index needs either --store or --corpus with --out\n";
        return 2;
      }
      return cmd_index(overrides, corpus_path, store_path, out_path);
    }
    if (app.got_subcommand(search)) {
      return cmd_search(overrides, store_path, corpus_path, query_text, queries_path, out_path);
    }
    if (app.got_subcommand(rr)) return cmd_rerank(overrides, query_text, corpus_path, out_path);
    if (app.got_subcommand(eval)) return cmd_eval(overrides, corpus_path, queries_path, out_path);
    if (app.got_subcommand(probe)) {
      return cmd_probe(overrides, probe_kind, out_path, corpus_path, pairs_path, probe_text,
                       top_k_words, trials);
    }
    if (app.got_subcommand(rag)) {
      return cmd_rag(overrides, store_path, corpus_path, query_text, out_path);
    }
    if (app.got_subcommand(fixture)) {
      return cmd_fixture(fixture_kind, corpus_path, queries_path, fixture_queries, fixture_slots);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
