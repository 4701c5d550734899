#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/cli_runner.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

using namespace retkit::testing;
using nlohmann::json;

TEST_CASE("fixture + embed + index round trip") {
  const auto dir = fresh_dir("retkit_cli_embed");
  auto fixture = run_cli("fixture text --corpus corpus.jsonl --queries queries.jsonl "
                         "--queries-count 5 --slots 2",
                         dir);
  REQUIRE(fixture.exit_code == 0);
  REQUIRE(std::filesystem::exists(dir / "corpus.jsonl"));

  auto embed = run_cli("embed --corpus corpus.jsonl --out store.bin", dir);
  REQUIRE(embed.exit_code == 0);
  CHECK(embed.output.find("wrote 15 embeddings of dim 32") != std::string::npos);

  auto index = run_cli("index --store store.bin", dir);
  CHECK(index.exit_code == 0);
  CHECK(index.output.find("index ok: 15 vectors") != std::string::npos);
}

TEST_CASE("embed rerun with the same seed is byte-identical") {
  const auto dir = fresh_dir("retkit_cli_determinism");
  REQUIRE(run_cli("fixture text --corpus corpus.jsonl --queries q.jsonl --queries-count 4 "
                  "--slots 1",
                  dir)
              .exit_code == 0);
  REQUIRE(run_cli("embed --corpus corpus.jsonl --out a.bin --seed 1729", dir).exit_code == 0);
  REQUIRE(run_cli("embed --corpus corpus.jsonl --out b.bin --seed 1729", dir).exit_code == 0);
  REQUIRE(run_cli("embed --corpus corpus.jsonl --out c.bin --seed 4", dir).exit_code == 0);
  CHECK(read_file(dir / "a.bin") == read_file(dir / "b.bin"));
  CHECK(read_file(dir / "a.bin") != read_file(dir / "c.bin"));
}

TEST_CASE("embedding an empty corpus exits 0 with an empty store") {
  const auto dir = fresh_dir("retkit_cli_empty");
  { std::ofstream out(dir / "corpus.jsonl"); }
  auto embed = run_cli("embed --corpus corpus.jsonl --out store.bin", dir);
  CHECK(embed.exit_code == 0);
  CHECK(embed.output.find("wrote 0 embeddings") != std::string::npos);
  auto index = run_cli("index --store store.bin", dir);
  CHECK(index.exit_code == 0);
  CHECK(index.output.find("index ok: 0 vectors") != std::string::npos);
}

TEST_CASE("eval pool-size sweep on the rank-sweep fixture is monotone to 1.0") {
  const auto dir = fresh_dir("retkit_cli_msweep");
  REQUIRE(run_cli("fixture rank_sweep --corpus corpus.jsonl --queries queries.jsonl "
                  "--queries-count 50 --slots 8",
                  dir)
              .exit_code == 0);
  {
    std::ofstream out(dir / "config.json");
    out << R"({"backend": {"id": "scripted"}, "K": 8,
               "eval": {"pool_sizes": [1, 2, 4, 8]}})";
  }
  auto eval = run_cli("eval --config config.json --corpus corpus.jsonl "
                      "--queries queries.jsonl --out sweep",
                      dir);
  REQUIRE(eval.exit_code == 0);
  const json summary = json::parse(read_file(dir / "sweep" / "summary.json"));
  REQUIRE(summary.at("cells").size() == 4);
  double previous = -1.0;
  for (const auto& cell : summary.at("cells")) {
    const double p = cell.at("precision_at_1").get<double>();
    CHECK(p >= previous);
    previous = p;
  }
  CHECK(previous == 1.0);
}

TEST_CASE("embed flags an invalid corpus line and still writes the store") {
  const auto dir = fresh_dir("retkit_cli_badline");
  {
    std::ofstream out(dir / "corpus.jsonl");
    out << R"({"id":"ok","segments":[{"kind":"text","payload":"fine"}]})" << '\n';
    out << "garbage\n";
  }
  auto embed = run_cli("embed --corpus corpus.jsonl --out store.bin", dir);
  CHECK(embed.exit_code == 1);  // error records were produced
  CHECK(std::filesystem::exists(dir / "store.bin"));
  CHECK(embed.output.find("wrote 1 embeddings") != std::string::npos);
}

TEST_CASE("search emits ranked results with the resolved config embedded") {
  const auto dir = fresh_dir("retkit_cli_search");
  REQUIRE(run_cli("fixture rank_sweep --corpus corpus.jsonl --queries queries.jsonl "
                  "--queries-count 6 --slots 4",
                  dir)
              .exit_code == 0);
  REQUIRE(run_cli("embed --backend scripted --corpus corpus.jsonl --out store.bin", dir)
              .exit_code == 0);
  auto search = run_cli("search --backend scripted --store store.bin --corpus corpus.jsonl "
                        "--queries queries.jsonl --K 4 --M 2 --out results.json",
                        dir);
  REQUIRE(search.exit_code == 0);

  const json payload = json::parse(read_file(dir / "results.json"));
  CHECK(payload.at("config").at("K") == 4);
  CHECK(payload.at("config").at("backend").at("id") == "scripted");
  REQUIRE(payload.at("queries").size() == 6);
  for (const auto& row : payload.at("queries")) {
    const auto& results = row.at("results");
    REQUIRE(results.size() == 4);
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].at("rank") == static_cast<int>(i) + 1);
    }
    // scripted reranker must surface the gold candidate of each query
    const std::string qid = row.at("query_id");
    const std::string top = results[0].at("id");
    CHECK(top.starts_with("c" + qid.substr(1) + "_"));
  }
}

TEST_CASE("rerank scores a candidate file against a query") {
  const auto dir = fresh_dir("retkit_cli_rerank");
  {
    std::ofstream out(dir / "cands.jsonl");
    out << R"({"id":"gold","segments":[{"kind":"text","payload":"match=Q7 exact"}]})" << '\n';
    out << R"({"id":"noise","segments":[{"kind":"text","payload":"match=X1 off"}]})" << '\n';
  }
  auto rr = run_cli("rerank --backend scripted --query 'qid=Q7 find it' "
                    "--candidates cands.jsonl --out scores.json",
                    dir);
  REQUIRE(rr.exit_code == 0);
  const json payload = json::parse(read_file(dir / "scores.json"));
  REQUIRE(payload.at("results").size() == 2);
  CHECK(payload.at("results")[0].at("id") == "gold");
  CHECK(payload.at("results")[0].at("relevance").get<double>() > 0.99);
}

TEST_CASE("eval expands the configured grid and is rerun-stable") {
  const auto dir = fresh_dir("retkit_cli_eval");
  REQUIRE(run_cli("fixture text --corpus corpus.jsonl --queries queries.jsonl "
                  "--queries-count 4 --slots 1",
                  dir)
              .exit_code == 0);
  {
    std::ofstream out(dir / "config.json");
    out << R"({"backend": {"id": "toy", "seed": 1729, "layers": 3, "dim": 16, "heads": 2},
               "K": 4, "M": 2,
               "eval": {"taps": ["attn@L", "mlp@L"], "prompts": ["a", "d"],
                        "framings": ["mcq", "yes_no"]}})";
  }
  auto eval = run_cli("eval --config config.json --corpus corpus.jsonl "
                      "--queries queries.jsonl --out grid",
                      dir);
  REQUIRE(eval.exit_code == 0);

  int cell_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "grid")) {
    if (entry.path().filename().string().starts_with("cell_")) ++cell_files;
  }
  CHECK(cell_files == 8);

  const json summary = json::parse(read_file(dir / "grid" / "summary.json"));
  CHECK(summary.at("cells").size() == 8);

  const json one = json::parse(read_file(dir / "grid" / "cell_attn_L__a__mcq__M2.json"));
  CHECK(one.at("config").at("tap") == "attn@3");  // resolved, not symbolic
  CHECK(one.at("config").at("framing") == "mcq");
  CHECK(one.at("config").at("M") == 2);
  CHECK(one.at("queries") == 4);
  CHECK(one.at("per_query").size() == 4);

  // byte-identical rerun
  REQUIRE(run_cli("eval --config config.json --corpus corpus.jsonl "
                  "--queries queries.jsonl --out grid2",
                  dir)
              .exit_code == 0);
  CHECK(read_file(dir / "grid" / "summary.json") == read_file(dir / "grid2" / "summary.json"));
  CHECK(read_file(dir / "grid" / "cell_mlp_L__d__yes_no__M2.json") ==
        read_file(dir / "grid2" / "cell_mlp_L__d__yes_no__M2.json"));
}

TEST_CASE("probe alpha on the zero-MLP variant reports ones") {
  const auto dir = fresh_dir("retkit_cli_probe");
  {
    std::ofstream out(dir / "config.json");
    out << R"({"backend": {"id": "toy", "zero_mlp": true}})";
  }
  auto probe = run_cli("probe alpha --config config.json --out alpha_report", dir);
  REQUIRE(probe.exit_code == 0);
  const json report = json::parse(read_file(dir / "alpha_report.json"));
  CHECK(report.at("kind") == "alpha");
  CHECK(report.at("samples") == 20);
  int mlp_rows = 0;
  for (const auto& row : report.at("rows")) {
    if (row.at("sublayer") == "mlp") {
      ++mlp_rows;
      CHECK(row.at("mean").get<double>() == 1.0);
      CHECK(row.at("std").get<double>() == 0.0);
    }
  }
  CHECK(mlp_rows == 4);
  CHECK(std::filesystem::exists(dir / "alpha_report.csv"));
}

TEST_CASE("probe framing reports one bias per preset") {
  const auto dir = fresh_dir("retkit_cli_probe_framing");
  auto probe = run_cli("probe framing --out framing_report", dir);
  REQUIRE(probe.exit_code == 0);
  const json report = json::parse(read_file(dir / "framing_report.json"));
  REQUIRE(report.at("rows").size() == 4);
  for (const auto& row : report.at("rows")) {
    const double bias = row.at("mean").get<double>();
    CHECK(bias >= 0.0);
    CHECK(bias <= 1.0);
  }
  CHECK(report.at("metadata").contains("mcq"));
}

TEST_CASE("probe gradient reports the analytic/numeric gap") {
  const auto dir = fresh_dir("retkit_cli_probe_gradient");
  auto probe = run_cli("probe gradient --trials 25 --out grad", dir);
  REQUIRE(probe.exit_code == 0);
  const json report = json::parse(read_file(dir / "grad.json"));
  CHECK(report.at("trials") == 25);
  CHECK(report.at("max_abs_diff").get<double>() <= 1e-4);
  CHECK(report.at("rows").size() == 25);
}

TEST_CASE("probe rejects unknown kinds; wordprob needs text") {
  const auto dir = fresh_dir("retkit_cli_probe_bad");
  CHECK(run_cli("probe nonsense", dir).exit_code == 2);
  CHECK(run_cli("probe wordprob", dir).exit_code == 2);
  auto ok = run_cli("probe wordprob --text 'a small test' --top-k 5 --out words", dir);
  REQUIRE(ok.exit_code == 0);
  const json report = json::parse(read_file(dir / "words.json"));
  CHECK(report.at("rows").size() == 5);
}

TEST_CASE("rag returns an answer with evidence over a fixture corpus") {
  const auto dir = fresh_dir("retkit_cli_rag");
  REQUIRE(run_cli("fixture rank_sweep --corpus corpus.jsonl --queries queries.jsonl "
                  "--queries-count 4 --slots 3",
                  dir)
              .exit_code == 0);
  auto rag = run_cli("rag --backend scripted --corpus corpus.jsonl "
                     "--question 'qid=Q1 vec=1_0 which item matches' --K 3 --M 2 --out answer.json",
                     dir);
  REQUIRE(rag.exit_code == 0);
  const json payload = json::parse(read_file(dir / "answer.json"));
  CHECK(payload.at("generation_failed") == false);
  REQUIRE(payload.at("evidence").size() == 3);
  CHECK(payload.at("evidence")[0].at("id") == "c1_2");  // gold slot of query 1
}

TEST_CASE("missing backend id fails with a clear error") {
  const auto dir = fresh_dir("retkit_cli_badbackend");
  REQUIRE(run_cli("fixture text --corpus c.jsonl --queries q.jsonl", dir).exit_code == 0);
  auto bad = run_cli("embed --backend never_registered --corpus c.jsonl --out s.bin", dir);
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("no backend registered") != std::string::npos);
}
