#include "retkit/fixtures.hpp"

namespace retkit {

EvalFixture make_rank_sweep_fixture(int num_queries, int slots) {
  if (num_queries < 1 || slots < 1) {
    throw Error(ErrorCode::InvalidArgument, "fixture needs num_queries >= 1 and slots >= 1");
  }
  EvalFixture fixture;
  for (int q = 0; q < num_queries; ++q) {
    const std::string qid = "Q" + std::to_string(q);
    CorpusRecord query;
    query.id = "q" + std::to_string(q);
    query.input = ModalityInput::text("qid=" + qid + " vec=" + std::to_string(q) + "_0");
    fixture.queries.push_back(std::move(query));

    const int gold_slot = 1 + (q % slots);
    for (int slot = 1; slot <= slots; ++slot) {
      CorpusRecord candidate;
      candidate.id = "c" + std::to_string(q) + "_" + std::to_string(slot);
      const bool is_gold = slot == gold_slot;
      const std::string match = is_gold ? qid : "N" + std::to_string(q) + "_" + std::to_string(slot);
      // 100 mrad per slot: cosine to the query decreases strictly with slot.
      candidate.input = ModalityInput::text("match=" + match + " vec=" + std::to_string(q) + "_" +
                                            std::to_string(100 * slot));
      if (is_gold) candidate.gold_for.push_back("q" + std::to_string(q));
      fixture.corpus.push_back(std::move(candidate));
    }
  }
  return fixture;
}

EvalFixture make_text_fixture(int num_queries, int distractors_per_query) {
  if (num_queries < 1 || distractors_per_query < 0) {
    throw Error(ErrorCode::InvalidArgument, "fixture needs num_queries >= 1");
  }
  static const std::vector<std::pair<std::string, std::string>> topics = {
      {"a red apple on the table", "fresh apples in a bowl"},
      {"a dog running on the beach", "a puppy chasing waves"},
      {"city skyline at night", "downtown towers after dark"},
      {"a bowl of hot soup", "steaming broth with noodles"},
      {"mountain trail in the fog", "a misty hiking path"},
      {"an old sailing ship", "a wooden boat at sea"},
      {"children flying kites", "kids with kites in the wind"},
      {"a jazz band on stage", "musicians playing in a club"},
      {"books stacked on a desk", "a pile of worn paperbacks"},
      {"a train crossing a bridge", "a locomotive over the river"},
      {"snow on the garden fence", "frost covering the yard"},
      {"a cup of black coffee", "espresso in a small cup"},
  };
  EvalFixture fixture;
  const int n = std::min<int>(num_queries, static_cast<int>(topics.size()));
  for (int i = 0; i < n; ++i) {
    CorpusRecord query;
    query.id = "tq" + std::to_string(i);
    query.input = ModalityInput::text(topics[static_cast<std::size_t>(i)].first);
    fixture.queries.push_back(std::move(query));

    CorpusRecord gold;
    gold.id = "tc" + std::to_string(i) + "_gold";
    gold.input = ModalityInput::text(topics[static_cast<std::size_t>(i)].second);
    gold.gold_for.push_back("tq" + std::to_string(i));
    fixture.corpus.push_back(std::move(gold));

    for (int d = 0; d < distractors_per_query; ++d) {
      CorpusRecord noise;
      noise.id = "tc" + std::to_string(i) + "_d" + std::to_string(d);
      const auto& other = topics[static_cast<std::size_t>((i + d + 1) % topics.size())];
      noise.input = ModalityInput::text(other.second + " variant " + std::to_string(d));
      fixture.corpus.push_back(std::move(noise));
    }
  }
  return fixture;
}

}  // namespace retkit
