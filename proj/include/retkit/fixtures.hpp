#pragma once

#include "retkit/retrieval.hpp"

namespace retkit {

struct EvalFixture {
  std::vector<CorpusRecord> corpus;
  std::vector<CorpusRecord> queries;
};

/// Synthetic task for the scripted backend: each query gets `slots`
/// candidates on its own coordinate plane whose stage-1 cosines decrease
/// with the slot index, and the gold candidate sits at stage-1 rank
/// 1 + (q mod slots). The scripted reranker scores gold ~1 via the
/// qid/match directives, so Precision@1 grows with the rerank pool and
/// reaches 1.0 once the pool covers every slot. Needs scripted dim >=
/// 2 * num_queries.
EvalFixture make_rank_sweep_fixture(int num_queries = 50, int slots = 8);

/// Small plain-text corpus with gold links for end-to-end runs on the toy
/// backend. Scores are whatever the toy backbone produces; the fixture only
/// guarantees well-formed inputs.
EvalFixture make_text_fixture(int num_queries = 8, int distractors_per_query = 2);

}  // namespace retkit
