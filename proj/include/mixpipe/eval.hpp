#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mixpipe/types.hpp"

namespace mixpipe {

struct RetrievalResult {
    std::map<int, double> rank_k;            // k in {1, 5, 10}
    double mAP = 0.0;
    std::size_t n_queries_evaluated = 0;
    std::size_t n_queries_skipped = 0;
};

// Cross-camera retrieval: gallery entries sharing the query's pid AND camera
// are excluded; a correct match shares the pid on another camera.  Ties in
// similarity break toward the smaller gallery sample id.
RetrievalResult evaluate(const EmbeddingMatrix& query_emb,
                         const std::vector<SampleRecord>& query_recs,
                         const EmbeddingMatrix& gallery_emb,
                         const std::vector<SampleRecord>& gallery_recs);

} // namespace mixpipe
