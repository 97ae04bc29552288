#include "mixpipe/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mixpipe/similarity.hpp"
#include "mixpipe/util.hpp"

namespace mixpipe {

RetrievalResult evaluate(const EmbeddingMatrix& query_emb,
                         const std::vector<SampleRecord>& query_recs,
                         const EmbeddingMatrix& gallery_emb,
                         const std::vector<SampleRecord>& gallery_recs) {
    if (query_emb.dim != gallery_emb.dim)
        fail(Errc::DimMismatch, "query/gallery dims differ");
    if (query_emb.rows() != query_recs.size() || gallery_emb.rows() != gallery_recs.size())
        fail(Errc::ShapeMismatch, "embedding rows do not match records");
    if (query_recs.empty() || gallery_recs.empty())
        fail(Errc::ValidationError, "empty query or gallery");

    const MatrixD sims = pairwise_similarity(query_emb, gallery_emb);
    const std::size_t nq = query_recs.size();
    const std::size_t ng = gallery_recs.size();
    const int ks[3] = {1, 5, 10};

    std::vector<double> ap(nq, -1.0);       // -1 marks a skipped query
    std::vector<std::array<char, 3>> hits(nq, {0, 0, 0});

    parallel_for(nq, [&](std::size_t q) {
        const auto& qr = query_recs[q];
        std::vector<std::size_t> order;
        order.reserve(ng);
        bool any_valid = false;
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& gr = gallery_recs[g];
            if (gr.pid == qr.pid && gr.context_id == qr.context_id) continue;
            order.push_back(g);
            if (gr.pid == qr.pid) any_valid = true;
        }
        if (!any_valid) return;  // skipped
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (sims.at(q, a) != sims.at(q, b)) return sims.at(q, a) > sims.at(q, b);
            return gallery_recs[a].sample_id < gallery_recs[b].sample_id;
        });
        double precision_sum = 0.0;
        std::size_t n_correct = 0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            const bool correct = gallery_recs[order[r]].pid == qr.pid;
            if (correct) {
                ++n_correct;
                precision_sum +=
                    static_cast<double>(n_correct) / static_cast<double>(r + 1);
                for (int t = 0; t < 3; ++t)
                    if (r < static_cast<std::size_t>(ks[t])) hits[q][t] = 1;
            }
        }
        ap[q] = precision_sum / static_cast<double>(n_correct);
    });

    RetrievalResult res;
    double ap_sum = 0.0;
    std::size_t rank_hits[3] = {0, 0, 0};
    for (std::size_t q = 0; q < nq; ++q) {
        if (ap[q] < 0.0) {
            ++res.n_queries_skipped;
            continue;
        }
        ++res.n_queries_evaluated;
        ap_sum += ap[q];
        for (int t = 0; t < 3; ++t) rank_hits[t] += hits[q][t];
    }
    if (res.n_queries_evaluated == 0)
        fail(Errc::NoValidGallery, "no query has a valid cross-camera match");
    res.mAP = ap_sum / static_cast<double>(res.n_queries_evaluated);
    for (int t = 0; t < 3; ++t)
        res.rank_k[ks[t]] = static_cast<double>(rank_hits[t]) /
                            static_cast<double>(res.n_queries_evaluated);
    return res;
}

} // namespace mixpipe
