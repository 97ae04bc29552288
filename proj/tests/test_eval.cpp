#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "mixpipe/eval.hpp"

using namespace mixpipe;

namespace {

struct OracleEval {
    double mAP = 0.0;
    double r1 = 0.0, r5 = 0.0, r10 = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

// Reference scorer working from an explicit similarity table, written
// directly off the retrieval protocol: drop same-pid-same-camera gallery
// rows, skip queries without a cross-camera positive, rank by similarity
// with ties to the smaller gallery id, then average precision per query.
OracleEval oracle_eval(const std::vector<std::vector<long double>>& sims,
                       const std::vector<SampleRecord>& qs,
                       const std::vector<SampleRecord>& gs) {
    OracleEval out;
    double ap_sum = 0.0;
    std::size_t h1 = 0, h5 = 0, h10 = 0;
    for (std::size_t q = 0; q < qs.size(); ++q) {
        std::vector<std::size_t> idx;
        bool has_pos = false;
        for (std::size_t g = 0; g < gs.size(); ++g) {
            if (gs[g].pid == qs[q].pid && gs[g].context_id == qs[q].context_id) continue;
            idx.push_back(g);
            if (gs[g].pid == qs[q].pid) has_pos = true;
        }
        if (!has_pos) {
            ++out.skipped;
            continue;
        }
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (sims[q][a] != sims[q][b]) return sims[q][a] > sims[q][b];
            return gs[a].sample_id < gs[b].sample_id;
        });
        long double psum = 0.0;
        std::size_t ncorr = 0;
        bool d1 = false, d5 = false, d10 = false;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            if (gs[idx[r]].pid != qs[q].pid) continue;
            ++ncorr;
            psum += static_cast<long double>(ncorr) / static_cast<long double>(r + 1);
            if (r < 1) d1 = true;
            if (r < 5) d5 = true;
            if (r < 10) d10 = true;
        }
        ap_sum += double(psum / ncorr);
        ++out.evaluated;
        h1 += d1;
        h5 += d5;
        h10 += d10;
    }
    if (out.evaluated > 0) {
        out.mAP = ap_sum / double(out.evaluated);
        out.r1 = double(h1) / double(out.evaluated);
        out.r5 = double(h5) / double(out.evaluated);
        out.r10 = double(h10) / double(out.evaluated);
    }
    return out;
}

SampleRecord rec(SampleId id, Pid pid, std::int64_t cam, Split split) {
    SampleRecord r;
    r.sample_id = id;
    r.pid = pid;
    r.context_id = cam;
    r.split = split;
    return r;
}

EmbeddingMatrix from_rows(std::uint32_t dim, const std::vector<std::vector<float>>& rows) {
    EmbeddingMatrix m(dim);
    for (const auto& r : rows) m.append_row(r);
    return m;
}

} // namespace

TEST_CASE("exact cross-camera copy ranks first") {
    const auto q = from_rows(2, {{1.0f, 0.0f}});
    const std::vector<SampleRecord> qr{rec(1, 7, 0, Split::Query)};
    // id 10 would be the best hit but sits on the query's own camera
    const auto g = from_rows(2, {{2.0f, 0.0f}, {1.0f, 0.0f}, {0.0f, 1.0f}});
    const std::vector<SampleRecord> gr{rec(10, 7, 0, Split::Gallery),
                                       rec(11, 7, 1, Split::Gallery),
                                       rec(12, 8, 0, Split::Gallery)};
    const RetrievalResult res = evaluate(q, qr, g, gr);
    CHECK(res.rank_k.at(1) == 1.0);
    CHECK(res.rank_k.at(5) == 1.0);
    CHECK(res.mAP == 1.0);
    CHECK(res.n_queries_evaluated == 1);
    CHECK(res.n_queries_skipped == 0);
}

TEST_CASE("positive at rank two of two gives AP one half") {
    const auto q = from_rows(2, {{1.0f, 0.0f}});
    const std::vector<SampleRecord> qr{rec(1, 3, 0, Split::Query)};
    const auto g = from_rows(2, {{1.0f, 1.0f}, {0.0f, 1.0f}});
    const std::vector<SampleRecord> gr{rec(20, 9, 1, Split::Gallery),
                                       rec(21, 3, 1, Split::Gallery)};
    const RetrievalResult res = evaluate(q, qr, g, gr);
    CHECK(res.rank_k.at(1) == 0.0);
    CHECK(res.rank_k.at(5) == 1.0);
    CHECK(res.rank_k.at(10) == 1.0);
    CHECK(res.mAP == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("duplicating the gallery moves mAP but not rank one") {
    const auto q = from_rows(2, {{1.0f, 0.0f}});
    const std::vector<SampleRecord> qr{rec(1, 1, 0, Split::Query)};

    const std::vector<float> wrong{0.8f, 0.6f};
    const std::vector<float> right{0.6f, 0.8f};
    const auto g1 = from_rows(2, {wrong, right});
    const std::vector<SampleRecord> gr1{rec(30, 2, 0, Split::Gallery),
                                        rec(31, 1, 1, Split::Gallery)};
    const RetrievalResult base = evaluate(q, qr, g1, gr1);
    CHECK(base.mAP == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(base.rank_k.at(1) == 0.0);

    const auto g2 = from_rows(2, {wrong, right, wrong, right});
    const std::vector<SampleRecord> gr2{rec(30, 2, 0, Split::Gallery),
                                        rec(31, 1, 1, Split::Gallery),
                                        rec(40, 2, 1, Split::Gallery),
                                        rec(41, 1, 2, Split::Gallery)};
    const RetrievalResult dup = evaluate(q, qr, g2, gr2);
    // ranking: wrong, wrong, right, right -> AP = (1/3 + 2/4) / 2
    CHECK(dup.mAP == doctest::Approx(5.0 / 12.0).epsilon(1e-12));
    CHECK(dup.rank_k.at(1) == base.rank_k.at(1));

    // when the positive already leads, duplication keeps rank-1 at 1
    const auto g3 = from_rows(2, {right, wrong, right, wrong});
    const std::vector<SampleRecord> gr3{rec(50, 1, 1, Split::Gallery),
                                        rec(51, 2, 0, Split::Gallery),
                                        rec(52, 1, 2, Split::Gallery),
                                        rec(53, 2, 1, Split::Gallery)};
    const auto qx = from_rows(2, {right});
    const RetrievalResult lead = evaluate(qx, qr, g3, gr3);
    CHECK(lead.rank_k.at(1) == 1.0);
    CHECK(lead.mAP == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("queries without a cross-camera positive are skipped") {
    const auto q = from_rows(2, {{1.0f, 0.0f}, {0.0f, 1.0f}});
    const std::vector<SampleRecord> qr{rec(1, 1, 0, Split::Query),
                                       rec(2, 2, 0, Split::Query)};
    const auto g = from_rows(2, {{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}});
    const std::vector<SampleRecord> gr{
        rec(60, 1, 0, Split::Gallery),   // pid 1 only on the query camera
        rec(61, 2, 1, Split::Gallery),
        rec(62, 5, 2, Split::Gallery)};
    const RetrievalResult res = evaluate(q, qr, g, gr);
    CHECK(res.n_queries_skipped == 1);
    CHECK(res.n_queries_evaluated == 1);
    CHECK(res.rank_k.at(1) == 1.0);  // the surviving query ranks its match first
    CHECK(res.mAP == 1.0);
}

TEST_CASE("evaluation failure modes") {
    const auto q = from_rows(2, {{1.0f, 0.0f}});
    const std::vector<SampleRecord> qr{rec(1, 1, 0, Split::Query)};

    SUBCASE("every query skipped") {
        const auto g = from_rows(2, {{1.0f, 0.0f}, {0.0f, 1.0f}});
        const std::vector<SampleRecord> gr{rec(70, 1, 0, Split::Gallery),
                                           rec(71, 9, 1, Split::Gallery)};
        try {
            evaluate(q, qr, g, gr);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NoValidGallery);
        }
    }
    SUBCASE("dimension mismatch") {
        const auto g = from_rows(3, {{1.0f, 0.0f, 0.0f}});
        const std::vector<SampleRecord> gr{rec(70, 1, 1, Split::Gallery)};
        try {
            evaluate(q, qr, g, gr);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DimMismatch);
        }
    }
    SUBCASE("empty gallery") {
        CHECK_THROWS_AS(evaluate(q, qr, EmbeddingMatrix(2), {}), Error);
    }
    SUBCASE("rows out of step with records") {
        const auto g = from_rows(2, {{1.0f, 0.0f}, {0.0f, 1.0f}});
        const std::vector<SampleRecord> gr{rec(70, 1, 1, Split::Gallery)};
        try {
            evaluate(q, qr, g, gr);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::ShapeMismatch);
        }
    }
}

TEST_CASE("random retrieval agrees with the reference scorer") {
    std::mt19937_64 rng(70);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t nq = 20, ng = 30, dim = 8;
        const EmbeddingMatrix qe = testutil::random_matrix(nq, dim, rng);
        const EmbeddingMatrix ge = testutil::random_matrix(ng, dim, rng);
        std::vector<SampleRecord> qr, gr;
        for (std::size_t i = 0; i < nq; ++i)
            qr.push_back(rec(1000 + SampleId(i), Pid(rng() % 4), std::int64_t(rng() % 3),
                             Split::Query));
        for (std::size_t i = 0; i < ng; ++i)
            gr.push_back(rec(2000 + SampleId(i), Pid(rng() % 5), std::int64_t(rng() % 3),
                             Split::Gallery));

        std::vector<std::vector<long double>> sims(nq, std::vector<long double>(ng));
        for (std::size_t q = 0; q < nq; ++q)
            for (std::size_t g = 0; g < ng; ++g)
                sims[q][g] = testutil::oracle_cosine(qe.row(q), ge.row(g));

        const OracleEval want = oracle_eval(sims, qr, gr);
        REQUIRE(want.evaluated > 0);
        const RetrievalResult got = evaluate(qe, qr, ge, gr);
        CHECK(got.n_queries_evaluated == want.evaluated);
        CHECK(got.n_queries_skipped == want.skipped);
        CHECK(got.mAP == doctest::Approx(want.mAP).epsilon(1e-9));
        CHECK(got.rank_k.at(1) == doctest::Approx(want.r1).epsilon(1e-12));
        CHECK(got.rank_k.at(5) == doctest::Approx(want.r5).epsilon(1e-12));
        CHECK(got.rank_k.at(10) == doctest::Approx(want.r10).epsilon(1e-12));

        // rank-k is cumulative in k
        CHECK(got.rank_k.at(1) <= got.rank_k.at(5));
        CHECK(got.rank_k.at(5) <= got.rank_k.at(10));

        // only the ordering of similarities matters
        std::vector<std::vector<long double>> warped = sims;
        for (auto& row : warped)
            for (auto& s : row) s = std::tanh(s) * 2.0L + 3.0L;
        const OracleEval warped_out = oracle_eval(warped, qr, gr);
        CHECK(warped_out.mAP == doctest::Approx(want.mAP).epsilon(1e-12));
        CHECK(warped_out.r1 == doctest::Approx(want.r1).epsilon(1e-12));
    }
}
