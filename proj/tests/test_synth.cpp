#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mixpipe/similarity.hpp"
#include "mixpipe/synth.hpp"

using namespace mixpipe;

namespace {

// Contingency-table oracle for pairwise partition scores: with n_ij = size of
// the intersection of predicted cluster i and truth cluster j,
//   TP = sum C(n_ij,2), pred pairs = sum C(rows,2), true pairs = sum C(cols,2).
// Independent of the production code's exhaustive pair loop.
PartitionScore oracle_partition(const std::map<SampleId, Pid>& predicted,
                                const std::map<SampleId, Pid>& truth) {
    auto choose2 = [](std::size_t n) { return double(n) * double(n - 1) / 2.0; };
    std::map<std::pair<Pid, Pid>, std::size_t> cell;
    std::map<Pid, std::size_t> prow, trow;
    for (const auto& [id, p] : predicted) {
        const Pid t = truth.at(id);
        ++cell[{p, t}];
        ++prow[p];
        ++trow[t];
    }
    double tp = 0, ppairs = 0, tpairs = 0;
    for (const auto& [k, n] : cell) tp += choose2(n);
    for (const auto& [k, n] : prow) ppairs += choose2(n);
    for (const auto& [k, n] : trow) tpairs += choose2(n);
    PartitionScore s;
    s.precision = ppairs == 0 ? 1.0 : tp / ppairs;
    s.recall = tpairs == 0 ? 1.0 : tp / tpairs;
    s.f1 = (s.precision + s.recall) == 0 ? 0.0
                                         : 2 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

SynthSpec base_spec() {
    SynthSpec s;
    s.num_multicam_pids = 4;
    s.num_singlecam_pids = 10;
    s.images_per_pid = 9;
    s.num_cameras = 3;
    s.dim_raw = 16;
    s.intra_noise_sigma = 0.04;
    s.min_inter_angle_cos = 0.3;
    s.seed = 5;
    return s;
}

} // namespace

TEST_CASE("all rates zero: stored pids equal true pids, no injected errors") {
    const SynthOutput out = generate(base_spec());
    CHECK(out.truth.fragment_map.empty());
    CHECK(out.truth.mislabel_set.empty());
    for (const auto& r : out.manifest.records()) {
        CHECK(out.truth.true_pid.at(r.sample_id) == r.pid);
        CHECK(r.pid != kJunkPid);
    }
    const auto c = out.manifest.counts();
    CHECK(c.n_multicam_pids == 4);
    CHECK(c.n_singlecam_pids == 10);
    CHECK(c.n_singlecam_images == 90);
    CHECK(c.n_cameras == 3);
    CHECK(out.features.rows() == out.manifest.records().size());
    CHECK_NOTHROW(out.features.validate());
}

TEST_CASE("fragmenting exactly one pid into 3 parts adds 2 pids") {
    SynthSpec s = base_spec();
    s.frag_rate = 0.1;  // 10 single pids -> exactly one fragments
    s.frag_parts = 3;
    const SynthOutput out = generate(s);
    CHECK(out.truth.fragment_map.size() == 2);
    CHECK(out.manifest.counts().n_singlecam_pids == 12);
    // all fragments of one identity trace back to the same original
    Pid orig = -1;
    for (const auto& [inj, o] : out.truth.fragment_map) {
        if (orig == -1) orig = o;
        CHECK(o == orig);
        CHECK(out.truth.resolve(inj) == o);
    }
    // true pids still point at the original identity
    for (const auto& r : out.manifest.train_records(Source::SingleCamera))
        if (out.truth.fragment_map.count(r->pid))
            CHECK(out.truth.true_pid.at(r->sample_id) == orig);
}

TEST_CASE("junk samples sit below the removal threshold against every anchor") {
    SynthSpec s = base_spec();
    s.junk_rate = 0.08;  // ~10 junk over 126 train images
    const SynthOutput out = generate(s);
    std::size_t n_junk = 0;
    for (const auto& r : out.manifest.records()) {
        if (out.truth.true_pid.at(r.sample_id) != kJunkPid) continue;
        ++n_junk;
        const auto f = out.features.row(out.manifest.row_of(r.sample_id));
        for (const auto& [pid, a] : out.truth.multi_anchor)
            CHECK(cosine_similarity(f, std::span<const float>(a)) < 0.5);
        for (const auto& [pid, a] : out.truth.single_anchor)
            CHECK(cosine_similarity(f, std::span<const float>(a)) < 0.5);
    }
    CHECK(n_junk == 10);
}

TEST_CASE("generation is deterministic in the spec") {
    SynthSpec s = base_spec();
    s.frag_rate = 0.2;
    s.mislabel_rate = 0.1;
    s.junk_rate = 0.05;
    const SynthOutput a = generate(s);
    const SynthOutput b = generate(s);
    CHECK(a.manifest == b.manifest);
    CHECK(a.features == b.features);
    CHECK(a.truth.true_pid == b.truth.true_pid);
    CHECK(a.truth.fragment_map == b.truth.fragment_map);
    CHECK(a.truth.mislabel_set == b.truth.mislabel_set);

    SynthSpec s2 = s;
    s2.seed = s.seed + 1;
    CHECK(generate(s2).features.data != a.features.data);
}

TEST_CASE("separability: nearest anchor recovers the true pid of every non-junk sample") {
    SynthSpec s = base_spec();
    s.mislabel_rate = 0.1;
    s.frag_rate = 0.2;
    const SynthOutput out = generate(s);
    for (const auto& r : out.manifest.records()) {
        const Pid want = out.truth.true_pid.at(r.sample_id);
        if (want == kJunkPid) continue;
        const auto f = out.features.row(out.manifest.row_of(r.sample_id));
        double best = -2.0;
        Pid best_pid = -1;
        bool best_multi = false;
        for (const auto& [pid, a] : out.truth.multi_anchor) {
            const double c = cosine_similarity(f, std::span<const float>(a));
            if (c > best) best = c, best_pid = pid, best_multi = true;
        }
        for (const auto& [pid, a] : out.truth.single_anchor) {
            const double c = cosine_similarity(f, std::span<const float>(a));
            if (c > best) best = c, best_pid = pid, best_multi = false;
        }
        CHECK(best_pid == want);
        CHECK(best_multi == (r.source == Source::MultiCamera));
    }
}

TEST_CASE("mislabeled samples carry a wrong stored pid") {
    SynthSpec s = base_spec();
    s.mislabel_rate = 0.1;  // 9 of 90 single train images
    const SynthOutput out = generate(s);
    CHECK(out.truth.mislabel_set.size() == 9);
    for (SampleId id : out.truth.mislabel_set) {
        const auto& r = out.manifest.records()[out.manifest.row_of(id)];
        CHECK(r.source == Source::SingleCamera);
        CHECK(out.truth.resolve(r.pid) != out.truth.true_pid.at(id));
    }
    CHECK_NOTHROW(out.manifest.validate());
}

TEST_CASE("anchor rejection gives up on infeasible specs") {
    SynthSpec s = base_spec();
    s.dim_raw = 2;
    s.num_multicam_pids = 2;
    s.num_singlecam_pids = 12;  // 14 near-orthogonal anchors cannot fit in 2-d
    s.min_inter_angle_cos = 0.05;
    try {
        generate(s);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InfeasibleSpec);
    }
}

TEST_CASE("spec validation rejects bad ranges") {
    SynthSpec s = base_spec();
    s.frag_parts = 1;
    CHECK_THROWS_AS(s.validate(), Error);
    s = base_spec();
    s.junk_rate = 1.5;
    CHECK_THROWS_AS(s.validate(), Error);
    s = base_spec();
    s.num_cameras = 1;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("perfect partition scores (1,1,1)") {
    std::map<SampleId, Pid> part{{0, 1}, {1, 1}, {2, 2}, {3, 2}, {4, 3}};
    const PartitionScore s = score_partition(part, part);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
}

TEST_CASE("one big predicted cluster vs two true clusters of three") {
    std::map<SampleId, Pid> pred, truth;
    for (SampleId i = 0; i < 6; ++i) {
        pred[i] = 0;
        truth[i] = i < 3 ? 0 : 1;
    }
    const PartitionScore s = score_partition(pred, truth);
    CHECK(s.precision == doctest::Approx(2.0 / 5.0));
    CHECK(s.recall == 1.0);
}

TEST_CASE("all-singleton prediction: recall 0, precision 1 by convention") {
    std::map<SampleId, Pid> pred, truth;
    for (SampleId i = 0; i < 4; ++i) {
        pred[i] = i;
        truth[i] = 0;
    }
    const PartitionScore s = score_partition(pred, truth);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
}

TEST_CASE("empty prediction is an error") {
    try {
        score_partition({}, {});
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyPrediction);
    }
}

TEST_CASE("mismatched id sets are rejected") {
    CHECK_THROWS_AS(score_partition({{0, 1}}, {{1, 1}}), Error);
}

TEST_CASE("random partitions match the contingency-table oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::map<SampleId, Pid> pred, truth;
        std::uniform_int_distribution<Pid> pids(0, 4);
        const int n = 5 + int(rng() % 40);
        for (SampleId i = 0; i < n; ++i) {
            pred[i] = pids(rng);
            truth[i] = pids(rng);
        }
        const PartitionScore got = score_partition(pred, truth);
        const PartitionScore want = oracle_partition(pred, truth);
        CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
        CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
        CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
    }
}
