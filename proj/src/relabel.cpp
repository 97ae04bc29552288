#include "mixpipe/relabel.hpp"

#include <algorithm>
#include <ostream>

#include "mixpipe/similarity.hpp"
#include "mixpipe/util.hpp"

namespace mixpipe {

void write_report(const RefinementReport& report, std::ostream& os) {
    os << "n_input_images = " << report.n_input_images << '\n';
    os << "n_removed = " << report.n_removed << '\n';
    os << "n_relabeled = " << report.n_relabeled << '\n';
    os << "n_kept = " << report.n_kept << '\n';
    os << "pids_before = " << report.pids_before << '\n';
    os << "pids_after = " << report.pids_after << '\n';
    os << "skipped_empty_pids = " << report.skipped_empty_pids << '\n';
    os << "cum_removed = " << report.cum_removed << '\n';
    os << "cum_relabeled = " << report.cum_relabeled << '\n';
    os << "cum_merged_pids = " << report.cum_merged_pids << '\n';
    os << "merge_components = ";
    for (std::size_t g = 0; g < report.merge_components.size(); ++g) {
        if (g) os << ',';
        const auto& group = report.merge_components[g];
        for (std::size_t i = 0; i < group.size(); ++i) {
            if (i) os << ':';
            os << group[i];
        }
    }
    os << '\n';
}

std::vector<SampleId> EpochSubset::flat_ids() const {
    std::vector<SampleId> out;
    for (const auto& [pid, ids] : by_pid) out.insert(out.end(), ids.begin(), ids.end());
    return out;
}

std::vector<Pid> EpochSubset::flat_labels() const {
    std::vector<Pid> out;
    for (const auto& [pid, ids] : by_pid) out.insert(out.end(), ids.size(), pid);
    return out;
}

EpochSubset select_epoch_subset(const DatasetManifest& manifest, std::uint32_t k_per_pid,
                                std::mt19937_64& rng, const std::set<SampleId>& excluded) {
    if (k_per_pid < 1) fail(Errc::ValidationError, "k_per_pid must be >= 1");
    std::map<Pid, std::vector<SampleId>> pools;
    for (const auto& r : manifest.records()) {
        if (r.split != Split::Train || r.source != Source::SingleCamera) continue;
        if (excluded.count(r.sample_id)) continue;
        pools[r.pid].push_back(r.sample_id);
    }
    EpochSubset out;
    for (auto& [pid, pool] : pools) {
        if (pool.empty()) { ++out.skipped_empty_pids; continue; }
        // partial Fisher-Yates; pool ids arrive sorted so draws are
        // reproducible for a given rng state
        const std::size_t take = std::min<std::size_t>(k_per_pid, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        std::vector<SampleId> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(chosen.begin(), chosen.end());
        out.by_pid.emplace(pid, std::move(chosen));
    }
    return out;
}

std::vector<SampleDecision> filter_and_relabel(const std::vector<SampleId>& ids,
                                               const EmbeddingMatrix& features,
                                               const std::vector<Pid>& labels,
                                               const CentroidsMemory& memory,
                                               double tau_remove, double tau_rel) {
    if (ids.size() != features.rows() || ids.size() != labels.size())
        fail(Errc::ShapeMismatch, "ids/features/labels size mismatch");
    if (tau_remove > tau_rel)
        fail(Errc::ValidationError, "tau_remove must not exceed tau_rel");
    for (Pid y : labels)
        if (!memory.entries.count(y))
            fail(Errc::MissingCentroid, "no centroid for pid " + std::to_string(y));

    // flatten the frozen snapshot once; map order keeps pid tie-breaks stable
    std::vector<Pid> cpids;
    EmbeddingMatrix cents(memory.dim);
    for (const auto& [pid, mu] : memory.entries) {
        cpids.push_back(pid);
        cents.append_row(std::span<const float>(mu.data(), mu.size()));
    }

    std::vector<SampleDecision> out(ids.size());
    parallel_for(ids.size(), [&](std::size_t i) {
        double best = -2.0;
        Pid best_pid = cpids.empty() ? 0 : cpids.front();
        for (std::size_t c = 0; c < cpids.size(); ++c) {
            const double s = cosine_similarity(features.row(i), cents.row(c));
            if (s > best) { best = s; best_pid = cpids[c]; }
        }
        SampleDecision d;
        d.sample_id = ids[i];
        d.best_sim = best;
        if (best < tau_remove) {
            d.verdict = Verdict::Remove;
        } else if (best_pid != labels[i] && best > tau_rel) {
            d.verdict = Verdict::Relabel;
            d.new_pid = best_pid;
        } else {
            d.verdict = Verdict::Keep;
        }
        out[i] = d;
    });
    return out;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

MergeOutcome merge_pids(CentroidsMemory& memory, double tau_merge) {
    if (memory.entries.empty()) fail(Errc::EmptyGroup, "merge on empty memory");
    std::vector<Pid> pids;
    EmbeddingMatrix cents(memory.dim);
    for (const auto& [pid, mu] : memory.entries) {
        pids.push_back(pid);
        cents.append_row(std::span<const float>(mu.data(), mu.size()));
    }
    const MatrixD sims = pairwise_similarity(cents, cents);
    UnionFind uf(pids.size());
    for (std::size_t i = 0; i < pids.size(); ++i)
        for (std::size_t j = i + 1; j < pids.size(); ++j)
            if (sims.at(i, j) >= tau_merge) uf.unite(i, j);

    std::map<std::size_t, std::vector<Pid>> groups;
    for (std::size_t i = 0; i < pids.size(); ++i) groups[uf.find(i)].push_back(pids[i]);

    MergeOutcome out;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        const Pid canon = members.front();
        for (Pid p : members) out.mapping[p] = canon;
        if (members.size() > 1) out.components.push_back(members);
    }
    std::sort(out.components.begin(), out.components.end());
    apply_merge(memory, out.mapping);
    return out;
}

EpochOutcome run_relabeling_epoch(const DatasetManifest& manifest, FeatureSource& features,
                                  const CentroidsMemory& memory, const PipelineConfig& config,
                                  std::mt19937_64& rng) {
    EpochOutcome out{manifest, memory, {}, {}, {}, {}};

    const EpochSubset subset = select_epoch_subset(manifest, config.k_per_pid, rng);
    const std::vector<SampleId> ids = subset.flat_ids();
    const std::vector<Pid> labels = subset.flat_labels();
    if (ids.empty()) fail(Errc::EmptyGroup, "epoch subset is empty");
    const EmbeddingMatrix embedded = features.embed(ids);

    if (out.memory.entries.empty())
        out.memory = initialize_centroids(embedded, labels);
    out.report.pids_before = out.memory.entries.size();
    out.report.skipped_empty_pids = subset.skipped_empty_pids;

    out.decisions = filter_and_relabel(ids, embedded, labels, out.memory,
                                       config.tau_remove, config.tau_rel);

    // post-decision labels feed the EMA; removed rows drop out entirely
    EmbeddingMatrix retained(embedded.dim);
    std::vector<Pid> retained_labels;
    for (std::size_t i = 0; i < out.decisions.size(); ++i) {
        const auto& d = out.decisions[i];
        switch (d.verdict) {
            case Verdict::Remove:
                ++out.report.n_removed;
                out.removed_ids.insert(d.sample_id);
                break;
            case Verdict::Relabel:
                ++out.report.n_relabeled;
                retained.append_row(embedded.row(i));
                retained_labels.push_back(d.new_pid);
                break;
            case Verdict::Keep:
                ++out.report.n_kept;
                retained.append_row(embedded.row(i));
                retained_labels.push_back(labels[i]);
                break;
        }
    }
    out.report.n_input_images = out.decisions.size();

    MergeOutcome merge;
    if (config.merge_before_ema) {
        merge = merge_pids(out.memory, config.tau_merge);
        for (Pid& y : retained_labels) y = merge.mapping.at(y);
        if (!retained_labels.empty())
            ema_update(out.memory, group_means(retained, retained_labels), config.alpha);
        else
            ++out.memory.epoch_stamp;
    } else {
        if (!retained_labels.empty())
            ema_update(out.memory, group_means(retained, retained_labels), config.alpha);
        else
            ++out.memory.epoch_stamp;
        merge = merge_pids(out.memory, config.tau_merge);
    }
    out.pid_mapping = merge.mapping;
    out.report.merge_components = merge.components;
    out.report.pids_after = out.memory.entries.size();

    // relabel verdicts and merges both land in the refined manifest; a
    // reassigned sample joins the surviving pid's video so the one-video
    // invariant stays intact
    std::map<Pid, std::int64_t> video_of;
    for (const auto& r : manifest.records())
        if (r.source == Source::SingleCamera) video_of.emplace(r.pid, r.context_id);
    std::vector<SampleRecord> refined = manifest.records();
    std::map<SampleId, Pid> relabeled_to;
    for (const auto& d : out.decisions)
        if (d.verdict == Verdict::Relabel) relabeled_to[d.sample_id] = d.new_pid;
    for (auto& r : refined) {
        if (r.source != Source::SingleCamera) continue;
        Pid target = r.pid;
        auto it = relabeled_to.find(r.sample_id);
        if (it != relabeled_to.end()) target = it->second;
        auto mit = out.pid_mapping.find(target);
        if (mit != out.pid_mapping.end()) target = mit->second;
        if (target != r.pid) {
            r.pid = target;
            auto vit = video_of.find(target);
            if (vit != video_of.end()) r.context_id = vit->second;
        }
    }
    out.refined = DatasetManifest(std::move(refined));

    out.report.cum_removed = out.report.n_removed;
    out.report.cum_relabeled = out.report.n_relabeled;
    out.report.cum_merged_pids = out.report.pids_before - out.report.pids_after;
    return out;
}

} // namespace mixpipe
