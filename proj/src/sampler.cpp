#include "mixpipe/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "mixpipe/hungarian.hpp"
#include "mixpipe/similarity.hpp"

namespace mixpipe {

void ExclusionQueue::push(Pid p) {
    if (capacity_ == 0) return;
    if (members_.count(p)) {
        // refresh position: drop the stale occurrence
        auto it = std::find(order_.begin(), order_.end(), p);
        order_.erase(it);
    }
    order_.push_back(p);
    members_.insert(p);
    while (order_.size() > capacity_) {
        members_.erase(order_.front());
        order_.pop_front();
    }
}

void ExclusionQueue::set_capacity(std::size_t capacity) {
    capacity_ = capacity;
    while (order_.size() > capacity_) {
        members_.erase(order_.front());
        order_.pop_front();
    }
}

void ExclusionQueue::remap(const std::map<Pid, Pid>& mapping) {
    std::deque<Pid> mapped;
    for (Pid p : order_) {
        auto it = mapping.find(p);
        mapped.push_back(it == mapping.end() ? p : it->second);
    }
    // keep only the newest occurrence of each pid
    std::deque<Pid> deduped;
    std::set<Pid> seen;
    for (auto it = mapped.rbegin(); it != mapped.rend(); ++it)
        if (seen.insert(*it).second) deduped.push_front(*it);
    order_ = std::move(deduped);
    members_ = std::move(seen);
}

std::size_t queue_capacity(const PipelineConfig& config, std::size_t live_single_pids) {
    const std::size_t window = static_cast<std::size_t>(config.queue_epochs) *
                               config.iterations_per_epoch * config.n_p;
    if (live_single_pids <= config.n_p) return 0;
    return std::min(window, live_single_pids - config.n_p);
}

std::map<Pid, std::vector<float>> compute_multicam_centroids(const DatasetManifest& manifest,
                                                             FeatureSource& features) {
    std::map<Pid, std::vector<SampleId>> by_pid;
    for (const auto& r : manifest.records())
        if (r.split == Split::Train && r.source == Source::MultiCamera)
            by_pid[r.pid].push_back(r.sample_id);
    std::map<Pid, std::vector<float>> out;
    for (const auto& [pid, ids] : by_pid) {
        if (ids.empty()) fail(Errc::EmptyGroup, "multi pid with no images");
        const EmbeddingMatrix rows = features.embed(ids);
        std::vector<double> sum(rows.dim, 0.0);
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            const auto row = rows.row(i);
            for (std::uint32_t j = 0; j < rows.dim; ++j) sum[j] += row[j];
        }
        std::vector<float> mean(rows.dim);
        for (std::uint32_t j = 0; j < rows.dim; ++j)
            mean[j] = static_cast<float>(sum[j] / static_cast<double>(ids.size()));
        out.emplace(pid, std::move(mean));
    }
    return out;
}

MatrixD strategy_cost(const MatrixD& S, Strategy strategy, std::mt19937_64& rng) {
    if (S.cols < S.rows)
        fail(Errc::NotEnoughCandidates, "similarity matrix has fewer candidates than rows");
    MatrixD cost(S.rows, S.cols);
    switch (strategy) {
        case Strategy::Hard:
            for (std::size_t i = 0; i < S.values.size(); ++i) cost.values[i] = -S.values[i];
            break;
        case Strategy::Soft:
            cost.values = S.values;
            break;
        case Strategy::Mean: {
            double mean = 0.0;
            for (double v : S.values) mean += v;
            mean /= static_cast<double>(S.values.size());
            for (std::size_t i = 0; i < S.values.size(); ++i)
                cost.values[i] = std::abs(S.values[i] - mean);
            break;
        }
        case Strategy::Median: {
            std::vector<double> sorted = S.values;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double median = (n % 2 == 1)
                                      ? sorted[n / 2]
                                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            for (std::size_t i = 0; i < S.values.size(); ++i)
                cost.values[i] = std::abs(S.values[i] - median);
            break;
        }
        case Strategy::Random: {
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            for (double& v : cost.values) v = uni(rng);
            break;
        }
    }
    return cost;
}

std::vector<PairSelection> next_pairs(const std::map<Pid, std::vector<float>>& multi_pool,
                                      const CentroidsMemory& memory, ExclusionQueue& queue,
                                      Strategy strategy, std::uint32_t n_p,
                                      std::mt19937_64& rng) {
    if (multi_pool.size() < n_p)
        fail(Errc::NotEnoughCandidates, "multi pool smaller than n_p");

    std::vector<Pid> multi_pids;
    for (const auto& [pid, c] : multi_pool) multi_pids.push_back(pid);
    for (std::uint32_t i = 0; i < n_p; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, multi_pids.size() - 1);
        std::swap(multi_pids[i], multi_pids[pick(rng)]);
    }
    multi_pids.resize(n_p);
    std::sort(multi_pids.begin(), multi_pids.end());

    std::vector<Pid> single_pids;
    for (const auto& [pid, mu] : memory.entries)
        if (!queue.contains(pid)) single_pids.push_back(pid);
    if (single_pids.size() < n_p)
        fail(Errc::NotEnoughCandidates,
             "only " + std::to_string(single_pids.size()) + " single pids available for n_p=" +
                 std::to_string(n_p));

    EmbeddingMatrix A(memory.dim), B(memory.dim);
    for (Pid p : multi_pids) {
        const auto& v = multi_pool.at(p);
        A.append_row(std::span<const float>(v.data(), v.size()));
    }
    for (Pid p : single_pids) {
        const auto& v = memory.entries.at(p);
        B.append_row(std::span<const float>(v.data(), v.size()));
    }
    const MatrixD S = pairwise_similarity(A, B);
    const MatrixD cost = strategy_cost(S, strategy, rng);
    const std::vector<std::size_t> assign = hungarian_assign(cost);

    std::vector<PairSelection> pairs(n_p);
    for (std::uint32_t i = 0; i < n_p; ++i) {
        pairs[i].multi_pid = multi_pids[i];
        pairs[i].single_pid = single_pids[assign[i]];
        pairs[i].similarity = S.at(i, assign[i]);
    }
    for (const auto& p : pairs) queue.push(p.single_pid);
    return pairs;
}

SamplingIndex SamplingIndex::build(const DatasetManifest& manifest,
                                   const std::set<SampleId>& removed) {
    SamplingIndex idx;
    for (const auto& r : manifest.records()) {
        if (r.split != Split::Train) continue;
        if (removed.count(r.sample_id)) continue;
        if (r.source == Source::MultiCamera) {
            idx.multi[r.pid][r.context_id].push_back(r.sample_id);
        } else {
            idx.single[r.pid].push_back(r.sample_id);
            idx.single_video.emplace(r.pid, r.context_id);
        }
    }
    return idx;
}

MiniBatchPlan compose_minibatch(const std::vector<PairSelection>& pairs,
                                const SamplingIndex& index, std::uint32_t n_k,
                                std::mt19937_64& rng) {
    MiniBatchPlan plan;
    plan.pairs = pairs;
    for (const auto& pair : pairs) {
        // multi side: one image per camera in shuffled order, wrapping into
        // further rounds only when the pid has fewer than n_k images
        auto mit = index.multi.find(pair.multi_pid);
        if (mit == index.multi.end() || mit->second.empty())
            fail(Errc::EmptyGroup, "multi pid " + std::to_string(pair.multi_pid) +
                                       " has no sampleable images");
        std::vector<std::pair<std::int64_t, std::vector<SampleId>>> cams(
            mit->second.begin(), mit->second.end());
        std::shuffle(cams.begin(), cams.end(), rng);
        for (auto& [cam, ids] : cams) std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::size_t> cursor(cams.size(), 0);
        std::uint32_t taken = 0;
        while (taken < n_k) {
            bool progressed = false;
            for (std::size_t c = 0; c < cams.size() && taken < n_k; ++c) {
                if (cursor[c] >= cams[c].second.size()) continue;
                const SampleId id = cams[c].second[cursor[c]++];
                plan.entries.push_back({id, pair.multi_pid, Source::MultiCamera, cams[c].first});
                ++taken;
                progressed = true;
            }
            if (!progressed) std::fill(cursor.begin(), cursor.end(), 0);  // wrap
        }
        // single side: uniform shuffle, wrap only when short of images
        auto sit = index.single.find(pair.single_pid);
        if (sit == index.single.end() || sit->second.empty())
            fail(Errc::EmptyGroup, "single pid " + std::to_string(pair.single_pid) +
                                       " has no sampleable images");
        std::vector<SampleId> ids = sit->second;
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::int64_t video = index.single_video.at(pair.single_pid);
        for (std::uint32_t k = 0; k < n_k; ++k) {
            const SampleId id = ids[k % ids.size()];
            plan.entries.push_back({id, pair.single_pid, Source::SingleCamera, video});
        }
    }
    return plan;
}

} // namespace mixpipe
