#pragma once

#include <deque>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "mixpipe/centroids.hpp"
#include "mixpipe/config.hpp"
#include "mixpipe/features.hpp"
#include "mixpipe/types.hpp"

namespace mixpipe {

// FIFO of recently paired single-camera pids; members are barred from the
// next assignments until evicted.
class ExclusionQueue {
public:
    explicit ExclusionQueue(std::size_t capacity = 0) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return order_.size(); }
    bool contains(Pid p) const { return members_.count(p) != 0; }
    const std::deque<Pid>& entries() const { return order_; }

    void push(Pid p);
    void set_capacity(std::size_t capacity);
    // After merges: entries follow the mapping, duplicates keep their most
    // recent position.
    void remap(const std::map<Pid, Pid>& mapping);

private:
    std::size_t capacity_;
    std::deque<Pid> order_;
    std::set<Pid> members_;
};

// min(queue_epochs * iterations_per_epoch * n_p, live - n_p), floored at 0.
std::size_t queue_capacity(const PipelineConfig& config, std::size_t live_single_pids);

// Mean embedding per multi-camera train pid.
std::map<Pid, std::vector<float>> compute_multicam_centroids(const DatasetManifest& manifest,
                                                             FeatureSource& features);

// Assignment cost per strategy; the mean/median statistic spans the whole
// matrix, an even-count median is the midpoint of the central pair.
MatrixD strategy_cost(const MatrixD& S, Strategy strategy, std::mt19937_64& rng);

struct PairSelection {
    Pid multi_pid = 0;
    Pid single_pid = 0;
    double similarity = 0.0;
};

// One assignment round: sample n_p multi pids, match them one-to-one against
// the non-excluded single-camera centroids, push winners into the queue.
std::vector<PairSelection> next_pairs(const std::map<Pid, std::vector<float>>& multi_pool,
                                      const CentroidsMemory& memory, ExclusionQueue& queue,
                                      Strategy strategy, std::uint32_t n_p,
                                      std::mt19937_64& rng);

// Per-pid image pools for batch composition, with this epoch's removed
// samples withheld.
struct SamplingIndex {
    std::map<Pid, std::map<std::int64_t, std::vector<SampleId>>> multi;  // pid -> camera -> ids
    std::map<Pid, std::vector<SampleId>> single;                         // pid -> ids
    std::map<Pid, std::int64_t> single_video;                            // pid -> video id

    static SamplingIndex build(const DatasetManifest& manifest,
                               const std::set<SampleId>& removed);
};

struct PlanEntry {
    SampleId sample_id = 0;
    Pid pid = 0;
    Source source = Source::MultiCamera;
    std::int64_t context_id = 0;
};

struct MiniBatchPlan {
    std::vector<PairSelection> pairs;
    std::vector<PlanEntry> entries;  // 2 * n_p * n_k ids, pair-blocked
};

// n_k images per paired pid from each side; multi-camera picks round-robin
// over shuffled cameras for maximal camera spread.
MiniBatchPlan compose_minibatch(const std::vector<PairSelection>& pairs,
                                const SamplingIndex& index, std::uint32_t n_k,
                                std::mt19937_64& rng);

} // namespace mixpipe
