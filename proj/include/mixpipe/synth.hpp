#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mixpipe/types.hpp"

namespace mixpipe {

// Stored pid of junk samples in the ground truth (no real identity).
constexpr Pid kJunkPid = -1;

struct SynthSpec {
    std::uint32_t num_multicam_pids = 8;
    std::uint32_t num_singlecam_pids = 32;
    std::uint32_t images_per_pid = 12;
    std::uint32_t num_cameras = 4;
    std::uint32_t dim_raw = 32;
    double intra_noise_sigma = 0.05;
    double min_inter_angle_cos = 0.3;
    double frag_rate = 0.0;
    std::uint32_t frag_parts = 3;
    double mislabel_rate = 0.0;
    double junk_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    static SynthSpec load(const std::string& path);
    void apply(const std::string& key, const std::string& value, int line_no);
    void save(std::ostream& os) const;
};

struct GroundTruth {
    std::map<SampleId, Pid> true_pid;   // junk samples carry kJunkPid
    std::map<Pid, Pid> fragment_map;    // injected pid -> original pid
    std::set<SampleId> mislabel_set;
    // Identity anchors, exposed so tests can brute-force separability and
    // junk rejection margins.
    std::map<Pid, std::vector<float>> multi_anchor;
    std::map<Pid, std::vector<float>> single_anchor;

    // Follows fragment_map; other pids map to themselves.
    Pid resolve(Pid stored) const;
};

struct SynthOutput {
    DatasetManifest manifest;
    EmbeddingMatrix features;  // raw features, rows aligned with manifest
    GroundTruth truth;
};

SynthOutput generate(const SynthSpec& spec);

struct PartitionScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Pairwise precision/recall over same-cluster pairs; both maps must cover the
// same sample ids (junk removed from both sides by the caller).
PartitionScore score_partition(const std::map<SampleId, Pid>& predicted,
                               const std::map<SampleId, Pid>& truth);

} // namespace mixpipe
