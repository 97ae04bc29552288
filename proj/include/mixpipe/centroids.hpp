#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixpipe/types.hpp"

namespace mixpipe {

struct CentroidsMemory {
    std::uint32_t dim = 0;
    std::map<Pid, std::vector<float>> entries;
    std::uint32_t epoch_stamp = 0;

    bool operator==(const CentroidsMemory&) const = default;
};

// Per-pid arithmetic means, accumulated in double.  labels[i] labels
// features.row(i).
std::map<Pid, std::vector<double>> group_means(const EmbeddingMatrix& features,
                                               const std::vector<Pid>& labels);

CentroidsMemory initialize_centroids(const EmbeddingMatrix& features,
                                     const std::vector<Pid>& labels);

// mu_k <- alpha*mu_k + (1-alpha)*mean_k for pids present in per_pid_means;
// other pids untouched.  Bumps epoch_stamp.
void ema_update(CentroidsMemory& memory,
                const std::map<Pid, std::vector<double>>& per_pid_means, double alpha);

// Exact means over every single-camera train image; the naive baseline the
// EMA path is benchmarked against, and the oracle for tests.
CentroidsMemory recompute_full(const DatasetManifest& manifest,
                               const EmbeddingMatrix& embeddings);

// Collapse merged pids: canonical key gets the unweighted mean of its
// members, non-canonical keys are dropped.
void apply_merge(CentroidsMemory& memory, const std::map<Pid, Pid>& pid_mapping);

// On-disk form: centroid rows in ascending pid order in the embedding binary
// plus a `row_index pid` sidecar.
void write_memory(const CentroidsMemory& memory, const std::string& bin_path,
                  const std::string& sidecar_path);
CentroidsMemory read_memory(const std::string& bin_path, const std::string& sidecar_path);

} // namespace mixpipe
