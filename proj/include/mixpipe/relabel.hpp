#pragma once

#include <iosfwd>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "mixpipe/centroids.hpp"
#include "mixpipe/config.hpp"
#include "mixpipe/features.hpp"
#include "mixpipe/types.hpp"

namespace mixpipe {

enum class Verdict { Keep, Remove, Relabel };

struct SampleDecision {
    SampleId sample_id = 0;
    Verdict verdict = Verdict::Keep;
    Pid new_pid = 0;      // meaningful only when verdict == Relabel
    double best_sim = 0.0;
};

struct RefinementReport {
    std::size_t n_input_images = 0;
    std::size_t n_removed = 0;
    std::size_t n_relabeled = 0;
    std::size_t n_kept = 0;
    std::size_t pids_before = 0;
    std::size_t pids_after = 0;
    std::vector<std::vector<Pid>> merge_components;  // non-singleton groups
    std::size_t skipped_empty_pids = 0;
    // Running totals across epochs, filled by the orchestrator (equal to the
    // per-epoch numbers when only one epoch ran).
    std::size_t cum_removed = 0;
    std::size_t cum_relabeled = 0;
    std::size_t cum_merged_pids = 0;
};

void write_report(const RefinementReport& report, std::ostream& os);

struct EpochSubset {
    std::map<Pid, std::vector<SampleId>> by_pid;
    std::size_t skipped_empty_pids = 0;

    std::vector<SampleId> flat_ids() const;
    std::vector<Pid> flat_labels() const;
};

// Up to k ids per single-camera train pid, uniform without replacement.
// excluded ids never enter a subset.
EpochSubset select_epoch_subset(const DatasetManifest& manifest, std::uint32_t k_per_pid,
                                std::mt19937_64& rng,
                                const std::set<SampleId>& excluded = {});

// One verdict per row against a frozen memory snapshot: remove when even the
// best centroid similarity falls below tau_remove, relabel when a foreign
// centroid wins above tau_rel, keep otherwise.
std::vector<SampleDecision> filter_and_relabel(const std::vector<SampleId>& ids,
                                               const EmbeddingMatrix& features,
                                               const std::vector<Pid>& labels,
                                               const CentroidsMemory& memory,
                                               double tau_remove, double tau_rel);

struct MergeOutcome {
    std::map<Pid, Pid> mapping;                      // every live pid -> canonical
    std::vector<std::vector<Pid>> components;        // non-singleton, sorted
};

// Connected components of the thresholded centroid-similarity graph; each
// component collapses onto its smallest pid.  Mutates the memory in place.
MergeOutcome merge_pids(CentroidsMemory& memory, double tau_merge);

struct EpochOutcome {
    DatasetManifest refined;
    CentroidsMemory memory;
    RefinementReport report;
    std::vector<SampleDecision> decisions;
    std::set<SampleId> removed_ids;   // excluded from sampling this epoch only
    std::map<Pid, Pid> pid_mapping;
};

// Full per-epoch refinement pass: subset -> embed -> filter/relabel -> EMA
// -> merge -> manifest rewrite.  Bootstraps the memory from subset means
// when it is empty.
EpochOutcome run_relabeling_epoch(const DatasetManifest& manifest, FeatureSource& features,
                                  const CentroidsMemory& memory, const PipelineConfig& config,
                                  std::mt19937_64& rng);

} // namespace mixpipe
