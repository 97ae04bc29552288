#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mixpipe/errors.hpp"

namespace mixpipe {

using SampleId = std::int64_t;
using Pid = std::int64_t;

// Dense row-major f32 matrix; one row per sample, rows ordered by ascending
// sample id wherever a manifest is attached.
struct EmbeddingMatrix {
    std::uint32_t dim = 0;
    std::vector<float> data;

    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::uint32_t d) : dim(d) {}

    std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }

    std::span<const float> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    std::span<float> row(std::size_t i) {
        return {data.data() + i * dim, dim};
    }

    void append_row(std::span<const float> values);
    void append_row(std::span<const double> values);

    // Throws ValidationError on NaN/Inf entries or rows without dim.
    void validate() const;

    bool operator==(const EmbeddingMatrix&) const = default;
};

// Generic dense double matrix for similarity scores, assignment costs and
// encoder activations.
struct MatrixD {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    MatrixD() = default;
    MatrixD(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols, cols};
    }
    std::span<double> row(std::size_t i) {
        return {values.data() + i * cols, cols};
    }

    bool operator==(const MatrixD&) const = default;
};

enum class Source { MultiCamera, SingleCamera };
enum class Split { Train, Query, Gallery };

const char* source_tag(Source s);   // "M" / "S"
const char* split_tag(Split s);     // "train" / "query" / "gallery"

struct SampleRecord {
    SampleId sample_id = 0;
    Pid pid = 0;
    Source source = Source::MultiCamera;
    // Camera id for multi-camera records, video id for single-camera ones.
    std::int64_t context_id = 0;
    Split split = Split::Train;

    bool operator==(const SampleRecord&) const = default;
};

// Derived train-split counts; multi-camera and single-camera pids live in
// separate namespaces (the same integer may appear in both).
struct ManifestCounts {
    std::size_t n_multicam_images = 0;   // N_m
    std::size_t n_singlecam_images = 0;  // N_s
    std::size_t n_multicam_pids = 0;     // M_m
    std::size_t n_singlecam_pids = 0;    // M_s
    std::size_t n_cameras = 0;           // K_m
};

class DatasetManifest {
public:
    DatasetManifest() = default;
    // Sorts by sample id and validates.
    explicit DatasetManifest(std::vector<SampleRecord> records);

    const std::vector<SampleRecord>& records() const { return records_; }

    // Unique ids, each single-camera pid confined to one video id.
    void validate() const;

    ManifestCounts counts() const;

    // Row index of a sample in any matrix aligned with this manifest.
    std::size_t row_of(SampleId id) const;
    bool contains(SampleId id) const;

    std::set<Pid> train_pids(Source source) const;
    std::vector<const SampleRecord*> train_records(Source source) const;
    std::vector<const SampleRecord*> split_records(Split split) const;

    // Remaps single-camera train/other labels through old->canonical pids.
    void apply_pid_mapping(const std::map<Pid, Pid>& mapping);

    bool operator==(const DatasetManifest&) const = default;

private:
    std::vector<SampleRecord> records_;
};

} // namespace mixpipe
