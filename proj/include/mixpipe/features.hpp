#pragma once

#include <cstdint>
#include <span>

#include "mixpipe/types.hpp"

namespace mixpipe {

// Where sample embeddings come from: a stored matrix, or an encoder applied
// to raw features.  ops_count feeds the efficiency benchmark.
class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual std::uint32_t dim() const = 0;
    virtual EmbeddingMatrix embed(std::span<const SampleId> ids) = 0;
    virtual std::uint64_t ops_count() const = 0;
};

// Rows taken verbatim from a manifest-aligned matrix.
class PrecomputedFeatures : public FeatureSource {
public:
    PrecomputedFeatures(const DatasetManifest& manifest, const EmbeddingMatrix& matrix)
        : manifest_(manifest), matrix_(matrix) {}

    std::uint32_t dim() const override { return matrix_.dim; }

    EmbeddingMatrix embed(std::span<const SampleId> ids) override {
        EmbeddingMatrix out(matrix_.dim);
        out.data.reserve(ids.size() * matrix_.dim);
        for (SampleId id : ids) out.append_row(matrix_.row(manifest_.row_of(id)));
        ops_ += ids.size();
        return out;
    }

    std::uint64_t ops_count() const override { return ops_; }

private:
    const DatasetManifest& manifest_;
    const EmbeddingMatrix& matrix_;
    std::uint64_t ops_ = 0;
};

} // namespace mixpipe
