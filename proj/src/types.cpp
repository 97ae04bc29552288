#include "mixpipe/types.hpp"

#include <algorithm>
#include <cmath>

namespace mixpipe {

void EmbeddingMatrix::append_row(std::span<const float> values) {
    if (values.size() != dim)
        fail(Errc::ShapeMismatch, "row has " + std::to_string(values.size()) +
                                      " values, expected " + std::to_string(dim));
    data.insert(data.end(), values.begin(), values.end());
}

void EmbeddingMatrix::append_row(std::span<const double> values) {
    if (values.size() != dim)
        fail(Errc::ShapeMismatch, "row has " + std::to_string(values.size()) +
                                      " values, expected " + std::to_string(dim));
    for (double v : values) data.push_back(static_cast<float>(v));
}

void EmbeddingMatrix::validate() const {
    if (dim == 0 && !data.empty())
        fail(Errc::ValidationError, "embedding matrix has data but dim = 0");
    if (dim != 0 && data.size() % dim != 0)
        fail(Errc::ValidationError, "embedding data size " + std::to_string(data.size()) +
                                          " is not a multiple of dim " + std::to_string(dim));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i]))
            fail(Errc::ValidationError,
                 "non-finite value at flat index " + std::to_string(i));
    }
}

const char* source_tag(Source s) {
    return s == Source::MultiCamera ? "M" : "S";
}

const char* split_tag(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Query: return "query";
        default: return "gallery";
    }
}

DatasetManifest::DatasetManifest(std::vector<SampleRecord> records)
    : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return a.sample_id < b.sample_id;
              });
    validate();
}

void DatasetManifest::validate() const {
    // records_ are sorted, so duplicates are adjacent.
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].sample_id == records_[i - 1].sample_id)
            fail(Errc::DuplicateSampleId,
                 "sample id " + std::to_string(records_[i].sample_id) +
                     " appears more than once");
    }
    std::map<Pid, std::int64_t> video_of;
    for (const auto& r : records_) {
        if (r.source != Source::SingleCamera) continue;
        auto [it, inserted] = video_of.emplace(r.pid, r.context_id);
        if (!inserted && it->second != r.context_id)
            fail(Errc::CrossVideoPid,
                 "single-camera pid " + std::to_string(r.pid) +
                     " spans videos " + std::to_string(it->second) + " and " +
                     std::to_string(r.context_id));
    }
}

ManifestCounts DatasetManifest::counts() const {
    ManifestCounts c;
    std::set<Pid> mpids, spids;
    std::set<std::int64_t> cams;
    for (const auto& r : records_) {
        if (r.split != Split::Train) continue;
        if (r.source == Source::MultiCamera) {
            ++c.n_multicam_images;
            mpids.insert(r.pid);
            cams.insert(r.context_id);
        } else {
            ++c.n_singlecam_images;
            spids.insert(r.pid);
        }
    }
    c.n_multicam_pids = mpids.size();
    c.n_singlecam_pids = spids.size();
    c.n_cameras = cams.size();
    return c;
}

std::size_t DatasetManifest::row_of(SampleId id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const SampleRecord& r, SampleId v) {
                                   return r.sample_id < v;
                               });
    if (it == records_.end() || it->sample_id != id)
        fail(Errc::ValidationError, "sample id " + std::to_string(id) + " not in manifest");
    return static_cast<std::size_t>(it - records_.begin());
}

bool DatasetManifest::contains(SampleId id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const SampleRecord& r, SampleId v) {
                                   return r.sample_id < v;
                               });
    return it != records_.end() && it->sample_id == id;
}

std::set<Pid> DatasetManifest::train_pids(Source source) const {
    std::set<Pid> out;
    for (const auto& r : records_)
        if (r.split == Split::Train && r.source == source) out.insert(r.pid);
    return out;
}

std::vector<const SampleRecord*> DatasetManifest::train_records(Source source) const {
    std::vector<const SampleRecord*> out;
    for (const auto& r : records_)
        if (r.split == Split::Train && r.source == source) out.push_back(&r);
    return out;
}

std::vector<const SampleRecord*> DatasetManifest::split_records(Split split) const {
    std::vector<const SampleRecord*> out;
    for (const auto& r : records_)
        if (r.split == split) out.push_back(&r);
    return out;
}

void DatasetManifest::apply_pid_mapping(const std::map<Pid, Pid>& mapping) {
    // remapped records adopt the canonical pid's video so the one-video
    // invariant survives merges
    std::map<Pid, std::int64_t> video_of;
    for (const auto& r : records_)
        if (r.source == Source::SingleCamera) video_of.emplace(r.pid, r.context_id);
    for (auto& r : records_) {
        if (r.source != Source::SingleCamera) continue;
        auto it = mapping.find(r.pid);
        if (it != mapping.end() && it->second != r.pid) {
            r.pid = it->second;
            auto vit = video_of.find(r.pid);
            if (vit != video_of.end()) r.context_id = vit->second;
        }
    }
    validate();
}

} // namespace mixpipe
