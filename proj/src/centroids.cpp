#include "mixpipe/centroids.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mixpipe/io.hpp"

namespace mixpipe {

std::map<Pid, std::vector<double>> group_means(const EmbeddingMatrix& features,
                                               const std::vector<Pid>& labels) {
    if (labels.size() != features.rows())
        fail(Errc::ShapeMismatch, "labels/rows mismatch: " + std::to_string(labels.size()) +
                                      " vs " + std::to_string(features.rows()));
    std::map<Pid, std::pair<std::vector<double>, std::size_t>> acc;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& [sum, count] = acc[labels[i]];
        if (sum.empty()) sum.assign(features.dim, 0.0);
        const auto row = features.row(i);
        for (std::uint32_t j = 0; j < features.dim; ++j) sum[j] += row[j];
        ++count;
    }
    std::map<Pid, std::vector<double>> out;
    for (auto& [pid, sc] : acc) {
        auto& [sum, count] = sc;
        for (double& v : sum) v /= static_cast<double>(count);
        out.emplace(pid, std::move(sum));
    }
    return out;
}

CentroidsMemory initialize_centroids(const EmbeddingMatrix& features,
                                     const std::vector<Pid>& labels) {
    if (features.rows() == 0) fail(Errc::EmptyGroup, "no feature rows to initialize from");
    CentroidsMemory m;
    m.dim = features.dim;
    for (auto& [pid, mean] : group_means(features, labels)) {
        std::vector<float> v(mean.size());
        for (std::size_t i = 0; i < mean.size(); ++i) v[i] = static_cast<float>(mean[i]);
        m.entries.emplace(pid, std::move(v));
    }
    return m;
}

void ema_update(CentroidsMemory& memory,
                const std::map<Pid, std::vector<double>>& per_pid_means, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        fail(Errc::ValidationError, "alpha out of [0,1]");
    for (const auto& [pid, mean] : per_pid_means) {
        auto it = memory.entries.find(pid);
        if (it == memory.entries.end())
            fail(Errc::UnknownPid, "ema_update for pid " + std::to_string(pid) +
                                       " absent from memory");
        if (mean.size() != memory.dim)
            fail(Errc::DimMismatch, "mean dim " + std::to_string(mean.size()) +
                                        " vs memory dim " + std::to_string(memory.dim));
        auto& mu = it->second;
        for (std::size_t j = 0; j < mu.size(); ++j)
            mu[j] = static_cast<float>(alpha * static_cast<double>(mu[j]) +
                                       (1.0 - alpha) * mean[j]);
    }
    ++memory.epoch_stamp;
}

CentroidsMemory recompute_full(const DatasetManifest& manifest,
                               const EmbeddingMatrix& embeddings) {
    EmbeddingMatrix sub(embeddings.dim);
    std::vector<Pid> labels;
    for (const auto& r : manifest.records()) {
        if (r.split != Split::Train || r.source != Source::SingleCamera) continue;
        sub.append_row(embeddings.row(manifest.row_of(r.sample_id)));
        labels.push_back(r.pid);
    }
    if (labels.empty()) fail(Errc::EmptyGroup, "manifest has no single-camera train samples");
    return initialize_centroids(sub, labels);
}

void apply_merge(CentroidsMemory& memory, const std::map<Pid, Pid>& pid_mapping) {
    for (const auto& [pid, canon] : pid_mapping) {
        if (!memory.entries.count(pid))
            fail(Errc::UnknownPid, "mapping mentions pid " + std::to_string(pid) +
                                       " absent from memory");
        auto it = pid_mapping.find(canon);
        if (it == pid_mapping.end() || it->second != canon)
            fail(Errc::ValidationError, "pid mapping is not a projection at " +
                                            std::to_string(pid));
    }
    std::map<Pid, std::pair<std::vector<double>, std::size_t>> groups;
    for (const auto& [pid, mu] : memory.entries) {
        auto it = pid_mapping.find(pid);
        const Pid canon = it == pid_mapping.end() ? pid : it->second;
        auto& [sum, count] = groups[canon];
        if (sum.empty()) sum.assign(memory.dim, 0.0);
        for (std::size_t j = 0; j < mu.size(); ++j) sum[j] += static_cast<double>(mu[j]);
        ++count;
    }
    std::map<Pid, std::vector<float>> merged;
    for (auto& [canon, sc] : groups) {
        auto& [sum, count] = sc;
        std::vector<float> v(sum.size());
        for (std::size_t j = 0; j < sum.size(); ++j)
            v[j] = static_cast<float>(sum[j] / static_cast<double>(count));
        merged.emplace(canon, std::move(v));
    }
    memory.entries = std::move(merged);
}

void write_memory(const CentroidsMemory& memory, const std::string& bin_path,
                  const std::string& sidecar_path) {
    EmbeddingMatrix m(memory.dim);
    std::ofstream side(sidecar_path, std::ios::binary);
    if (!side) fail(Errc::IoError, "cannot write " + sidecar_path);
    side << "# epoch_stamp = " << memory.epoch_stamp << '\n';
    side << "# row_index\tpid\n";
    std::size_t row = 0;
    for (const auto& [pid, mu] : memory.entries) {
        m.append_row(std::span<const float>(mu.data(), mu.size()));
        side << row++ << '\t' << pid << '\n';
    }
    if (!side) fail(Errc::IoError, "write failed for " + sidecar_path);
    write_embeddings(m, bin_path);
}

CentroidsMemory read_memory(const std::string& bin_path, const std::string& sidecar_path) {
    EmbeddingMatrix m = read_embeddings(bin_path);
    std::ifstream side(sidecar_path);
    if (!side) fail(Errc::IoError, "cannot open " + sidecar_path);
    CentroidsMemory memory;
    memory.dim = m.dim;
    std::vector<char> row_used(m.rows(), 0);
    std::string line;
    int line_no = 0;
    while (std::getline(side, line)) {
        ++line_no;
        std::size_t b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        if (line[b] == '#') {
            const std::string stamp_key = "epoch_stamp =";
            std::size_t at = line.find(stamp_key);
            if (at != std::string::npos) {
                std::uint64_t stamp = 0;
                const char* s = line.data() + at + stamp_key.size();
                while (*s == ' ') ++s;
                std::from_chars(s, line.data() + line.size(), stamp);
                memory.epoch_stamp = static_cast<std::uint32_t>(stamp);
            }
            continue;
        }
        long long row = -1, pid = 0;
        if (std::sscanf(line.c_str(), "%lld\t%lld", &row, &pid) != 2)
            fail(Errc::ParseError, sidecar_path + ":" + std::to_string(line_no) +
                                       ": expected 'row pid'");
        if (row < 0 || static_cast<std::size_t>(row) >= m.rows())
            fail(Errc::ParseError, sidecar_path + ":" + std::to_string(line_no) +
                                       ": row index out of range");
        if (row_used[static_cast<std::size_t>(row)]++)
            fail(Errc::ParseError, sidecar_path + ":" + std::to_string(line_no) +
                                       ": row " + std::to_string(row) + " listed twice");
        const auto r = m.row(static_cast<std::size_t>(row));
        if (!memory.entries.emplace(pid, std::vector<float>(r.begin(), r.end())).second)
            fail(Errc::ParseError, sidecar_path + ":" + std::to_string(line_no) +
                                       ": duplicate pid " + std::to_string(pid));
    }
    if (memory.entries.size() != m.rows())
        fail(Errc::ParseError, sidecar_path + ": sidecar covers " +
                                   std::to_string(memory.entries.size()) + " of " +
                                   std::to_string(m.rows()) + " rows");
    return memory;
}

} // namespace mixpipe
