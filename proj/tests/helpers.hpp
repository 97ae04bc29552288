#pragma once

// Shared scaffolding for the test suite.  Oracles that verify a single module
// live next to their tests; only genuinely cross-cutting pieces belong here.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mixpipe/types.hpp"

namespace testutil {

// Scratch directory, removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "mixpipe_test_XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return path_ + "/" + name; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Independent scalar cosine in long double; the production code accumulates
// in double, so agreement to ~1e-12 is expected, not exactness.
inline long double oracle_cosine(std::span<const float> a, std::span<const float> b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline mixpipe::EmbeddingMatrix random_matrix(std::size_t rows, std::uint32_t dim,
                                              std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    mixpipe::EmbeddingMatrix m(dim);
    std::vector<double> row(dim);
    for (std::size_t r = 0; r < rows; ++r) {
        for (auto& v : row) v = g(rng);
        m.append_row(std::span<const double>(row));
    }
    return m;
}

} // namespace testutil
