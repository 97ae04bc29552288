#include "mixpipe/similarity.hpp"

#include <cmath>

#include "mixpipe/util.hpp"

namespace mixpipe {

namespace {

constexpr double kNormFloor = 1e-12;

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size())
        fail(Errc::ShapeMismatch, "cosine of vectors with sizes " +
                                      std::to_string(a.size()) + " and " +
                                      std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < kNormFloor || nb < kNormFloor)
        fail(Errc::ZeroNormVector, "cosine similarity of (near-)zero vector");
    return dot / (na * nb);
}

} // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    return cosine_impl<float>(a, b);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return cosine_impl<double>(a, b);
}

MatrixD pairwise_similarity(const EmbeddingMatrix& rows, const EmbeddingMatrix& cols) {
    if (rows.dim != cols.dim)
        fail(Errc::DimMismatch, "pairwise similarity dims " + std::to_string(rows.dim) +
                                    " vs " + std::to_string(cols.dim));
    const std::size_t nr = rows.rows();
    const std::size_t nc = cols.rows();

    // Pre-scan norms serially so the zero-norm error fires at a stable site.
    std::vector<double> rnorm(nr), cnorm(nc);
    for (std::size_t i = 0; i < nr; ++i) {
        double s = 0.0;
        for (float v : rows.row(i)) s += static_cast<double>(v) * v;
        rnorm[i] = std::sqrt(s);
        if (rnorm[i] < kNormFloor)
            fail(Errc::ZeroNormVector, "row " + std::to_string(i) + " has zero norm");
    }
    for (std::size_t j = 0; j < nc; ++j) {
        double s = 0.0;
        for (float v : cols.row(j)) s += static_cast<double>(v) * v;
        cnorm[j] = std::sqrt(s);
        if (cnorm[j] < kNormFloor)
            fail(Errc::ZeroNormVector, "column " + std::to_string(j) + " has zero norm");
    }

    MatrixD out(nr, nc);
    parallel_for(nr, [&](std::size_t i) {
        const auto a = rows.row(i);
        double* dst = out.values.data() + i * nc;
        for (std::size_t j = 0; j < nc; ++j) {
            const auto b = cols.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k)
                dot += static_cast<double>(a[k]) * static_cast<double>(b[k]);
            dst[j] = dot / (rnorm[i] * cnorm[j]);
        }
    });
    return out;
}

} // namespace mixpipe
