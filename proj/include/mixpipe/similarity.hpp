#pragma once

#include <span>

#include "mixpipe/types.hpp"

namespace mixpipe {

// Cosine similarity accumulated in double precision.  Throws ValidationError
// (ZeroNormVector) when either vector has L2 norm below 1e-12.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// S[i][j] = cos(rows[i], cols[j]).  Row computation is parallelised; each
// worker writes a disjoint block so results are bitwise reproducible.
MatrixD pairwise_similarity(const EmbeddingMatrix& rows, const EmbeddingMatrix& cols);

} // namespace mixpipe
