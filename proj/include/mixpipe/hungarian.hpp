#pragma once

#include <cstddef>
#include <vector>

#include "mixpipe/types.hpp"

namespace mixpipe {

// Minimum-total-cost assignment of every row to a distinct column (n <= m).
// Among cost-optimal assignments the lexicographically smallest row->column
// vector is returned, so equal-cost problems resolve deterministically.
std::vector<std::size_t> hungarian_assign(const MatrixD& cost);

// Total cost of an assignment vector against the same matrix.
double assignment_cost(const MatrixD& cost, const std::vector<std::size_t>& assign);

} // namespace mixpipe
