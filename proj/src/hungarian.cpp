#include "mixpipe/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixpipe/errors.hpp"

namespace mixpipe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-9;

// Jonker-Volgenant style shortest augmenting paths with potentials,
// O(n^2 m).  Returns per-row column indices and the total cost.
std::pair<std::vector<int>, double> jv_solve(const MatrixD& cost) {
    const int n = static_cast<int>(cost.rows);
    const int m = static_cast<int>(cost.cols);
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    double total = 0.0;
    for (int j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        row_to_col[p[j] - 1] = j - 1;
        total += cost.at(p[j] - 1, j - 1);
    }
    return {std::move(row_to_col), total};
}

MatrixD submatrix(const MatrixD& cost, std::size_t from_row,
                  const std::vector<std::size_t>& cols) {
    MatrixD out(cost.rows - from_row, cols.size());
    for (std::size_t i = from_row; i < cost.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out.at(i - from_row, j) = cost.at(i, cols[j]);
    return out;
}

} // namespace

double assignment_cost(const MatrixD& cost, const std::vector<std::size_t>& assign) {
    double total = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) total += cost.at(i, assign[i]);
    return total;
}

std::vector<std::size_t> hungarian_assign(const MatrixD& cost) {
    const std::size_t n = cost.rows, m = cost.cols;
    if (n == 0) return {};
    if (n > m)
        fail(Errc::Infeasible, "assignment needs cols >= rows, got " + std::to_string(n) +
                                   " x " + std::to_string(m));
    for (double c : cost.values)
        if (!std::isfinite(c)) fail(Errc::ValidationError, "non-finite assignment cost");

    auto [assign0, best_total] = jv_solve(cost);

    // Greedy lexicographic refinement: fix rows top-down to the smallest
    // column that keeps the remaining subproblem at its optimal cost.
    std::vector<std::size_t> result(n);
    std::vector<std::size_t> free_cols(m);
    for (std::size_t j = 0; j < m; ++j) free_cols[j] = j;
    // suffix[i..] holds, in free-column coordinates per step, the optimal
    // assignment of the not-yet-fixed rows
    std::vector<std::size_t> suffix(n);
    for (std::size_t i = 0; i < n; ++i) suffix[i] = static_cast<std::size_t>(assign0[i]);
    double suffix_cost = best_total;

    for (std::size_t i = 0; i < n; ++i) {
        const double tol = kTieEps * std::max(1.0, std::abs(suffix_cost));
        std::size_t chosen_idx = std::numeric_limits<std::size_t>::max();
        for (std::size_t cand = 0; cand < free_cols.size(); ++cand) {
            const std::size_t col = free_cols[cand];
            if (col == suffix[i]) { chosen_idx = cand; break; }  // already optimal
            if (col > suffix[i]) break;                          // no smaller tie exists
            if (i + 1 == n) {
                // last row: any remaining column with equal cost works
                if (std::abs(cost.at(i, col) - cost.at(i, suffix[i])) <= tol) {
                    chosen_idx = cand;
                    break;
                }
                continue;
            }
            std::vector<std::size_t> rest;
            rest.reserve(free_cols.size() - 1);
            for (std::size_t k = 0; k < free_cols.size(); ++k)
                if (k != cand) rest.push_back(free_cols[k]);
            MatrixD sub = submatrix(cost, i + 1, rest);
            auto [sub_assign, sub_cost] = jv_solve(sub);
            if (std::abs(cost.at(i, col) + sub_cost - suffix_cost) <= tol) {
                chosen_idx = cand;
                for (std::size_t r = i + 1; r < n; ++r)
                    suffix[r] = rest[static_cast<std::size_t>(sub_assign[r - i - 1])];
                break;
            }
        }
        if (chosen_idx == std::numeric_limits<std::size_t>::max())
            fail(Errc::Infeasible, "lexicographic refinement lost the optimum");
        result[i] = free_cols[chosen_idx];
        suffix_cost -= cost.at(i, result[i]);
        free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(chosen_idx));
    }
    return result;
}

} // namespace mixpipe
