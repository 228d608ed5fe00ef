#pragma once

#include <cstddef>
#include <vector>

namespace tipflow {

/// Thomas algorithm for a tridiagonal system; `lo[0]` and `up[n-1]` unused.
/// Overwrites scratch, returns the solution in `x`.
inline void solve_tridiag(const std::vector<double>& lo, const std::vector<double>& di,
                          const std::vector<double>& up, const std::vector<double>& rhs,
                          std::vector<double>& x, std::vector<double>& scratch) {
    const std::size_t n = di.size();
    x.resize(n);
    scratch.resize(n);
    double beta = di[0];
    x[0] = rhs[0] / beta;
    for (std::size_t j = 1; j < n; ++j) {
        scratch[j] = up[j - 1] / beta;
        beta = di[j] - lo[j] * scratch[j];
        x[j] = (rhs[j] - lo[j] * x[j - 1]) / beta;
    }
    for (std::size_t j = n - 1; j-- > 0;) x[j] -= scratch[j + 1] * x[j + 1];
}

}  // namespace tipflow
