#pragma once

// dim H^q(P^1, O(d)) from the Cech complex of the standard two-set cover,
// truncated to Laurent exponents |j| <= N. Test-only.

#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

namespace ktest {

inline int matrix_rank(std::vector<std::vector<double>> a) {
  int rank = 0;
  const int rows = static_cast<int>(a.size());
  const int cols = rows ? static_cast<int>(a[0].size()) : 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = rank;
    for (int r = rank; r < rows; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-12) continue;
    std::swap(a[piv], a[rank]);
    for (int r = 0; r < rows; ++r) {
      if (r == rank || a[r][c] == 0.0) continue;
      double f = a[r][c] / a[rank][c];
      for (int k = c; k < cols; ++k) a[r][k] -= f * a[rank][k];
    }
    ++rank;
  }
  return rank;
}

// Sections over U0 = {zeta_0 != 0} are zeta_0^d t^a (a >= 0), over U1 they
// are zeta_0^d t^{d-b} (b >= 0), t = zeta_1/zeta_0; delta(f, g) = f - g on U01.
inline std::pair<int, int> cech_dims_p1(int d) {
  const int N = std::abs(d) + 4;
  std::vector<int> exps;  // column exponents, sign in the second list
  std::vector<double> signs;
  for (int a = 0; a <= N; ++a) exps.push_back(a), signs.push_back(1.0);
  for (int j = d; j >= -N; --j) exps.push_back(j), signs.push_back(-1.0);
  std::vector<std::vector<double>> m(2 * N + 1, std::vector<double>(exps.size(), 0.0));
  for (std::size_t c = 0; c < exps.size(); ++c) m[exps[c] + N][c] = signs[c];
  int rank = matrix_rank(m);
  return {static_cast<int>(exps.size()) - rank, 2 * N + 1 - rank};
}

// H^{p,q}(P^1, L^r) = H^q(P^1, Omega^p(r)) and Omega^1 = O(-2).
inline int dolbeault_dim_p1(int p, int q, int r) {
  auto [h0, h1] = cech_dims_p1(r - 2 * p);
  return q == 0 ? h0 : h1;
}

}  // namespace ktest
