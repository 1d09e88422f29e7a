#pragma once

#include <random>
#include <vector>

#include "koppelman/form.hpp"

namespace ktest {

using namespace koppelman;

inline cplx random_cplx(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng)};
}

// Random expression over zeta_0, zeta_1, z_0, z_1 and conjugates. Divisions
// are by 1 + |x|^2, so no poles anywhere.
inline Expr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
  int k = pick(rng);
  if (k == 0) return Expr(random_cplx(rng));
  if (k == 1) {
    std::uniform_int_distribution<int> v(0, 7);
    int c = v(rng);
    Space s = (c & 4) ? Space::z : Space::zeta;
    return Expr::var(s, c & 1, (c & 2) != 0);
  }
  Expr a = random_expr(rng, depth - 1);
  Expr b = random_expr(rng, depth - 1);
  switch (k) {
    case 2: return a + b;
    case 3: return a * b;
    case 4: return a / (Expr(1.0) + b * conj(b));
    case 5: return pow(a, 2) - b;
    default: return conj(a) * b + Expr(0.5);
  }
}

inline Point random_point(std::mt19937_64& rng, int n = 2, double scale = 1.0) {
  Point p;
  for (int i = 0; i < n; ++i) {
    p.set(Space::zeta, i, random_cplx(rng, scale));
    p.set(Space::z, i, random_cplx(rng, scale));
  }
  return p;
}

inline const std::vector<Generator>& test_generators() {
  static const std::vector<Generator> g{d_zeta(0), d_zeta(1), d_zetabar(0), d_zetabar(1), d_z(0), d_z(1),
                                        d_zbar(0), d_zbar(1), e_gen(0),    e_gen(1),    e_star(0), e_star(1)};
  return g;
}

inline Form random_form(std::mt19937_64& rng, int terms = 3, int max_len = 3, int depth = 2) {
  Form f;
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> gi(0, static_cast<int>(test_generators().size()) - 1);
  for (int t = 0; t < terms; ++t) {
    std::vector<Generator> gens;
    int l = len(rng);
    for (int i = 0; i < l; ++i) gens.push_back(test_generators()[gi(rng)]);
    f += Form::monomial(gens, random_expr(rng, depth));
  }
  return f;
}

// Same, but every term has total degree d.
inline Form random_pure_form(std::mt19937_64& rng, int d, int terms = 3, int depth = 2) {
  Form f;
  std::vector<Generator> pool = test_generators();
  for (int t = 0; t < terms; ++t) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<Generator> gens(pool.begin(), pool.begin() + d);
    f += Form::monomial(gens, random_expr(rng, depth));
  }
  return f;
}

inline std::vector<Expr> flat_eta(int n) {
  const cplx two_pi_i{0.0, 2.0 * 3.14159265358979323846};
  std::vector<Expr> eta;
  for (int j = 0; j < n; ++j) eta.push_back(Expr(two_pi_i) * (Expr::var(Space::z, j) - Expr::var(Space::zeta, j)));
  return eta;
}

inline double rel_err(cplx a, cplx b) {
  double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace ktest
