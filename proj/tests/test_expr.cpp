#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace koppelman;
using ktest::random_cplx;
using ktest::random_expr;
using ktest::rel_err;

namespace {

const Expr zeta0 = Expr::var(Space::zeta, 0);
const Expr zeta1 = Expr::var(Space::zeta, 1);
const Expr z0 = Expr::var(Space::z, 0);
const Expr z1 = Expr::var(Space::z, 1);

// d/dv via central differences; v holomorphic -> (d_x - i d_y)/2, conjugated -> (d_x + i d_y)/2.
cplx fd_wirtinger(const Expr& e, Point p, VarId v, double h) {
  cplx base = *p.get(v.base());
  auto at = [&](cplx w) {
    p.set(v.space, v.index, w);
    return eval(e, p);
  };
  cplx dx = (at(base + h) - at(base - h)) / (2.0 * h);
  cplx dy = (at(base + cplx{0, h}) - at(base - cplx{0, h})) / (2.0 * h);
  cplx i{0, 1};
  return v.conjugated ? 0.5 * (dx + i * dy) : 0.5 * (dx - i * dy);
}

}  // namespace

TEST_CASE("eval: diagonal zero of eta") {
  auto eta = ktest::flat_eta(1);
  Point p;
  p.set(Space::zeta, 0, 1.0);
  p.set(Space::z, 0, 1.0);
  CHECK(std::abs(eval(norm2(eta), p)) == 0.0);
}

TEST_CASE("eval: weight scalar on the diagonal") {
  auto zeta = vars(Space::zeta, 2);
  auto z = vars(Space::z, 2);
  Expr g = dot(z, conj(zeta)) / norm2(zeta);
  Point p;
  p.set(Space::zeta, {1.0, 0.0});
  p.set(Space::z, {1.0, 0.0});
  CHECK(eval(g, p) == cplx(1.0, 0.0));
}

TEST_CASE("eval: polynomial growth scalar against direct arithmetic") {
  Expr g = (Expr(1.0) + conj(zeta0) * z0) / (Expr(1.0) + zeta0 * conj(zeta0));
  Point p;
  p.set(Space::zeta, 0, 2.0);
  p.set(Space::z, 0, cplx(0.0, 3.0));
  cplx zeta{2.0, 0.0}, z{0.0, 3.0};
  cplx oracle = (1.0 + std::conj(zeta) * z) / (1.0 + std::norm(zeta));
  CHECK(rel_err(eval(g, p), oracle) < 1e-15);
  CHECK(rel_err(eval(g, p), cplx(0.2, 1.2)) < 1e-15);
}

TEST_CASE("eval: errors") {
  Point p;
  p.set(Space::zeta, 0, 0.0);
  CHECK_THROWS_AS(eval(Expr(1.0) / zeta0, p), Error);
  try {
    eval(Expr(1.0) / zeta0, p);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::division_by_zero);
  }
  try {
    eval(z0, p);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unbound_variable);
  }
}

TEST_CASE("wirtinger: leaf rules") {
  Expr n = zeta0 * conj(zeta0);
  Expr d = wirtinger(n, VarId{Space::zeta, 0, true});
  CHECK(to_text(d) == to_text(zeta0));
  CHECK(wirtinger(pow(zeta0, 2), VarId{Space::zeta, 0, true}).is_zero());
}

TEST_CASE("wirtinger: 1/|eta|^2 in zbar_1 against finite differences") {
  auto eta = ktest::flat_eta(2);
  Expr f = Expr(1.0) / norm2(eta);
  VarId v{Space::z, 1, true};
  Expr d = wirtinger(f, v);
  Expr expected = -wirtinger(norm2(eta), v) / pow(norm2(eta), 2);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    Point p = ktest::random_point(rng);
    CHECK(rel_err(eval(d, p), fd_wirtinger(f, p, v, 1e-6)) < 1e-6);
    CHECK(rel_err(eval(d, p), eval(expected, p)) < 1e-12);
  }
}

TEST_CASE("property: wirtinger matches finite differences on random expressions") {
  std::mt19937_64 rng(11);
  const VarId pool[] = {{Space::zeta, 0, false}, {Space::zeta, 1, true}, {Space::z, 0, true}, {Space::z, 1, false}};
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    VarId v = pool[i % 4];
    Expr e = random_expr(rng, 4) + random_expr(rng, 3) * Expr::var(v);
    Point p = ktest::random_point(rng);
    cplx d = eval(wirtinger(e, v), p);
    cplx fd = fd_wirtinger(e, p, v, 1e-6);
    double scale = std::max(std::abs(d), std::abs(eval(e, p)));
    if (std::abs(d) < 1e-6 * scale) {
      // derivative negligible relative to the function: compare absolutely
      CHECK(std::abs(d - fd) < 1e-6 * std::max(scale, 1.0));
    } else {
      CHECK(rel_err(d, fd) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 900);
}

TEST_CASE("property: mixed wirtinger derivatives commute") {
  std::mt19937_64 rng(12);
  VarId a{Space::zeta, 0, true}, b{Space::z, 1, false};
  for (int i = 0; i < 100; ++i) {
    Expr e = random_expr(rng, 4);
    Expr ab = wirtinger(wirtinger(e, a), b);
    Expr ba = wirtinger(wirtinger(e, b), a);
    Point p = ktest::random_point(rng);
    cplx x = eval(ab, p), y = eval(ba, p);
    CHECK(std::abs(x - y) < 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("homogeneity examples") {
  auto zeta = vars(Space::zeta, 2);
  auto z = vars(Space::z, 2);
  auto h = homogeneity(dot(z, conj(zeta)) / norm2(zeta));
  REQUIRE(h);
  CHECK(h->deg_z == 1);
  CHECK(h->deg_zbar == 0);
  CHECK(h->deg_zeta == -1);
  CHECK(h->deg_zetabar == 0);
  auto h2 = homogeneity(norm2(z));
  REQUIRE(h2);
  CHECK((h2->deg_z == 1 && h2->deg_zbar == 1 && h2->deg_zeta == 0 && h2->deg_zetabar == 0));
  CHECK_FALSE(homogeneity(zeta0 + pow(zeta0, 2)));
}

TEST_CASE("property: homogeneity additive over mul") {
  std::mt19937_64 rng(13);
  int both = 0;
  for (int i = 0; i < 500; ++i) {
    Expr a = random_expr(rng, 3), b = random_expr(rng, 3);
    auto ha = homogeneity(a), hb = homogeneity(b);
    if (!ha || !hb) continue;
    ++both;
    auto hab = homogeneity(a * b);
    REQUIRE(hab);
    HomogeneityDegree s = *ha;
    s += *hb;
    CHECK(*hab == s);
  }
  CHECK(both > 20);
}

TEST_CASE("homogeneity: scale test") {
  auto zeta = vars(Space::zeta, 2);
  auto z = vars(Space::z, 2);
  Expr e = pow(dot(z, conj(zeta)), 2) / (norm2(zeta) * zeta[0]);
  auto h = homogeneity(e);
  REQUIRE(h);
  std::mt19937_64 rng(3);
  Point p = ktest::random_point(rng);
  Point q;
  cplx lam{1.3, -0.4}, mu{0.2, 0.9};
  q.set(Space::zeta, {lam * p.values(Space::zeta)[0], lam * p.values(Space::zeta)[1]});
  q.set(Space::z, {mu * p.values(Space::z)[0], mu * p.values(Space::z)[1]});
  cplx factor = std::pow(lam, h->deg_zeta) * std::pow(std::conj(lam), h->deg_zetabar) * std::pow(mu, h->deg_z) *
                std::pow(std::conj(mu), h->deg_zbar);
  CHECK(rel_err(eval(e, q), factor * eval(e, p)) < 1e-13);
}

TEST_CASE("canonicalization") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 50; ++i) {
    Expr e = random_expr(rng, 4);
    CHECK(to_text(conj(conj(e))) == to_text(e));
  }
  CHECK((zeta0 - zeta0).is_zero());
  CHECK((Expr(2.0) * zeta0 + Expr(-2.0) * zeta0).is_zero());
  Expr s = zeta0 + Expr(0.0);
  CHECK(s.id() == zeta0.id());
  Expr nested = (zeta0 + z0) + (zeta1 + z1);
  CHECK(nested.node().kind == NodeKind::add);
  CHECK(nested.node().args.size() == 4);
  CHECK((conj(zeta0 * z0).node().args[0].node().var.conjugated));
}

TEST_CASE("text round trip") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    Expr e = random_expr(rng, 4);
    std::string t = to_text(e);
    Expr back = parse_expr(t);
    CHECK(to_text(back) == t);
    Point p = ktest::random_point(rng);
    CHECK(eval(back, p) == eval(e, p));
  }
  CHECK(to_text(Expr(cplx(1.5, -2.0))) == "const(1.5-2i)");
  CHECK(to_text(Expr::var(Space::zeta, 1, true)) == "var(zeta,1,bar)");
  CHECK(to_text(parse_expr("add(var(z,0), const(1e-05-3.5e+20i))")) == "add(const(1.0000000000000001e-05-3.5e+20i),var(z,0))");
  CHECK_THROWS_AS(parse_expr("mul(var(q,0))"), Error);
  CHECK_THROWS_AS(parse_expr("add(var(z,0)"), Error);
}
