#include <doctest.h>

#include "koppelman/kernels.hpp"
#include "support.hpp"

using namespace koppelman;
using ktest::rel_err;

namespace {

std::vector<cplx> flat_point_dir(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  std::vector<cplx> d(n);
  for (auto& x : d) x = {g(rng), g(rng)};
  return d;
}

}  // namespace

TEST_CASE("bm n=1 is the Cauchy kernel") {
  KernelPair kp = bm_kernel(1);
  CHECK(kp.P.is_zero());
  Expr k = kp.K.coefficient(bit(d_zeta(0)));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    Point p = sample_point(Ambient::cn_space(1), rng);
    cplx zeta = *p.get({Space::zeta, 0, false}), z = *p.get({Space::z, 0, false});
    cplx cauchy = 1.0 / (kTwoPiI * (zeta - z));
    CHECK(rel_err(eval(k, p), cauchy) < 1e-13);
  }
  // contraction of the normalized b is 1 off the diagonal
  FlatSetup f = flat_setup(1);
  Form b = (Expr(1.0) / norm2(f.eta)) * f.s;
  Point p = sample_point(Ambient::cn_space(1), rng);
  CHECK(std::abs(eval(contract(b, f.contraction).scalar(), p) - 1.0) < 1e-14);
}

TEST_CASE("bm n=2 decay toward the diagonal") {
  KernelPair kp = bm_kernel(2);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    Point base = sample_point(Ambient::cn_space(2), rng);
    double slope = decay_exponent(kp.K, base, flat_point_dir(rng, 2), {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4});
    CHECK(std::abs(slope + 3.0) < 0.05);
  }
}

TEST_CASE("cfl kernel") {
  FlatSetup f = flat_setup(1);
  // s = b's numerator reduces to BM
  KernelPair a = cfl_kernel(f.s, 1), b = bm_kernel(1);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    Point p = sample_point(Ambient::cn_space(1), rng);
    CHECK(max_abs(eval(a.K - b.K, p)) < 1e-13 * max_abs(eval(b.K, p)));
  }
  // scaled s = (ζ̄ - z̄) e* gives the Cauchy kernel as well
  Form s2 = Form::gen(e_star(0), conj(f.zeta[0]) - conj(f.z[0]));
  KernelPair c = cfl_kernel(s2, 1);
  for (int i = 0; i < 10; ++i) {
    Point p = sample_point(Ambient::cn_space(1), rng);
    cplx zeta = *p.get({Space::zeta, 0, false}), z = *p.get({Space::z, 0, false});
    CHECK(rel_err(eval(c.K.coefficient(bit(d_zeta(0))), p), 1.0 / (kTwoPiI * (zeta - z))) < 1e-13);
  }
  // non-vanishing s is rejected
  Form bad = Form::gen(e_star(0), conj(f.zeta[0]));
  try {
    cfl_kernel(bad, 1);
    FAIL("expected SupportFunctionInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::support_function_invalid);
  }
}

TEST_CASE("cfl in C^2 with a Hermitian matrix") {
  FlatSetup f = flat_setup(2);
  // s = A η̄ with A = [[2, i/2], [-i/2, 1]]
  cplx i{0, 1};
  Form s = Form::gen(e_star(0), Expr(2.0) * conj(f.eta[0]) + Expr(0.5 * i) * conj(f.eta[1])) +
           Form::gen(e_star(1), Expr(-0.5 * i) * conj(f.eta[0]) + conj(f.eta[1]));
  KernelPair kp = cfl_kernel(s, 2);
  Expr ds = contract(s, f.contraction).scalar();
  std::mt19937_64 rng(4);
  int zeros = 0;
  for (int t = 0; t < 10000; ++t) {
    Point p = sample_point(Ambient::cn_space(2), rng);
    if (std::abs(eval(ds, p)) == 0.0) ++zeros;
  }
  CHECK(zeros == 0);
  // decay like BM
  Point base = sample_point(Ambient::cn_space(2), rng);
  double slope = decay_exponent(kp.K, base, flat_point_dir(rng, 2), {1e-1, 1e-2, 1e-3});
  CHECK(std::abs(slope + 3.0) < 0.05);
}

TEST_CASE("weights on C^n") {
  Ambient c1 = Ambient::cn_space(1);
  Form one = weight(WeightSpec::one_plus_nabla(Form()), c1);
  REQUIRE(one.size() == 1);
  CHECK(one.scalar().is_one());

  Form g = weight(WeightSpec::polynomial_growth(1), c1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    Point p = sample_point(c1, rng);
    cplx zeta = *p.get({Space::zeta, 0, false}), z = *p.get({Space::z, 0, false});
    CHECK(rel_err(eval(g.scalar(), p), (1.0 + std::conj(zeta) * z) / (1.0 + std::norm(zeta))) < 1e-14);
  }
  for (int k = 0; k <= 3; ++k) {
    std::vector<cplx> series(k + 1);
    series[k] = 1.0;
    Form gk = weight(WeightSpec::function_of(series, WeightSpec::polynomial_growth(1)), c1);
    Form oracle = power(g, k);
    for (int i = 0; i < 10; ++i) {
      Point p = sample_point(c1, rng);
      CHECK(max_abs(eval(gk - oracle, p)) < 1e-12);
    }
    WeightCheck wc = check_weight(gk, c1);
    CHECK(wc.nabla_max < 1e-10);
    CHECK(wc.diagonal_err < 1e-12);
  }
  // G(1) != 1 is not a weight
  CHECK_THROWS_AS(weight(WeightSpec::function_of({0.0, 2.0}, WeightSpec::polynomial_growth(1)), c1), Error);
  // 1 + ∇Q with Q = ζ̄ e*: still a weight (Q arbitrary smooth)
  FlatSetup f = flat_setup(2);
  Form q = Form::gen(e_star(0), conj(f.zeta[1]) * f.z[0]) + Form::gen(e_star(1), f.zeta[0]);
  CHECK_NOTHROW(weight(WeightSpec::one_plus_nabla(q), Ambient::cn_space(2)));
}

TEST_CASE("P^n geometry") {
  for (int n : {1, 2}) {
    PnGeometry g = pn_geometry(n);
    Ambient amb = Ambient::pn_space(n);
    std::mt19937_64 rng(6 + n);
    // δ_η s against the closed form, with η = z·e (no constant)
    Contraction plain = eta_contraction(g.z);
    Expr ds_plain = contract(g.s, plain).scalar();
    for (int i = 0; i < 20; ++i) {
      Point p = sample_point(amb, rng);
      const auto& zeta = p.values(Space::zeta);
      const auto& z = p.values(Space::z);
      double nz = 0, nzeta = 0;
      cplx zbz = 0;
      for (int k = 0; k <= n; ++k) {
        nz += std::norm(z[k]);
        nzeta += std::norm(zeta[k]);
        zbz += std::conj(z[k]) * zeta[k];
      }
      double want = (nzeta * nz - std::norm(zbz)) / (nzeta * nz);
      CHECK(rel_err(eval(ds_plain, p), want) < 1e-13);
      CHECK(std::abs(eval(contract(g.sigma, g.contraction).scalar(), p) - 1.0) < 1e-13);
    }
    Point d = sample_point(amb, rng, true);
    CHECK(std::abs(eval(g.alpha.scalar(), d) - 1.0) < 1e-14);
    CHECK(dbar_theta_residual(g.chern) < 1e-9);
    CHECK(chern_form_residual(g.chern) < 1e-9);
    WeightCheck wc = check_weight(g.alpha, amb);
    CHECK(wc.nabla_max < 1e-10);
  }
}

TEST_CASE("P^n kernels: arity and homogeneity") {
  CHECK_THROWS_AS(pn_kernels(1, 0, -2), Error);
  try {
    pn_kernels(1, 1, -1);
    FAIL("expected DualityRequired");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duality_required);
  }
  CHECK_THROWS_AS(pn_kernels(1, 2, 0), Error);
  for (int p = 0; p <= 1; ++p) {
    for (int r = p - 1; r <= 2; ++r) {
      KernelPair kp = pn_kernels(1, p, r);
      CHECK_FALSE(kp.K.is_zero());
      if (kp.P.is_zero()) {
        CHECK((p == 0 && r == -1));  // no global sections of O(-1) to reproduce
        continue;
      }
      auto hp = homogeneity(kp.P);
      REQUIRE(hp);
      CHECK(hp->deg_z - hp->deg_zbar == r);
      CHECK(hp->deg_zeta - hp->deg_zetabar == -r);
      CHECK(kp.P.ambient() == Ambient::pn_space(1));
      auto hk = homogeneity(kp.K);
      REQUIRE(hk);
      CHECK(hk->deg_z - hk->deg_zbar == r);
      CHECK(hk->deg_zeta - hk->deg_zetabar == -r);
    }
  }
}

TEST_CASE("product geometry") {
  ProductGeometry g = product_geometry(1, 1);
  Ambient amb = Ambient::product_space(1, 1);
  for (const Form* a : {&g.alpha, &g.alpha_tilde}) {
    WeightCheck wc = check_weight(*a, amb);
    CHECK(wc.nabla_max < 1e-10);
    CHECK(wc.diagonal_err < 1e-12);
  }
  CHECK_THROWS_AS(product_kernels(1, 1, -2, 0), Error);
  CHECK_NOTHROW(product_kernels(1, 1, 0, 0));
}
