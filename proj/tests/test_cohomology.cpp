#include <doctest.h>

#include <random>

#include "cech_oracle.hpp"
#include "koppelman/cohomology.hpp"

using namespace koppelman;

namespace {

Expr zeta(int i) { return Expr::var(Space::zeta, i); }

Point p1_point(cplx w) {
  Point z;
  z.set(Space::z, {1.0, w});
  return z;
}

std::vector<Point> p1_grid() { return {p1_point(0.0), p1_point({0.5, -0.3}), p1_point({-1.4, 2.0})}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("Cech oracle on P^1") {
  CHECK(ktest::cech_dims_p1(0) == std::pair{1, 0});
  CHECK(ktest::cech_dims_p1(3) == std::pair{4, 0});
  CHECK(ktest::cech_dims_p1(-1) == std::pair{0, 0});
  CHECK(ktest::cech_dims_p1(-2) == std::pair{0, 1});
  CHECK(ktest::cech_dims_p1(-5) == std::pair{0, 4});
  // Serre duality h^q(O(d)) = h^{1-q}(O(-2-d))
  for (int d = -6; d <= 6; ++d) {
    CHECK(ktest::cech_dims_p1(d).first == ktest::cech_dims_p1(-2 - d).second);
  }
}

TEST_CASE("classify: published examples") {
  Classification c = classify(CohomologyCase::pn(1, 0, 1, -1));
  CHECK(c.letter == 'd');
  CHECK(c.letters == std::vector<char>{'c', 'd'});
  CHECK(classify(CohomologyCase::pn(1, 0, 1, -2)).verdict == Classification::Verdict::unknown);
  CHECK(classify(CohomologyCase::pn(2, 1, 1, 3)).letter == 'a');
  CHECK(classify(CohomologyCase::pn(2, 0, 0, 0)).verdict == Classification::Verdict::unknown);
  CHECK(classify(CohomologyCase::pn(2, 2, 2, 0)).verdict == Classification::Verdict::unknown);
  CHECK_THROWS_AS(CohomologyCase::pn(1, 2, 0, 0), Error);
}

TEST_CASE("classify never says nontrivial") {
  for (int n = 1; n <= 4; ++n)
    for (int p = 0; p <= n; ++p)
      for (int q = 0; q <= n; ++q)
        for (int r = -5; r <= 5; ++r) {
          Classification c = classify(CohomologyCase::pn(n, p, q, r));
          CHECK(c.verdict != Classification::Verdict::nontrivial);
          CHECK(c.letter.has_value() == !c.letters.empty());
        }
}

TEST_CASE("P^1 table agrees with the Cech oracle, and every mechanism holds") {
  int covered = 0;
  for (int p = 0; p <= 1; ++p)
    for (int q = 0; q <= 1; ++q)
      for (int r = -3; r <= 3; ++r) {
        CohomologyCase c = CohomologyCase::pn(1, p, q, r);
        CAPTURE(c.name());
        Classification cl = classify(c);
        int dim = ktest::dolbeault_dim_p1(p, q, r);
        if (cl.verdict == Classification::Verdict::trivial) {
          ++covered;
          CHECK(dim == 0);
          for (char x : cl.letters) {
            CAPTURE(x);
            MechanismCheck m = check_mechanism(c, x);
            CHECK(m.passed);
            CHECK(m.residual < 1e-9);
          }
        } else {
          // on P^1 the published list is sharp
          CHECK(dim > 0);
        }
      }
  CHECK(covered == 16);
}

TEST_CASE("P^2 mechanisms") {
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q)
      for (int r = -2; r <= 2; ++r) {
        CohomologyCase c = CohomologyCase::pn(2, p, q, r);
        Classification cl = classify(c);
        for (char x : cl.letters) {
          CAPTURE(c.name());
          CAPTURE(x);
          MechanismCheck m = check_mechanism(c, x);
          CHECK(m.passed);
        }
      }
}

TEST_CASE("mechanism letter must apply") {
  CHECK(code_of([] { check_mechanism(CohomologyCase::pn(1, 0, 1, -1), 'b'); }) == ErrorCode::case_mismatch);
  CHECK(code_of([] { check_mechanism(CohomologyCase::pn(1, 0, 1, -2)); }) == ErrorCode::case_mismatch);
}

TEST_CASE("exactness certificate") {
  ExactnessCertificate c = exactness_certificate(2, 1, 1, 1);
  CHECK(c.verified);
  CHECK(c.dbar_residual < 1e-10);
  CHECK(c.projective_residual < 1e-10);
  CHECK(exactness_certificate(3, 2, 2, 3).verified);
  CHECK(code_of([] { exactness_certificate(2, 1, 1, 0); }) == ErrorCode::case_mismatch);
  CHECK(code_of([] { exactness_certificate(2, 1, 1, -1); }) == ErrorCode::case_mismatch);
  CHECK(code_of([] { exactness_certificate(2, 2, 2, 1); }) == ErrorCode::case_mismatch);
  // the endpoint p = n used by b) and c)
  ExactnessCertificate p = primitive_certificate(1, 1, 2);
  CHECK(p.verified);
}

TEST_CASE("factor spread detects a wrong z-factor") {
  KernelPair kp = pn_kernels(1, 1, 2);
  Form part = pick_bidegree(kp.P, DegreeSpec().set(GenKind::d_z, 1).set(GenKind::d_zbar, 1));
  CHECK(z_factor_spread(part, primitive_certificate(1, 1, 2).target, 1) < 1e-12);
  CHECK(z_factor_spread(part, primitive_certificate(1, 1, 1).target, 1) > 1e-3);
}

TEST_CASE("Serre dual pairing") {
  std::mt19937_64 rng(5);
  Point zeta_pt = sample_point(Ambient::pn_space(1), rng);
  // constants against P_{1,0}: the Fubini-Study volume
  DualPairing one = serre_dual_pair(Form(1.0), pn_kernels(1, 1, 0), zeta_pt);
  CHECK(std::abs(one.value - 1.0) < 1e-10);
  // a z-form of the wrong twist
  Form zf(Expr::var(Space::z, 0));
  CHECK(code_of([&] { serre_dual_pair(zf, pn_kernels(1, 1, 0), zeta_pt); }) == ErrorCode::twist_mismatch);
  // b) with p > 0: P_{n-p,-r} has no term of z-bidegree (n-p, n)
  KernelPair dual = pn_kernels(2, 1, 0);
  CHECK(pick_bidegree(dual.P, DegreeSpec().set(GenKind::d_z, 1).set(GenKind::d_zbar, 2)).is_zero());
}

TEST_CASE("solve_dbar: flat and P^1 exact inputs") {
  Form flat = Form::gen(d_zetabar(0), conj(zeta(0)));
  std::vector<Point> fg;
  for (cplx z : {cplx(0.1, 0.2), cplx(-0.5, 0.1), cplx(0.3, -0.6)}) {
    Point p;
    p.set(Space::z, {z});
    fg.push_back(p);
  }
  ObstructionResult a = solve_dbar(flat, bm_kernel(1), Domain::disc(0.0, 1.0), fg);
  CHECK(a.verdict == ObstructionResult::Verdict::solved);
  CHECK(a.residual < 1e-3);
  CHECK(a.dbar_solution.size() == 3);

  Expr n2 = zeta(0) * conj(zeta(0)) + zeta(1) * conj(zeta(1));
  Form phi = dbar(Form(conj(zeta(0)) / n2));
  ObstructionResult b = solve_on_pn(phi, 1, 0, -1, p1_grid());
  CHECK(b.verdict == ObstructionResult::Verdict::solved);
  CHECK(b.residual < 1e-3);
  CHECK(std::abs(b.p_pairing) < 1e-8);
  CHECK_FALSE(b.dual_mode);
}

TEST_CASE("solve_dbar refuses forms that are not closed") {
  Form bad = Form::gen(d_zeta(0), conj(zeta(0)));
  Point z;
  z.set(Space::z, {cplx(0.1, 0.0)});
  CHECK(code_of([&] { solve_dbar(bad, bm_kernel(1), Domain::disc(0.0, 1.0), {z}); }) == ErrorCode::not_closed);
}

TEST_CASE("H^{0,1}(P^1, O(-2)) is obstructed") {
  CHECK(ktest::dolbeault_dim_p1(0, 1, -2) == 1);
  Expr n2 = zeta(0) * conj(zeta(0)) + zeta(1) * conj(zeta(1));
  Form phi = Expr(1.0) / (n2 * n2) *
             (Form::gen(d_zetabar(1), conj(zeta(0))) - Form::gen(d_zetabar(0), conj(zeta(1))));
  ObstructionResult res = solve_on_pn(phi, 1, 0, -2, p1_grid());
  CHECK(res.dual_mode);
  CHECK(res.verdict == ObstructionResult::Verdict::obstructed);
  REQUIRE(res.class_pairing);
  // φ ∧ (ζ0 dζ1 − ζ1 dζ0) is a positive multiple of the Fubini-Study form
  CHECK(res.class_pairing->ratio > 0.1);
  CHECK(res.class_pairing->ratio > 1.0 - 1e-9);
  // control: an exact O(-2)-valued input pairs to zero, and shifting φ by it changes nothing
  Form exact = dbar(Form(conj(zeta(0)) * conj(zeta(1)) / (n2 * n2)));
  ObstructionResult ex = solve_on_pn(exact, 1, 0, -2, p1_grid());
  REQUIRE(ex.class_pairing);
  CHECK(std::abs(ex.class_pairing->value) < 1e-8);
  CHECK(ex.verdict == ObstructionResult::Verdict::inconclusive);
  ObstructionResult shifted = solve_on_pn(phi + exact, 1, 0, -2, p1_grid());
  CHECK(shifted.verdict == ObstructionResult::Verdict::obstructed);
  CHECK(std::abs(shifted.class_pairing->value - res.class_pairing->value) < 1e-8);
}

TEST_CASE("dual basis and class pairing") {
  CHECK(dual_holomorphic_basis(1, 0, 1, -2).size() == 1);
  CHECK(dual_holomorphic_basis(1, 0, 1, -4).size() == 3);
  CHECK(dual_holomorphic_basis(1, 1, 1, 0).size() == 1);
  CHECK(dual_holomorphic_basis(2, 2, 2, -1).size() == 3);
  CHECK(dual_holomorphic_basis(1, 0, 1, -1).empty());
  CHECK(dual_holomorphic_basis(2, 1, 2, -3).empty());
  // H^{1,1}(P^1, O): the Fubini-Study form is not exact, ∂̄∂ of a function is
  Expr n2 = zeta(0) * conj(zeta(0)) + zeta(1) * conj(zeta(1));
  Form a = Form::gen(d_zetabar(0), zeta(0) / n2) + Form::gen(d_zetabar(1), zeta(1) / n2);
  Form fs = Expr(cplx(0.0, 1.0) / (2.0 * 3.14159265358979323846)) * del(a);
  ClassPairing one = class_pairing(fs, Form(1.0), 1);
  CHECK(std::abs(one.value - 1.0) < 1e-10);
  Form ddbar = dbar(del(Form(zeta(0) * conj(zeta(0)) / n2)));
  CHECK(std::abs(class_pairing(ddbar, Form(1.0), 1).value) < 1e-10);
  ObstructionResult res = solve_on_pn(fs, 1, 1, 0, p1_grid());
  CHECK(res.verdict == ObstructionResult::Verdict::obstructed);
}

TEST_CASE("product classification") {
  auto c = classify(CohomologyCase::product(1, 1, 1, 0, 0));
  CHECK(c.letters == std::vector<char>{'c', 'd'});
  CHECK(check_mechanism(CohomologyCase::product(1, 1, 1, 0, 0)).passed);
  CHECK(classify(CohomologyCase::product(1, 1, 2, -2, -2)).verdict == Classification::Verdict::unknown);
  CHECK(classify(CohomologyCase::product(1, 1, 0, 0, 0)).verdict == Classification::Verdict::unknown);
  // n = m: c) alone would claim H^{0,1}(O(0) x O(-2)) = 0, but it is H^0(O) ⊗ H^1(O(-2))
  CHECK(classify(CohomologyCase::product(1, 1, 1, 0, -2)).verdict == Classification::Verdict::unknown);
  CHECK(classify(CohomologyCase::product(2, 1, 1, 0, 0)).letter == 'd');
  CHECK(classify(CohomologyCase::product(3, 1, 2, 0, 0)).letter == 'a');
  // Kunneth on P^1 x P^1: h^{0,q} = sum over q1 + q2 = q of h^{q1}(O(k)) h^{q2}(O(l))
  for (int q = 0; q <= 2; ++q)
    for (int k = -3; k <= 2; ++k)
      for (int l = -3; l <= 2; ++l) {
        CohomologyCase pc = CohomologyCase::product(1, 1, q, k, l);
        Classification cl = classify(pc);
        int dim = 0;
        for (int q1 = 0; q1 <= 1; ++q1) {
          int q2 = q - q1;
          if (q2 < 0 || q2 > 1) continue;
          dim += ktest::dolbeault_dim_p1(0, q1, k) * ktest::dolbeault_dim_p1(0, q2, l);
        }
        if (cl.verdict == Classification::Verdict::trivial) {
          CAPTURE(pc.name());
          CHECK(dim == 0);
          CHECK(check_mechanism(pc).passed);
        }
      }
}

TEST_CASE("representatives are closed, twisted correctly, and behave as classified") {
  int exact = 0, candidates = 0;
  for (int n = 1; n <= 2; ++n) {
    for (int p = 0; p <= n; ++p) {
      for (int q = 0; q <= n; ++q) {
        for (int r = -3; r <= 3; ++r) {
          auto rep = representative(n, p, q, r);
          if (!rep) continue;
          CAPTURE(n);
          CAPTURE(p);
          CAPTURE(q);
          CAPTURE(r);
          auto h = homogeneity(rep->phi);
          REQUIRE(h);
          CHECK(h->deg_zeta - h->deg_zetabar == r);
          CHECK_NOTHROW(require_closed(rep->phi, Ambient::pn_space(n)));
          std::mt19937_64 rng(5);
          Point pt = sample_point(Ambient::pn_space(n), rng);
          CHECK(max_abs(eval(rep->phi, pt)) > 1e-6);
          if (rep->kind == "exact") {
            ++exact;
            REQUIRE(rep->primitive);
            CHECK(pick_bidegree(rep->phi, DegreeSpec().set(GenKind::d_zeta, p).set(GenKind::d_zetabar, q))
                      .size() == rep->phi.size());
          } else {
            ++candidates;
          }
        }
      }
    }
  }
  CHECK(exact > 10);
  CHECK(candidates >= 8);

  // P^1: exact inputs in direct mode are solved, candidates obstructed
  for (int r = -1; r <= 2; ++r) {
    auto rep = representative(1, 0, 1, r);
    REQUIRE(rep);
    CAPTURE(r);
    CHECK(solve_on_pn(rep->phi, 1, 0, r, p1_grid()).verdict == ObstructionResult::Verdict::solved);
  }
  for (auto [p, q, r] : {std::tuple{0, 1, -2}, {0, 1, -3}, {1, 1, 0}, {1, 1, -1}, {0, 0, 2}, {1, 0, 2}}) {
    auto rep = representative(1, p, q, r);
    REQUIRE(rep);
    CAPTURE(p);
    CAPTURE(q);
    CAPTURE(r);
    CHECK(rep->kind == "candidate");
    CHECK(solve_on_pn(rep->phi, 1, p, r, p1_grid()).verdict == ObstructionResult::Verdict::obstructed);
  }
}
