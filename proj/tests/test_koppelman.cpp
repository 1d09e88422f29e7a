#include <doctest.h>

#include "koppelman/quadrature.hpp"
#include "support.hpp"

using namespace koppelman;

namespace {

const cplx I{0.0, 1.0};

Expr zeta(int i = 0) { return Expr::var(Space::zeta, i); }

Point flat_z(std::vector<cplx> z) {
  Point p;
  p.set(Space::z, z);
  return p;
}

cplx at(const NumForm& f, Monomial m = 0) {
  auto it = f.find(m);
  return it == f.end() ? cplx(0.0) : it->second;
}

}  // namespace

TEST_CASE("Cauchy formula for a polynomial") {
  KernelPair bm = bm_kernel(1);
  KoppelmanTerms t =
      koppelman_eval(Form(pow(zeta(), 2)), bm, Domain::disc(0.0, 1.0), flat_z({0.3}), QuadratureRule::tensor(64));
  CHECK(std::abs(at(t.boundary) - 0.09) < 1e-13);
  CHECK(max_abs(t.dbar_phi) == 0.0);
  CHECK(max_abs(t.p_term) == 0.0);
  CHECK(max_abs(t.dbar_z_potential) == 0.0);
  CHECK(t.residual < 1e-13);
}

TEST_CASE("zeta-bar dzeta-bar on the disc") {
  KernelPair bm = bm_kernel(1);
  Form phi = Form::gen(d_zetabar(0), conj(zeta()));
  Domain d = Domain::disc(0.0, 1.0);
  for (cplx z : {cplx(0.2, 0.1), cplx(-0.4, 0.3)}) {
    KoppelmanTerms t = koppelman_eval(phi, bm, d, flat_z({z}), QuadratureRule::tensor(48));
    CHECK(at(t.phi_at_z, bit(d_zbar(0))) == std::conj(z));
    CHECK(max_abs(t.boundary) == 0.0);
    CHECK(t.residual < 1e-6);
    // the symbolic path agrees
    KoppelmanOptions sym;
    sym.symbolic_dbar = true;
    KoppelmanTerms s = koppelman_eval(phi, bm, d, flat_z({z}), QuadratureRule::tensor(48), sym);
    CHECK(s.residual < 1e-12);
    CHECK(max_abs(s.dbar_z_potential - t.dbar_z_potential) < 1e-6);
    // u = ∫ K∧φ; series oracle (1/2πi)∫ ζ̄/(ζ−z) dζ∧dζ̄ = z̄²/2 for |z| < 1
    CHECK(std::abs(at(t.potential) - 0.5 * std::conj(z * z)) < 1e-12);
  }
}

TEST_CASE("interior point required, twist checked") {
  KernelPair bm = bm_kernel(1);
  CHECK_THROWS_AS(koppelman_eval(Form(zeta()), bm, Domain::disc(0.0, 1.0), flat_z({1.0}), QuadratureRule::tensor(8)),
                  Error);
  KernelPair p = pn_kernels(1, 0, 1);
  Point z;
  z.set(Space::z, {1.0, 0.0});
  try {
    koppelman_eval(Form(1.0), p, Domain::projective_chart(1), z, QuadratureRule::tensor(8));
    FAIL("expected TwistMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::twist_mismatch);
  }
}

TEST_CASE("P^1 reproduces constants and sections of O(1)") {
  std::mt19937_64 rng(11);
  Point z = sample_point(Ambient::pn_space(1), rng);
  KoppelmanTerms t = koppelman_eval(Form(1.0), pn_kernels(1, 0, 0), Domain::projective_chart(1), z,
                                    QuadratureRule::tensor(32));
  CHECK(max_abs(t.boundary) == 0.0);
  CHECK(std::abs(at(t.p_term) - 1.0) < 1e-10);
  CHECK(t.residual < 1e-10);
  KernelPair k1 = pn_kernels(1, 0, 1);
  for (int i = 0; i < 2; ++i) {
    Form phi(zeta(i));
    KoppelmanTerms s = koppelman_eval(phi, k1, Domain::projective_chart(1), z, QuadratureRule::tensor(32));
    CHECK(std::abs(at(s.p_term) - z.values(Space::z)[i]) < 1e-10);
  }
}

TEST_CASE("BM in the C^2 ball, holomorphic data") {
  Form phi(zeta(0) * zeta(1) + Expr(3.0));
  Point z = flat_z({cplx(0.2, 0.1), cplx(-0.1, 0.3)});
  KoppelmanTerms t = koppelman_eval(phi, bm_kernel(2), Domain::ball({0.0, 0.0}, 1.0), z, QuadratureRule::tensor(16));
  cplx want = z.values(Space::z)[0] * z.values(Space::z)[1] + 3.0;
  CHECK(std::abs(at(t.boundary) - want) < 1e-6);
  CHECK(t.residual < 1e-6);
  KoppelmanTerms fine = koppelman_eval(phi, bm_kernel(2), Domain::ball({0.0, 0.0}, 1.0), z, QuadratureRule::tensor(32));
  CHECK(fine.residual < 1e-12);
}

TEST_CASE("polynomial growth weight on growing discs") {
  for (int d = 0; d <= 2; ++d) {
    for (int k = d; k <= 3; ++k) {
      CAPTURE(d);
      CAPTURE(k);
      KernelPair kp = weighted_flat_kernel(1, weight(WeightSpec::polynomial_growth(k), Ambient::cn_space(1)), "g^k");
      ConvergenceSetup setup{Form(pow(zeta(), d)), kp, Domain::truncated_cn(1, 5.0), flat_z({cplx(0.3, 0.2)}),
                             QuadratureRule::tensor(64), {}};
      auto tr = convergence_study(setup, {{64, 5.0}, {64, 10.0}, {64, 20.0}});
      for (const auto& st : tr.steps) CHECK(st.residual < 1e-4);
      // k = d leaves a constant boundary term
      if (k > d) CHECK(tr.boundary_monotone);
      else CHECK(std::abs(tr.steps[0].boundary - tr.steps[2].boundary) < 1e-6);
    }
  }
}

TEST_CASE("P^1: dbar of an O(-1) section is solved") {
  // u = conj(zeta_0)/|zeta|^2 is -1 homogeneous; O(-1) has no sections, so the potential is u itself
  Expr n2 = zeta(0) * conj(zeta(0)) + zeta(1) * conj(zeta(1));
  Expr u = conj(zeta(0)) / n2;
  Form phi = dbar(Form(u));
  KernelPair kp = pn_kernels(1, 0, -1);
  for (cplx w : {cplx(0.0, 0.0), cplx(0.4, -0.2), cplx(-1.5, 0.7), cplx(3.0, 2.0)}) {
    CAPTURE(w);
    Point z;
    z.set(Space::z, {1.0, w});
    KoppelmanTerms t = koppelman_eval(phi, kp, Domain::projective_chart(1), z, QuadratureRule::tensor(48));
    CHECK(max_abs(t.boundary) == 0.0);
    CHECK(max_abs(t.dbar_phi) < 1e-12);
    CHECK(max_abs(t.p_term) < 1e-12);
    CHECK(std::abs(at(t.potential) - 1.0 / (1.0 + std::norm(w))) < 1e-6);
    CHECK(t.residual < 1e-3);
  }
}

namespace {

Point product_z(cplx w, cplx wt) {
  Point z;
  z.set(Space::z, {1.0, w});
  z.set(Space::z_tilde, {wt, 1.0});
  return z;
}

Generator d_zeta_t(int i) { return d_zeta(i, GenSpace::tilde); }
Generator d_zetabar_t(int i) { return d_zetabar(i, GenSpace::tilde); }

Domain p1_x_p1() {
  return Domain::product(Domain::projective_chart(1), Domain::projective_chart(1, GenSpace::tilde));
}

}  // namespace

TEST_CASE("P^1 x P^1 reproduces constants") {
  KernelPair kp = product_kernels(1, 1, 0, 0);
  for (auto [w, wt] : {std::pair{cplx(0.3, 0.1), cplx(-0.2, 0.5)}, std::pair{cplx(2.0, -1.0), cplx(0.0, 0.0)}}) {
    KoppelmanTerms t = koppelman_eval(Form(1.0), kp, p1_x_p1(), product_z(w, wt), QuadratureRule::tensor(16));
    CHECK(std::abs(at(t.p_term) - 1.0) < 1e-5);
    CHECK(t.residual < 1e-5);
  }
}

TEST_CASE("Fubini split of the P term") {
  // sections of L ⊗ L~ are reproduced, and the product integral equals the iterated one
  Expr zt0 = Expr::var(Space::zeta_tilde, 0), zt1 = Expr::var(Space::zeta_tilde, 1);
  Form phi(zeta(0) * zt1 + Expr(2.0) * zeta(1) * zt0);
  KernelPair kp = product_kernels(1, 1, 1, 1);
  Form density = wedge(phi, kp.P);
  Point z = product_z(cplx(0.4, -0.3), cplx(1.2, 0.2));
  const auto& zz = z.values(Space::z);
  const auto& zzt = z.values(Space::z_tilde);
  cplx want = zz[0] * zzt[1] + 2.0 * zz[1] * zzt[0];

  const int pts = 24;
  NumForm whole = integrate(density, p1_x_p1(), QuadratureRule::tensor(pts), z);
  CHECK(std::abs(at(whole) - want) < 1e-8);

  Monomial tilde_diffs = bit(d_zeta_t(0)) | bit(d_zeta_t(1)) | bit(d_zetabar_t(0)) | bit(d_zetabar_t(1));
  Integrator inner(density, Domain::projective_chart(1));
  NumForm iterated;
  for (const auto& node : materialize(Domain::projective_chart(1, GenSpace::tilde), QuadratureRule::tensor(pts))) {
    Point fixed = z;
    fixed.set(Space::zeta_tilde, node.point.values(Space::zeta_tilde));
    for (const auto& [m, c] : inner.run(QuadratureRule::tensor(pts), fixed)) {
      // m = rest ∧ (ζ~ differentials)
      Monomial t = m & tilde_diffs, rest = m & ~tilde_diffs;
      if (degree(t) != 2) continue;
      iterated[rest] += node.weight * c * double(wedge_sign(rest, t)) * pullback(node, t);
    }
  }
  CHECK(iterated.size() == whole.size());
  CHECK(max_abs(iterated - whole) < 1e-8);
}

TEST_CASE("finite difference dbar on an interior grid") {
  Form phi = Form::gen(d_zetabar(0), conj(zeta()));
  for (double x : {-0.6, -0.2, 0.2, 0.6}) {
    for (double y : {-0.6, -0.2, 0.2, 0.6}) {
      KoppelmanTerms t =
          koppelman_eval(phi, bm_kernel(1), Domain::disc(0.0, 1.0), flat_z({cplx(x, y)}), QuadratureRule::tensor(32));
      CHECK(max_abs(t.dbar_z_potential - t.phi_at_z) < 1e-3);
    }
  }
}

TEST_CASE("refinement does not blow up the residual") {
  Form phi = Form::gen(d_zetabar(0), conj(zeta()) * zeta());
  ConvergenceSetup setup{phi, bm_kernel(1), Domain::disc(0.0, 1.0), flat_z({cplx(0.1, -0.5)}),
                         QuadratureRule::tensor(8), {}};
  auto tr = convergence_study(setup, {{8, {}}, {16, {}}, {32, {}}, {64, {}}});
  REQUIRE(tr.steps.size() == 4);
  for (std::size_t i = 1; i < tr.steps.size(); ++i) {
    CHECK(tr.steps[i].residual <= 2.0 * tr.steps[i - 1].residual + 1e-14);
  }
  CHECK(tr.steps.back().residual < 1e-6);
}

TEST_CASE("Cauchy residual at 16 and 256 boundary nodes") {
  Form phi(pow(zeta(), 5) - Expr(2.0) * zeta() + Expr(cplx(0.0, 1.0)));
  Point z = flat_z({cplx(0.5, 0.4)});
  double coarse = koppelman_eval(phi, bm_kernel(1), Domain::disc(0.0, 1.0), z, QuadratureRule::tensor(16)).residual;
  double fine = koppelman_eval(phi, bm_kernel(1), Domain::disc(0.0, 1.0), z, QuadratureRule::tensor(256)).residual;
  CHECK(fine < 1e-10);
  CHECK(fine <= coarse);
}
