#include <chrono>
#include <cmath>
#include <map>

#include "koppelman/quadrature.hpp"

namespace koppelman {

namespace {

GenKind to_z_kind(GenKind k) {
  if (k == GenKind::d_zeta) return GenKind::d_z;
  if (k == GenKind::d_zetabar) return GenKind::d_zbar;
  return k;
}

// Canonical mask and sign of the product of gens taken in the given order.
std::pair<Monomial, int> sorted_mask(const std::vector<Generator>& gens) {
  std::vector<int> codes;
  for (const auto& g : gens) codes.push_back(g.code());
  int sign = 1;
  for (std::size_t i = 1; i < codes.size(); ++i) {
    for (std::size_t j = i; j > 0 && codes[j - 1] > codes[j]; --j) {
      std::swap(codes[j - 1], codes[j]);
      sign = -sign;
    }
  }
  Monomial m = 0;
  for (int c : codes) {
    Monomial b = Monomial{1} << c;
    if (m & b) return {0, 0};
    m |= b;
  }
  return {m, sign};
}

Point diagonal_center(const Point& z) {
  Point c;
  if (!z.values(Space::z).empty()) c.set(Space::zeta, z.values(Space::z));
  if (!z.values(Space::z_tilde).empty()) c.set(Space::zeta_tilde, z.values(Space::z_tilde));
  return c;
}

Monomial integrated_mask() {
  Monomial m = 0;
  for (auto s : {GenSpace::main, GenSpace::tilde}) {
    for (int i = 0; i < kMaxGenIndex; ++i) m |= bit(d_zeta(i, s)) | bit(d_zetabar(i, s));
  }
  return m;
}

NumForm wedge_left(Monomial b, const NumForm& f) {
  NumForm out;
  for (const auto& [m, v] : f) {
    if (m & b) continue;
    out[m | b] += static_cast<double>(wedge_sign(b, m)) * v;
  }
  return out;
}

NumForm boundary_integral(const Form& density, const Domain& domain, int points, const Point& z) {
  NumForm out;
  for (const auto& piece : domain.boundary()) {
    Form top = top_degree_part(density, piece);
    if (top.is_zero()) continue;
    out = add(out, integrate(top, piece, QuadratureRule::tensor(points), z));
  }
  return out;
}

NumForm volume_integral(const Form& density, const Domain& domain, const QuadratureRule& rule, const Point& z) {
  Form top = top_degree_part(density, domain);
  if (top.is_zero()) return {};
  return integrate(top, domain, rule, z);
}

DegreeSpec z_bidegree(int p, int q) { return DegreeSpec().set(GenKind::d_z, p).set(GenKind::d_zbar, q); }

NumForm keep_z_bidegree(const NumForm& f, int p, int q) {
  NumForm out;
  for (const auto& [m, v] : f) {
    Bidegree b = bidegree(m);
    if (b.total(GenKind::d_z) == p && b.total(GenKind::d_zbar) == q) out[m] = v;
  }
  return out;
}

void check_twist(const Form& phi, const KernelPair& pair) {
  if (!pair.twist || phi.is_zero()) return;
  auto h = homogeneity(phi);
  if (!h) throw Error(ErrorCode::twist_mismatch, "phi is not homogeneous in zeta");
  if (pair.ambient.kind == Ambient::Kind::pn) {
    if (h->deg_zeta - h->deg_zetabar != pair.twist->second) {
      throw Error(ErrorCode::twist_mismatch, "phi has degree " + std::to_string(h->deg_zeta - h->deg_zetabar) +
                                                 " in zeta, kernel expects " + std::to_string(pair.twist->second));
    }
  } else if (pair.ambient.kind == Ambient::Kind::pn_x_pm) {
    if (h->deg_zeta - h->deg_zetabar != pair.twist->first ||
        h->deg_zeta_tilde - h->deg_zetabar_tilde != pair.twist->second) {
      throw Error(ErrorCode::twist_mismatch, "phi multidegree does not match (k, l)");
    }
  }
}

// ∂/∂z̄_j ∫_D K∧φ = ∫_D K∧∂φ/∂ζ̄_j − ∫_∂D ι_{∂/∂ζ̄_j}(K∧φ) for kernels of ζ − z.
NumForm symbolic_dbar(const Form& phi, const KernelPair& pair, const Domain& domain, const Point& z,
                      const QuadratureRule& polar, int points) {
  if (!domain.is_flat() || pair.ambient.kind != Ambient::Kind::cn) {
    throw Error(ErrorCode::invalid_argument, "symbolic dbar mode needs a flat domain and kernel");
  }
  const int n = domain.n;
  // translation invariance: (∂_z + ∂_ζ) c = (∂_z̄ + ∂_ζ̄) c = 0
  Point probe = diagonal_center(z);
  probe.set(Space::z, z.values(Space::z));
  for (int j = 0; j < n; ++j) probe.set(Space::zeta, j, z.values(Space::z)[j] + cplx(0.31 + 0.07 * j, -0.17));
  for (const auto& [m, c] : pair.K.terms()) {
    for (int j = 0; j < n; ++j) {
      for (bool cj : {false, true}) {
        Expr d = wirtinger(c, {Space::z, j, cj}) + wirtinger(c, {Space::zeta, j, cj});
        if (std::abs(eval(d, probe)) > 1e-9 * (1.0 + std::abs(eval(c, probe)))) {
          throw Error(ErrorCode::invalid_argument, "symbolic dbar mode needs a kernel depending on zeta - z only");
        }
      }
    }
  }
  const Monomial integ = integrated_mask();
  Form kphi = pick_bidegree(wedge(pair.K, phi), DegreeSpec().set(GenKind::d_zeta, 1).set(GenKind::d_zetabar, 1));
  NumForm out;
  for (int j = 0; j < n; ++j) {
    Form::Terms lt;
    for (const auto& [m, c] : phi.terms()) lt.emplace(m, wirtinger(c, {Space::zeta, j, true}));
    Form lphi = Form::from_terms(std::move(lt), phi.ambient());
    NumForm dj = volume_integral(wedge(pair.K, lphi), domain, polar, z);
    Contraction iota;
    iota.images.emplace_back(d_zetabar(j), Expr(1.0));
    Form::Terms it;
    Form contracted = contract(kphi, iota);
    for (const auto& [m, c] : contracted.terms()) {
      it.emplace(m, (degree(m & ~integ) & 1) ? -c : c);
    }
    NumForm bj = boundary_integral(Form::from_terms(std::move(it)), domain, points, z);
    out = add(out, wedge_left(bit(d_zbar(j)), dj - bj));
  }
  return out;
}

}  // namespace

NumForm restrict_to_diagonal(const Form& phi, const Point& z) {
  Point p = z;
  if (!z.values(Space::z).empty()) p.set(Space::zeta, z.values(Space::z));
  if (!z.values(Space::z_tilde).empty()) p.set(Space::zeta_tilde, z.values(Space::z_tilde));
  NumForm out;
  for (const auto& [m, v] : eval(phi, p)) {
    std::vector<Generator> gens;
    for (auto g : generators(m)) {
      g.kind = to_z_kind(g.kind);
      gens.push_back(g);
    }
    auto [mm, sign] = sorted_mask(gens);
    if (sign == 0) throw Error(ErrorCode::invalid_argument, "phi already carries z differentials");
    out[mm] += static_cast<double>(sign) * v;
  }
  return out;
}

NumForm finite_difference_dbar(const std::function<NumForm(const Point&)>& u, const Point& z, const Ambient& a,
                               double h) {
  std::vector<std::pair<Space, GenSpace>> spaces = {{Space::z, GenSpace::main}};
  if (a.kind == Ambient::Kind::pn_x_pm) spaces.emplace_back(Space::z_tilde, GenSpace::tilde);
  NumForm out;
  for (const auto& [s, gs] : spaces) {
    const auto& base = z.values(s);
    for (std::size_t j = 0; j < base.size(); ++j) {
      auto shifted = [&](cplx step) {
        Point p = z;
        p.set(s, static_cast<int>(j), base[j] + step);
        return u(p);
      };
      NumForm dx = scale(shifted(h) - shifted(-h), 1.0 / (2.0 * h));
      NumForm dy = scale(shifted(cplx(0, h)) - shifted(cplx(0, -h)), 1.0 / (2.0 * h));
      NumForm dzb = scale(add(dx, scale(dy, cplx(0, 1))), 0.5);
      out = add(out, wedge_left(bit(d_zbar(static_cast<int>(j), gs)), dzb));
    }
  }
  return out;
}

KoppelmanTerms koppelman_eval(const Form& phi, const KernelPair& pair, const Domain& domain, const Point& z,
                              const QuadratureRule& rule, const KoppelmanOptions& opt) {
  check_twist(phi, pair);
  if (domain.is_flat() && !domain.contains(z, 1e-6)) {
    throw Error(ErrorCode::invalid_argument, "evaluation point must be interior to the domain");
  }
  const SpaceSet zeta_spaces = space_bit(Space::zeta) | space_bit(Space::zeta_tilde);
  Point center = diagonal_center(z);
  QuadratureRule polar = QuadratureRule::polar(rule.points, center, rule.exclusion_radius);

  KoppelmanTerms t;
  t.points = rule.points;
  // one ζ-bidegree (p, q) of φ at a time; each term keeps its (p, q) part in z
  std::map<std::pair<int, int>, Form::Terms> pieces;
  for (const auto& [m, c] : phi.terms()) {
    Bidegree b = bidegree(m);
    pieces[{b.total(GenKind::d_zeta), b.total(GenKind::d_zetabar)}].emplace(m, c);
  }
  for (auto& [pq, terms] : pieces) {
    const auto [p, q] = pq;
    Form piece = Form::from_terms(std::move(terms), phi.ambient());
    DegreeSpec same = z_bidegree(p, q);
    Form kphi = wedge(pair.K, piece);
    if (domain.has_boundary()) {
      t.boundary = add(t.boundary, boundary_integral(pick_bidegree(kphi, same), domain, rule.points, z));
    }
    Form kd = pick_bidegree(wedge(pair.K, dbar(piece, zeta_spaces)), same);
    t.dbar_phi = add(t.dbar_phi, volume_integral(kd, domain, polar, z));
    if (!pair.P.is_zero()) {
      t.p_term = add(t.p_term, volume_integral(pick_bidegree(wedge(pair.P, piece), same), domain, polar, z));
    }
    if (q == 0) continue;
    Form pot = pick_bidegree(top_degree_part(kphi, domain), z_bidegree(p, q - 1));
    if (pot.is_zero()) continue;
    Integrator integ(pot, domain);
    auto u = [&](const Point& zp) {
      return integ.run(QuadratureRule::polar(rule.points, diagonal_center(zp), rule.exclusion_radius), zp);
    };
    t.potential = add(t.potential, u(z));
    NumForm dz = opt.symbolic_dbar ? symbolic_dbar(piece, pair, domain, z, polar, rule.points)
                                   : finite_difference_dbar(u, z, pair.ambient, opt.h);
    t.dbar_z_potential = add(t.dbar_z_potential, keep_z_bidegree(dz, p, q));
  }
  t.phi_at_z = restrict_to_diagonal(phi, z);
  NumForm total = add(add(t.boundary, t.dbar_phi), add(t.dbar_z_potential, t.p_term));
  t.residual = max_abs(total - t.phi_at_z);
  return t;
}

ConvergenceTrace convergence_study(const ConvergenceSetup& setup, const std::vector<MeshStep>& mesh) {
  ConvergenceTrace trace;
  for (const auto& step : mesh) {
    Domain d = step.radius ? setup.domain.with_radius(*step.radius) : setup.domain;
    QuadratureRule r = setup.rule;
    r.points = step.points;
    auto t0 = std::chrono::steady_clock::now();
    KoppelmanTerms t = koppelman_eval(setup.phi, setup.pair, d, setup.z, r, setup.options);
    auto t1 = std::chrono::steady_clock::now();
    ConvergencePoint p;
    p.points = step.points;
    p.radius = d.radius;
    p.residual = t.residual;
    p.boundary = max_abs(t.boundary);
    p.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (!trace.steps.empty()) {
      const auto& prev = trace.steps.back();
      if (p.residual > prev.residual && p.residual > 1e-14) trace.residual_monotone = false;
      if (!(p.boundary < prev.boundary)) trace.boundary_monotone = false;
    }
    trace.steps.push_back(p);
  }
  return trace;
}

}  // namespace koppelman
