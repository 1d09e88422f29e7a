#include "koppelman/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

namespace koppelman {

namespace {

constexpr char kLetterOrder[] = {'a', 'd', 'e', 'b', 'c'};

bool pn_letter(char x, int n, int p, int q, int r) {
  switch (x) {
    case 'a': return q == p && p != 0 && p != n && r != 0;
    case 'b': return q == 0 && r <= p && !(r == 0 && p == 0);
    case 'c': return q == n && r >= p - n && !(r == 0 && p == n);
    case 'd': return p < q && r >= -(n - p);
    case 'e': return p > q && r <= p;
  }
  return false;
}

bool product_letter(char x, int n, int m, int q, int k, int l) {
  const bool c = q == n && (l < 0 || k >= -n);
  const bool d = q == m && (k < 0 || l >= -m);
  switch (x) {
    case 'a': return q != 0 && q != n && q != m && q != n + m;
    case 'b': return q == 0 && (k < 0 || l < 0);
    // n = m: both splits (n, 0) and (0, m) must vanish
    case 'c': return c && (n != m || d);
    case 'd': return d && (n != m || c);
    case 'e': return q == n + m && (k >= -n || l >= -m);
  }
  return false;
}

std::vector<Expr> hvars(Space s, int n) { return vars(s, n + 1); }

Monomial z_mask() {
  Monomial m = 0;
  for (int i = 0; i < kMaxGenIndex; ++i) m |= bit(d_z(i)) | bit(d_zbar(i));
  return m;
}

DegreeSpec z_bidegree(int p, int q) { return DegreeSpec().set(GenKind::d_z, p).set(GenKind::d_zbar, q); }

cplx largest(const NumForm& f) {
  cplx best = 0.0;
  for (const auto& [m, v] : f) {
    if (std::abs(v) > std::abs(best)) best = v;
  }
  return best;
}

struct Certificate {
  Form g, target;
};

Certificate build_primitive(int n, int p, int r) {
  auto z = hvars(Space::z, n), zeta = hvars(Space::zeta, n);
  Expr s = dot(conj(zeta), z);
  Expr n2 = norm2(z);
  Form w1, hol;
  for (int i = 0; i <= n; ++i) {
    w1 += Form::gen(d_z(i), conj(z[i]) / n2);
    hol += Form::gen(d_z(i), conj(zeta[i]));
  }
  Form omega = dbar(w1, space_bit(Space::z));
  Certificate c;
  c.g = pow(s, r - 1) * wedge(s * w1 - hol, power(omega, p - 1));
  c.target = pow(s, r) * power(omega, p);
  return c;
}

ExactnessCertificate verify(int n, Certificate c, int samples, std::uint64_t seed) {
  ExactnessCertificate out;
  Form dg = dbar(c.g, space_bit(Space::z));
  Contraction euler;
  auto z = hvars(Space::z, n);
  for (int i = 0; i <= n; ++i) euler.images.emplace_back(d_z(i), z[i]);
  Form radial = contract(c.g, euler);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < samples; ++t) {
    Point pt = sample_point(Ambient::pn_space(n), rng);
    out.dbar_residual = std::max(out.dbar_residual, max_abs(eval(dg - c.target, pt)));
    out.projective_residual = std::max(out.projective_residual, max_abs(eval(radial, pt)));
  }
  out.g = std::move(c.g);
  out.target = std::move(c.target);
  out.verified = out.dbar_residual < 1e-10 && out.projective_residual < 1e-10;
  return out;
}

}  // namespace

double z_factor_spread(const Form& C, const Form& T, int n, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Monomial zm = z_mask();
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    Point a = sample_point(Ambient::pn_space(n), rng);
    Point b = a;
    b.set(Space::z, sample_point(Ambient::pn_space(n), rng).values(Space::z));
    NumForm ca = eval(C, a), cb = eval(C, b), ta = eval(T, a), tb = eval(T, b);
    double scale = std::max(max_abs(ca), max_abs(cb));
    if (scale == 0.0) return 1.0;
    for (const auto& [m, v] : ca) {
      auto ita = ta.find(m & zm), itb = tb.find(m & zm);
      cplx wa = ita == ta.end() ? 0.0 : ita->second, wb = itb == tb.end() ? 0.0 : itb->second;
      cplx vb = cb.count(m) ? cb.at(m) : 0.0;
      if (std::abs(wa) < 1e-12 || std::abs(wb) < 1e-12) {
        if (std::abs(v) > 1e-10 * scale || std::abs(vb) > 1e-10 * scale) worst = std::max(worst, 1.0);
        continue;
      }
      cplx ra = v / wa, rb = vb / wb;
      double den = std::max(std::abs(ra), std::abs(rb));
      if (den > 0.0) worst = std::max(worst, std::abs(ra - rb) / den);
    }
  }
  return worst;
}

namespace {

MechanismCheck degree_count(char letter, int n, bool dual, int kp, int kr, int zp, int zq) {
  MechanismCheck m;
  m.letter = letter;
  m.kind = MechanismCheck::Kind::degree_count;
  m.dual = dual;
  m.kernel_p = kp;
  m.kernel_r = kr;
  m.z_p = zp;
  m.z_q = zq;
  KernelPair pair = pn_kernels(n, kp, kr);
  Form part = pick_bidegree(pair.P, z_bidegree(zp, zq));
  m.passed = part.is_zero();
  m.detail = "P_{" + std::to_string(kp) + "," + std::to_string(kr) + "} has " + std::to_string(part.size()) +
             " terms of z-bidegree (" + std::to_string(zp) + "," + std::to_string(zq) + ")";
  return m;
}

MechanismCheck exact_factor(char letter, int n, bool dual, int kp, int kr, int zp, std::uint64_t seed) {
  MechanismCheck m;
  m.letter = letter;
  m.kind = MechanismCheck::Kind::exact_factor;
  m.dual = dual;
  m.kernel_p = kp;
  m.kernel_r = kr;
  m.z_p = zp;
  m.z_q = zp;
  KernelPair pair = pn_kernels(n, kp, kr);
  Form part = pick_bidegree(pair.P, z_bidegree(zp, zp));
  ExactnessCertificate cert = primitive_certificate(n, zp, kr, 50, seed);
  double spread = part.is_zero() ? 0.0 : z_factor_spread(part, cert.target, n, 20, seed + 1);
  m.residual = std::max({cert.dbar_residual, cert.projective_residual, spread});
  m.passed = cert.verified && spread < 1e-9;
  m.detail = "z-factor of P_{" + std::to_string(kp) + "," + std::to_string(kr) + "} is (z.conj(zeta))^" +
             std::to_string(kr) + " omega_z^" + std::to_string(zp) + (part.is_zero() ? " (component empty)" : "");
  return m;
}

MechanismCheck pn_mechanism(char letter, int n, int p, int q, int r, std::uint64_t seed) {
  switch (letter) {
    case 'a':
      if (r > 0) return exact_factor('a', n, false, p, r, p, seed);
      return exact_factor('a', n, true, n - p, -r, n - p, seed);
    case 'b':
      if (p > 0) return degree_count('b', n, true, n - p, -r, n - p, n);
      return exact_factor('b', n, true, n, -r, n, seed);
    case 'c':
      if (p < n) return degree_count('c', n, false, p, r, p, n);
      return exact_factor('c', n, false, n, r, n, seed);
    case 'd': return degree_count('d', n, false, p, r, p, q);
    case 'e': return degree_count('e', n, true, n - p, -r, n - p, n - q);
  }
  throw Error(ErrorCode::case_mismatch, std::string("unknown case letter ") + letter);
}

}  // namespace

CohomologyCase CohomologyCase::pn(int n, int p, int q, int r) {
  if (n < 1 || p < 0 || q < 0 || p > n || q > n) throw Error(ErrorCode::degree_out_of_range, "need 0 <= p, q <= n");
  CohomologyCase c;
  c.space = Ambient::pn_space(n);
  c.p = p;
  c.q = q;
  c.r = r;
  return c;
}

CohomologyCase CohomologyCase::product(int n, int m, int q, int k, int l) {
  if (n < 1 || m < 1 || q < 0 || q > n + m) throw Error(ErrorCode::degree_out_of_range, "need 0 <= q <= n + m");
  CohomologyCase c;
  c.space = Ambient::product_space(n, m);
  c.q = q;
  c.k = k;
  c.l = l;
  return c;
}

std::string CohomologyCase::name() const {
  if (space.kind == Ambient::Kind::pn_x_pm) {
    return "H^{0," + std::to_string(q) + "}(P^" + std::to_string(space.n) + " x P^" + std::to_string(space.m) +
           ", L^" + std::to_string(k) + " x L^" + std::to_string(l) + ")";
  }
  return "H^{" + std::to_string(p) + "," + std::to_string(q) + "}(P^" + std::to_string(space.n) + ", L^" +
         std::to_string(r) + ")";
}

const char* verdict_name(Classification::Verdict v) {
  switch (v) {
    case Classification::Verdict::trivial: return "trivial";
    case Classification::Verdict::nontrivial: return "nontrivial";
    case Classification::Verdict::unknown: return "unknown";
  }
  return "?";
}

Classification classify(const CohomologyCase& c) {
  Classification out;
  for (char x : {'a', 'b', 'c', 'd', 'e'}) {
    bool hit = c.space.kind == Ambient::Kind::pn_x_pm ? product_letter(x, c.space.n, c.space.m, c.q, c.k, c.l)
                                                      : pn_letter(x, c.space.n, c.p, c.q, c.r);
    if (hit) out.letters.push_back(x);
  }
  for (char x : kLetterOrder) {
    if (std::find(out.letters.begin(), out.letters.end(), x) != out.letters.end()) {
      out.letter = x;
      break;
    }
  }
  out.verdict = out.letter ? Classification::Verdict::trivial : Classification::Verdict::unknown;
  return out;
}

ExactnessCertificate primitive_certificate(int n, int p, int r, int samples, std::uint64_t seed) {
  if (p < 1 || p > n || r <= 0) throw Error(ErrorCode::case_mismatch, "primitive needs 1 <= p <= n and r > 0");
  return verify(n, build_primitive(n, p, r), samples, seed);
}

ExactnessCertificate exactness_certificate(int n, int p, int q, int r, int samples, std::uint64_t seed) {
  if (!(q == p && p != 0 && p != n && r > 0)) {
    throw Error(ErrorCode::case_mismatch, "explicit primitive needs q = p != 0, n and r > 0");
  }
  return primitive_certificate(n, p, r, samples, seed);
}

const char* mechanism_kind_name(MechanismCheck::Kind k) {
  switch (k) {
    case MechanismCheck::Kind::degree_count: return "degree_count";
    case MechanismCheck::Kind::exact_factor: return "exact_factor";
    case MechanismCheck::Kind::fubini: return "fubini";
  }
  return "?";
}

MechanismCheck check_mechanism(const CohomologyCase& c, std::optional<char> letter, std::uint64_t seed) {
  Classification cl = classify(c);
  char x = letter ? *letter : cl.letter.value_or('?');
  if (std::find(cl.letters.begin(), cl.letters.end(), x) == cl.letters.end()) {
    throw Error(ErrorCode::case_mismatch, c.name() + " is not covered by case " + std::string(1, x));
  }
  if (c.space.kind != Ambient::Kind::pn_x_pm) return pn_mechanism(x, c.space.n, c.p, c.q, c.r, seed);

  // ∫ φ∧P splits into ∫_{P^m}(∫_{P^n} φ∧α^{n+k})∧α~^{m+l}; every split q1 + q2 = q
  // needs a factor whose group vanishes.
  MechanismCheck m;
  m.letter = x;
  m.kind = MechanismCheck::Kind::fubini;
  m.passed = true;
  const int n = c.space.n, mm = c.space.m;
  for (int q1 = std::max(0, c.q - mm); q1 <= std::min(n, c.q); ++q1) {
    const int q2 = c.q - q1;
    bool covered = false;
    for (auto [dim, qq, tw] : {std::tuple{n, q1, c.k}, std::tuple{mm, q2, c.l}}) {
      CohomologyCase f = CohomologyCase::pn(dim, 0, qq, tw);
      Classification fc = classify(f);
      if (!fc.letter) continue;
      MechanismCheck sub = pn_mechanism(*fc.letter, dim, 0, qq, tw, seed);
      m.residual = std::max(m.residual, sub.residual);
      if (sub.passed) {
        covered = true;
        m.detail += "(" + std::to_string(q1) + "," + std::to_string(q2) + "): P^" + std::to_string(dim) + " case " +
                    std::string(1, *fc.letter) + "; ";
        break;
      }
    }
    if (!covered) {
      m.passed = false;
      m.detail += "(" + std::to_string(q1) + "," + std::to_string(q2) + "): no vanishing factor; ";
    }
  }
  return m;
}

DualPairing serre_dual_pair(const Form& phi_dual, const KernelPair& pair, const Point& zeta, int points) {
  if (pair.ambient.kind != Ambient::Kind::pn || !pair.twist) {
    throw Error(ErrorCode::ambient_mismatch, "dual pairing needs P^n kernels");
  }
  const int n = pair.ambient.n;
  auto h = homogeneity(phi_dual);
  if (!phi_dual.is_zero() && (!h || h->deg_z - h->deg_zbar != -pair.twist->second)) {
    throw Error(ErrorCode::twist_mismatch, "dual form must take values in L^" + std::to_string(-pair.twist->second));
  }
  Form density = pick_bidegree(wedge(phi_dual, pair.P), z_bidegree(n, n));
  Point fixed;
  fixed.set(Space::z, zeta.values(Space::zeta));
  DualPairing out;
  if (!density.is_zero()) {
    out.form = swap_roles(integrate(swap_roles(density), Domain::projective_chart(n), QuadratureRule::tensor(points),
                                    fixed));
  }
  out.value = largest(out.form);
  return out;
}

const char* verdict_name(ObstructionResult::Verdict v) {
  switch (v) {
    case ObstructionResult::Verdict::solved: return "solved";
    case ObstructionResult::Verdict::obstructed: return "obstructed";
    case ObstructionResult::Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

void require_closed(const Form& phi, const Ambient& a, double tol, std::uint64_t seed) {
  Form d = dbar(phi, space_bit(Space::zeta) | space_bit(Space::zeta_tilde));
  std::mt19937_64 rng(seed);
  for (int t = 0; t < 20; ++t) {
    Point p = sample_point(a, rng);
    double v = max_abs(eval(d, p));
    if (v > tol * (1.0 + max_abs(eval(phi, p)))) {
      throw Error(ErrorCode::not_closed, "|dbar phi| = " + std::to_string(v) + " at a sample point");
    }
  }
}

namespace {

void monomials(int vars_left, int degree, std::vector<int>& exps, std::vector<std::vector<int>>& out) {
  if (vars_left == 1) {
    exps.push_back(degree);
    out.push_back(exps);
    exps.pop_back();
    return;
  }
  for (int a = degree; a >= 0; --a) {
    exps.push_back(a);
    monomials(vars_left - 1, degree - a, exps, out);
    exps.pop_back();
  }
}

// Number of dζ̄ in every term, or -1 when mixed.
int zetabar_degree(const Form& phi) {
  int q = -1;
  for (const auto& [m, c] : phi.terms()) {
    int d = bidegree(m).total(GenKind::d_zetabar);
    if (q >= 0 && d != q) return -1;
    q = d;
  }
  return q;
}

struct Pass {
  double residual = 0.0;
  cplx pairing{};
  double normalized = 0.0;
  std::vector<std::pair<Point, NumForm>> potential;
  std::optional<ClassPairing> cls;
};

std::optional<ClassPairing> best_class_pairing(const Form& phi, int n, int p, int r, int points) {
  int q = zetabar_degree(phi);
  if (q < 0) return std::nullopt;
  std::vector<Form> basis = dual_holomorphic_basis(n, p, q, r);
  if (basis.empty()) return std::nullopt;
  ClassPairing best;
  for (const auto& psi : basis) {
    ClassPairing c = class_pairing(phi, psi, n, points);
    if (c.ratio >= best.ratio) best = c;
  }
  return best;
}

Pass direct_pass(const Form& phi, const KernelPair& pair, const Domain& domain, const std::vector<Point>& grid,
                 int points) {
  Pass out;
  for (const auto& z : grid) {
    KoppelmanTerms t = koppelman_eval(phi, pair, domain, z, QuadratureRule::tensor(points));
    out.residual = std::max(out.residual, max_abs(t.dbar_z_potential - t.phi_at_z));
    cplx pv = largest(t.p_term);
    if (std::abs(pv) > std::abs(out.pairing)) out.pairing = pv;
    double ref = max_abs(t.phi_at_z);
    if (ref > 0.0) out.normalized = std::max(out.normalized, std::abs(pv) / ref);
    out.potential.emplace_back(z, t.potential);
  }
  if (pair.ambient.kind == Ambient::Kind::pn && pair.twist) {
    out.cls = best_class_pairing(phi, pair.ambient.n, pair.twist->first, pair.twist->second, points);
  }
  return out;
}

Pass dual_pass(const Form& phi, const KernelPair& dual, const std::vector<Point>& grid, int points) {
  Pass out;
  Form phi_z = swap_roles(phi);
  for (const auto& z : grid) {
    Point zeta;
    zeta.set(Space::zeta, z.values(Space::z));
    DualPairing d = serre_dual_pair(phi_z, dual, zeta, points);
    if (std::abs(d.value) > std::abs(out.pairing)) out.pairing = d.value;
    double ref = max_abs(eval(phi, zeta));
    if (ref > 0.0) out.normalized = std::max(out.normalized, std::abs(d.value) / ref);
  }
  const int n = dual.ambient.n;
  out.cls = best_class_pairing(phi, n, n - dual.twist->first, -dual.twist->second, points);
  return out;
}

// The pointwise P term only certifies a class when there are no exact forms (q = 0).
bool indicates_obstruction(const Pass& p, const Form& phi, double threshold) {
  if (p.cls) return p.cls->ratio > threshold;
  return zetabar_degree(phi) == 0 && p.normalized > threshold;
}

ObstructionResult finish(Pass pass, int pts, bool confirmed, bool dual, const SolveOptions& opt) {
  ObstructionResult res;
  res.p_pairing = pass.pairing;
  res.p_pairing_normalized = pass.normalized;
  res.class_pairing = pass.cls;
  res.residual = pass.residual;
  res.dbar_solution = std::move(pass.potential);
  res.points = pts;
  res.dual_mode = dual;
  // a vanishing class pairing certifies an exact P term
  bool p_small = std::abs(res.p_pairing) < opt.pairing_tolerance ||
                 (res.class_pairing && std::abs(res.class_pairing->value) < opt.pairing_tolerance);
  if (confirmed) {
    res.verdict = ObstructionResult::Verdict::obstructed;
  } else if (!dual && res.residual < opt.tolerance && p_small) {
    res.verdict = ObstructionResult::Verdict::solved;
  }
  return res;
}

template <class Run>
ObstructionResult escalate(const Form& phi, Run run, bool dual, const SolveOptions& opt) {
  int pts = opt.points;
  Pass pass = run(pts);
  bool prev = indicates_obstruction(pass, phi, opt.obstruction_threshold);
  bool confirmed = false;
  auto settled = [&](const Pass& p) {
    return !dual && p.residual < opt.tolerance && std::abs(p.pairing) < opt.pairing_tolerance;
  };
  while (!settled(pass) && 2 * pts <= opt.max_points) {
    pts *= 2;
    pass = run(pts);
    bool now = indicates_obstruction(pass, phi, opt.obstruction_threshold);
    if (prev && now) {
      confirmed = true;
      break;
    }
    if (dual && !now) break;
    prev = now;
  }
  return finish(std::move(pass), pts, confirmed, dual, opt);
}

}  // namespace

namespace {

Form euler_form(const std::vector<Expr>& zeta, bool conjugate) {
  const int n = static_cast<int>(zeta.size()) - 1;
  Form out;
  for (int i = 0; i <= n; ++i) {
    std::vector<Generator> gens;
    for (int j = 0; j <= n; ++j) {
      if (j != i) gens.push_back(conjugate ? d_zetabar(j) : d_zeta(j));
    }
    out += Form::monomial(gens, (i % 2 ? -1.0 : 1.0) * (conjugate ? conj(zeta[i]) : zeta[i]));
  }
  return out;
}

Form fs_form(const std::vector<Expr>& zeta, const Expr& n2) {
  Form a;
  for (std::size_t i = 0; i < zeta.size(); ++i) a += Form::gen(d_zetabar(static_cast<int>(i)), zeta[i] / n2);
  return del(a);
}

Form wedge_power(const Form& f, int k) {
  Form out(1.0);
  for (int i = 0; i < k; ++i) out = wedge(out, f);
  return out;
}

}  // namespace

std::vector<Form> dual_holomorphic_basis(int n, int p, int q, int r) {
  std::vector<Form> out;
  if (q != n || (p != 0 && p != n)) return out;
  const int d = p == n ? -r : -r - n - 1;
  if (d < 0) return out;
  auto zeta = hvars(Space::zeta, n);
  Form euler = p == 0 ? euler_form(zeta, false) : Form(1.0);
  std::vector<std::vector<int>> exps;
  std::vector<int> scratch;
  monomials(n + 1, d, scratch, exps);
  for (const auto& e : exps) {
    Expr f(1.0);
    for (int i = 0; i <= n; ++i) f = f * pow(zeta[i], e[i]);
    out.push_back((f * euler).with_ambient(Ambient::pn_space(n)));
  }
  return out;
}

ClassPairing class_pairing(const Form& phi, const Form& psi, int n, int points) {
  Domain chart = Domain::projective_chart(n);
  Form density = wedge(phi, psi);
  Form top = top_degree_part(density, chart);
  if (top.is_zero() && !density.is_zero()) throw Error(ErrorCode::degree_mismatch, "phi ∧ psi is not top degree");
  cplx sum = 0.0;
  double abs_sum = 0.0;
  for (const auto& node : materialize(chart, QuadratureRule::tensor(points))) {
    for (const auto& [m, c] : eval(top, node.point)) {
      cplx x = node.weight * c * pullback(node, m);
      sum += x;
      abs_sum += std::abs(x);
    }
  }
  ClassPairing out;
  out.value = sum;
  out.ratio = abs_sum > 0.0 ? std::abs(sum) / abs_sum : 0.0;
  return out;
}

ObstructionResult solve_dbar(const Form& phi, const KernelPair& pair, const Domain& domain,
                             const std::vector<Point>& grid, const SolveOptions& opt) {
  require_closed(phi, pair.ambient, opt.closed_tolerance, opt.seed);
  return escalate(phi, [&](int pts) { return direct_pass(phi, pair, domain, grid, pts); }, false, opt);
}

ObstructionResult solve_dbar_dual(const Form& phi, const KernelPair& dual_pair, const std::vector<Point>& grid,
                                  const SolveOptions& opt) {
  if (dual_pair.ambient.kind != Ambient::Kind::pn || !dual_pair.twist) {
    throw Error(ErrorCode::ambient_mismatch, "dual mode needs P^n kernels");
  }
  require_closed(phi, dual_pair.ambient, opt.closed_tolerance, opt.seed);
  return escalate(phi, [&](int pts) { return dual_pass(phi, dual_pair, grid, pts); }, true, opt);
}

ObstructionResult solve_on_pn(const Form& phi, int n, int p, int r, const std::vector<Point>& grid,
                              const SolveOptions& opt) {
  if (n - p + r >= 0) return solve_dbar(phi, pn_kernels(n, p, r), Domain::projective_chart(n), grid, opt);
  return solve_dbar_dual(phi, pn_kernels(n, n - p, -r), grid, opt);
}

std::optional<Representative> representative(int n, int p, int q, int r) {
  if (n < 1 || p < 0 || q < 0 || p > n || q > n) {
    throw Error(ErrorCode::degree_out_of_range, "need 0 <= p, q <= n");
  }
  const Ambient amb = Ambient::pn_space(n);
  auto zeta = hvars(Space::zeta, n);
  Expr n2(0.0);
  for (const auto& x : zeta) n2 = n2 + x * conj(x);
  const Form omega = fs_form(zeta, n2);
  const auto verdict = classify(CohomologyCase::pn(n, p, q, r)).verdict;

  if (verdict == Classification::Verdict::trivial) {
    if (q == 0) return std::nullopt;
    const int sp = p, sq = q - 1;
    const int m = std::min(sp, sq);
    Form pieces = wedge_power(omega, m);
    int twist_h = 0, twist_a = 0;
    for (int j = 1; j <= sp - m; ++j) {
      Form theta = Form::gen(d_zeta(j), zeta[0]) - Form::gen(d_zeta(0), zeta[j]);
      pieces = wedge(pieces, theta);
      twist_h += 2;
    }
    for (int j = 1; j <= sq - m; ++j) {
      Form theta = Form::gen(d_zetabar(j), conj(zeta[0])) - Form::gen(d_zetabar(0), conj(zeta[j]));
      pieces = wedge(pieces, theta);
      twist_a += 2;
    }
    // some choices give ∂̄σ = 0 identically; take the first that does not
    Point probe;
    for (int i = 0; i <= n; ++i) probe.set(Space::zeta, i, cplx(0.3 + 0.2 * i, 0.7 - 0.45 * i));
    for (int extra = 1; extra <= 3; ++extra) {
      for (int hi = 0; hi <= n; ++hi) {
        for (int ai = n; ai >= 0; --ai) {
          const int c = std::max(twist_a + extra, twist_h - r);
          const int a = r - twist_h + c, b = c - twist_a;
          Expr h = pow(zeta[hi], a) * pow(conj(zeta[ai]), b) / pow(n2, c);
          Form sigma = (h * pieces).with_ambient(amb);
          Form phi = dbar(sigma).with_ambient(amb);
          if (max_abs(eval(phi, probe)) > 1e-8) return Representative{phi, sigma, "exact"};
        }
      }
    }
    return std::nullopt;
  }
  if (verdict != Classification::Verdict::unknown) return std::nullopt;

  Form phi;
  if (q == n && p == 0 && -r - n - 1 >= 0) {
    const int d = -r - n - 1;
    phi = (pow(conj(zeta[0]), d) / pow(n2, d + n + 1)) * euler_form(zeta, true);
  } else if (p == q && r <= 0) {
    const int d = -r;
    phi = (pow(conj(zeta[0]), d) / pow(n2, d)) * wedge_power(omega, p);
  } else if (q == 0 && p == 0 && r >= 0) {
    phi = Form(pow(zeta[0], r));
  } else if (q == 0 && p == n && r - n - 1 >= 0) {
    phi = pow(zeta[0], r - n - 1) * euler_form(zeta, false);
  } else {
    return std::nullopt;
  }
  return Representative{phi.with_ambient(amb), std::nullopt, "candidate"};
}

}  // namespace koppelman
