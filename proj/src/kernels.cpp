#include "koppelman/kernels.hpp"

#include <cmath>
#include <numeric>

namespace koppelman {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Form scaled(const Form& f, double s) { return Expr(s) * f; }

std::vector<int> iota_indices(int count) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Σ coeffs_i g_i for 1-generator frames.
Form frame_sum(const std::vector<Expr>& coeffs, GenKind kind, GenSpace space = GenSpace::main) {
  Form f;
  for (std::size_t i = 0; i < coeffs.size(); ++i) f += Form::gen(Generator{kind, static_cast<int>(i), space}, coeffs[i]);
  return f;
}

Contraction scaled_contraction(const std::vector<Expr>& z, cplx c, GenKind kind, GenSpace space) {
  Contraction out;
  for (std::size_t i = 0; i < z.size(); ++i) out.images.emplace_back(Generator{kind, static_cast<int>(i), space}, Expr(c) * z[i]);
  return out;
}

const cplx kProjectiveC = -kTwoPiI;

// (z̄_i/|z|² − (z̄·ζ)/(|ζ|²|z|²) ζ̄_i)_i
std::vector<Expr> minimal_section(const std::vector<Expr>& zeta, const std::vector<Expr>& z) {
  Expr nz = norm2(z), nzeta = norm2(zeta);
  Expr zbar_zeta = dot(conj(z), zeta);
  std::vector<Expr> out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.push_back(conj(z[i]) / nz - zbar_zeta / (nzeta * nz) * conj(zeta[i]));
  }
  return out;
}

}  // namespace

// ---- flat --------------------------------------------------------------

FlatSetup flat_setup(int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "dimension must be >= 1");
  FlatSetup f;
  f.n = n;
  f.zeta = vars(Space::zeta, n);
  f.z = vars(Space::z, n);
  for (int j = 0; j < n; ++j) f.eta.push_back(Expr(kTwoPiI) * (f.z[j] - f.zeta[j]));
  f.contraction = eta_contraction(f.eta);
  f.s = frame_sum(conj(f.eta), GenKind::e_star);
  return f;
}

ChernData flat_chern(int n) {
  ChernData c;
  for (int j = 0; j < n; ++j) {
    Form d_eta = Form::gen(d_z(j), Expr(kTwoPiI)) - Form::gen(d_zeta(j), Expr(kTwoPiI));
    c.D_eta += wedge(d_eta, Form::gen(e_gen(j)));
  }
  c.contraction = flat_setup(n).contraction;
  c.fiber = iota_indices(n);
  c.ambient = Ambient::cn_space(n);
  return c;
}

Form chern_X(const ChernData& c) {
  return Expr(1.0 / kTwoPiI) * c.D_eta + Expr(cplx(0.0, 1.0 / (2.0 * kPi))) * c.Theta_tilde;
}

double chern_form_residual(const ChernData& c, int samples, std::uint64_t seed) {
  Form r = nabla(chern_X(c), c.contraction);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) worst = std::max(worst, max_abs(eval(r, sample_point(c.ambient, rng))));
  return worst;
}

double dbar_theta_residual(const ChernData& c, int samples, std::uint64_t seed) {
  Form r = dbar(c.Theta_tilde);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) worst = std::max(worst, max_abs(eval(r, sample_point(c.ambient, rng))));
  return worst;
}

KernelPair fiber_kernels(const Form& u, const ChernData& chern, const std::optional<Form>& g, const Form& prefactor) {
  if (double res = chern_form_residual(chern, 10, 7); res > 1e-8) {
    throw Error(ErrorCode::chern_inconsistent, "nabla X residual " + std::to_string(res));
  }
  const int rank = static_cast<int>(chern.fiber.size());
  Form Xr = scaled(power(chern_X(chern), rank), 1.0 / factorial(rank));
  Form gX = g ? wedge(*g, Xr) : Xr;
  KernelPair kp;
  kp.K = project_fiber(wedge(wedge(prefactor, u), gX), chern.fiber).with_ambient(chern.ambient);
  kp.P = project_fiber(wedge(prefactor, gX), chern.fiber).with_ambient(chern.ambient);
  kp.ambient = chern.ambient;
  return kp;
}

KernelPair bm_kernel(int n) {
  FlatSetup f = flat_setup(n);
  Form u = geometric_inverse(f.s, f.contraction, n);
  KernelPair kp = fiber_kernels(u, flat_chern(n));
  kp.eta_convention = "eta = 2 pi i (z - zeta)";
  return kp;
}

KernelPair cfl_kernel(const Form& s, int n, std::uint64_t seed) {
  FlatSetup f = flat_setup(n);
  Form delta = contract(s, f.contraction);
  for (const auto& [m, x] : delta.terms()) {
    if (m != 0) throw Error(ErrorCode::support_function_invalid, "s must be a section of E* with scalar contraction");
  }
  Expr ds = delta.scalar();
  if (ds.is_zero()) throw Error(ErrorCode::support_function_invalid, "δ_η s vanishes identically");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const std::vector<double> ts{1e-1, 1e-2, 1e-3};
  Ambient amb = Ambient::cn_space(n);
  for (int trial = 0; trial < 20; ++trial) {
    Point base = sample_point(amb, rng);
    std::vector<cplx> dir(n);
    for (auto& d : dir) d = {gauss(rng), gauss(rng)};
    std::vector<double> ls, lds, leta;
    for (double t : ts) {
      Point p = base;
      for (int j = 0; j < n; ++j) p.set(Space::zeta, j, *base.get({Space::z, j, false}) + t * dir[j]);
      double eta = 0.0;
      for (const auto& e : f.eta) eta += std::norm(eval(e, p));
      leta.push_back(0.5 * std::log(eta));
      ls.push_back(std::log(coefficient_norm(eval(s, p))));
      lds.push_back(std::log(std::abs(eval(ds, p))));
    }
    double run = leta.back() - leta.front();
    double slope_s = (ls.back() - ls.front()) / run;
    double slope_d = (lds.back() - lds.front()) / run;
    if (!(slope_s > 0.9) || !(slope_d < 2.1)) {
      throw Error(ErrorCode::support_function_invalid,
                  "near-diagonal slopes |s|: " + std::to_string(slope_s) + ", |δs|: " + std::to_string(slope_d));
    }
  }
  Form u = geometric_inverse(s, f.contraction, n);
  KernelPair kp = fiber_kernels(u, flat_chern(n));
  kp.eta_convention = "eta = 2 pi i (z - zeta)";
  kp.weight_stack.push_back("cfl");
  return kp;
}

KernelPair weighted_flat_kernel(int n, const Form& g, const std::string& weight_name) {
  FlatSetup f = flat_setup(n);
  Form u = geometric_inverse(f.s, f.contraction, n);
  KernelPair kp = fiber_kernels(u, flat_chern(n), g);
  kp.eta_convention = "eta = 2 pi i (z - zeta)";
  kp.weight_stack.push_back(weight_name);
  return kp;
}

// ---- weights -----------------------------------------------------------

WeightSpec WeightSpec::one_plus_nabla(const Form& q) {
  WeightSpec w;
  w.kind = Kind::one_plus_nabla_q;
  w.q = q;
  return w;
}

WeightSpec WeightSpec::function_of(const std::vector<cplx>& series, const WeightSpec& base) {
  WeightSpec w;
  w.kind = Kind::function_of_weight;
  w.series = series;
  w.base = std::make_shared<WeightSpec>(base);
  return w;
}

WeightSpec WeightSpec::polynomial_growth(int k) {
  WeightSpec w;
  w.kind = Kind::polynomial_growth;
  w.power = k;
  return w;
}

WeightSpec WeightSpec::alpha_projective(int power) {
  WeightSpec w;
  w.kind = Kind::alpha_projective;
  w.power = power;
  return w;
}

WeightSpec WeightSpec::alpha_product(int power, bool tilde) {
  WeightSpec w;
  w.kind = Kind::alpha_product;
  w.power = power;
  w.tilde = tilde;
  return w;
}

std::string WeightSpec::name() const {
  switch (kind) {
    case Kind::one_plus_nabla_q: return "one_plus_nabla_q";
    case Kind::function_of_weight: return "function_of_weight(" + (base ? base->name() : std::string("?")) + ")";
    case Kind::polynomial_growth: return "polynomial_growth^" + std::to_string(power);
    case Kind::alpha_projective: return "alpha^" + std::to_string(power);
    case Kind::alpha_product: return std::string(tilde ? "alpha_tilde^" : "alpha^") + std::to_string(power);
  }
  return "?";
}

Contraction ambient_contraction(const Ambient& a) {
  switch (a.kind) {
    case Ambient::Kind::cn: return flat_setup(a.n).contraction;
    case Ambient::Kind::pn:
      return scaled_contraction(vars(Space::z, a.n + 1), kProjectiveC, GenKind::e_star, GenSpace::main);
    case Ambient::Kind::pn_x_pm:
      return combine(scaled_contraction(vars(Space::z, a.n + 1), kProjectiveC, GenKind::d_zeta, GenSpace::main),
                     scaled_contraction(vars(Space::z_tilde, a.m + 1), kProjectiveC, GenKind::d_zeta, GenSpace::tilde));
    case Ambient::Kind::unspecified: break;
  }
  throw Error(ErrorCode::invalid_argument, "weights need a concrete ambient space");
}

WeightCheck check_weight(const Form& g, const Ambient& a, int samples, std::uint64_t seed) {
  Form ng = nabla(g, ambient_contraction(a));
  Expr g00 = g.scalar();
  std::mt19937_64 rng(seed);
  WeightCheck wc;
  for (int i = 0; i < samples; ++i) {
    wc.nabla_max = std::max(wc.nabla_max, max_abs(eval(ng, sample_point(a, rng))));
    wc.diagonal_err = std::max(wc.diagonal_err, std::abs(eval(g00, sample_point(a, rng, true)) - 1.0));
  }
  return wc;
}

Form function_of_weight(const std::vector<cplx>& series, const Form& g) {
  Expr g0 = g.scalar();
  Form N = g - Form(g0);
  Form out = Form().with_ambient(g.ambient());
  Form Nk = Form(1.0);
  const int top = static_cast<int>(series.size()) - 1;
  for (int k = 0; k <= top && !Nk.is_zero(); ++k) {
    // G^(k)(g0) / k!
    Expr dk;
    for (int j = k; j <= top; ++j) {
      if (series[j] == cplx{}) continue;
      double falling = 1.0;
      for (int i = 0; i < k; ++i) falling *= (j - i);
      dk = dk + Expr(series[j] * falling / factorial(k)) * pow(g0, j - k);
    }
    out += dk * Nk;
    Nk = wedge(Nk, N);
  }
  return out;
}

namespace {

Form realize(const WeightSpec& spec, const Ambient& a, std::uint64_t seed);

Form polynomial_growth_weight(int n) {
  FlatSetup f = flat_setup(n);
  Expr denom = Expr(1.0) + norm2(f.zeta);
  std::vector<Expr> coeffs;
  for (int j = 0; j < n; ++j) coeffs.push_back(Expr(1.0 / kTwoPiI) * conj(f.zeta[j]) / denom);
  Form q = frame_sum(coeffs, GenKind::e_star);
  return Form(1.0) + nabla(q, f.contraction);
}

Form realize(const WeightSpec& spec, const Ambient& a, std::uint64_t seed) {
  using K = WeightSpec::Kind;
  switch (spec.kind) {
    case K::one_plus_nabla_q: return (Form(1.0) + nabla(spec.q, ambient_contraction(a))).with_ambient(a);
    case K::function_of_weight: {
      cplx g1 = std::accumulate(spec.series.begin(), spec.series.end(), cplx{});
      if (std::abs(g1 - 1.0) > 1e-14) {
        throw Error(ErrorCode::weight_axiom_violation, "function of a weight needs G(1) = 1");
      }
      if (!spec.base) throw Error(ErrorCode::invalid_argument, "function_of_weight without a base weight");
      return function_of_weight(spec.series, weight(*spec.base, a, seed)).with_ambient(a);
    }
    case K::polynomial_growth: {
      if (a.kind != Ambient::Kind::cn) throw Error(ErrorCode::ambient_mismatch, "polynomial growth weight lives on C^n");
      if (spec.power < 0) throw Error(ErrorCode::degree_out_of_range, "weight power must be >= 0");
      Form g = polynomial_growth_weight(a.n);
      std::vector<cplx> series(spec.power + 1);
      series[spec.power] = 1.0;
      return function_of_weight(series, g).with_ambient(a);
    }
    case K::alpha_projective: {
      if (a.kind != Ambient::Kind::pn) throw Error(ErrorCode::ambient_mismatch, "alpha weight lives on P^n");
      if (spec.power < 0) throw Error(ErrorCode::degree_out_of_range, "weight power must be >= 0");
      return power(pn_geometry(a.n).alpha, spec.power).with_ambient(a);
    }
    case K::alpha_product: {
      if (a.kind != Ambient::Kind::pn_x_pm) throw Error(ErrorCode::ambient_mismatch, "product alpha lives on P^n x P^m");
      if (spec.power < 0) throw Error(ErrorCode::degree_out_of_range, "weight power must be >= 0");
      ProductGeometry g = product_geometry(a.n, a.m);
      return power(spec.tilde ? g.alpha_tilde : g.alpha, spec.power).with_ambient(a);
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown weight kind");
}

}  // namespace

Form weight(const WeightSpec& spec, const Ambient& a, std::uint64_t seed) {
  Form g = realize(spec, a, seed);
  WeightCheck wc = check_weight(g, a, 100, seed);
  if (!(wc.nabla_max < 1e-10) || !(wc.diagonal_err < 1e-12)) {
    throw Error(ErrorCode::weight_axiom_violation, spec.name() + ": |∇g| = " + std::to_string(wc.nabla_max) +
                                                       ", |g00 - 1| = " + std::to_string(wc.diagonal_err));
  }
  return g;
}

// ---- P^n ---------------------------------------------------------------

PnGeometry pn_geometry(int n) {
  if (n < 1 || n + 1 > kMaxGenIndex) throw Error(ErrorCode::degree_out_of_range, "P^n needs 1 <= n <= 4");
  PnGeometry g;
  g.n = n;
  g.c = kProjectiveC;
  g.zeta = vars(Space::zeta, n + 1);
  g.z = vars(Space::z, n + 1);
  const Ambient amb = Ambient::pn_space(n);
  g.contraction = scaled_contraction(g.z, g.c, GenKind::e_star, GenSpace::main);

  Expr nz = norm2(g.z), nzeta = norm2(g.zeta);
  g.s = frame_sum(minimal_section(g.zeta, g.z), GenKind::e_star).with_ambient(amb);
  g.delta_s = contract(g.s, g.contraction).scalar();
  g.sigma = (Expr(1.0) / g.delta_s) * g.s;
  g.u = geometric_inverse(g.s, g.contraction, n);

  std::vector<Expr> zeta_bar_over(n + 1);
  for (int i = 0; i <= n; ++i) zeta_bar_over[i] = conj(g.zeta[i]) / nzeta;
  Form w = frame_sum(zeta_bar_over, GenKind::e_star);
  Form dbar_w = dbar(w);
  g.alpha = (Form(dot(g.z, conj(g.zeta)) / nzeta) - Expr(1.0 / g.c) * dbar_w).with_ambient(amb);

  Form beta, dz_e, z_e, zeta_e, e_estar;
  for (int i = 0; i <= n; ++i) {
    beta += Form::monomial({d_zeta(i), e_gen(i)});
    dz_e += Form::monomial({d_z(i), e_gen(i)});
    z_e += Form::gen(e_gen(i), g.z[i]);
    zeta_e += Form::gen(e_gen(i), g.zeta[i]);
    e_estar += Form::monomial({e_gen(i), e_star(i)});
  }
  g.beta = beta.with_ambient(amb);
  g.A = (Expr(1.0) / nzeta * wedge(zeta_e, frame_sum(conj(g.zeta), GenKind::e_star))).with_ambient(amb);

  Form del_nz = del(Form(nz), space_bit(Space::z));
  Form D = dz_e - (dot(conj(g.zeta), g.z) / nzeta) * beta - (Expr(1.0) / nz) * wedge(del_nz, z_e);
  g.chern.D_eta = (Expr(g.c) * D).with_ambient(amb);

  std::vector<Expr> z_over(n + 1);
  for (int i = 0; i <= n; ++i) z_over[i] = g.z[i] / nz;
  Form ddbar_log_z = del(frame_sum(z_over, GenKind::d_zbar), space_bit(Space::z));
  g.chern.Theta_tilde = (wedge(ddbar_log_z, e_estar) - wedge(dbar_w, beta)).with_ambient(amb);
  g.chern.contraction = g.contraction;
  g.chern.fiber = iota_indices(n + 1);
  g.chern.ambient = amb;
  return g;
}

KernelPair pn_kernels(int n, int p, int r) {
  if (p < 0 || p > n) throw Error(ErrorCode::degree_out_of_range, "need 0 <= p <= n");
  const int a = n - p + r;
  if (a < 0) {
    throw Error(ErrorCode::duality_required,
                "alpha exponent n-p+r = " + std::to_string(a) + " < 0; pair with the kernels for (n-p, -r)");
  }
  PnGeometry g = pn_geometry(n);
  Form Xp = scaled(power(chern_X(g.chern), p), 1.0 / factorial(p));
  Form bn = scaled(power(g.beta, n - p), 1.0 / factorial(n - p));
  Form core = wedge(wedge(power(g.alpha, a), bn), Xp);
  KernelPair kp;
  kp.P = project_fiber(wedge(g.A, core), g.chern.fiber).with_ambient(g.chern.ambient);
  kp.K = project_fiber(wedge(wedge(g.A, g.u), core), g.chern.fiber).with_ambient(g.chern.ambient);
  kp.ambient = g.chern.ambient;
  kp.twist = std::make_pair(p, r);
  kp.weight_stack.push_back("alpha^" + std::to_string(a));
  kp.eta_convention = "eta = -2 pi i z.e";
  return kp;
}

// ---- P^n x P^m -------------------------------------------------------

ProductGeometry product_geometry(int n, int m) {
  if (n < 1 || m < 1 || n + 1 > kMaxGenIndex || m + 1 > kMaxGenIndex) {
    throw Error(ErrorCode::degree_out_of_range, "product factors need 1 <= n, m <= 4");
  }
  ProductGeometry g;
  g.n = n;
  g.m = m;
  g.c = kProjectiveC;
  const Ambient amb = Ambient::product_space(n, m);
  auto zeta = vars(Space::zeta, n + 1), z = vars(Space::z, n + 1);
  auto zt = vars(Space::zeta_tilde, m + 1), zzt = vars(Space::z_tilde, m + 1);
  g.contraction = combine(scaled_contraction(z, g.c, GenKind::d_zeta, GenSpace::main),
                          scaled_contraction(zzt, g.c, GenKind::d_zeta, GenSpace::tilde));
  Form s_main = frame_sum(minimal_section(zeta, z), GenKind::d_zeta, GenSpace::main);
  Form s_tilde = frame_sum(minimal_section(zt, zzt), GenKind::d_zeta, GenSpace::tilde);
  g.s = (s_main + s_tilde).with_ambient(amb);

  auto alpha_for = [&](const std::vector<Expr>& w, const std::vector<Expr>& x, Space sw, GenSpace gs) {
    Expr nw = norm2(w);
    std::vector<Expr> over(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) over[i] = w[i] / nw;
    Form ddbar_log = del(frame_sum(over, GenKind::d_zetabar, gs), space_bit(sw));
    return (Form(dot(x, conj(w)) / nw) - Expr(1.0 / kTwoPiI) * ddbar_log).with_ambient(amb);
  };
  g.alpha = alpha_for(zeta, z, Space::zeta, GenSpace::main);
  g.alpha_tilde = alpha_for(zt, zzt, Space::zeta_tilde, GenSpace::tilde);
  g.u = geometric_inverse(g.s, g.contraction, n + m);
  return g;
}

KernelPair product_kernels(int n, int m, int k, int l) {
  if (n + k < 0 || m + l < 0) throw Error(ErrorCode::degree_out_of_range, "need n+k >= 0 and m+l >= 0");
  ProductGeometry g = product_geometry(n, m);
  KernelPair kp;
  kp.P = wedge(power(g.alpha, n + k), power(g.alpha_tilde, m + l));
  kp.K = wedge(kp.P, g.u);
  kp.ambient = Ambient::product_space(n, m);
  kp.twist = std::make_pair(k, l);
  kp.weight_stack = {"alpha^" + std::to_string(n + k), "alpha_tilde^" + std::to_string(m + l)};
  kp.eta_convention = "eta = -2 pi i (z.dzeta + z~.dzeta~)";
  return kp;
}

// ---- sampling ------------------------------------------------------------

namespace {

std::vector<cplx> unit_vector(std::mt19937_64& rng, int len) {
  std::normal_distribution<double> g;
  std::vector<cplx> v(len);
  double n2 = 0.0;
  for (auto& x : v) {
    x = {g(rng), g(rng)};
    n2 += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(n2);
  return v;
}

}  // namespace

Point sample_point(const Ambient& a, std::mt19937_64& rng, bool diagonal) {
  Point p;
  switch (a.kind) {
    case Ambient::Kind::cn:
    case Ambient::Kind::unspecified: {
      int n = std::max(a.n, 1);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      std::vector<cplx> zeta(n), z(n);
      for (int i = 0; i < n; ++i) {
        zeta[i] = {u(rng), u(rng)};
        z[i] = {u(rng), u(rng)};
      }
      p.set(Space::zeta, zeta);
      p.set(Space::z, diagonal ? zeta : z);
      break;
    }
    case Ambient::Kind::pn: {
      auto zeta = unit_vector(rng, a.n + 1);
      auto z = unit_vector(rng, a.n + 1);
      p.set(Space::zeta, zeta);
      p.set(Space::z, diagonal ? zeta : z);
      break;
    }
    case Ambient::Kind::pn_x_pm: {
      auto zeta = unit_vector(rng, a.n + 1);
      auto z = unit_vector(rng, a.n + 1);
      auto zt = unit_vector(rng, a.m + 1);
      auto zzt = unit_vector(rng, a.m + 1);
      p.set(Space::zeta, zeta);
      p.set(Space::z, diagonal ? zeta : z);
      p.set(Space::zeta_tilde, zt);
      p.set(Space::z_tilde, diagonal ? zt : zzt);
      break;
    }
  }
  return p;
}

double coefficient_norm(const NumForm& f) {
  double s = 0.0;
  for (const auto& [m, v] : f) s += std::norm(v);
  return std::sqrt(s);
}

double decay_exponent(const Form& f, const Point& base, const std::vector<cplx>& dir, const std::vector<double>& ts) {
  std::vector<double> x, y;
  for (double t : ts) {
    Point p = base;
    for (std::size_t j = 0; j < dir.size(); ++j) {
      p.set(Space::zeta, static_cast<int>(j), *base.get({Space::z, static_cast<int>(j), false}) + t * dir[j]);
    }
    x.push_back(std::log(t));
    y.push_back(std::log(coefficient_norm(eval(f, p))));
  }
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace koppelman
