#include "koppelman/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "koppelman/tape.hpp"

namespace koppelman {

// ---- 1D rules --------------------------------------------------------------

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "gauss_legendre needs n >= 1");
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

Rule1D periodic_trapezoid(int n, double a, double b) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "periodic_trapezoid needs n >= 1");
  Rule1D r;
  double h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(a + h * i);
    r.weights.push_back(h);
  }
  return r;
}

// ---- domains ---------------------------------------------------------------

Domain Domain::disc(cplx center, double radius, GenSpace s) {
  Domain d;
  d.kind = Kind::disc;
  d.n = 1;
  d.center = {center};
  d.radius = radius;
  d.space = s;
  return d;
}

Domain Domain::ball(const std::vector<cplx>& center, double radius, GenSpace s) {
  Domain d;
  d.kind = Kind::ball;
  d.n = static_cast<int>(center.size());
  d.center = center;
  d.radius = radius;
  d.space = s;
  return d;
}

Domain Domain::sphere(const std::vector<cplx>& center, double radius, GenSpace s) {
  Domain d = ball(center, radius, s);
  d.kind = Kind::sphere;
  return d;
}

Domain Domain::annulus(cplx center, double inner, double outer, GenSpace s) {
  if (!(inner > 0.0 && outer > inner)) throw Error(ErrorCode::invalid_argument, "annulus needs 0 < inner < outer");
  Domain d = disc(center, outer, s);
  d.kind = Kind::annulus;
  d.inner_radius = inner;
  return d;
}

Domain Domain::truncated_cn(int n, double R, GenSpace s) {
  Domain d = ball(std::vector<cplx>(n, 0.0), R, s);
  d.kind = Kind::truncated_cn;
  return d;
}

Domain Domain::projective_chart(int n, GenSpace s) {
  Domain d;
  d.kind = Kind::projective_chart;
  d.n = n;
  d.space = s;
  return d;
}

Domain Domain::product(const Domain& a, const Domain& b) {
  if (a.kind == Kind::product || b.kind == Kind::product || a.space == b.space) {
    throw Error(ErrorCode::invalid_argument, "product needs two factors over different spaces");
  }
  Domain d;
  d.kind = Kind::product;
  d.n = a.n + b.n;
  d.first = std::make_shared<Domain>(a);
  d.second = std::make_shared<Domain>(b);
  return d;
}

int Domain::real_dimension() const {
  switch (kind) {
    case Kind::sphere: return 2 * n - 1;
    case Kind::product: return first->real_dimension() + second->real_dimension();
    default: return 2 * n;
  }
}

bool Domain::is_flat() const { return kind != Kind::projective_chart && kind != Kind::product; }

bool Domain::has_boundary() const {
  return kind == Kind::disc || kind == Kind::ball || kind == Kind::annulus || kind == Kind::truncated_cn;
}

std::vector<Domain> Domain::boundary() const {
  if (!has_boundary()) return {};
  Domain outer = sphere(center, radius, space);
  outer.orientation = orientation;
  if (kind != Kind::annulus) return {outer};
  Domain inner = sphere(center, inner_radius, space);
  inner.orientation = -orientation;
  return {outer, inner};
}

namespace {

Space coordinate_space(GenSpace s) { return s == GenSpace::main ? Space::zeta : Space::zeta_tilde; }
Space fixed_space(GenSpace s) { return s == GenSpace::main ? Space::z : Space::z_tilde; }

double distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

bool Domain::contains(const Point& z, double margin) const {
  if (kind == Kind::projective_chart) return true;
  if (kind == Kind::product) return first->contains(z, margin) && second->contains(z, margin);
  const auto& v = z.values(fixed_space(space));
  if (static_cast<int>(v.size()) < n) return false;
  std::vector<cplx> p(v.begin(), v.begin() + n);
  double d = distance(p, center);
  double tol = margin * radius;
  if (kind == Kind::sphere) return std::abs(d - radius) <= tol;
  if (kind == Kind::annulus) return d > inner_radius + tol && d < radius - tol;
  return d < radius - tol;
}

Domain Domain::with_radius(double R) const {
  if (!is_flat()) throw Error(ErrorCode::invalid_argument, "with_radius needs a flat domain");
  Domain d = *this;
  d.radius = R;
  return d;
}

Domain Domain::reversed() const {
  Domain d = *this;
  d.orientation = -orientation;
  return d;
}

int thread_count() {
  if (const char* env = std::getenv("KOPPELMAN_THREADS")) {
    int t = std::atoi(env);
    if (t >= 1) return t;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

NumForm add(const NumForm& a, const NumForm& b) {
  NumForm out = a;
  for (const auto& [m, v] : b) out[m] += v;
  return out;
}

NumForm scale(const NumForm& a, cplx s) {
  NumForm out = a;
  for (auto& [m, v] : out) v *= s;
  return out;
}

// ---- parametrizations ------------------------------------------------------

namespace {

double real_det(std::vector<double> a, int d) {
  double det = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r) {
      if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
    }
    if (a[piv * d + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int k = 0; k < d; ++k) std::swap(a[c * d + k], a[piv * d + k]);
      det = -det;
    }
    det *= a[c * d + c];
    for (int r = c + 1; r < d; ++r) {
      double f = a[r * d + c] / a[c * d + c];
      for (int k = c; k < d; ++k) a[r * d + k] -= f * a[c * d + k];
    }
  }
  return det;
}

cplx complex_det(cplx* a, int d) {
  cplx det = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r) {
      if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) piv = r;
    }
    if (a[piv * d + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int k = 0; k < d; ++k) std::swap(a[c * d + k], a[piv * d + k]);
      det = -det;
    }
    det *= a[c * d + c];
    for (int r = c + 1; r < d; ++r) {
      cplx f = a[r * d + c] / a[c * d + c];
      for (int k = c; k < d; ++k) a[r * d + k] -= f * a[c * d + k];
    }
  }
  return det;
}

// Unit sphere in C^n: n = 1 by angle, n = 2 by Hopf coordinates.
void sphere_point(int n, const double* a, cplx* w, cplx* dw) {
  if (n == 1) {
    w[0] = std::polar(1.0, a[0]);
    dw[0] = cplx(0, 1) * w[0];
    return;
  }
  double c = std::cos(a[0]), s = std::sin(a[0]);
  cplx e1 = std::polar(1.0, a[1]), e2 = std::polar(1.0, a[2]);
  w[0] = c * e1;
  w[1] = s * e2;
  dw[0] = -s * e1;
  dw[1] = cplx(0, c) * e1;
  dw[2] = 0.0;
  dw[3] = c * e2;
  dw[4] = 0.0;
  dw[5] = cplx(0, s) * e2;
}

std::vector<Rule1D> sphere_axes(int n, int points) {
  if (n == 1) return {periodic_trapezoid(points, 0.0, 2.0 * kPi)};
  if (n == 2) {
    return {gauss_legendre(points, 0.0, 0.5 * kPi), periodic_trapezoid(points, 0.0, 2.0 * kPi),
            periodic_trapezoid(points, 0.0, 2.0 * kPi)};
  }
  throw Error(ErrorCode::invalid_argument, "sphere parametrization only for n <= 2");
}

struct Patch {
  GenSpace space = GenSpace::main;
  int coords = 0;
  std::vector<Rule1D> axes;
  int sign = 1;

  virtual ~Patch() = default;
  int dims() const { return static_cast<int>(axes.size()); }
  // jac[c * dims + k] = d coordinate c / d parameter k.
  virtual void map(const double* t, cplx* zeta, cplx* jac) const = 0;
  // Real Jacobian determinant of the local coordinates at a generic parameter.
  virtual double probe() const = 0;

  std::vector<double> generic_params() const {
    std::vector<double> t;
    for (const auto& ax : axes) {
      double lo = ax.nodes.front(), hi = ax.nodes.back();
      t.push_back(lo + 0.37 * (hi - lo));
    }
    return t;
  }
};

double jac_det(const std::vector<cplx>& jac, int coords, int dims, const std::vector<double>* first_col) {
  // rows: Re/Im of each coordinate; columns: optional extra column, then params
  int d = 2 * coords;
  int off = first_col ? 1 : 0;
  std::vector<double> m(d * d, 0.0);
  for (int c = 0; c < coords; ++c) {
    if (first_col) {
      m[(2 * c) * d] = (*first_col)[2 * c];
      m[(2 * c + 1) * d] = (*first_col)[2 * c + 1];
    }
    for (int k = 0; k < dims && k + off < d; ++k) {
      m[(2 * c) * d + k + off] = jac[c * dims + k].real();
      m[(2 * c + 1) * d + k + off] = jac[c * dims + k].imag();
    }
  }
  return real_det(m, d);
}

// Star-shaped parametrization of a ball from an interior pole:
// ζ = p + r ω, r = ε + ρ (t(ω) − ε), t(ω) the distance to the sphere.
struct SolidPatch : Patch {
  int n;
  std::vector<cplx> center, pole;
  double radius, eps;

  SolidPatch(int n_, std::vector<cplx> c, double a, std::vector<cplx> p, double e, int points)
      : n(n_), center(std::move(c)), pole(std::move(p)), radius(a), eps(e) {
    coords = n;
    axes.push_back(gauss_legendre(points, 0.0, 1.0));
    for (auto& ax : sphere_axes(n, points)) axes.push_back(std::move(ax));
  }

  void map(const double* t, cplx* zeta, cplx* jac) const override {
    const int na = 2 * n - 1, d = dims();
    cplx w[2], dw[6];
    sphere_point(n, t + 1, w, dw);
    double wv2 = 0.0, b = 0.0;
    cplx q[2];
    for (int j = 0; j < n; ++j) {
      cplx v = pole[j] - center[j];
      wv2 += std::norm(v);
      b += (std::conj(v) * w[j]).real();
    }
    double reach = -b + std::sqrt(std::max(0.0, b * b - wv2 + radius * radius));
    for (int j = 0; j < n; ++j) q[j] = pole[j] - center[j] + reach * w[j];
    double denom = 0.0;
    for (int j = 0; j < n; ++j) denom += (std::conj(q[j]) * w[j]).real();
    double rho = t[0];
    double r = eps + rho * (reach - eps);
    for (int j = 0; j < n; ++j) {
      zeta[j] = pole[j] + r * w[j];
      jac[j * d] = (reach - eps) * w[j];
    }
    for (int k = 0; k < na; ++k) {
      double num = 0.0;
      for (int j = 0; j < n; ++j) num += (std::conj(q[j]) * dw[j * na + k]).real();
      double dreach = -reach * num / denom;
      for (int j = 0; j < n; ++j) jac[j * d + 1 + k] = rho * dreach * w[j] + r * dw[j * na + k];
    }
  }

  double probe() const override {
    auto t = generic_params();
    std::vector<cplx> z(coords), jac(coords * dims());
    map(t.data(), z.data(), jac.data());
    return jac_det(jac, coords, dims(), nullptr);
  }
};

struct SpherePatch : Patch {
  int n;
  std::vector<cplx> center;
  double radius;

  SpherePatch(int n_, std::vector<cplx> c, double a, int points) : n(n_), center(std::move(c)), radius(a) {
    coords = n;
    axes = sphere_axes(n, points);
  }

  void map(const double* t, cplx* zeta, cplx* jac) const override {
    const int na = dims();
    cplx w[2], dw[6];
    sphere_point(n, t, w, dw);
    for (int j = 0; j < n; ++j) {
      zeta[j] = center[j] + radius * w[j];
      for (int k = 0; k < na; ++k) jac[j * na + k] = radius * dw[j * na + k];
    }
  }

  // Induced orientation: outward normal first.
  double probe() const override {
    auto t = generic_params();
    std::vector<cplx> z(coords), jac(coords * dims());
    map(t.data(), z.data(), jac.data());
    std::vector<double> normal;
    for (int j = 0; j < n; ++j) {
      normal.push_back((z[j] - center[j]).real());
      normal.push_back((z[j] - center[j]).imag());
    }
    return jac_det(jac, coords, dims(), &normal);
  }
};

// ζ = U (1, w) with w = tan(πs/2) ω: polar coordinates in the affine chart
// around the point U e_0.
struct ProjectivePatch : Patch {
  int n;
  std::vector<cplx> U;  // (n+1) x (n+1), column-major columns U[col * (n+1) + row]

  ProjectivePatch(int n_, std::vector<cplx> u, int points) : n(n_), U(std::move(u)) {
    coords = n + 1;
    axes.push_back(gauss_legendre(points, 0.0, 1.0));
    for (auto& ax : sphere_axes(n, points)) axes.push_back(std::move(ax));
  }

  void local(const double* t, cplx* w, cplx* dwl) const {
    // dwl[j * dims + k] = d w_j / d t_k
    const int na = 2 * n - 1, d = dims();
    cplx om[2], dom[6];
    sphere_point(n, t + 1, om, dom);
    double x = 0.5 * kPi * t[0];
    double rho = std::tan(x), drho = 0.5 * kPi / (std::cos(x) * std::cos(x));
    for (int j = 0; j < n; ++j) {
      w[j] = rho * om[j];
      dwl[j * d] = drho * om[j];
      for (int k = 0; k < na; ++k) dwl[j * d + 1 + k] = rho * dom[j * na + k];
    }
  }

  void map(const double* t, cplx* zeta, cplx* jac) const override {
    const int d = dims(), m = n + 1;
    cplx w[2], dwl[8];
    local(t, w, dwl);
    for (int r = 0; r < m; ++r) {
      zeta[r] = U[r];
      for (int k = 0; k < d; ++k) jac[r * d + k] = 0.0;
      for (int j = 0; j < n; ++j) {
        cplx col = U[(j + 1) * m + r];
        zeta[r] += col * w[j];
        for (int k = 0; k < d; ++k) jac[r * d + k] += col * dwl[j * d + k];
      }
    }
  }

  double probe() const override {
    auto t = generic_params();
    cplx w[2], dwl[8];
    local(t.data(), w, dwl);
    std::vector<cplx> jac(dwl, dwl + n * dims());
    return jac_det(jac, n, dims(), nullptr);
  }
};

// Unitary with first column v/|v|.
std::vector<cplx> unitary_from(const std::vector<cplx>& v) {
  const int m = static_cast<int>(v.size());
  std::vector<std::vector<cplx>> cand;
  cand.push_back(v);
  for (int i = 0; i < m; ++i) {
    std::vector<cplx> e(m, 0.0);
    e[i] = 1.0;
    cand.push_back(e);
  }
  std::vector<std::vector<cplx>> basis;
  for (auto c : cand) {
    for (const auto& b : basis) {
      cplx ip = 0.0;
      for (int i = 0; i < m; ++i) ip += std::conj(b[i]) * c[i];
      for (int i = 0; i < m; ++i) c[i] -= ip * b[i];
    }
    double nn = 0.0;
    for (auto x : c) nn += std::norm(x);
    nn = std::sqrt(nn);
    if (nn < 1e-6) continue;
    for (auto& x : c) x /= nn;
    basis.push_back(c);
    if (static_cast<int>(basis.size()) == m) break;
  }
  std::vector<cplx> U(m * m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) U[c * m + r] = basis[c][r];
  }
  return U;
}

std::optional<std::vector<cplx>> pole_for(const QuadratureRule& rule, GenSpace s, std::size_t len) {
  if (rule.kind != QuadratureRule::Kind::polar_singularity_centered || !rule.singular_center) return std::nullopt;
  const auto& v = rule.singular_center->values(coordinate_space(s));
  if (v.size() < len) return std::nullopt;
  return std::vector<cplx>(v.begin(), v.begin() + len);
}

void build_patches(const Domain& d, const QuadratureRule& rule, int orientation,
                   std::vector<std::unique_ptr<Patch>>& out) {
  const int N = rule.points;
  std::unique_ptr<Patch> p;
  switch (d.kind) {
    case Domain::Kind::product:
      build_patches(*d.first, rule, orientation * d.orientation, out);
      build_patches(*d.second, rule, 1, out);
      return;
    case Domain::Kind::sphere:
      p = std::make_unique<SpherePatch>(d.n, d.center, d.radius, N);
      break;
    case Domain::Kind::projective_chart: {
      std::vector<cplx> v(d.n + 1, 0.0);
      v[0] = 1.0;
      if (auto pole = pole_for(rule, d.space, d.n + 1)) v = *pole;
      p = std::make_unique<ProjectivePatch>(d.n, unitary_from(v), N);
      break;
    }
    case Domain::Kind::annulus: {
      auto pole = pole_for(rule, d.space, 1);
      if (pole && std::abs((*pole)[0] - d.center[0]) > 0.0) {
        throw Error(ErrorCode::singularity_unhandled, "annulus rules are centered at the annulus center");
      }
      p = std::make_unique<SolidPatch>(1, d.center, d.radius, d.center, d.inner_radius, N);
      break;
    }
    default: {
      std::vector<cplx> pole = d.center;
      double eps = 0.0;
      if (auto pl = pole_for(rule, d.space, d.n)) {
        pole = *pl;
        eps = rule.exclusion_radius;
        if (distance(pole, d.center) + eps >= d.radius) {
          throw Error(ErrorCode::invalid_argument, "singular center must lie inside the domain");
        }
      }
      p = std::make_unique<SolidPatch>(d.n, d.center, d.radius, pole, eps, N);
      break;
    }
  }
  p->space = d.space;
  double det = p->probe();
  p->sign = (det > 0 ? 1 : -1) * d.orientation * orientation;
  out.push_back(std::move(p));
}

// ---- node generation ------------------------------------------------------

struct Layout {
  std::vector<std::unique_ptr<Patch>> patches;
  std::vector<int> coord_offset, param_offset;
  int coords = 0, params = 0;
  std::vector<const Rule1D*> axes;
  std::size_t total = 1;
  int sign = 1;

  Layout(const Domain& d, const QuadratureRule& rule) {
    if (rule.points < 1) throw Error(ErrorCode::invalid_argument, "points per axis must be >= 1");
    build_patches(d, rule, 1, patches);
    for (const auto& p : patches) {
      coord_offset.push_back(coords);
      param_offset.push_back(params);
      coords += p->coords;
      params += p->dims();
      sign *= p->sign;
      for (const auto& ax : p->axes) {
        axes.push_back(&ax);
        total *= ax.nodes.size();
      }
    }
  }

  // Fills parameters and the product weight of node idx.
  double decode(std::size_t idx, double* t) const {
    double w = sign;
    for (int a = params - 1; a >= 0; --a) {
      std::size_t len = axes[a]->nodes.size();
      std::size_t i = idx % len;
      idx /= len;
      t[a] = axes[a]->nodes[i];
      w *= axes[a]->weights[i];
    }
    return w;
  }

  // zeta[coords], jac[coords * params] (global parameter columns).
  void node(const double* t, cplx* zeta, cplx* jac, cplx* scratch) const {
    std::fill(jac, jac + coords * params, cplx(0.0));
    for (std::size_t p = 0; p < patches.size(); ++p) {
      const Patch& pa = *patches[p];
      int d = pa.dims();
      pa.map(t + param_offset[p], zeta + coord_offset[p], scratch);
      for (int c = 0; c < pa.coords; ++c) {
        for (int k = 0; k < d; ++k) jac[(coord_offset[p] + c) * params + param_offset[p] + k] = scratch[c * d + k];
      }
    }
  }
};

// Integrated coordinates of a domain, in patch order.
std::vector<std::pair<GenSpace, int>> coordinate_layout(const Domain& d) {
  if (d.kind == Domain::Kind::product) {
    auto a = coordinate_layout(*d.first);
    auto b = coordinate_layout(*d.second);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  int c = d.kind == Domain::Kind::projective_chart ? d.n + 1 : d.n;
  return {{d.space, c}};
}

struct GenRef {
  int coord;
  bool conj;
};

}  // namespace

// ---- integrator -------------------------------------------------------------

struct Integrator::Impl {
  Domain domain;
  int dim = 0;
  std::vector<std::pair<GenSpace, int>> layout;
  Monomial integrated = 0;
  struct Term {
    int coeff;
    int integ;
    int out;
    int sign;
  };
  std::vector<Term> terms;
  std::vector<std::vector<GenRef>> integ_gens;
  std::vector<Monomial> outs;
  Tape tape;
  std::vector<int> input_coord;  // -1 when read from the fixed point
  std::size_t discarded = 0;
  bool nonzero = false;

  int coord_of(const Generator& g) const {
    int off = 0;
    for (const auto& [s, c] : layout) {
      if (s == g.space) return g.index < c ? off + g.index : -1;
      off += c;
    }
    return -1;
  }
};

Integrator::Integrator(const Form& density, const Domain& domain) : impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.domain = domain;
  im.dim = domain.real_dimension();
  im.layout = coordinate_layout(domain);
  for (const auto& [s, c] : im.layout) {
    for (int i = 0; i < kMaxGenIndex; ++i) {
      im.integrated |= bit(d_zeta(i, s)) | bit(d_zetabar(i, s));
    }
  }
  im.nonzero = !density.is_zero();
  std::vector<Expr> coeffs;
  std::map<Monomial, int> integ_slot, out_slot;
  for (const auto& [m, c] : density.terms()) {
    Monomial integ = m & im.integrated, rest = m & ~im.integrated;
    if (degree(integ) != im.dim) {
      ++im.discarded;
      continue;
    }
    auto gens = generators(integ);
    std::vector<GenRef> refs;
    bool dead = false;
    for (const auto& g : gens) {
      int c = im.coord_of(g);
      if (c < 0) dead = true;
      refs.push_back({c, g.kind == GenKind::d_zetabar});
    }
    if (dead) continue;
    auto [ii, fi] = integ_slot.emplace(integ, static_cast<int>(im.integ_gens.size()));
    if (fi) im.integ_gens.push_back(refs);
    auto [oi, fo] = out_slot.emplace(rest, static_cast<int>(im.outs.size()));
    if (fo) im.outs.push_back(rest);
    im.terms.push_back({static_cast<int>(coeffs.size()), ii->second, oi->second, wedge_sign(rest, integ)});
    coeffs.push_back(c);
  }
  if (im.nonzero && im.terms.empty() && im.discarded > 0) {
    throw Error(ErrorCode::degree_mismatch, "no density term has degree " + std::to_string(im.dim) +
                                                " in the integrated differentials");
  }
  im.tape = Tape::compile(coeffs);
  for (const auto& v : im.tape.inputs()) {
    int coord = -1, off = 0;
    for (const auto& [s, c] : im.layout) {
      if (v.space == coordinate_space(s) && v.index < c) coord = off + v.index;
      off += c;
    }
    im.input_coord.push_back(coord);
  }
}

Integrator::~Integrator() = default;
Integrator::Integrator(Integrator&&) noexcept = default;
Integrator& Integrator::operator=(Integrator&&) noexcept = default;

bool Integrator::empty() const { return impl_->terms.empty(); }

namespace {

constexpr std::size_t kChunk = 256;

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Pole test for rules without a singular center: the density must be finite
// at ζ = z whenever z lies in the domain.
void probe_pole(const Tape& tape, const Domain& d, const Point& fixed) {
  Point p = fixed;
  for (const auto& [s, c] : coordinate_layout(d)) {
    const auto& zv = fixed.values(fixed_space(s));
    if (static_cast<int>(zv.size()) < c) return;
    p.set(coordinate_space(s), std::vector<cplx>(zv.begin(), zv.begin() + c));
  }
  if (d.kind == Domain::Kind::sphere || !d.contains(fixed)) return;
  try {
    for (cplx v : tape.eval(p)) {
      if (!finite(v)) throw Error(ErrorCode::division_by_zero, "non-finite");
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::division_by_zero) throw;
    throw Error(ErrorCode::singularity_unhandled, "density has a pole at the fixed point; use a polar rule");
  } catch (...) {
    // unbound variables are reported by the main pass
  }
}

}  // namespace

NumForm Integrator::run(const QuadratureRule& rule, const Point& fixed, IntegrationStats* stats,
                        const simd::Kernels& k) const {
  const Impl& im = *impl_;
  if (stats) {
    *stats = {};
    stats->discarded_terms = im.discarded;
    stats->kept_terms = im.terms.size();
  }
  NumForm result;
  if (im.terms.empty()) return result;
  if (rule.kind == QuadratureRule::Kind::gauss_legendre_tensor || !rule.singular_center) {
    probe_pole(im.tape, im.domain, fixed);
  }
  Layout lay(im.domain, rule);
  if (stats) stats->nodes = lay.total;

  // fixed inputs
  const auto& inputs = im.tape.inputs();
  std::vector<cplx> fixed_val(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (im.input_coord[i] >= 0) continue;
    auto v = fixed.get(inputs[i]);
    if (!v) throw Error(ErrorCode::unbound_variable, "fixed point lacks " + to_text(Expr::var(inputs[i])));
    fixed_val[i] = *v;
  }

  const std::size_t chunks = (lay.total + kChunk - 1) / kChunk;
  const std::size_t nout = im.outs.size();
  std::vector<cplx> partial(chunks * nout);

  auto work = [&](std::atomic<std::size_t>& next) {
    const int P = lay.params, C = lay.coords;
    const std::size_t nin = inputs.size(), ncoef = im.tape.output_count(), nint = im.integ_gens.size();
    std::vector<double> t(P), w(kChunk);
    std::vector<cplx> zeta(C * kChunk), jac(C * P * kChunk), scratch(C * P + 8), mat(P * P);
    std::vector<double> in_re(nin * kChunk), in_im(nin * kChunk), out_re(ncoef * kChunk), out_im(ncoef * kChunk);
    std::vector<double> det_re(nint * kChunk), det_im(nint * kChunk);
    Tape::Workspace ws;
    for (;;) {
      std::size_t ch = next.fetch_add(1);
      if (ch >= chunks) return;
      std::size_t begin = ch * kChunk, lanes = std::min(kChunk, lay.total - begin);
      for (std::size_t l = 0; l < lanes; ++l) {
        w[l] = lay.decode(begin + l, t.data());
        lay.node(t.data(), &zeta[l * C], &jac[l * C * P], scratch.data());
        for (std::size_t m = 0; m < nint; ++m) {
          const auto& refs = im.integ_gens[m];
          for (int r = 0; r < P; ++r) {
            const cplx* row = &jac[(l * C + refs[r].coord) * P];
            for (int c = 0; c < P; ++c) mat[r * P + c] = refs[r].conj ? std::conj(row[c]) : row[c];
          }
          cplx det = complex_det(mat.data(), P);
          det_re[m * kChunk + l] = det.real();
          det_im[m * kChunk + l] = det.imag();
        }
      }
      for (std::size_t i = 0; i < nin; ++i) {
        double* re = &in_re[i * lanes];
        double* imv = &in_im[i * lanes];
        int c = im.input_coord[i];
        if (c < 0) {
          k.broadcast(fixed_val[i], re, imv, lanes);
        } else {
          for (std::size_t l = 0; l < lanes; ++l) {
            re[l] = zeta[l * C + c].real();
            imv[l] = zeta[l * C + c].imag();
          }
        }
      }
      try {
        im.tape.eval_batch(in_re.data(), in_im.data(), lanes, out_re.data(), out_im.data(), ws, k);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::division_by_zero) throw;
        throw Error(ErrorCode::singularity_unhandled, "quadrature node hit a pole of the density");
      }
      cplx* acc = &partial[ch * nout];
      for (const auto& term : im.terms) {
        cplx v = k.weighted_dot(&out_re[term.coeff * lanes], &out_im[term.coeff * lanes], &det_re[term.integ * kChunk],
                                &det_im[term.integ * kChunk], w.data(), lanes);
        acc[term.out] += static_cast<double>(term.sign) * v;
      }
    }
  };

  std::atomic<std::size_t> next{0};
  int threads = std::min<std::size_t>(thread_count(), chunks);
  if (threads <= 1) {
    work(next);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        try {
          work(next);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = chunks;
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  // fixed pairwise tree over chunks
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t c = 0; c + stride < chunks; c += 2 * stride) {
      for (std::size_t o = 0; o < nout; ++o) partial[c * nout + o] += partial[(c + stride) * nout + o];
    }
  }
  for (std::size_t o = 0; o < nout; ++o) {
    cplx v = partial[o];
    if (!finite(v)) throw Error(ErrorCode::singularity_unhandled, "integral is not finite");
    result[im.outs[o]] = v;
  }
  return result;
}

Form top_degree_part(const Form& density, const Domain& domain) {
  Monomial integrated = 0;
  for (const auto& [s, c] : coordinate_layout(domain)) {
    for (int i = 0; i < kMaxGenIndex; ++i) integrated |= bit(d_zeta(i, s)) | bit(d_zetabar(i, s));
  }
  Form::Terms keep;
  for (const auto& [m, c] : density.terms()) {
    if (degree(m & integrated) == domain.real_dimension()) keep.emplace(m, c);
  }
  return Form::from_terms(std::move(keep), density.ambient());
}

NumForm integrate(const Form& density, const Domain& domain, const QuadratureRule& rule, const Point& fixed,
                  IntegrationStats* stats) {
  return Integrator(density, domain).run(rule, fixed, stats);
}

std::vector<QuadNode> materialize(const Domain& domain, const QuadratureRule& rule) {
  Layout lay(domain, rule);
  auto layout = coordinate_layout(domain);
  std::vector<VarId> coords;
  for (const auto& [s, c] : layout) {
    for (int i = 0; i < c; ++i) coords.push_back({coordinate_space(s), i, false});
  }
  std::vector<QuadNode> out;
  out.reserve(lay.total);
  std::vector<double> t(lay.params);
  std::vector<cplx> zeta(lay.coords), jac(lay.coords * lay.params), scratch(lay.coords * lay.params + 8);
  for (std::size_t i = 0; i < lay.total; ++i) {
    QuadNode q;
    q.weight = lay.decode(i, t.data());
    lay.node(t.data(), zeta.data(), jac.data(), scratch.data());
    q.coords = coords;
    q.jac.assign(lay.coords, std::vector<cplx>(lay.params));
    for (int c = 0; c < lay.coords; ++c) {
      q.point.set(coords[c].space, coords[c].index, zeta[c]);
      for (int k = 0; k < lay.params; ++k) q.jac[c][k] = jac[c * lay.params + k];
    }
    out.push_back(std::move(q));
  }
  return out;
}

cplx pullback(const QuadNode& node, Monomial m) {
  auto gens = generators(m);
  const int d = node.jac.empty() ? 0 : static_cast<int>(node.jac[0].size());
  if (static_cast<int>(gens.size()) != d) return 0.0;
  std::vector<cplx> mat(d * d);
  for (int r = 0; r < d; ++r) {
    const Generator& g = gens[r];
    if (g.kind != GenKind::d_zeta && g.kind != GenKind::d_zetabar) return 0.0;
    Space s = coordinate_space(g.space);
    auto it = std::find(node.coords.begin(), node.coords.end(), VarId{s, g.index, false});
    if (it == node.coords.end()) return 0.0;
    const auto& row = node.jac[it - node.coords.begin()];
    for (int c = 0; c < d; ++c) mat[r * d + c] = g.kind == GenKind::d_zetabar ? std::conj(row[c]) : row[c];
  }
  return complex_det(mat.data(), d);
}

}  // namespace koppelman
