#pragma once

// Oriented integration of Form densities over discs, balls, spheres and
// projective charts, and assembly of the four Koppelman terms.
//
// Measure convention: dzeta ∧ dzetabar = -2i dx ∧ dy. A density term is read as
// rest ∧ (integrated part), so ∫ rest ∧ top = rest · ∫ top.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "koppelman/form.hpp"
#include "koppelman/kernels.hpp"
#include "koppelman/simd.hpp"

namespace koppelman {

struct Rule1D {
  std::vector<double> nodes, weights;
};

// Newton iteration on P_n; nodes ascending.
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);
// n equispaced nodes on [a, b), equal weights.
Rule1D periodic_trapezoid(int n, double a, double b);

struct Domain {
  enum class Kind { disc, ball, sphere, annulus, truncated_cn, projective_chart, product };
  Kind kind = Kind::disc;
  int n = 1;  // complex dimension (sphere: of the ambient C^n)
  std::vector<cplx> center;
  double radius = 1.0;
  double inner_radius = 0.0;  // annulus
  GenSpace space = GenSpace::main;
  int orientation = 1;
  std::shared_ptr<const Domain> first, second;  // product

  static Domain disc(cplx center, double radius, GenSpace s = GenSpace::main);
  static Domain ball(const std::vector<cplx>& center, double radius, GenSpace s = GenSpace::main);
  static Domain sphere(const std::vector<cplx>& center, double radius, GenSpace s = GenSpace::main);
  static Domain circle(cplx center, double radius, GenSpace s = GenSpace::main) {
    return sphere({center}, radius, s);
  }
  static Domain annulus(cplx center, double inner, double outer, GenSpace s = GenSpace::main);
  static Domain truncated_cn(int n, double R, GenSpace s = GenSpace::main);
  static Domain projective_chart(int n, GenSpace s = GenSpace::main);
  static Domain product(const Domain& a, const Domain& b);

  int real_dimension() const;
  bool is_flat() const;
  bool has_boundary() const;
  // Oriented boundary pieces (annulus: outer circle and reversed inner circle).
  std::vector<Domain> boundary() const;
  // Strict interior test with a relative margin; projective charts contain everything.
  bool contains(const Point& z, double margin = 1e-9) const;
  Domain with_radius(double R) const;
  Domain reversed() const;
};

struct QuadratureRule {
  enum class Kind { gauss_legendre_tensor, polar_singularity_centered };
  Kind kind = Kind::gauss_legendre_tensor;
  int points = 32;  // per axis
  // Values in Space::zeta (and zeta_tilde); homogeneous on projective charts.
  std::optional<Point> singular_center;
  double exclusion_radius = 0.0;

  static QuadratureRule tensor(int points) { return {Kind::gauss_legendre_tensor, points, std::nullopt, 0.0}; }
  static QuadratureRule polar(int points, const Point& center, double eps = 0.0) {
    return {Kind::polar_singularity_centered, points, center, eps};
  }
};

struct IntegrationStats {
  std::size_t nodes = 0;
  std::size_t kept_terms = 0;
  std::size_t discarded_terms = 0;  // wrong degree in the integrated generators
};

// Number of worker threads; KOPPELMAN_THREADS overrides the hardware count.
int thread_count();

// A density compiled once against a domain and integrated for many fixed points.
class Integrator {
 public:
  Integrator(const Form& density, const Domain& domain);
  ~Integrator();
  Integrator(Integrator&&) noexcept;
  Integrator& operator=(Integrator&&) noexcept;

  NumForm run(const QuadratureRule& rule, const Point& fixed, IntegrationStats* stats = nullptr,
              const simd::Kernels& k = simd::active()) const;
  bool empty() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Terms whose degree in the integrated differentials equals the domain dimension.
Form top_degree_part(const Form& density, const Domain& domain);

// Throws DegreeMismatch when a nonzero density has no term of the domain's
// dimension, SingularityUnhandled on a pole without a polar rule.
NumForm integrate(const Form& density, const Domain& domain, const QuadratureRule& rule, const Point& fixed,
                  IntegrationStats* stats = nullptr);

// Materialized nodes for iterated integrals and tests.
struct QuadNode {
  Point point;     // integrated coordinates
  double weight;   // includes orientation
  // jac[c][k]: d coordinate c / d parameter k; coordinates listed in `coords`.
  std::vector<std::vector<cplx>> jac;
  std::vector<VarId> coords;
};

std::vector<QuadNode> materialize(const Domain& domain, const QuadratureRule& rule);
// Pullback of a monomial in the integrated differentials to the parameters.
cplx pullback(const QuadNode& node, Monomial m);

NumForm add(const NumForm& a, const NumForm& b);
NumForm scale(const NumForm& a, cplx s);

// ---- Koppelman assembly -------------------------------------------------

struct KoppelmanOptions {
  double h = 1e-4;
  // Differentiate the kernel instead of the computed potential; flat
  // translation-invariant kernels only.
  bool symbolic_dbar = false;
};

struct KoppelmanTerms {
  NumForm boundary;
  NumForm dbar_phi;
  NumForm potential;         // ∫_D K ∧ φ before ∂̄_z
  NumForm dbar_z_potential;
  NumForm p_term;
  NumForm phi_at_z;
  double residual = 0.0;     // max |sum of terms - φ(z)|
  int points = 0;
};

// φ evaluated at ζ = z with dζ -> dz (and the tilde analogue).
NumForm restrict_to_diagonal(const Form& phi, const Point& z);

// ∂̄ in z of a sampled form by central differences of step h.
NumForm finite_difference_dbar(const std::function<NumForm(const Point&)>& u, const Point& z, const Ambient& a,
                               double h);

KoppelmanTerms koppelman_eval(const Form& phi, const KernelPair& pair, const Domain& domain, const Point& z,
                              const QuadratureRule& rule, const KoppelmanOptions& opt = {});

struct ConvergenceSetup {
  Form phi;
  KernelPair pair;
  Domain domain;
  Point z;
  QuadratureRule rule;
  KoppelmanOptions options;
};

struct MeshStep {
  int points = 32;
  std::optional<double> radius;
};

struct ConvergencePoint {
  int points = 0;
  double radius = 0.0;
  double residual = 0.0;
  double boundary = 0.0;  // max |boundary term|
  double runtime_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<ConvergencePoint> steps;
  bool residual_monotone = true;
  bool boundary_monotone = true;
};

ConvergenceTrace convergence_study(const ConvergenceSetup& setup, const std::vector<MeshStep>& mesh);

}  // namespace koppelman
