#pragma once

// Kernel and weight constructors: flat C^n (Bochner-Martinelli, CFL,
// weighted), the fiber-integral kernels of a bundle with Chern data, the
// line-bundle kernels on P^n and the (0,q) kernels on P^n x P^m.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "koppelman/form.hpp"

namespace koppelman {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kTwoPiI{0.0, 2.0 * kPi};

struct KernelPair {
  Form K;
  Form P;
  Ambient ambient;
  std::optional<std::pair<int, int>> twist;
  std::vector<std::string> weight_stack;
  std::string eta_convention;
};

// ---- flat C^n ---------------------------------------------------------

struct FlatSetup {
  int n = 0;
  std::vector<Expr> zeta, z, eta;  // eta = 2 pi i (z - zeta)
  Contraction contraction;         // e*_j -> eta_j
  Form s;                          // sum conj(eta_j) e*_j
};

FlatSetup flat_setup(int n);

struct ChernData {
  Form D_eta;
  Form Theta_tilde;
  Contraction contraction;
  std::vector<int> fiber;  // frame indices integrated by the fiber projection
  Ambient ambient;
};

ChernData flat_chern(int n);
// Dη/2πi + iΘ̃/2π
Form chern_X(const ChernData& c);
// max |∇X| over random points; it vanishes identically.
double chern_form_residual(const ChernData& c, int samples = 100, std::uint64_t seed = 1);
double dbar_theta_residual(const ChernData& c, int samples = 100, std::uint64_t seed = 1);

// K = ∫_E prefactor ∧ u ∧ g ∧ X_rank, P = ∫_E prefactor ∧ g ∧ X_rank.
KernelPair fiber_kernels(const Form& u, const ChernData& chern, const std::optional<Form>& g = std::nullopt,
                         const Form& prefactor = Form(1.0));

KernelPair bm_kernel(int n);
// Throws SupportFunctionInvalid unless |s| ≲ |η| and |δs| ≳ |η|² near the diagonal.
KernelPair cfl_kernel(const Form& s, int n, std::uint64_t seed = 1);
KernelPair weighted_flat_kernel(int n, const Form& g, const std::string& weight_name);

// ---- weights -----------------------------------------------------------

struct WeightSpec {
  enum class Kind { one_plus_nabla_q, function_of_weight, polynomial_growth, alpha_projective, alpha_product };
  Kind kind = Kind::one_plus_nabla_q;
  Form q;                               // one_plus_nabla_q
  std::vector<cplx> series;             // function_of_weight: G(λ) = Σ series[j] λ^j
  std::shared_ptr<WeightSpec> base;     // function_of_weight
  int power = 1;                        // polynomial_growth, alpha_*
  bool tilde = false;                   // alpha_product: use the second factor

  static WeightSpec one_plus_nabla(const Form& q);
  static WeightSpec function_of(const std::vector<cplx>& series, const WeightSpec& base);
  static WeightSpec polynomial_growth(int k);
  static WeightSpec alpha_projective(int power);
  static WeightSpec alpha_product(int power, bool tilde);
  std::string name() const;
};

// The contraction δ_η used for weights in the given ambient.
Contraction ambient_contraction(const Ambient& a);

struct WeightCheck {
  double nabla_max = 0.0;     // max over samples and components of |∇g|
  double diagonal_err = 0.0;  // max |g_00(z,z) - 1|
};

WeightCheck check_weight(const Form& g, const Ambient& a, int samples = 100, std::uint64_t seed = 1);

// Realizes the weight and checks both axioms (∇g < 1e-10, g_00(z,z) = 1 to 1e-12).
Form weight(const WeightSpec& spec, const Ambient& a, std::uint64_t seed = 1);

// G(g) = Σ_k G^(k)(g_0) N^k / k! with g_0 the scalar part and N = g - g_0.
Form function_of_weight(const std::vector<cplx>& series, const Form& g);

// ---- P^n -------------------------------------------------------------

struct PnGeometry {
  int n = 0;
  cplx c;                         // η = c z·e
  std::vector<Expr> zeta, z;      // homogeneous, indices 0..n
  Contraction contraction;        // e*_i -> c z_i
  Expr delta_s;                   // δ_η s
  Form s, sigma, alpha, beta, A;  // A = ζ·e ∧ ζ̄·e*/|ζ|²
  Form u;                         // s/∇s
  ChernData chern;
};

PnGeometry pn_geometry(int n);

// Requires 0 <= p <= n and n - p + r >= 0 (else DualityRequired).
KernelPair pn_kernels(int n, int p, int r);

// ---- P^n x P^m ---------------------------------------------------------

struct ProductGeometry {
  int n = 0, m = 0;
  cplx c;
  Contraction contraction;  // dζ_i -> c z_i, dζ̃_i -> c z̃_i
  Form s, alpha, alpha_tilde, u;
};

ProductGeometry product_geometry(int n, int m);
KernelPair product_kernels(int n, int m, int k, int l);

// ---- sampling and diagnostics ----------------------------------------

// Random point for the ambient; with diagonal set, z (and z̃) equal ζ (and ζ̃).
Point sample_point(const Ambient& a, std::mt19937_64& rng, bool diagonal = false);

// Least-squares slope of log ||f|| against log t along ζ = z + t·dir.
double decay_exponent(const Form& f, const Point& base, const std::vector<cplx>& dir, const std::vector<double>& ts);

double coefficient_norm(const NumForm& f);

}  // namespace koppelman
