#pragma once

// Vanishing of H^{p,q}(P^n, L^r) and H^{0,q}(P^n x P^m, L^k ⊗ L^l) through the
// P term of the Koppelman formula, and dbar-solving with obstruction pairings.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "koppelman/quadrature.hpp"

namespace koppelman {

struct CohomologyCase {
  Ambient space = Ambient::pn_space(1);
  int p = 0, q = 0;
  int r = 0;         // P^n
  int k = 0, l = 0;  // P^n x P^m, (0,q)-forms only

  static CohomologyCase pn(int n, int p, int q, int r);
  static CohomologyCase product(int n, int m, int q, int k, int l);
  std::string name() const;
};

struct Classification {
  enum class Verdict { trivial, nontrivial, unknown };
  Verdict verdict = Verdict::unknown;
  std::optional<char> letter;  // first of a, d, e, b, c that applies
  std::vector<char> letters;   // every letter that applies, alphabetical
};

const char* verdict_name(Classification::Verdict v);

// Pure predicate on the published case list; never returns nontrivial.
Classification classify(const CohomologyCase& c);

// ∂̄_z g = (z·ζ̄)^r ω_z^p with ω_z = ∂̄∂ log|z|² and
// g = (ζ̄·z)^{r-1} [(ζ̄·z) ∂|z|²/|z|² − ζ̄·dz] ∧ ω_z^{p-1}.
struct ExactnessCertificate {
  Form g;
  Form target;
  double dbar_residual = 0.0;        // max |∂̄_z g − target|
  double projective_residual = 0.0;  // max |ι_{z·∂/∂z} g|
  bool verified = false;             // both < 1e-10
};

// Requires case a) parameters (q = p ≠ 0, n and r > 0), else CaseMismatch.
ExactnessCertificate exactness_certificate(int n, int p, int q, int r, int samples = 50, std::uint64_t seed = 1);
// The same primitive for any 1 <= p <= n, r > 0; used for the endpoint
// cases of b) and c).
ExactnessCertificate primitive_certificate(int n, int p, int r, int samples = 50, std::uint64_t seed = 1);

// Largest relative spread, over random ζ, of C(ζ, z)_m / T(z)_{m ∩ z} as z
// varies; 0 when C = T ∧ (something in ζ alone).
double z_factor_spread(const Form& C, const Form& T, int n, int samples = 20, std::uint64_t seed = 1);

struct MechanismCheck {
  enum class Kind { degree_count, exact_factor, fubini };
  char letter = '?';
  Kind kind = Kind::degree_count;
  bool dual = false;       // pairs against P_{n-p,-r}
  int kernel_p = 0, kernel_r = 0;
  int z_p = 0, z_q = 0;    // z-bidegree inspected
  bool passed = false;
  double residual = 0.0;   // exactness certificate and factor residual
  std::string detail;
};

const char* mechanism_kind_name(MechanismCheck::Kind k);

// Runs the proof mechanism behind the given letter (the primary one when
// omitted). CaseMismatch when the letter does not apply.
MechanismCheck check_mechanism(const CohomologyCase& c, std::optional<char> letter = std::nullopt,
                               std::uint64_t seed = 1);

// ∫_z φ(z) ∧ P(ζ, z) at the point zeta (values in Space::zeta); φ lives in
// z-variables with twist opposite to the kernel's z-twist.
struct DualPairing {
  NumForm form;  // in ζ differentials
  cplx value;    // largest coefficient
};

DualPairing serre_dual_pair(const Form& phi_dual, const KernelPair& pair, const Point& zeta, int points = 32);

// Holomorphic representatives of the Serre-dual group H^{n-p,0}(P^n, L^{-r})
// for q = n and p in {0, n}: monomials f of the right degree, times the Euler
// form Σ(−1)^i ζ_i dζ_0..^..dζ_n when p = 0. Empty otherwise.
std::vector<Form> dual_holomorphic_basis(int n, int p, int q, int r);

// ∫_{P^n} φ∧ψ on the projective chart, with the cancellation ratio
// |∫ φ∧ψ| / ∫ |φ∧ψ| (1 for a positive density, 0 for an exact one).
struct ClassPairing {
  cplx value{};
  double ratio = 0.0;
};

ClassPairing class_pairing(const Form& phi, const Form& psi, int n, int points = 32);

// Sample input for a P^n case. Vanishing groups with q >= 1 get ∂̄σ for an
// explicit (p,q-1)-form σ = h ω^m ∧ θ.. ∧ θ̄.. (θ_0j = ζ_0dζ_j − ζ_jdζ_0).
// Unknown cases get a candidate class: conj(f) conj(Ω)/|ζ|^{2(d+n+1)} (q = n,
// p = 0), conj(f) ω^p/|ζ|^{2d} (p = q, r <= 0), ζ_0^r or ζ_0^{r-n-1}Ω (q = 0).
// nullopt when neither applies.
struct Representative {
  Form phi;
  std::optional<Form> primitive;  // σ for exact inputs
  std::string kind;               // "exact" or "candidate"
};

std::optional<Representative> representative(int n, int p, int q, int r);

struct SolveOptions {
  int points = 32;
  int max_points = 128;      // mesh escalation before declaring obstruction
  double tolerance = 1e-3;   // ∂̄ residual
  double pairing_tolerance = 1e-8;
  double obstruction_threshold = 0.1;
  double closed_tolerance = 1e-8;
  std::uint64_t seed = 1;
};

struct ObstructionResult {
  enum class Verdict { solved, obstructed, inconclusive };
  cplx p_pairing{};                   // largest P-term coefficient over the grid
  double p_pairing_normalized = 0.0;  // |pairing| / |φ| at the same point
  // Against the dual basis (q = n); the verdict uses this when available.
  std::optional<ClassPairing> class_pairing;
  std::vector<std::pair<Point, NumForm>> dbar_solution;  // potential at grid points
  double residual = 0.0;
  int points = 0;
  bool dual_mode = false;
  Verdict verdict = Verdict::inconclusive;
};

const char* verdict_name(ObstructionResult::Verdict v);

// Throws NotClosed when |∂̄φ| exceeds closed_tolerance at random points.
void require_closed(const Form& phi, const Ambient& a, double tol = 1e-8, std::uint64_t seed = 1);

// Flat: pair is a C^n kernel and domain a disc or ball; grid points are
// interior. Projective: the domain is the whole chart. The pointwise P term is
// a class invariant only for q = 0; for q = n the class pairing decides.
// When the twist needs the dual kernel (DualityRequired), solve_dbar_dual
// takes P_{n-p,-r} and never reports solved (no potential is computed).
ObstructionResult solve_dbar(const Form& phi, const KernelPair& pair, const Domain& domain,
                             const std::vector<Point>& grid, const SolveOptions& opt = {});
ObstructionResult solve_dbar_dual(const Form& phi, const KernelPair& dual_pair, const std::vector<Point>& grid,
                                  const SolveOptions& opt = {});

// Convenience front end over the two above for P^n inputs.
ObstructionResult solve_on_pn(const Form& phi, int n, int p, int r, const std::vector<Point>& grid,
                              const SolveOptions& opt = {});

}  // namespace koppelman
