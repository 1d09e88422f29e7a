#pragma once

// Graded anticommutative algebra over dzeta, dzetabar, dz, dzbar, e, e*.
// A monomial is a bitmask over generator codes; bit order is the canonical
// generator order (space, kind, index), so a mask is its own sorted list.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "koppelman/expr.hpp"

namespace koppelman {

enum class GenKind : std::uint8_t { d_zeta = 0, d_zetabar = 1, d_z = 2, d_zbar = 3, e = 4, e_star = 5 };
enum class GenSpace : std::uint8_t { main = 0, tilde = 1 };

inline constexpr int kGenKinds = 6;
inline constexpr int kMaxGenIndex = 5;

struct Generator {
  GenKind kind = GenKind::d_zeta;
  int index = 0;
  GenSpace space = GenSpace::main;

  int code() const;
  static Generator from_code(int code);
  friend bool operator==(const Generator&, const Generator&) = default;
};

inline Generator d_zeta(int i, GenSpace s = GenSpace::main) { return {GenKind::d_zeta, i, s}; }
inline Generator d_zetabar(int i, GenSpace s = GenSpace::main) { return {GenKind::d_zetabar, i, s}; }
inline Generator d_z(int i, GenSpace s = GenSpace::main) { return {GenKind::d_z, i, s}; }
inline Generator d_zbar(int i, GenSpace s = GenSpace::main) { return {GenKind::d_zbar, i, s}; }
inline Generator e_gen(int i, GenSpace s = GenSpace::main) { return {GenKind::e, i, s}; }
inline Generator e_star(int i, GenSpace s = GenSpace::main) { return {GenKind::e_star, i, s}; }

using Monomial = std::uint64_t;

Monomial bit(const Generator& g);
std::vector<Generator> generators(Monomial m);
int degree(Monomial m);
// Sign of [a] ∧ [b] relative to [a | b]; 0 if they overlap.
int wedge_sign(Monomial a, Monomial b);

// Differential generator paired with a variable: zeta-bar -> dzetabar, etc.
Generator differential_of(VarId v);

struct Ambient {
  enum class Kind : std::uint8_t { unspecified, cn, pn, pn_x_pm };
  Kind kind = Kind::unspecified;
  int n = 0;
  int m = 0;

  static Ambient cn_space(int n) { return {Kind::cn, n, 0}; }
  static Ambient pn_space(int n) { return {Kind::pn, n, 0}; }
  static Ambient product_space(int n, int m) { return {Kind::pn_x_pm, n, m}; }
  friend bool operator==(const Ambient&, const Ambient&) = default;
};

std::string to_string(const Ambient& a);

class Form {
 public:
  using Terms = std::map<Monomial, Expr>;

  Form() = default;
  Form(const Expr& scalar);  // NOLINT(google-explicit-constructor)
  Form(cplx c) : Form(Expr(c)) {}  // NOLINT(google-explicit-constructor)
  Form(double c) : Form(Expr(c)) {}  // NOLINT(google-explicit-constructor)
  Form(int c) : Form(Expr(c)) {}  // NOLINT(google-explicit-constructor)

  static Form gen(const Generator& g, const Expr& coeff = Expr(1.0));
  // coeff * g0 ∧ g1 ∧ ... in the given order (sign computed).
  static Form monomial(const std::vector<Generator>& gens, const Expr& coeff = Expr(1.0));
  static Form from_terms(Terms terms, Ambient ambient = {});

  const Terms& terms() const { return terms_; }
  const Ambient& ambient() const { return ambient_; }
  Form with_ambient(const Ambient& a) const;

  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  Expr coefficient(Monomial m) const;
  Expr scalar() const { return coefficient(0); }
  // Every term has the same total degree; returns it, or -1 when mixed/zero.
  int pure_degree() const;

  Form& operator+=(const Form& o);
  Form& operator-=(const Form& o);
  friend Form operator+(Form a, const Form& b) { return a += b; }
  friend Form operator-(Form a, const Form& b) { return a -= b; }
  friend Form operator-(const Form& a);
  friend Form operator*(const Expr& c, const Form& f);
  friend Form operator*(const Form& f, const Expr& c) { return c * f; }

 private:
  void add_term(Monomial m, const Expr& c);

  Terms terms_;
  Ambient ambient_;
};

Ambient merge_ambient(const Ambient& a, const Ambient& b);

Form wedge(const Form& a, const Form& b);
Form power(const Form& f, int k);

// Bitmask over Space values.
using SpaceSet = std::uint8_t;
inline constexpr SpaceSet kAllSpaces = 0xF;
inline constexpr SpaceSet space_bit(Space s) { return static_cast<SpaceSet>(1u << static_cast<int>(s)); }

// Antiholomorphic / holomorphic exterior derivative; new differentials are
// wedged from the left.
Form dbar(const Form& f, SpaceSet acting_on = kAllSpaces);
Form del(const Form& f, SpaceSet acting_on = kAllSpaces);

// Interior antiderivation of degree -1 sending each listed generator to its
// image and all others to 0.
struct Contraction {
  std::vector<std::pair<Generator, Expr>> images;
};

// e*_{first+j} -> eta_j.
Contraction eta_contraction(const std::vector<Expr>& eta, int first = 0, GenSpace space = GenSpace::main);
Contraction combine(const Contraction& a, const Contraction& b);

Form contract(const Form& f, const Contraction& c);
Form nabla(const Form& f, const Contraction& c, SpaceSet acting_on = kAllSpaces);

// sum_k s ∧ (dbar s)^k / (delta s)^{k+1}, k = 0 .. rank-1.
Form geometric_inverse(const Form& numerator, const Contraction& c, int rank, SpaceSet acting_on = kAllSpaces);

// Coefficient of e_i ∧ e*_i ∧ ... over the listed indices, with f on the left.
Form project_fiber(const Form& f, const std::vector<int>& indices, GenSpace space = GenSpace::main);
Form project_fiber(const Form& f, int rank);

// Replace each listed generator by a 1-form, in place in every monomial.
Form substitute(const Form& f, const std::vector<std::pair<Generator, Form>>& images);

// Exchange the roles of zeta and z (and of the tilde copies) in coefficients
// and differentials.
Form swap_roles(const Form& f);

struct Bidegree {
  std::array<int, kGenKinds> main{};
  std::array<int, kGenKinds> tilde{};
  int total(GenKind k) const { return main[static_cast<int>(k)] + tilde[static_cast<int>(k)]; }
};

Bidegree bidegree(Monomial m);

// Partial degree filter; unset fields match anything.
struct DegreeSpec {
  std::array<std::optional<int>, kGenKinds> total{};
  std::array<std::optional<int>, kGenKinds> main{};
  std::array<std::optional<int>, kGenKinds> tilde{};
  std::optional<int> form_degree;

  DegreeSpec& set(GenKind k, int d) {
    total[static_cast<int>(k)] = d;
    return *this;
  }
  DegreeSpec& set(GenKind k, GenSpace s, int d) {
    (s == GenSpace::main ? main : tilde)[static_cast<int>(k)] = d;
    return *this;
  }
  bool matches(Monomial m) const;
};

Form pick_bidegree(const Form& f, const DegreeSpec& spec);

// Coefficient homogeneity plus generator weights (dzeta counts as degree 1 in
// zeta, dzetabar in zetabar, etc.; e and e* are weightless).
std::optional<HomogeneityDegree> homogeneity(const Form& f);

using NumForm = std::map<Monomial, cplx>;
NumForm eval(const Form& f, const Point& p);
double max_abs(const NumForm& f);
NumForm operator-(const NumForm& a, const NumForm& b);
NumForm swap_roles(const NumForm& f);

std::string generator_name(const Generator& g);
std::string monomial_name(Monomial m);
// One line per term: "+ coeff ∧ gen ∧ gen".
std::string to_text(const Form& f);
// Inverse of to_text; blank lines and lines starting with '#' are skipped.
Form parse_form(std::string_view text);
Generator parse_generator(std::string_view name);

}  // namespace koppelman
