#pragma once

// Scalar expressions in the homogeneous/affine variables zeta, z (and the
// tilde copies used on product spaces), with Wirtinger differentiation.
//
// Expressions are immutable DAGs. Construction canonicalizes: sums and
// products are flattened, constants folded, and conj is pushed down to the
// leaves, so a variable and its conjugate are distinct leaves.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koppelman/error.hpp"

namespace koppelman {

using cplx = std::complex<double>;

enum class Space : std::uint8_t { zeta = 0, z = 1, zeta_tilde = 2, z_tilde = 3 };
inline constexpr int kSpaceCount = 4;

std::string_view space_name(Space s);

struct VarId {
  Space space = Space::zeta;
  int index = 0;
  bool conjugated = false;

  VarId base() const { return {space, index, false}; }
  VarId conj() const { return {space, index, !conjugated}; }
  friend bool operator==(const VarId&, const VarId&) = default;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

/// Assignment of base (holomorphic) variables to complex values. Conjugated
/// variables read the conjugate of their base value.
class Point {
 public:
  void set(Space s, int index, cplx value);
  void set(Space s, const std::vector<cplx>& values);
  std::optional<cplx> get(VarId v) const;
  const std::vector<cplx>& values(Space s) const { return values_[static_cast<int>(s)]; }
  std::vector<cplx>& values(Space s) { return values_[static_cast<int>(s)]; }

 private:
  std::array<std::vector<cplx>, kSpaceCount> values_;
  std::array<std::vector<bool>, kSpaceCount> bound_;
};

enum class NodeKind : std::uint8_t { constant, variable, add, mul, div, pow, conj };

struct Node;

class Expr {
 public:
  Expr();  // constant zero
  Expr(cplx c);  // NOLINT(google-explicit-constructor)
  Expr(double c) : Expr(cplx{c, 0.0}) {}  // NOLINT(google-explicit-constructor)
  Expr(int c) : Expr(cplx{static_cast<double>(c), 0.0}) {}  // NOLINT(google-explicit-constructor)

  static Expr var(VarId v);
  static Expr var(Space s, int index, bool conjugated = false) { return var(VarId{s, index, conjugated}); }

  const Node& node() const { return *node_; }
  const Node* id() const { return node_.get(); }

  bool is_constant() const;
  bool is_zero() const;
  bool is_one() const;
  std::optional<cplx> constant_value() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind = NodeKind::constant;
  cplx value{};
  VarId var{};
  int exponent = 0;
  std::vector<Expr> args;
  std::size_t hash = 0;
};

Expr sum(std::vector<Expr> terms);
Expr product(std::vector<Expr> factors);
Expr pow(const Expr& base, int exponent);
Expr conj(const Expr& e);
/// Squared norm sum_j |v_j|^2 as an expression.
Expr norm2(const std::vector<Expr>& v);
/// Bilinear dot sum_j a_j b_j (no conjugation).
Expr dot(const std::vector<Expr>& a, const std::vector<Expr>& b);
std::vector<Expr> vars(Space s, int count, bool conjugated = false, int first = 0);
std::vector<Expr> conj(const std::vector<Expr>& v);
// Replace every variable leaf v by f(v); f must commute with conjugation.
Expr rename(const Expr& e, const std::function<VarId(VarId)>& f);

cplx eval(const Expr& e, const Point& p);
// Shares common subexpressions across the list.
std::vector<cplx> eval(const std::vector<Expr>& es, const Point& p);

/// d e / d wrt with the conjugate pair treated as independent.
Expr wirtinger(const Expr& e, VarId wrt);

/// Variables appearing in e (sorted, deduplicated).
std::vector<VarId> free_vars(const Expr& e);

/// Degree under zeta -> lambda zeta (holomorphic and antiholomorphic parts
/// counted separately), and likewise for z and the tilde copies.
struct HomogeneityDegree {
  int deg_zeta = 0;
  int deg_zetabar = 0;
  int deg_z = 0;
  int deg_zbar = 0;
  int deg_zeta_tilde = 0;
  int deg_zetabar_tilde = 0;
  int deg_z_tilde = 0;
  int deg_zbar_tilde = 0;

  HomogeneityDegree& operator+=(const HomogeneityDegree& o);
  HomogeneityDegree operator-() const;
  HomogeneityDegree scaled(int k) const;
  HomogeneityDegree conjugated() const;
  int& slot(Space s, bool conjugated);
  int slot(Space s, bool conjugated) const;
  friend bool operator==(const HomogeneityDegree&, const HomogeneityDegree&) = default;
};

/// nullopt means the expression is inhomogeneous. The zero expression is
/// reported as degree 0.
std::optional<HomogeneityDegree> homogeneity(const Expr& e);

std::size_t node_count(const Expr& e);

/// Prefix text form: const(a+bi), var(zeta,1), var(zeta,1,bar), add(...),
/// mul(...), div(a,b), pow(a,k), conj(a).
std::string to_text(const Expr& e);
Expr parse_expr(std::string_view text);

}  // namespace koppelman
