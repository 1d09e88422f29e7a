#include "koppelman/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>
#include <unordered_set>

namespace koppelman {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::division_by_zero: return "DivisionByZero";
    case ErrorCode::unbound_variable: return "UnboundVariable";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::ambient_mismatch: return "AmbientMismatch";
    case ErrorCode::rank_exceeded: return "RankExceeded";
    case ErrorCode::generator_out_of_range: return "GeneratorOutOfRange";
    case ErrorCode::support_function_invalid: return "SupportFunctionInvalid";
    case ErrorCode::weight_axiom_violation: return "WeightAxiomViolation";
    case ErrorCode::chern_inconsistent: return "ChernInconsistent";
    case ErrorCode::duality_required: return "DualityRequired";
    case ErrorCode::degree_out_of_range: return "DegreeOutOfRange";
    case ErrorCode::degree_mismatch: return "DegreeMismatch";
    case ErrorCode::singularity_unhandled: return "SingularityUnhandled";
    case ErrorCode::twist_mismatch: return "TwistMismatch";
    case ErrorCode::not_closed: return "NotClosed";
    case ErrorCode::case_mismatch: return "CaseMismatch";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Error";
}

std::string_view space_name(Space s) {
  switch (s) {
    case Space::zeta: return "zeta";
    case Space::z: return "z";
    case Space::zeta_tilde: return "zeta_tilde";
    case Space::z_tilde: return "z_tilde";
  }
  return "?";
}

void Point::set(Space s, int index, cplx value) {
  auto& vals = values_[static_cast<int>(s)];
  auto& bound = bound_[static_cast<int>(s)];
  if (static_cast<int>(vals.size()) <= index) {
    vals.resize(index + 1);
    bound.resize(index + 1, false);
  }
  vals[index] = value;
  bound[index] = true;
}

void Point::set(Space s, const std::vector<cplx>& values) {
  values_[static_cast<int>(s)] = values;
  bound_[static_cast<int>(s)].assign(values.size(), true);
}

std::optional<cplx> Point::get(VarId v) const {
  const auto& vals = values_[static_cast<int>(v.space)];
  const auto& bound = bound_[static_cast<int>(v.space)];
  if (v.index < 0 || v.index >= static_cast<int>(vals.size()) || !bound[v.index]) return std::nullopt;
  return v.conjugated ? std::conj(vals[v.index]) : vals[v.index];
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_double(double d) { return std::hash<double>{}(d == 0.0 ? 0.0 : d); }

Expr make_node(Node n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
  h = mix(h, hash_double(n.value.real()));
  h = mix(h, hash_double(n.value.imag()));
  h = mix(h, static_cast<std::size_t>(n.var.space) * 131 + n.var.index * 7 + (n.var.conjugated ? 1 : 0));
  h = mix(h, static_cast<std::size_t>(n.exponent + 1000));
  for (const auto& a : n.args) h = mix(h, a.node().hash);
  n.hash = h;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr make_const(cplx c) {
  Node n;
  n.kind = NodeKind::constant;
  n.value = c;
  return make_node(std::move(n));
}

const Expr& zero_expr() {
  static const Expr z = make_const({0.0, 0.0});
  return z;
}

const Expr& one_expr() {
  static const Expr o = make_const({1.0, 0.0});
  return o;
}

cplx ipow(cplx x, int k) {
  if (k < 0) {
    if (x == cplx{}) throw Error(ErrorCode::division_by_zero, "negative power of zero");
    return cplx{1.0, 0.0} / ipow(x, -k);
  }
  cplx r{1.0, 0.0};
  while (k > 0) {
    if (k & 1) r *= x;
    x *= x;
    k >>= 1;
  }
  return r;
}

}  // namespace

Expr::Expr() : node_(zero_expr().node_) {}

Expr::Expr(cplx c) {
  if (c == cplx{}) {
    node_ = zero_expr().node_;
  } else if (c == cplx{1.0, 0.0}) {
    node_ = one_expr().node_;
  } else {
    node_ = make_const(c).node_;
  }
}

Expr Expr::var(VarId v) {
  if (v.index < 0) throw Error(ErrorCode::invalid_argument, "negative variable index");
  Node n;
  n.kind = NodeKind::variable;
  n.var = v;
  return make_node(std::move(n));
}

bool Expr::is_constant() const { return node_->kind == NodeKind::constant; }
bool Expr::is_zero() const { return is_constant() && node_->value == cplx{}; }
bool Expr::is_one() const { return is_constant() && node_->value == cplx{1.0, 0.0}; }

std::optional<cplx> Expr::constant_value() const {
  if (is_constant()) return node_->value;
  return std::nullopt;
}

namespace {

bool same_structure(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.hash != y.hash || x.kind != y.kind || x.value != y.value || !(x.var == y.var) ||
      x.exponent != y.exponent || x.args.size() != y.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!same_structure(x.args[i], y.args[i])) return false;
  }
  return true;
}

// c * rest with c the leading constant of a product.
std::pair<cplx, Expr> split_coefficient(const Expr& e) {
  const Node& n = e.node();
  if (n.kind != NodeKind::mul || !n.args.front().is_constant()) return {cplx{1.0, 0.0}, e};
  cplx c = n.args.front().node().value;
  if (n.args.size() == 2) return {c, n.args[1]};
  Node r;
  r.kind = NodeKind::mul;
  r.args.assign(n.args.begin() + 1, n.args.end());
  return {c, make_node(std::move(r))};
}

std::vector<Expr> combine_like_terms(std::vector<Expr> flat) {
  if (flat.size() < 2) return flat;
  struct Group {
    Expr rest;
    cplx coeff;
    Expr original;
    int members;
  };
  std::vector<Group> groups;
  std::unordered_multimap<std::size_t, std::size_t> index;
  for (auto& t : flat) {
    auto [c, rest] = split_coefficient(t);
    bool merged = false;
    auto range = index.equal_range(rest.node().hash);
    for (auto it = range.first; it != range.second; ++it) {
      Group& g = groups[it->second];
      if (same_structure(g.rest, rest)) {
        g.coeff += c;
        ++g.members;
        merged = true;
        break;
      }
    }
    if (!merged) {
      index.emplace(rest.node().hash, groups.size());
      groups.push_back({rest, c, t, 1});
    }
  }
  if (groups.size() == flat.size()) return flat;
  std::vector<Expr> out;
  for (auto& g : groups) {
    if (g.members == 1) {
      out.push_back(std::move(g.original));
    } else if (g.coeff == cplx{}) {
      continue;
    } else if (g.coeff == cplx{1.0, 0.0}) {
      out.push_back(std::move(g.rest));
    } else {
      out.push_back(product({Expr(g.coeff), g.rest}));
    }
  }
  return out;
}

}  // namespace

Expr sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  cplx c{};
  for (auto& t : terms) {
    const Node& n = t.node();
    if (n.kind == NodeKind::constant) {
      c += n.value;
    } else if (n.kind == NodeKind::add) {
      for (const auto& a : n.args) {
        if (a.is_constant()) {
          c += a.node().value;
        } else {
          flat.push_back(a);
        }
      }
    } else {
      flat.push_back(std::move(t));
    }
  }
  flat = combine_like_terms(std::move(flat));
  if (flat.empty()) return Expr(c);
  if (flat.size() == 1 && c == cplx{}) return flat.front();
  Node n;
  n.kind = NodeKind::add;
  if (c != cplx{}) n.args.push_back(Expr(c));
  for (auto& f : flat) n.args.push_back(std::move(f));
  return make_node(std::move(n));
}

Expr product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  cplx c{1.0, 0.0};
  for (auto& f : factors) {
    const Node& n = f.node();
    if (n.kind == NodeKind::constant) {
      c *= n.value;
    } else if (n.kind == NodeKind::mul) {
      for (const auto& a : n.args) {
        if (a.is_constant()) {
          c *= a.node().value;
        } else {
          flat.push_back(a);
        }
      }
    } else {
      flat.push_back(std::move(f));
    }
  }
  if (c == cplx{}) return Expr();
  if (flat.empty()) return Expr(c);
  if (flat.size() == 1 && c == cplx{1.0, 0.0}) return flat.front();
  Node n;
  n.kind = NodeKind::mul;
  if (c != cplx{1.0, 0.0}) n.args.push_back(Expr(c));
  for (auto& f : flat) n.args.push_back(std::move(f));
  return make_node(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return sum({a, b});
}

Expr operator-(const Expr& a) {
  if (auto c = a.constant_value()) return Expr(-*c);
  return product({Expr(-1.0), a});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return product({a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
  if (auto cb = b.constant_value()) {
    if (*cb == cplx{}) throw Error(ErrorCode::division_by_zero, "division by the constant zero");
    return a * Expr(cplx{1.0, 0.0} / *cb);
  }
  if (a.is_zero()) return Expr();
  if (a.id() == b.id()) return Expr(1.0);
  Node n;
  n.kind = NodeKind::div;
  n.args = {a, b};
  return make_node(std::move(n));
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  if (auto c = base.constant_value()) return Expr(ipow(*c, exponent));
  if (base.node().kind == NodeKind::pow) {
    return pow(base.node().args[0], base.node().exponent * exponent);
  }
  Node n;
  n.kind = NodeKind::pow;
  n.exponent = exponent;
  n.args = {base};
  return make_node(std::move(n));
}

namespace {

Expr conj_impl(const Expr& e, std::unordered_map<const Node*, Expr>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  const Node& n = e.node();
  Expr out;
  switch (n.kind) {
    case NodeKind::constant: out = Expr(std::conj(n.value)); break;
    case NodeKind::variable: out = Expr::var(n.var.conj()); break;
    case NodeKind::add: {
      std::vector<Expr> t;
      for (const auto& a : n.args) t.push_back(conj_impl(a, memo));
      out = sum(std::move(t));
      break;
    }
    case NodeKind::mul: {
      std::vector<Expr> t;
      for (const auto& a : n.args) t.push_back(conj_impl(a, memo));
      out = product(std::move(t));
      break;
    }
    case NodeKind::div: out = conj_impl(n.args[0], memo) / conj_impl(n.args[1], memo); break;
    case NodeKind::pow: out = pow(conj_impl(n.args[0], memo), n.exponent); break;
    case NodeKind::conj: out = n.args[0]; break;
  }
  memo.emplace(e.id(), out);
  return out;
}

}  // namespace

Expr conj(const Expr& e) {
  std::unordered_map<const Node*, Expr> memo;
  return conj_impl(e, memo);
}

Expr rename(const Expr& e, const std::function<VarId(VarId)>& f) {
  std::unordered_map<const Node*, Expr> memo;
  std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    const Node& n = x.node();
    Expr out;
    switch (n.kind) {
      case NodeKind::constant: out = x; break;
      case NodeKind::variable: out = Expr::var(f(n.var)); break;
      case NodeKind::add:
      case NodeKind::mul: {
        std::vector<Expr> t;
        for (const auto& a : n.args) t.push_back(go(a));
        out = n.kind == NodeKind::add ? sum(std::move(t)) : product(std::move(t));
        break;
      }
      case NodeKind::div: out = go(n.args[0]) / go(n.args[1]); break;
      case NodeKind::pow: out = pow(go(n.args[0]), n.exponent); break;
      case NodeKind::conj: out = conj(go(n.args[0])); break;
    }
    memo.emplace(x.id(), out);
    return out;
  };
  return go(e);
}

std::vector<Expr> conj(const std::vector<Expr>& v) {
  std::vector<Expr> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(conj(e));
  return out;
}

Expr norm2(const std::vector<Expr>& v) {
  std::vector<Expr> t;
  for (const auto& e : v) t.push_back(e * conj(e));
  return sum(std::move(t));
}

Expr dot(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "dot: length mismatch");
  std::vector<Expr> t;
  for (std::size_t i = 0; i < a.size(); ++i) t.push_back(a[i] * b[i]);
  return sum(std::move(t));
}

std::vector<Expr> vars(Space s, int count, bool conjugated, int first) {
  std::vector<Expr> out;
  for (int i = 0; i < count; ++i) out.push_back(Expr::var(s, first + i, conjugated));
  return out;
}

namespace {

cplx eval_impl(const Expr& e, const Point& p, std::unordered_map<const Node*, cplx>& memo) {
  const Node& n = e.node();
  if (n.kind == NodeKind::constant) return n.value;
  if (auto it = memo.find(&n); it != memo.end()) return it->second;
  cplx v{};
  switch (n.kind) {
    case NodeKind::constant: v = n.value; break;
    case NodeKind::variable: {
      auto val = p.get(n.var);
      if (!val) {
        throw Error(ErrorCode::unbound_variable,
                    std::string(space_name(n.var.space)) + "_" + std::to_string(n.var.index));
      }
      v = *val;
      break;
    }
    case NodeKind::add:
      for (const auto& a : n.args) v += eval_impl(a, p, memo);
      break;
    case NodeKind::mul:
      v = {1.0, 0.0};
      for (const auto& a : n.args) v *= eval_impl(a, p, memo);
      break;
    case NodeKind::div: {
      cplx num = eval_impl(n.args[0], p, memo);
      cplx den = eval_impl(n.args[1], p, memo);
      if (den == cplx{}) throw Error(ErrorCode::division_by_zero, "denominator vanishes at the point");
      v = num / den;
      break;
    }
    case NodeKind::pow: v = ipow(eval_impl(n.args[0], p, memo), n.exponent); break;
    case NodeKind::conj: v = std::conj(eval_impl(n.args[0], p, memo)); break;
  }
  memo.emplace(&n, v);
  return v;
}

Expr wirtinger_impl(const Expr& e, VarId wrt, std::unordered_map<const Node*, Expr>& memo) {
  const Node& n = e.node();
  if (n.kind == NodeKind::constant) return Expr();
  if (auto it = memo.find(&n); it != memo.end()) return it->second;
  Expr d;
  switch (n.kind) {
    case NodeKind::constant: break;
    case NodeKind::variable: d = (n.var == wrt) ? Expr(1.0) : Expr(); break;
    case NodeKind::add: {
      std::vector<Expr> t;
      for (const auto& a : n.args) t.push_back(wirtinger_impl(a, wrt, memo));
      d = sum(std::move(t));
      break;
    }
    case NodeKind::mul: {
      std::vector<Expr> t;
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        Expr di = wirtinger_impl(n.args[i], wrt, memo);
        if (di.is_zero()) continue;
        std::vector<Expr> f;
        for (std::size_t j = 0; j < n.args.size(); ++j) f.push_back(j == i ? di : n.args[j]);
        t.push_back(product(std::move(f)));
      }
      d = sum(std::move(t));
      break;
    }
    case NodeKind::div: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      Expr da = wirtinger_impl(a, wrt, memo);
      Expr db = wirtinger_impl(b, wrt, memo);
      d = da / b - (a * db) / pow(b, 2);
      break;
    }
    case NodeKind::pow: {
      Expr db = wirtinger_impl(n.args[0], wrt, memo);
      d = Expr(static_cast<double>(n.exponent)) * pow(n.args[0], n.exponent - 1) * db;
      break;
    }
    case NodeKind::conj: {
      // Canonical expressions never carry conj nodes; handle for completeness.
      d = conj(wirtinger_impl(n.args[0], wrt.conj(), memo));
      break;
    }
  }
  memo.emplace(&n, d);
  return d;
}

}  // namespace

cplx eval(const Expr& e, const Point& p) {
  std::unordered_map<const Node*, cplx> memo;
  return eval_impl(e, p, memo);
}

std::vector<cplx> eval(const std::vector<Expr>& es, const Point& p) {
  std::unordered_map<const Node*, cplx> memo;
  std::vector<cplx> out;
  out.reserve(es.size());
  for (const auto& e : es) out.push_back(eval_impl(e, p, memo));
  return out;
}

Expr wirtinger(const Expr& e, VarId wrt) {
  std::unordered_map<const Node*, Expr> memo;
  return wirtinger_impl(e, wrt, memo);
}

std::vector<VarId> free_vars(const Expr& e) {
  std::vector<VarId> out;
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.id()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->kind == NodeKind::variable) out.push_back(n->var);
    for (const auto& a : n->args) stack.push_back(a.id());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t node_count(const Expr& e) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.id()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& a : n->args) stack.push_back(a.id());
  }
  return seen.size();
}

int& HomogeneityDegree::slot(Space s, bool c) {
  switch (s) {
    case Space::zeta: return c ? deg_zetabar : deg_zeta;
    case Space::z: return c ? deg_zbar : deg_z;
    case Space::zeta_tilde: return c ? deg_zetabar_tilde : deg_zeta_tilde;
    case Space::z_tilde: return c ? deg_zbar_tilde : deg_z_tilde;
  }
  return deg_zeta;
}

int HomogeneityDegree::slot(Space s, bool c) const { return const_cast<HomogeneityDegree*>(this)->slot(s, c); }

HomogeneityDegree& HomogeneityDegree::operator+=(const HomogeneityDegree& o) {
  for (int s = 0; s < kSpaceCount; ++s) {
    for (bool c : {false, true}) slot(Space(s), c) += o.slot(Space(s), c);
  }
  return *this;
}

HomogeneityDegree HomogeneityDegree::operator-() const { return scaled(-1); }

HomogeneityDegree HomogeneityDegree::scaled(int k) const {
  HomogeneityDegree out = *this;
  for (int s = 0; s < kSpaceCount; ++s) {
    for (bool c : {false, true}) out.slot(Space(s), c) *= k;
  }
  return out;
}

HomogeneityDegree HomogeneityDegree::conjugated() const {
  HomogeneityDegree out;
  for (int s = 0; s < kSpaceCount; ++s) {
    out.slot(Space(s), false) = slot(Space(s), true);
    out.slot(Space(s), true) = slot(Space(s), false);
  }
  return out;
}

namespace {

using MaybeDeg = std::optional<HomogeneityDegree>;

MaybeDeg homog_impl(const Expr& e, std::unordered_map<const Node*, MaybeDeg>& memo) {
  const Node& n = e.node();
  if (auto it = memo.find(&n); it != memo.end()) return it->second;
  MaybeDeg out = HomogeneityDegree{};
  switch (n.kind) {
    case NodeKind::constant: break;
    case NodeKind::variable: out->slot(n.var.space, n.var.conjugated) = 1; break;
    case NodeKind::add: {
      MaybeDeg first;
      for (const auto& a : n.args) {
        // Constant summands are degree zero like every other constant.
        MaybeDeg d = homog_impl(a, memo);
        if (!d) {
          out = std::nullopt;
          break;
        }
        if (!first) {
          first = d;
        } else if (!(*first == *d)) {
          out = std::nullopt;
          break;
        }
      }
      if (out && first) out = first;
      break;
    }
    case NodeKind::mul:
      for (const auto& a : n.args) {
        MaybeDeg d = homog_impl(a, memo);
        if (!d) {
          out = std::nullopt;
          break;
        }
        *out += *d;
      }
      break;
    case NodeKind::div: {
      MaybeDeg a = homog_impl(n.args[0], memo);
      MaybeDeg b = homog_impl(n.args[1], memo);
      if (!a || !b) {
        out = std::nullopt;
      } else {
        *out = *a;
        *out += -*b;
      }
      break;
    }
    case NodeKind::pow: {
      MaybeDeg a = homog_impl(n.args[0], memo);
      out = a ? MaybeDeg(a->scaled(n.exponent)) : std::nullopt;
      break;
    }
    case NodeKind::conj: {
      MaybeDeg a = homog_impl(n.args[0], memo);
      out = a ? MaybeDeg(a->conjugated()) : std::nullopt;
      break;
    }
  }
  memo.emplace(&n, out);
  return out;
}

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

void text_impl(const Expr& e, std::string& out) {
  const Node& n = e.node();
  auto args = [&](const char* name) {
    out += name;
    out += '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) out += ',';
      text_impl(n.args[i], out);
    }
  };
  switch (n.kind) {
    case NodeKind::constant: {
      out += "const(";
      out += format_double(n.value.real());
      double im = n.value.imag();
      out += (std::signbit(im) ? "-" : "+");
      out += format_double(std::fabs(im));
      out += "i)";
      return;
    }
    case NodeKind::variable:
      out += "var(";
      out += space_name(n.var.space);
      out += ',';
      out += std::to_string(n.var.index);
      if (n.var.conjugated) out += ",bar";
      out += ')';
      return;
    case NodeKind::add: args("add"); break;
    case NodeKind::mul: args("mul"); break;
    case NodeKind::div: args("div"); break;
    case NodeKind::conj: args("conj"); break;
    case NodeKind::pow:
      out += "pow(";
      text_impl(n.args[0], out);
      out += ',';
      out += std::to_string(n.exponent);
      break;
  }
  out += ')';
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr parse_all() {
    Expr e = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::parse_error, msg + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view token() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' && s_[pos_] != ',' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected token");
    return s_.substr(start, pos_ - start);
  }

  static double to_double(std::string_view t) {
    std::string tmp(t);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size()) throw Error(ErrorCode::parse_error, "bad number '" + tmp + "'");
    return v;
  }

  static int to_int(std::string_view t) {
    int v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) {
      throw Error(ErrorCode::parse_error, "bad integer '" + std::string(t) + "'");
    }
    return v;
  }

  static cplx to_complex(std::string_view t) {
    if (t.empty() || t.back() != 'i') throw Error(ErrorCode::parse_error, "complex constant must end in i");
    t.remove_suffix(1);
    std::size_t split = std::string_view::npos;
    for (std::size_t i = t.size(); i-- > 1;) {
      if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
        split = i;
        break;
      }
    }
    if (split == std::string_view::npos) throw Error(ErrorCode::parse_error, "complex constant needs a+bi");
    return {to_double(t.substr(0, split)), to_double(t.substr(split))};
  }

  static Space to_space(std::string_view t) {
    for (int s = 0; s < kSpaceCount; ++s) {
      if (space_name(Space(s)) == t) return Space(s);
    }
    throw Error(ErrorCode::parse_error, "unknown space '" + std::string(t) + "'");
  }

  std::vector<Expr> arg_list() {
    std::vector<Expr> out;
    out.push_back(parse());
    skip_ws();
    while (pos_ < s_.size() && s_[pos_] == ',') {
      ++pos_;
      out.push_back(parse());
      skip_ws();
    }
    expect(')');
    return out;
  }

  Expr parse() {
    std::string_view name = token();
    expect('(');
    if (name == "const") {
      cplx c = to_complex(token());
      expect(')');
      return Expr(c);
    }
    if (name == "var") {
      Space sp = to_space(token());
      expect(',');
      int idx = to_int(token());
      skip_ws();
      bool bar = false;
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        if (token() != "bar") fail("expected 'bar'");
        bar = true;
      }
      expect(')');
      return Expr::var(sp, idx, bar);
    }
    if (name == "pow") {
      Expr base = parse();
      expect(',');
      int k = to_int(token());
      expect(')');
      return pow(base, k);
    }
    if (name == "add") return sum(arg_list());
    if (name == "mul") return product(arg_list());
    if (name == "div") {
      auto a = arg_list();
      if (a.size() != 2) fail("div takes two arguments");
      return a[0] / a[1];
    }
    if (name == "conj") {
      auto a = arg_list();
      if (a.size() != 1) fail("conj takes one argument");
      return conj(a[0]);
    }
    fail("unknown node '" + std::string(name) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<HomogeneityDegree> homogeneity(const Expr& e) {
  std::unordered_map<const Node*, MaybeDeg> memo;
  return homog_impl(e, memo);
}

std::string to_text(const Expr& e) {
  std::string out;
  text_impl(e, out);
  return out;
}

Expr parse_expr(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace koppelman
