#include "koppelman/form.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace koppelman {

int Generator::code() const {
  if (index < 0 || index >= kMaxGenIndex) {
    throw Error(ErrorCode::generator_out_of_range, "generator index " + std::to_string(index));
  }
  return static_cast<int>(space) * kGenKinds * kMaxGenIndex + static_cast<int>(kind) * kMaxGenIndex + index;
}

Generator Generator::from_code(int code) {
  Generator g;
  g.space = static_cast<GenSpace>(code / (kGenKinds * kMaxGenIndex));
  code %= kGenKinds * kMaxGenIndex;
  g.kind = static_cast<GenKind>(code / kMaxGenIndex);
  g.index = code % kMaxGenIndex;
  return g;
}

Monomial bit(const Generator& g) { return Monomial{1} << g.code(); }

std::vector<Generator> generators(Monomial m) {
  std::vector<Generator> out;
  while (m != 0) {
    int c = std::countr_zero(m);
    out.push_back(Generator::from_code(c));
    m &= m - 1;
  }
  return out;
}

int degree(Monomial m) { return std::popcount(m); }

int wedge_sign(Monomial a, Monomial b) {
  if ((a & b) != 0) return 0;
  int inversions = 0;
  while (b != 0) {
    int j = std::countr_zero(b);
    inversions += std::popcount(a >> j);  // bits of a above j
    b &= b - 1;
  }
  return (inversions & 1) ? -1 : 1;
}

Generator differential_of(VarId v) {
  Generator g;
  g.index = v.index;
  bool tilde = v.space == Space::zeta_tilde || v.space == Space::z_tilde;
  bool zeta = v.space == Space::zeta || v.space == Space::zeta_tilde;
  g.space = tilde ? GenSpace::tilde : GenSpace::main;
  if (zeta) {
    g.kind = v.conjugated ? GenKind::d_zetabar : GenKind::d_zeta;
  } else {
    g.kind = v.conjugated ? GenKind::d_zbar : GenKind::d_z;
  }
  return g;
}

std::string to_string(const Ambient& a) {
  switch (a.kind) {
    case Ambient::Kind::unspecified: return "unspecified";
    case Ambient::Kind::cn: return "C" + std::to_string(a.n);
    case Ambient::Kind::pn: return "P" + std::to_string(a.n);
    case Ambient::Kind::pn_x_pm: return "P" + std::to_string(a.n) + "xP" + std::to_string(a.m);
  }
  return "?";
}

Ambient merge_ambient(const Ambient& a, const Ambient& b) {
  if (a.kind == Ambient::Kind::unspecified) return b;
  if (b.kind == Ambient::Kind::unspecified || a == b) return a;
  throw Error(ErrorCode::ambient_mismatch, to_string(a) + " vs " + to_string(b));
}

namespace {

// Sign and mask of g0 ∧ g1 ∧ ... in the given order.
std::pair<int, Monomial> ordered(const std::vector<Generator>& gens) {
  int sign = 1;
  Monomial m = 0;
  for (const auto& g : gens) {
    Monomial b = bit(g);
    if (m & b) return {0, 0};
    sign *= wedge_sign(m, b);
    m |= b;
  }
  return {sign, m};
}

}  // namespace

Form::Form(const Expr& scalar) {
  if (!scalar.is_zero()) terms_.emplace(0, scalar);
}

Form Form::gen(const Generator& g, const Expr& coeff) {
  Form f;
  f.add_term(bit(g), coeff);
  return f;
}

Form Form::monomial(const std::vector<Generator>& gens, const Expr& coeff) {
  auto [sign, m] = ordered(gens);
  Form f;
  if (sign != 0) f.add_term(m, sign > 0 ? coeff : -coeff);
  return f;
}

Form Form::from_terms(Terms terms, Ambient ambient) {
  Form f;
  for (auto& [m, c] : terms) f.add_term(m, c);
  f.ambient_ = ambient;
  return f;
}

Form Form::with_ambient(const Ambient& a) const {
  Form f = *this;
  f.ambient_ = a;
  return f;
}

Expr Form::coefficient(Monomial m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Expr() : it->second;
}

int Form::pure_degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) {
    int k = degree(m);
    if (d >= 0 && k != d) return -1;
    d = k;
  }
  return d;
}

void Form::add_term(Monomial m, const Expr& c) {
  if (c.is_zero()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second = it->second + c;
  if (it->second.is_zero()) terms_.erase(it);
}

Form& Form::operator+=(const Form& o) {
  ambient_ = merge_ambient(ambient_, o.ambient_);
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Form& Form::operator-=(const Form& o) {
  ambient_ = merge_ambient(ambient_, o.ambient_);
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Form operator-(const Form& a) {
  Form f;
  f.ambient_ = a.ambient_;
  for (const auto& [m, c] : a.terms_) f.add_term(m, -c);
  return f;
}

Form operator*(const Expr& c, const Form& f) {
  Form out;
  out.ambient_ = f.ambient_;
  if (c.is_zero()) return out;
  for (const auto& [m, x] : f.terms_) out.add_term(m, c * x);
  return out;
}

Form wedge(const Form& a, const Form& b) {
  Form::Terms acc;
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) {
      int s = wedge_sign(ma, mb);
      if (s == 0) continue;
      Expr c = ca * cb;
      if (s < 0) c = -c;
      auto [it, fresh] = acc.emplace(ma | mb, c);
      if (!fresh) it->second = it->second + c;
    }
  }
  return Form::from_terms(std::move(acc), merge_ambient(a.ambient(), b.ambient()));
}

Form power(const Form& f, int k) {
  if (k < 0) throw Error(ErrorCode::invalid_argument, "negative power of a form");
  Form out = Form(1.0).with_ambient(f.ambient());
  for (int i = 0; i < k; ++i) {
    out = wedge(out, f);
    if (out.is_zero()) break;
  }
  return out;
}

namespace {

Form differentiate(const Form& f, SpaceSet acting_on, bool conjugated) {
  Form::Terms acc;
  for (const auto& [m, c] : f.terms()) {
    for (const VarId& v : free_vars(c)) {
      if (v.conjugated != conjugated || !(acting_on & space_bit(v.space))) continue;
      Expr d = wirtinger(c, v);
      if (d.is_zero()) continue;
      Monomial g = bit(differential_of(v));
      int s = wedge_sign(g, m);
      if (s == 0) continue;
      if (s < 0) d = -d;
      auto [it, fresh] = acc.emplace(g | m, d);
      if (!fresh) it->second = it->second + d;
    }
  }
  return Form::from_terms(std::move(acc), f.ambient());
}

}  // namespace

Form dbar(const Form& f, SpaceSet acting_on) { return differentiate(f, acting_on, true); }
Form del(const Form& f, SpaceSet acting_on) { return differentiate(f, acting_on, false); }

Contraction eta_contraction(const std::vector<Expr>& eta, int first, GenSpace space) {
  Contraction c;
  for (std::size_t j = 0; j < eta.size(); ++j) c.images.emplace_back(e_star(first + static_cast<int>(j), space), eta[j]);
  return c;
}

Contraction combine(const Contraction& a, const Contraction& b) {
  Contraction c = a;
  c.images.insert(c.images.end(), b.images.begin(), b.images.end());
  return c;
}

Form contract(const Form& f, const Contraction& c) {
  Form::Terms acc;
  for (const auto& [m, x] : f.terms()) {
    for (const auto& [g, img] : c.images) {
      Monomial b = bit(g);
      if (!(m & b)) continue;
      Expr v = x * img;
      if (std::popcount(m & (b - 1)) & 1) v = -v;
      auto [it, fresh] = acc.emplace(m ^ b, v);
      if (!fresh) it->second = it->second + v;
    }
  }
  return Form::from_terms(std::move(acc), f.ambient());
}

Form nabla(const Form& f, const Contraction& c, SpaceSet acting_on) { return contract(f, c) - dbar(f, acting_on); }

Form geometric_inverse(const Form& numerator, const Contraction& c, int rank, SpaceSet acting_on) {
  Monomial contracted = 0;
  for (const auto& [g, img] : c.images) contracted |= bit(g);
  for (const auto& [m, x] : numerator.terms()) {
    if (std::popcount(m & contracted) != 1) {
      throw Error(ErrorCode::rank_exceeded, "numerator must have degree 1 in the contracted generators");
    }
  }
  Form delta = contract(numerator, c);
  for (const auto& [m, x] : delta.terms()) {
    if (m != 0) throw Error(ErrorCode::invalid_argument, "contraction of the numerator is not a function");
  }
  Expr d = delta.scalar();
  if (d.is_zero()) throw Error(ErrorCode::division_by_zero, "contraction of the numerator vanishes identically");
  Form ds = dbar(numerator, acting_on);
  Form term = numerator;
  Form out = Form().with_ambient(numerator.ambient());
  Expr denom = d;
  for (int k = 0; k < rank; ++k) {
    if (term.is_zero()) break;
    out += (Expr(1.0) / denom) * term;
    term = wedge(term, ds);
    denom = denom * d;
  }
  return out;
}

Form project_fiber(const Form& f, const std::vector<int>& indices, GenSpace space) {
  std::vector<Generator> tilde_i;
  for (int i : indices) {
    tilde_i.push_back(e_gen(i, space));
    tilde_i.push_back(e_star(i, space));
  }
  auto [s2, full] = ordered(tilde_i);
  if (s2 == 0) throw Error(ErrorCode::invalid_argument, "repeated fiber index");
  Form::Terms acc;
  for (const auto& [m, x] : f.terms()) {
    if ((m & full) != full) continue;
    Monomial rest = m & ~full;
    int s1 = wedge_sign(rest, full);
    Expr v = (s1 * s2 > 0) ? x : -x;
    auto [it, fresh] = acc.emplace(rest, v);
    if (!fresh) it->second = it->second + v;
  }
  return Form::from_terms(std::move(acc), f.ambient());
}

Form project_fiber(const Form& f, int rank) {
  std::vector<int> idx;
  for (int i = 0; i < rank; ++i) idx.push_back(i);
  return project_fiber(f, idx);
}

Form substitute(const Form& f, const std::vector<std::pair<Generator, Form>>& images) {
  Form out = Form().with_ambient(f.ambient());
  for (const auto& [m, x] : f.terms()) {
    Form t(x);
    for (const Generator& g : generators(m)) {
      const Form* img = nullptr;
      for (const auto& [h, form] : images) {
        if (h == g) img = &form;
      }
      t = wedge(t, img ? *img : Form::gen(g));
      if (t.is_zero()) break;
    }
    out += t;
  }
  return out;
}

namespace {

Generator swapped(Generator g) {
  switch (g.kind) {
    case GenKind::d_zeta: g.kind = GenKind::d_z; break;
    case GenKind::d_zetabar: g.kind = GenKind::d_zbar; break;
    case GenKind::d_z: g.kind = GenKind::d_zeta; break;
    case GenKind::d_zbar: g.kind = GenKind::d_zetabar; break;
    default: break;
  }
  return g;
}

std::pair<int, Monomial> swapped(Monomial m) {
  std::vector<Generator> gens = generators(m);
  for (auto& g : gens) g = swapped(g);
  return ordered(gens);
}

VarId swapped(VarId v) {
  static constexpr Space other[] = {Space::z, Space::zeta, Space::z_tilde, Space::zeta_tilde};
  v.space = other[static_cast<int>(v.space)];
  return v;
}

}  // namespace

Form swap_roles(const Form& f) {
  Form::Terms out;
  for (const auto& [m, c] : f.terms()) {
    auto [sign, mm] = swapped(m);
    Expr x = rename(c, [](VarId v) { return swapped(v); });
    out.emplace(mm, sign > 0 ? x : -x);
  }
  return Form::from_terms(std::move(out), f.ambient());
}

NumForm swap_roles(const NumForm& f) {
  NumForm out;
  for (const auto& [m, v] : f) {
    auto [sign, mm] = swapped(m);
    out[mm] += static_cast<double>(sign) * v;
  }
  return out;
}

Bidegree bidegree(Monomial m) {
  Bidegree b;
  for (const Generator& g : generators(m)) {
    (g.space == GenSpace::main ? b.main : b.tilde)[static_cast<int>(g.kind)]++;
  }
  return b;
}

bool DegreeSpec::matches(Monomial m) const {
  Bidegree b = bidegree(m);
  for (int k = 0; k < kGenKinds; ++k) {
    if (total[k] && *total[k] != b.main[k] + b.tilde[k]) return false;
    if (main[k] && *main[k] != b.main[k]) return false;
    if (tilde[k] && *tilde[k] != b.tilde[k]) return false;
  }
  return !form_degree || *form_degree == degree(m);
}

Form pick_bidegree(const Form& f, const DegreeSpec& spec) {
  Form::Terms acc;
  for (const auto& [m, x] : f.terms()) {
    if (spec.matches(m)) acc.emplace(m, x);
  }
  return Form::from_terms(std::move(acc), f.ambient());
}

std::optional<HomogeneityDegree> homogeneity(const Form& f) {
  std::optional<HomogeneityDegree> out;
  for (const auto& [m, x] : f.terms()) {
    auto h = homogeneity(x);
    if (!h) return std::nullopt;
    for (const Generator& g : generators(m)) {
      bool tilde = g.space == GenSpace::tilde;
      switch (g.kind) {
        case GenKind::d_zeta: h->slot(tilde ? Space::zeta_tilde : Space::zeta, false) += 1; break;
        case GenKind::d_zetabar: h->slot(tilde ? Space::zeta_tilde : Space::zeta, true) += 1; break;
        case GenKind::d_z: h->slot(tilde ? Space::z_tilde : Space::z, false) += 1; break;
        case GenKind::d_zbar: h->slot(tilde ? Space::z_tilde : Space::z, true) += 1; break;
        case GenKind::e:
        case GenKind::e_star: break;
      }
    }
    if (out && !(*out == *h)) return std::nullopt;
    out = h;
  }
  return out ? out : std::optional<HomogeneityDegree>(HomogeneityDegree{});
}

NumForm eval(const Form& f, const Point& p) {
  std::vector<Expr> cs;
  for (const auto& [m, x] : f.terms()) cs.push_back(x);
  auto vals = eval(cs, p);
  NumForm out;
  std::size_t i = 0;
  for (const auto& [m, x] : f.terms()) out.emplace(m, vals[i++]);
  return out;
}

double max_abs(const NumForm& f) {
  double r = 0.0;
  for (const auto& [m, v] : f) r = std::max(r, std::abs(v));
  return r;
}

NumForm operator-(const NumForm& a, const NumForm& b) {
  NumForm out = a;
  for (const auto& [m, v] : b) out[m] -= v;
  return out;
}

std::string generator_name(const Generator& g) {
  static const char* names[] = {"dzeta", "dzetabar", "dz", "dzbar", "e", "estar"};
  std::string s = names[static_cast<int>(g.kind)];
  if (g.space == GenSpace::tilde) s += "~";
  return s + "_" + std::to_string(g.index);
}

std::string monomial_name(Monomial m) {
  std::string s;
  for (const Generator& g : generators(m)) {
    if (!s.empty()) s += " ∧ ";
    s += generator_name(g);
  }
  return s.empty() ? "1" : s;
}

namespace {

bool leading_negative(const Expr& c) {
  const Node& n = c.node();
  cplx v;
  if (n.kind == NodeKind::constant) {
    v = n.value;
  } else if (n.kind == NodeKind::mul && n.args.front().is_constant()) {
    v = n.args.front().node().value;
  } else {
    return false;
  }
  return v.imag() == 0.0 && v.real() < 0.0;
}

}  // namespace

std::string to_text(const Form& f) {
  if (f.is_zero()) return "0\n";
  std::ostringstream os;
  for (const auto& [m, x] : f.terms()) {
    bool neg = leading_negative(x);
    os << (neg ? "- " : "+ ") << to_text(neg ? -x : x);
    for (const Generator& g : generators(m)) os << " ∧ " << generator_name(g);
    os << '\n';
  }
  return os.str();
}

Generator parse_generator(std::string_view name) {
  static const std::pair<std::string_view, GenKind> kinds[] = {
      {"dzetabar", GenKind::d_zetabar}, {"dzeta", GenKind::d_zeta}, {"dzbar", GenKind::d_zbar},
      {"dz", GenKind::d_z},             {"estar", GenKind::e_star}, {"e", GenKind::e}};
  auto us = name.rfind('_');
  if (us == std::string_view::npos) throw Error(ErrorCode::parse_error, "generator without index: " + std::string(name));
  std::string_view head = name.substr(0, us), idx = name.substr(us + 1);
  Generator g;
  if (!head.empty() && head.back() == '~') {
    g.space = GenSpace::tilde;
    head.remove_suffix(1);
  }
  bool found = false;
  for (const auto& [k, kind] : kinds) {
    if (head == k) {
      g.kind = kind;
      found = true;
      break;
    }
  }
  int i = -1;
  auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), i);
  if (!found || ec != std::errc() || ptr != idx.data() + idx.size() || i < 0 || i >= kMaxGenIndex) {
    throw Error(ErrorCode::parse_error, "bad generator name: " + std::string(name));
  }
  g.index = i;
  return g;
}

Form parse_form(std::string_view text) {
  static constexpr std::string_view wedge_sep = " ∧ ";
  Form out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty() || line.front() == '#' || line == "0") continue;
    bool neg = false;
    if (line.front() == '+' || line.front() == '-') {
      neg = line.front() == '-';
      line.remove_prefix(1);
    }
    std::vector<std::string_view> parts;
    for (std::size_t at; (at = line.find(wedge_sep)) != std::string_view::npos;) {
      parts.push_back(line.substr(0, at));
      line.remove_prefix(at + wedge_sep.size());
    }
    parts.push_back(line);
    Expr c = parse_expr(parts[0]);
    std::vector<Generator> gens;
    for (std::size_t i = 1; i < parts.size(); ++i) gens.push_back(parse_generator(parts[i]));
    out += Form::monomial(gens, neg ? -c : c);
  }
  return out;
}

}  // namespace koppelman
