#include "koppelman/report.hpp"

#include <array>
#include <map>
#include <ostream>
#include <sstream>

namespace koppelman {

Json to_json(cplx c) { return Json::array({c.real(), c.imag()}); }

Json to_json(const NumForm& f) {
  Json j = Json::object();
  for (const auto& [m, c] : f) j[monomial_name(m)] = to_json(c);
  return j;
}

Json to_json(const Point& p) {
  Json j = Json::object();
  for (Space s : {Space::zeta, Space::z, Space::zeta_tilde, Space::z_tilde}) {
    const auto& v = p.values(s);
    if (v.empty()) continue;
    Json arr = Json::array();
    for (cplx c : v) arr.push_back(to_json(c));
    j[std::string(space_name(s))] = arr;
  }
  return j;
}

namespace {

const char* domain_kind_name(Domain::Kind k) {
  switch (k) {
    case Domain::Kind::disc: return "disc";
    case Domain::Kind::ball: return "ball";
    case Domain::Kind::sphere: return "sphere";
    case Domain::Kind::annulus: return "annulus";
    case Domain::Kind::truncated_cn: return "truncated_cn";
    case Domain::Kind::projective_chart: return "projective_chart";
    case Domain::Kind::product: return "product";
  }
  return "?";
}

}  // namespace

Json to_json(const Domain& d) {
  Json j;
  j["kind"] = domain_kind_name(d.kind);
  j["n"] = d.n;
  if (d.kind == Domain::Kind::product) {
    j["first"] = to_json(*d.first);
    j["second"] = to_json(*d.second);
    return j;
  }
  if (d.kind != Domain::Kind::projective_chart) {
    Json c = Json::array();
    for (cplx v : d.center) c.push_back(to_json(v));
    j["center"] = c;
    j["radius"] = d.radius;
  }
  if (d.kind == Domain::Kind::annulus) j["inner_radius"] = d.inner_radius;
  return j;
}

Json to_json(const KoppelmanTerms& t) {
  Json j;
  j["terms"] = {{"boundary", to_json(t.boundary)},
                {"dbar_phi", to_json(t.dbar_phi)},
                {"dbar_z_potential", to_json(t.dbar_z_potential)},
                {"p_term", to_json(t.p_term)}};
  j["phi_at_z"] = to_json(t.phi_at_z);
  j["residual"] = t.residual;
  j["mesh"] = {{"points", t.points}};
  return j;
}

Json to_json(const ConvergenceTrace& t, bool timing) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json e;
    e["mesh"] = s.points;
    e["radius"] = s.radius;
    e["residual"] = s.residual;
    e["boundary"] = s.boundary;
    if (timing) e["runtime_ms"] = s.runtime_ms;
    steps.push_back(e);
  }
  Json j;
  j["steps"] = steps;
  j["residual_monotone"] = t.residual_monotone;
  j["boundary_monotone"] = t.boundary_monotone;
  return j;
}

Json to_json(const Classification& c) {
  Json j;
  j["verdict"] = verdict_name(c.verdict);
  j["case"] = c.letter ? Json(std::string(1, *c.letter)) : Json(nullptr);
  Json all = Json::array();
  for (char l : c.letters) all.push_back(std::string(1, l));
  j["cases"] = all;
  return j;
}

Json to_json(const MechanismCheck& m) {
  Json j;
  j["case"] = std::string(1, m.letter);
  j["kind"] = mechanism_kind_name(m.kind);
  j["dual"] = m.dual;
  j["kernel"] = {{"p", m.kernel_p}, {"r", m.kernel_r}};
  j["z_bidegree"] = Json::array({m.z_p, m.z_q});
  j["passed"] = m.passed;
  j["residual"] = m.residual;
  j["detail"] = m.detail;
  return j;
}

Json to_json(const ObstructionResult& r, bool with_solution) {
  Json j;
  j["verdict"] = verdict_name(r.verdict);
  j["dual_mode"] = r.dual_mode;
  j["points"] = r.points;
  j["residual"] = r.residual;
  j["p_pairing"] = to_json(r.p_pairing);
  j["p_pairing_normalized"] = r.p_pairing_normalized;
  if (r.class_pairing) {
    j["class_pairing"] = {{"value", to_json(r.class_pairing->value)}, {"ratio", r.class_pairing->ratio}};
  } else {
    j["class_pairing"] = nullptr;
  }
  if (with_solution) {
    Json sol = Json::array();
    for (const auto& [pt, u] : r.dbar_solution) sol.push_back({{"point", to_json(pt)}, {"potential", to_json(u)}});
    j["dbar_solution"] = sol;
  }
  return j;
}

Json report_header(const std::string& command, std::uint64_t seed) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

void write_csv(std::ostream& os, const ConvergenceTrace& t, bool timing) {
  Json tmp;
  os << "mesh,residual,runtime_ms\n";
  for (const auto& s : t.steps) {
    tmp = s.residual;
    os << s.points << ',' << tmp.dump() << ',';
    if (timing) {
      tmp = s.runtime_ms;
      os << tmp.dump();
    }
    os << '\n';
  }
}

std::string kernel_dump(const KernelPair& pair) {
  std::ostringstream os;
  os << "# ambient " << to_string(pair.ambient) << '\n';
  auto section = [&](const char* name, const Form& f) {
    // key: dzeta, dzetabar, dz, dzbar counts
    std::map<std::array<int, 4>, Form::Terms> parts;
    for (const auto& [m, c] : f.terms()) {
      Bidegree b = bidegree(m);
      std::array<int, 4> key{b.total(GenKind::d_zeta), b.total(GenKind::d_zetabar), b.total(GenKind::d_z),
                             b.total(GenKind::d_zbar)};
      parts[key].emplace(m, c);
    }
    for (const auto& [key, terms] : parts) {
      std::string text = to_text(Form::from_terms(terms, f.ambient()));
      os << "# " << name << " dzeta=" << key[0] << " dzetabar=" << key[1] << " dz=" << key[2]
         << " dzbar=" << key[3] << '\n'
         << text;
      if (!text.empty() && text.back() != '\n') os << '\n';
    }
  };
  section("K", pair.K);
  section("P", pair.P);
  return os.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace koppelman
