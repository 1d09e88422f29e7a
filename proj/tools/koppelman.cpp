// Batch front end: each verb writes one JSON report (stdout or --report).
// Exit codes: 0 ok, 1 check failed, 2 error, 3 inconclusive.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "koppelman/cohomology.hpp"
#include "koppelman/report.hpp"

using namespace koppelman;

namespace {

struct Global {
  std::uint64_t seed = 1;
  bool timing = false;
  std::string report_path, csv_path, dump_path;
};

struct Outcome {
  Json report;
  int code = 0;
  std::optional<KernelPair> kernel;
  std::optional<ConvergenceTrace> trace;
};

struct SpaceArg {
  Ambient ambient;
};

SpaceArg parse_space(const std::string& s) {
  std::smatch m;
  if (std::regex_match(s, m, std::regex(R"([Cc](\d+))"))) return {Ambient::cn_space(std::stoi(m[1]))};
  if (std::regex_match(s, m, std::regex(R"([Pp](\d+))"))) return {Ambient::pn_space(std::stoi(m[1]))};
  if (std::regex_match(s, m, std::regex(R"([Pp](\d+)[xX][Pp](\d+))"))) {
    return {Ambient::product_space(std::stoi(m[1]), std::stoi(m[2]))};
  }
  throw Error(ErrorCode::invalid_argument, "unknown space '" + s + "' (use Cn, Pn or PnxPm)");
}

cplx parse_complex(const std::string& s) {
  std::smatch m;
  const std::string num = R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))";
  if (std::regex_match(s, m, std::regex(num))) return {std::stod(m[1]), 0.0};
  if (std::regex_match(s, m, std::regex(num + R"(\s*,\s*)" + num))) return {std::stod(m[1]), std::stod(m[2])};
  throw Error(ErrorCode::parse_error, "complex number '" + s + "' (use re or re,im)");
}

std::vector<int> parse_mesh(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    int v = std::stoi(item);
    if (v < 1) throw Error(ErrorCode::invalid_argument, "mesh sizes must be positive");
    out.push_back(v);
  }
  return out;
}

Point z_point(const std::vector<cplx>& z, Space s = Space::z) {
  Point p;
  p.set(s, z);
  return p;
}

// z-only grid points: flat ones inside |z| < 0.5, projective ones on the unit sphere
std::vector<Point> solve_grid(const Ambient& a, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> grid;
  for (int i = 0; i < count; ++i) {
    Point s = sample_point(a, rng);
    grid.push_back(z_point(s.values(Space::z)));
  }
  return grid;
}

// four real integration axes per extra dimension; coarser defaults above P^1
SolveOptions mesh_for(const Ambient& a, SolveOptions o, bool given) {
  if (!given && a.n >= 2) {
    o.points = 8;
    o.max_points = 16;
  }
  return o;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- verify-cauchy -------------------------------------------------------

struct CauchyArgs {
  double radius = 1.0;
  std::string z = "0.3";
  int degree = 2;
  int points = 256;
  double tolerance = 1e-10;
  std::string mesh;
};

Outcome verify_cauchy(const CauchyArgs& a, const Global& g) {
  if (a.degree < 0) throw Error(ErrorCode::invalid_argument, "--degree must be >= 0");
  if (!(a.radius > 0.0)) throw Error(ErrorCode::invalid_argument, "--radius must be positive");
  const cplx z = parse_complex(a.z);
  Domain disc = Domain::disc(0.0, a.radius);
  Point zp = z_point({z});
  if (!disc.contains(zp)) throw Error(ErrorCode::invalid_argument, "z must lie in the open disc");
  Form phi(pow(Expr::var(Space::zeta, 0), a.degree));

  Outcome out;
  out.kernel = bm_kernel(1);
  KoppelmanTerms t = koppelman_eval(phi, *out.kernel, disc, zp, QuadratureRule::tensor(a.points));
  cplx value = 0.0;
  for (const NumForm* part : {&t.boundary, &t.dbar_phi, &t.dbar_z_potential, &t.p_term}) {
    if (auto it = part->find(0); it != part->end()) value += it->second;
  }
  Json& r = out.report;
  r["input"] = {{"phi", to_text(phi)}, {"z", to_json(z)}, {"radius", a.radius}, {"tolerance", a.tolerance}};
  r["domain"] = to_json(disc);
  r.update(to_json(t));
  r["value"] = to_json(value);
  r["expected"] = to_json(std::pow(z, a.degree));

  if (!a.mesh.empty()) {
    ConvergenceSetup setup{phi, *out.kernel, disc, zp, QuadratureRule::tensor(a.points), {}};
    std::vector<MeshStep> steps;
    for (int m : parse_mesh(a.mesh)) steps.push_back({m, std::nullopt});
    out.trace = convergence_study(setup, steps);
    r["convergence"] = to_json(*out.trace, g.timing);
  }
  r["passed"] = t.residual < a.tolerance;
  out.code = t.residual < a.tolerance ? 0 : 1;
  return out;
}

// ---- verify-weight -------------------------------------------------------

struct WeightArgs {
  std::string kind = "polynomial-growth";
  int k = 0;
  int n = 1;
  bool tilde = false;
  int samples = 100;
};

Outcome verify_weight(const WeightArgs& a, const Global& g) {
  WeightSpec spec;
  Ambient amb;
  if (a.kind == "polynomial-growth") {
    spec = WeightSpec::polynomial_growth(a.k);
    amb = Ambient::cn_space(a.n);
  } else if (a.kind == "alpha") {
    spec = WeightSpec::alpha_projective(a.k);
    amb = Ambient::pn_space(a.n);
  } else if (a.kind == "alpha-product") {
    spec = WeightSpec::alpha_product(a.k, a.tilde);
    amb = Ambient::product_space(a.n, a.n);
  } else {
    throw Error(ErrorCode::invalid_argument, "--kind must be polynomial-growth, alpha or alpha-product");
  }
  Form w = weight(spec, amb, g.seed);
  WeightCheck check = check_weight(w, amb, a.samples, g.seed);
  std::mt19937_64 rng(g.seed);
  Point diag = sample_point(amb, rng, true);
  cplx scalar = eval(w.scalar(), diag);

  Outcome out;
  Json& r = out.report;
  r["weight"] = {{"name", spec.name()}, {"ambient", to_string(amb)}, {"terms", w.size()}};
  r["nabla_max"] = check.nabla_max;
  r["diagonal_error"] = check.diagonal_err;
  r["scalar_at_diagonal"] = to_json(scalar);
  r["samples"] = a.samples;
  const bool ok = check.nabla_max < 1e-10 && check.diagonal_err < 1e-12;
  r["passed"] = ok;
  out.code = ok ? 0 : 1;
  return out;
}

// ---- solve-dbar ----------------------------------------------------------

struct SolveArgs {
  std::string space = "P1";
  int p = 0, q = 1, r = 0;
  std::string input;
  int grid = 4;
  SolveOptions opt;
  bool mesh_given = false;
};

Form read_form(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_form(ss.str());
}

void require_shape(const Form& phi, int p, int q, std::optional<int> r) {
  Form part = pick_bidegree(phi, DegreeSpec().set(GenKind::d_zeta, p).set(GenKind::d_zetabar, q));
  if (part.size() != phi.size()) {
    throw Error(ErrorCode::degree_mismatch, "input is not a (" + std::to_string(p) + "," + std::to_string(q) + ")-form");
  }
  if (!r) return;
  auto h = homogeneity(phi);
  if (!h || h->deg_zeta - h->deg_zetabar != *r) {
    throw Error(ErrorCode::twist_mismatch, "input is not homogeneous of twist " + std::to_string(*r));
  }
}

Outcome solve(const SolveArgs& a, const Global& g) {
  SpaceArg sp = parse_space(a.space);
  Form phi = read_form(a.input).with_ambient(sp.ambient);
  SolveOptions opt = mesh_for(sp.ambient, a.opt, a.mesh_given);
  opt.seed = g.seed;
  Outcome out;
  ObstructionResult res;
  const int n = sp.ambient.n;
  if (sp.ambient.kind == Ambient::Kind::cn) {
    require_shape(phi, a.p, a.q, std::nullopt);
    out.kernel = bm_kernel(n);
    Domain d = n == 1 ? Domain::disc(0.0, 1.0) : Domain::ball(std::vector<cplx>(n, 0.0), 1.0);
    res = solve_dbar(phi, *out.kernel, d, solve_grid(sp.ambient, a.grid, g.seed), opt);
  } else if (sp.ambient.kind == Ambient::Kind::pn) {
    require_shape(phi, a.p, a.q, a.r);
    out.kernel = n - a.p + a.r >= 0 ? pn_kernels(n, a.p, a.r) : pn_kernels(n, n - a.p, -a.r);
    res = solve_on_pn(phi, n, a.p, a.r, solve_grid(sp.ambient, a.grid, g.seed), opt);
  } else {
    throw Error(ErrorCode::invalid_argument, "solve-dbar supports Cn and Pn");
  }
  Json& r = out.report;
  r["input"] = {{"space", to_string(sp.ambient)}, {"p", a.p}, {"q", a.q}, {"r", a.r}, {"phi", to_text(phi)}};
  r.update(to_json(res, true));
  out.code = res.verdict == ObstructionResult::Verdict::inconclusive ? 3 : 0;
  return out;
}

// ---- cohomology ----------------------------------------------------------

struct CohomologyArgs {
  std::string space = "P1";
  int p = 0, q = 1, r = 0, k = 0, l = 0;
  int grid = 3;
  SolveOptions opt;
  bool mesh_given = false;
};


Outcome cohomology(const CohomologyArgs& a, const Global& g) {
  SpaceArg sp = parse_space(a.space);
  CohomologyCase c;
  if (sp.ambient.kind == Ambient::Kind::pn) {
    c = CohomologyCase::pn(sp.ambient.n, a.p, a.q, a.r);
  } else if (sp.ambient.kind == Ambient::Kind::pn_x_pm) {
    if (a.p != 0) throw Error(ErrorCode::invalid_argument, "products take (0,q)-forms only");
    c = CohomologyCase::product(sp.ambient.n, sp.ambient.m, a.q, a.k, a.l);
  } else {
    throw Error(ErrorCode::invalid_argument, "cohomology supports Pn and PnxPm");
  }
  Classification cls = classify(c);
  Outcome out;
  Json& r = out.report;
  r["case_name"] = c.name();
  r["classification"] = to_json(cls);
  r["case"] = cls.letter ? Json(std::string(1, *cls.letter)) : Json(nullptr);

  bool ok = true;
  if (cls.letter) {
    MechanismCheck mech = check_mechanism(c, std::nullopt, g.seed);
    r["mechanism"] = to_json(mech);
    ok = ok && mech.passed;
  } else {
    r["mechanism"] = nullptr;
  }

  std::string verdict = verdict_name(cls.verdict);
  r["evidence"] = nullptr;
  if (sp.ambient.kind == Ambient::Kind::pn) {
    const int n = sp.ambient.n;
    if (auto rep = representative(n, a.p, a.q, a.r)) {
      SolveOptions opt = mesh_for(sp.ambient, a.opt, a.mesh_given);
      opt.seed = g.seed;
      ObstructionResult res = solve_on_pn(rep->phi, n, a.p, a.r, solve_grid(sp.ambient, a.grid, g.seed), opt);
      Json ev = to_json(res, false);
      ev["input_kind"] = rep->kind;
      ev["phi"] = to_text(rep->phi);
      r["evidence"] = ev;
      r["residual"] = res.residual;
      r["pairing"] = res.class_pairing ? to_json(res.class_pairing->value) : to_json(res.p_pairing);
      if (rep->kind == "exact") {
        ok = ok && res.verdict != ObstructionResult::Verdict::obstructed;
      } else {
        ok = ok && res.verdict != ObstructionResult::Verdict::solved;
        if (res.verdict == ObstructionResult::Verdict::obstructed) verdict = "obstructed";
      }
    }
  }
  r["verdict"] = verdict;
  r["passed"] = ok;
  out.code = ok ? 0 : 1;
  return out;
}

// ---- dump-kernel ---------------------------------------------------------

struct DumpArgs {
  std::string space = "C1";
  int p = 0, r = 0, k = 0, l = 0;
};

Outcome dump_kernel(const DumpArgs& a, const Global&) {
  SpaceArg sp = parse_space(a.space);
  Outcome out;
  switch (sp.ambient.kind) {
    case Ambient::Kind::cn: out.kernel = bm_kernel(sp.ambient.n); break;
    case Ambient::Kind::pn: out.kernel = pn_kernels(sp.ambient.n, a.p, a.r); break;
    case Ambient::Kind::pn_x_pm: out.kernel = product_kernels(sp.ambient.n, sp.ambient.m, a.k, a.l); break;
    default: throw Error(ErrorCode::invalid_argument, "unsupported space");
  }
  const KernelPair& kp = *out.kernel;
  Json& r = out.report;
  r["ambient"] = to_string(kp.ambient);
  r["twist"] = kp.twist ? Json::array({kp.twist->first, kp.twist->second}) : Json(nullptr);
  r["weight_stack"] = kp.weight_stack;
  r["eta_convention"] = kp.eta_convention;
  r["K_terms"] = kp.K.size();
  r["P_terms"] = kp.P.size();
  r["dump"] = kernel_dump(kp);
  return out;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koppelman formula kernels, reproduction checks and cohomology vanishing"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the verb
  Global g;
  app.add_option("--seed", g.seed, "seed for random sample points")->capture_default_str();
  app.add_flag("--timing", g.timing, "add runtime_ms to reports (breaks byte-identity)");
  app.add_option("--report", g.report_path, "write the JSON report here instead of stdout");
  app.add_option("--csv", g.csv_path, "write the convergence trace as CSV");
  app.add_option("--dump-kernel", g.dump_path, "write the kernel in Form text per component bidegree");

  auto add_solve_opts = [](CLI::App* cmd, SolveOptions& o) {
    cmd->add_option("--points", o.points, "quadrature points per axis")->capture_default_str();
    cmd->add_option("--max-points", o.max_points, "mesh escalation limit")->capture_default_str();
    cmd->add_option("--tolerance", o.tolerance, "dbar residual tolerance")->capture_default_str();
  };

  CauchyArgs ca;
  auto* cauchy = app.add_subcommand("verify-cauchy", "reproduce zeta^degree on a disc with the Cauchy kernel");
  cauchy->add_option("--radius", ca.radius)->capture_default_str();
  cauchy->add_option("--z", ca.z, "interior point, re or re,im")->capture_default_str();
  cauchy->add_option("--degree", ca.degree)->capture_default_str();
  cauchy->add_option("--points", ca.points, "boundary nodes")->capture_default_str();
  cauchy->add_option("--tolerance", ca.tolerance)->capture_default_str();
  cauchy->add_option("--mesh", ca.mesh, "comma separated node counts for a convergence trace");

  WeightArgs wa;
  auto* wcmd = app.add_subcommand("verify-weight", "check the weight axioms");
  wcmd->add_option("--kind", wa.kind, "polynomial-growth, alpha or alpha-product")->capture_default_str();
  wcmd->add_option("--k", wa.k, "power")->capture_default_str();
  wcmd->add_option("--n", wa.n, "dimension")->capture_default_str();
  wcmd->add_flag("--tilde", wa.tilde, "alpha-product: second factor");
  wcmd->add_option("--samples", wa.samples)->capture_default_str();

  SolveArgs sa;
  auto* scmd = app.add_subcommand("solve-dbar", "solve dbar u = phi or report the obstruction");
  scmd->add_option("--space", sa.space, "Cn or Pn")->capture_default_str();
  scmd->add_option("--p", sa.p)->capture_default_str();
  scmd->add_option("--q", sa.q)->capture_default_str();
  scmd->add_option("--r", sa.r, "twist (Pn)")->capture_default_str();
  scmd->add_option("--input", sa.input, "Form text file")->required()->check(CLI::ExistingFile);
  scmd->add_option("--grid", sa.grid, "number of evaluation points")->capture_default_str();
  add_solve_opts(scmd, sa.opt);

  CohomologyArgs coa;
  auto* ccmd = app.add_subcommand("cohomology", "classify a Dolbeault group and run its vanishing mechanism");
  ccmd->add_option("--space", coa.space, "Pn or PnxPm")->capture_default_str();
  ccmd->add_option("--p", coa.p)->capture_default_str();
  ccmd->add_option("--q", coa.q)->capture_default_str();
  ccmd->add_option("--r", coa.r, "twist (Pn)")->capture_default_str();
  ccmd->add_option("--k", coa.k, "first twist (PnxPm)")->capture_default_str();
  ccmd->add_option("--l", coa.l, "second twist (PnxPm)")->capture_default_str();
  ccmd->add_option("--grid", coa.grid)->capture_default_str();
  add_solve_opts(ccmd, coa.opt);

  DumpArgs da;
  auto* dcmd = app.add_subcommand("dump-kernel", "print the kernel pair");
  dcmd->add_option("--space", da.space, "Cn, Pn or PnxPm")->capture_default_str();
  dcmd->add_option("--p", da.p)->capture_default_str();
  dcmd->add_option("--r", da.r)->capture_default_str();
  dcmd->add_option("--k", da.k)->capture_default_str();
  dcmd->add_option("--l", da.l)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  sa.mesh_given = scmd->count("--points") + scmd->count("--max-points") > 0;
  coa.mesh_given = ccmd->count("--points") + ccmd->count("--max-points") > 0;

  std::string command = app.get_subcommands().front()->get_name();
  Json report = report_header(command, g.seed);
  int code = 0;
  try {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    if (*cauchy) out = verify_cauchy(ca, g);
    if (*wcmd) out = verify_weight(wa, g);
    if (*scmd) out = solve(sa, g);
    if (*ccmd) out = cohomology(coa, g);
    if (*dcmd) out = dump_kernel(da, g);
    report.update(out.report);
    if (g.timing) report["runtime_ms"] = elapsed_ms(t0);
    code = out.code;
    if (!g.dump_path.empty()) {
      if (!out.kernel) throw Error(ErrorCode::invalid_argument, "this verb builds no kernel to dump");
      emit(g.dump_path, kernel_dump(*out.kernel));
    }
    if (!g.csv_path.empty()) {
      if (!out.trace) throw Error(ErrorCode::invalid_argument, "--csv needs a convergence trace (--mesh)");
      std::ostringstream os;
      write_csv(os, *out.trace, g.timing);
      emit(g.csv_path, os.str());
    }
  } catch (const Error& e) {
    report["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
    code = 2;
  } catch (const std::exception& e) {
    report["error"] = {{"code", "internal"}, {"message", e.what()}};
    code = 2;
  }
  try {
    emit(g.report_path, dump(report));
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return code;
}
