#include <doctest.h>

#include <sstream>

#include "koppelman/report.hpp"
#include "support.hpp"

using namespace koppelman;

namespace {

// Sum of the sections of one component in a kernel dump.
Form read_component(const std::string& dump, char which) {
  std::istringstream in(dump);
  std::string line, body;
  bool on = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      on = line.size() > 2 && line[2] == which;
      continue;
    }
    if (on) body += line + "\n";
  }
  return parse_form(body);
}

}  // namespace

TEST_CASE("kernel dump parses back to the kernel") {
  std::mt19937_64 rng(9);
  for (const KernelPair& kp : {bm_kernel(2), pn_kernels(1, 0, 1), pn_kernels(2, 1, 0)}) {
    std::string d = kernel_dump(kp);
    CHECK(d == kernel_dump(kp));
    Form k = read_component(d, 'K'), p = read_component(d, 'P');
    for (int i = 0; i < 5; ++i) {
      Point pt = sample_point(kp.ambient, rng);
      CHECK(max_abs(eval(k - kp.K, pt)) < 1e-12 * (1.0 + max_abs(eval(kp.K, pt))));
      CHECK(max_abs(eval(p - kp.P, pt)) < 1e-12 * (1.0 + max_abs(eval(kp.P, pt))));
    }
  }
}

TEST_CASE("json and csv layout") {
  NumForm f{{0, cplx(1.0, -2.0)}, {bit(d_zbar(0)), cplx(0.5, 0.0)}};
  Json j = to_json(f);
  CHECK(j["1"][0] == 1.0);
  CHECK(j["1"][1] == -2.0);
  CHECK(j[monomial_name(bit(d_zbar(0)))][0] == 0.5);

  ConvergenceTrace tr;
  tr.steps = {{16, 1.0, 1e-3, 0.5, 12.0}, {64, 1.0, 1e-9, 0.5, 40.0}};
  std::ostringstream a, b;
  write_csv(a, tr, false);
  write_csv(b, tr, true);
  CHECK(a.str() == "mesh,residual,runtime_ms\n16,0.001,\n64,1e-09,\n");
  CHECK(b.str() == "mesh,residual,runtime_ms\n16,0.001,12.0\n64,1e-09,40.0\n");
  CHECK_FALSE(to_json(tr, false)["steps"][0].contains("runtime_ms"));

  Json h = report_header("verify-cauchy", 4);
  CHECK(h["schema"] == kReportSchema);
  CHECK(dump(h) == "{\n  \"schema\": 1,\n  \"command\": \"verify-cauchy\",\n  \"seed\": 4\n}\n");
}
