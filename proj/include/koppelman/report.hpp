#pragma once

// JSON and CSV serialization of evaluation results. Doubles are written with
// round-trip precision, maps in key order, so equal inputs give equal bytes.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "koppelman/cohomology.hpp"
#include "koppelman/quadrature.hpp"

namespace koppelman {

inline constexpr int kReportSchema = 1;

using Json = nlohmann::ordered_json;

Json to_json(cplx c);                    // [re, im]
Json to_json(const NumForm& f);          // {monomial name: [re, im]}
Json to_json(const Point& p);            // {space: [[re, im], ...]}
Json to_json(const Domain& d);
Json to_json(const KoppelmanTerms& t);   // terms, residual, mesh
Json to_json(const ConvergenceTrace& t, bool timing);
Json to_json(const Classification& c);
Json to_json(const MechanismCheck& m);
Json to_json(const ObstructionResult& r, bool with_solution);

// Header object shared by every verb.
Json report_header(const std::string& command, std::uint64_t seed);

// mesh,residual,runtime_ms; runtime is left empty without timing.
void write_csv(std::ostream& os, const ConvergenceTrace& t, bool timing);

// Kernel dump: one "# K (a,b)" / "# P (a,b)" section per z-bidegree of each
// component, each section the Form text of that part.
std::string kernel_dump(const KernelPair& pair);

std::string dump(const Json& j);  // indented, trailing newline

}  // namespace koppelman
