#pragma once

// Straight-line compilation of one or more Exprs for batched evaluation.
// Common subexpressions are shared, registers are recycled after their last
// use, and every op runs over a batch of lanes with the active SIMD table.

#include <cstddef>
#include <vector>

#include "koppelman/expr.hpp"
#include "koppelman/simd.hpp"

namespace koppelman {

struct TapeOp {
  enum Code : std::uint8_t { load, load_conj, constant, add, mul, div, powi, recip };
  Code code = constant;
  int dst = 0;
  int a = 0;  // input slot for load ops, register otherwise
  int b = 0;
  int exponent = 0;
  cplx value{};
};

class Tape {
 public:
  static Tape compile(const std::vector<Expr>& outputs);

  // Base (unconjugated) variables the tape reads, sorted. Input arrays are
  // laid out input-major: re[i * lanes + lane].
  const std::vector<VarId>& inputs() const { return inputs_; }
  std::size_t output_count() const { return output_regs_.size(); }
  std::size_t op_count() const { return ops_.size(); }
  int register_count() const { return registers_; }
  const std::vector<TapeOp>& ops() const { return ops_; }

  struct Workspace {
    std::vector<double> re, im;
  };

  // Outputs are output-major: out_re[k * lanes + lane]. Throws DivisionByZero
  // if any denominator vanishes on any lane.
  void eval_batch(const double* in_re, const double* in_im, std::size_t lanes, double* out_re, double* out_im,
                  Workspace& ws, const simd::Kernels& k = simd::active()) const;

  std::vector<cplx> eval(const Point& p) const;

 private:
  std::vector<VarId> inputs_;
  std::vector<TapeOp> ops_;
  std::vector<int> output_regs_;
  int registers_ = 0;
};

}  // namespace koppelman
