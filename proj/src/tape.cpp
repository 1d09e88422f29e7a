#include "koppelman/tape.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>
#include <unordered_map>

namespace koppelman {
namespace {

struct Ssa {
  TapeOp::Code code;
  int a = -1, b = -1, exponent = 0;
  cplx value{};
};

using Key = std::tuple<int, int, int, int, double, double>;

class Builder {
 public:
  explicit Builder(const std::vector<VarId>& inputs) : inputs_(inputs) {}

  int visit(const Expr& e) {
    const Node& n = e.node();
    if (auto it = memo_.find(&n); it != memo_.end()) return it->second;
    int v = -1;
    switch (n.kind) {
      case NodeKind::constant: v = emit({TapeOp::constant, -1, -1, 0, n.value}); break;
      case NodeKind::variable: {
        auto pos = std::lower_bound(inputs_.begin(), inputs_.end(), n.var.base());
        int idx = static_cast<int>(pos - inputs_.begin());
        v = emit({n.var.conjugated ? TapeOp::load_conj : TapeOp::load, idx, -1, 0, {}});
        break;
      }
      case NodeKind::add:
      case NodeKind::mul: {
        auto code = n.kind == NodeKind::add ? TapeOp::add : TapeOp::mul;
        v = visit(n.args[0]);
        for (std::size_t i = 1; i < n.args.size(); ++i) {
          int w = visit(n.args[i]);
          v = emit({code, std::min(v, w), std::max(v, w), 0, {}});
        }
        break;
      }
      case NodeKind::div: {
        int a = visit(n.args[0]);
        int b = visit(n.args[1]);
        v = emit({TapeOp::div, a, b, 0, {}});
        break;
      }
      case NodeKind::pow: {
        int a = visit(n.args[0]);
        int k = n.exponent;
        v = emit({TapeOp::powi, a, -1, k < 0 ? -k : k, {}});
        if (k < 0) v = emit({TapeOp::recip, v, -1, 0, {}});
        break;
      }
      case NodeKind::conj: throw Error(ErrorCode::invalid_argument, "non-canonical conj node in tape input");
    }
    memo_.emplace(&n, v);
    return v;
  }

  std::vector<Ssa> ops;

 private:
  int emit(const Ssa& s) {
    Key key{s.code, s.a, s.b, s.exponent, s.value.real(), s.value.imag()};
    if (auto it = cse_.find(key); it != cse_.end()) return it->second;
    int id = static_cast<int>(ops.size());
    ops.push_back(s);
    cse_.emplace(key, id);
    return id;
  }

  const std::vector<VarId>& inputs_;
  std::unordered_map<const Node*, int> memo_;
  std::map<Key, int> cse_;
};

bool reads_registers(TapeOp::Code c) { return c != TapeOp::load && c != TapeOp::load_conj && c != TapeOp::constant; }

}  // namespace

Tape Tape::compile(const std::vector<Expr>& outputs) {
  Tape t;
  for (const auto& e : outputs) {
    for (const auto& v : free_vars(e)) t.inputs_.push_back(v.base());
  }
  std::sort(t.inputs_.begin(), t.inputs_.end());
  t.inputs_.erase(std::unique(t.inputs_.begin(), t.inputs_.end()), t.inputs_.end());

  Builder b(t.inputs_);
  std::vector<int> out_vals;
  for (const auto& e : outputs) out_vals.push_back(b.visit(e));

  const int n = static_cast<int>(b.ops.size());
  constexpr int kForever = std::numeric_limits<int>::max();
  std::vector<int> last_use(n, -1);
  for (int i = 0; i < n; ++i) {
    const Ssa& s = b.ops[i];
    if (!reads_registers(s.code)) continue;
    last_use[s.a] = i;
    if (s.b >= 0) last_use[s.b] = i;
  }
  for (int v : out_vals) last_use[v] = kForever;

  std::vector<int> reg(n, -1);
  std::vector<int> free_regs;
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const Ssa& s = b.ops[i];
    TapeOp op;
    op.code = s.code;
    op.exponent = s.exponent;
    op.value = s.value;
    if (reads_registers(s.code)) {
      op.a = reg[s.a];
      op.b = s.b >= 0 ? reg[s.b] : -1;
      if (last_use[s.a] == i) free_regs.push_back(reg[s.a]);
      if (s.b >= 0 && s.b != s.a && last_use[s.b] == i) free_regs.push_back(reg[s.b]);
    } else {
      op.a = s.a;
    }
    if (!free_regs.empty()) {
      reg[i] = free_regs.back();
      free_regs.pop_back();
    } else {
      reg[i] = next++;
    }
    op.dst = reg[i];
    // Values never read again still need a slot for this op, then release it.
    if (last_use[i] < 0) free_regs.push_back(reg[i]);
    t.ops_.push_back(op);
  }
  t.registers_ = next;
  for (int v : out_vals) t.output_regs_.push_back(reg[v]);
  return t;
}

void Tape::eval_batch(const double* in_re, const double* in_im, std::size_t lanes, double* out_re, double* out_im,
                      Workspace& ws, const simd::Kernels& k) const {
  const std::size_t need = static_cast<std::size_t>(registers_) * lanes;
  if (ws.re.size() < need) {
    ws.re.resize(need);
    ws.im.resize(need);
  }
  auto R = [&](int r) { return ws.re.data() + static_cast<std::size_t>(r) * lanes; };
  auto I = [&](int r) { return ws.im.data() + static_cast<std::size_t>(r) * lanes; };
  for (const TapeOp& op : ops_) {
    double* dr = R(op.dst);
    double* di = I(op.dst);
    switch (op.code) {
      case TapeOp::load:
      case TapeOp::load_conj: {
        const double* sr = in_re + static_cast<std::size_t>(op.a) * lanes;
        const double* si = in_im + static_cast<std::size_t>(op.a) * lanes;
        std::copy(sr, sr + lanes, dr);
        if (op.code == TapeOp::load) {
          std::copy(si, si + lanes, di);
        } else {
          for (std::size_t l = 0; l < lanes; ++l) di[l] = -si[l];
        }
        break;
      }
      case TapeOp::constant: k.broadcast(op.value, dr, di, lanes); break;
      case TapeOp::add: k.add(R(op.a), I(op.a), R(op.b), I(op.b), dr, di, lanes); break;
      case TapeOp::mul: k.mul(R(op.a), I(op.a), R(op.b), I(op.b), dr, di, lanes); break;
      case TapeOp::div:
        if (!k.div(R(op.a), I(op.a), R(op.b), I(op.b), dr, di, lanes)) {
          throw Error(ErrorCode::division_by_zero, "denominator vanishes on a tape lane");
        }
        break;
      case TapeOp::powi: k.powi(R(op.a), I(op.a), op.exponent, dr, di, lanes); break;
      case TapeOp::recip: {
        const double* ar = R(op.a);
        const double* ai = I(op.a);
        for (std::size_t l = 0; l < lanes; ++l) {
          double den = ar[l] * ar[l] + ai[l] * ai[l];
          if (den == 0.0) throw Error(ErrorCode::division_by_zero, "negative power of zero on a tape lane");
          double re = ar[l] / den;
          double im = -ai[l] / den;
          dr[l] = re;
          di[l] = im;
        }
        break;
      }
    }
  }
  for (std::size_t o = 0; o < output_regs_.size(); ++o) {
    std::copy(R(output_regs_[o]), R(output_regs_[o]) + lanes, out_re + o * lanes);
    std::copy(I(output_regs_[o]), I(output_regs_[o]) + lanes, out_im + o * lanes);
  }
}

std::vector<cplx> Tape::eval(const Point& p) const {
  std::vector<double> re(inputs_.size()), im(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    auto v = p.get(inputs_[i]);
    if (!v) {
      throw Error(ErrorCode::unbound_variable,
                  std::string(space_name(inputs_[i].space)) + "_" + std::to_string(inputs_[i].index));
    }
    re[i] = v->real();
    im[i] = v->imag();
  }
  std::vector<double> orr(output_count()), oi(output_count());
  Workspace ws;
  eval_batch(re.data(), im.data(), 1, orr.data(), oi.data(), ws);
  std::vector<cplx> out(output_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {orr[i], oi[i]};
  return out;
}

}  // namespace koppelman
