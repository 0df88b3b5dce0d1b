#include "admmrnn/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

// Box-Muller on top of mt19937_64 keeps the stream identical across standard
// libraries; std::normal_distribution does not guarantee that.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;          // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 rng_;
};

void fill_gaussian(Matrix& m, GaussianSource& src, double scale) {
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = scale * src.next();
}

int target_label(const Target& target, std::size_t d_o, const char* where) {
  const int label = std::get<int>(target);
  if (label < 0 || static_cast<std::size_t>(label) >= d_o) {
    throw config_error(std::string(where) + ": label " + std::to_string(label) +
                       " out of range [0," + std::to_string(d_o) + ")");
  }
  return label;
}

}  // namespace

CellOut forward_cell(const Matrix& x_t, const Matrix& s_prev, const RnnParams& params) {
  if (x_t.cols() != 1 || x_t.rows() != params.u.cols()) {
    throw shape_error("forward_cell: x_t must be " + std::to_string(params.u.cols()) +
                      "x1, got " + x_t.shape_str());
  }
  if (s_prev.cols() != 1 || s_prev.rows() != params.u.rows()) {
    throw shape_error("forward_cell: s_prev must be " + std::to_string(params.u.rows()) +
                      "x1, got " + s_prev.shape_str());
  }
  CellOut out;
  out.a = add(add(matmul(params.u, x_t), matmul(params.w, s_prev)), params.b);
  out.s = elementwise_tanh(out.a);
  out.o = add(matmul(params.v, out.s), params.c);
  return out;
}

UnfoldedVars forward_sequence(const std::vector<Matrix>& xs, const RnnParams& params,
                              const Matrix& s0) {
  if (xs.empty()) {
    throw config_error("forward_sequence: sequence must have at least one timestep");
  }
  UnfoldedVars vars;
  vars.s0 = s0;
  vars.a.reserve(xs.size());
  vars.s.reserve(xs.size());
  vars.o.reserve(xs.size());
  const Matrix* prev = &s0;
  for (const Matrix& x : xs) {
    CellOut cell = forward_cell(x, *prev, params);
    vars.a.push_back(std::move(cell.a));
    vars.s.push_back(std::move(cell.s));
    vars.o.push_back(std::move(cell.o));
    prev = &vars.s.back();
  }
  return vars;
}

Matrix softmax(const Matrix& o) {
  Matrix p = o;
  double m = p[0];
  for (std::size_t i = 1; i < p.size(); ++i) m = std::max(m, p[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(p[i] - m);
    z += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= z;
  return p;
}

double loss_eval(const LossSpec& spec, const Matrix& o, const Target& target) {
  if (spec.kind == LossKind::kSquared) {
    const Matrix& y = std::get<Matrix>(target);
    require_same_shape(o, y, "loss_eval(squared)");
    return 0.5 * norm_sq(sub(o, y));
  }
  // Both cross-entropy kinds evaluate the raw value; smoothing is a trace concern.
  const int label = target_label(target, o.rows(), "loss_eval");
  double m = o[0];
  for (std::size_t i = 1; i < o.size(); ++i) m = std::max(m, o[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < o.size(); ++i) z += std::exp(o[i] - m);
  return m + std::log(z) - o[static_cast<std::size_t>(label)];
}

Matrix loss_grad(const LossSpec& spec, const Matrix& o, const Target& target) {
  if (spec.kind == LossKind::kSquared) {
    const Matrix& y = std::get<Matrix>(target);
    require_same_shape(o, y, "loss_grad(squared)");
    return sub(o, y);
  }
  const int label = target_label(target, o.rows(), "loss_grad");
  Matrix g = softmax(o);
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

double regularizer_eval(const Matrix& w, double alpha) {
  if (alpha < 0.0) throw config_error("regularizer_eval: alpha must be >= 0");
  return 0.5 * alpha * norm_sq(w);
}

RnnParams init_params(const Dims& dims, std::uint64_t seed, double scale) {
  if (dims.d_x == 0 || dims.d_h == 0 || dims.d_o == 0) {
    throw config_error("init_params: dims must be positive");
  }
  if (!(scale > 0.0)) throw config_error("init_params: scale must be > 0");
  GaussianSource src(seed);
  RnnParams p;
  p.u = Matrix(dims.d_h, dims.d_x);
  p.w = Matrix(dims.d_h, dims.d_h);
  p.v = Matrix(dims.d_o, dims.d_h);
  fill_gaussian(p.u, src, scale);
  fill_gaussian(p.w, src, scale);
  fill_gaussian(p.v, src, scale);
  p.b = Matrix(dims.d_h, 1);
  p.c = Matrix(dims.d_o, 1);
  return p;
}

Matrix one_hot(std::size_t index, std::size_t dim) {
  if (index >= dim) {
    throw config_error("one_hot: index " + std::to_string(index) + " out of range [0," +
                       std::to_string(dim) + ")");
  }
  Matrix m(dim, 1);
  m[index] = 1.0;
  return m;
}

SequenceLoss sequence_loss(const RnnParams& params, const std::vector<Matrix>& xs,
                           const SequenceTargets& targets, const LossSpec& spec) {
  if (targets.size() != xs.size()) {
    throw shape_error("sequence_loss: " + std::to_string(targets.size()) + " target slots for " +
                      std::to_string(xs.size()) + " steps");
  }
  const Matrix s0(params.u.rows(), 1);
  UnfoldedVars vars = forward_sequence(xs, params, s0);
  SequenceLoss out;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (!targets[t].has_value()) continue;
    out.total += loss_eval(spec, vars.o[t], *targets[t]);
    ++out.steps;
  }
  return out;
}

}  // namespace admmrnn
