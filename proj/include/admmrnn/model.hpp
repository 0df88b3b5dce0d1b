#ifndef ADMMRNN_MODEL_HPP
#define ADMMRNN_MODEL_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "admmrnn/matrix.hpp"

namespace admmrnn {

struct Dims {
  std::size_t d_x = 1;
  std::size_t d_h = 1;
  std::size_t d_o = 1;
};

// Tied cell parameters, shared across every unfolded timestep.
struct RnnParams {
  Matrix u;  // d_h x d_x
  Matrix w;  // d_h x d_h
  Matrix b;  // d_h x 1
  Matrix v;  // d_o x d_h
  Matrix c;  // d_o x 1

  Dims dims() const { return Dims{u.cols(), u.rows(), v.rows()}; }
};

// Per-timestep auxiliary variables of the unfolded network.
struct UnfoldedVars {
  Matrix s0;              // d_h x 1, fixed
  std::vector<Matrix> a;  // N entries, d_h x 1
  std::vector<Matrix> s;  // N entries, d_h x 1
  std::vector<Matrix> o;  // N entries, d_o x 1

  std::size_t n() const { return a.size(); }
  // s_{t-1} for 1-based timestep t
  const Matrix& s_prev(std::size_t t) const { return t == 1 ? s0 : s[t - 2]; }
};

enum class LossKind { kSquared, kCrossEntropy, kSmoothedCrossEntropy };

struct LossSpec {
  LossKind kind = LossKind::kSquared;
  double smoothing = 0.999;  // reported-trace smoothing only, never an optimization target
};

// A class index for cross-entropy, a dense column for squared loss.
using Target = std::variant<int, Matrix>;

// One target slot per timestep; empty slots contribute no loss.
using SequenceTargets = std::vector<std::optional<Target>>;

struct CellOut {
  Matrix a;
  Matrix s;
  Matrix o;
};

CellOut forward_cell(const Matrix& x_t, const Matrix& s_prev, const RnnParams& params);
UnfoldedVars forward_sequence(const std::vector<Matrix>& xs, const RnnParams& params,
                              const Matrix& s0);

double loss_eval(const LossSpec& spec, const Matrix& o, const Target& target);
Matrix loss_grad(const LossSpec& spec, const Matrix& o, const Target& target);
Matrix softmax(const Matrix& o);

double regularizer_eval(const Matrix& w, double alpha);

// Gaussian(0, scale^2) for u, w, v from a seeded generator; b and c zero.
RnnParams init_params(const Dims& dims, std::uint64_t seed, double scale);

Matrix one_hot(std::size_t index, std::size_t dim);

// Total loss of the forward pass over every targeted step; second member is
// the number of targeted steps.
struct SequenceLoss {
  double total = 0.0;
  std::size_t steps = 0;
  double mean() const { return steps == 0 ? 0.0 : total / static_cast<double>(steps); }
};
SequenceLoss sequence_loss(const RnnParams& params, const std::vector<Matrix>& xs,
                           const SequenceTargets& targets, const LossSpec& spec);

// Exponential moving average used for the reported loss trace.
class SmoothedTrace {
 public:
  explicit SmoothedTrace(double factor = 0.999) : factor_(factor) {}
  double update(double raw) {
    value_ = started_ ? factor_ * value_ + (1.0 - factor_) * raw : raw;
    started_ = true;
    return value_;
  }
  bool started() const { return started_; }
  double value() const { return value_; }

 private:
  double factor_;
  bool started_ = false;
  double value_ = 0.0;
};

}  // namespace admmrnn

#endif
