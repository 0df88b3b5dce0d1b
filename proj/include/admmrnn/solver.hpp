#ifndef ADMMRNN_SOLVER_HPP
#define ADMMRNN_SOLVER_HPP

#include <functional>
#include <vector>

#include "admmrnn/model.hpp"

namespace admmrnn {

struct AdmmHyper {
  double nu = 1e-6;
  double rho1 = 1.0;
  double rho2 = 1.0;
  double rho3 = 1.0;
  double r = 1.0;
  double alpha = 0.0;
  // Folding the s_N/f(a_N) coupling into the s_N step keeps its multiplier
  // bounded; without it the pair never reconciles once the output pull
  // leaves tanh range. Off reproduces the literal decoupled step.
  bool include_rho2_in_sN = true;
  double lin_threshold = 0.1;       // |a| below this uses the tanh(a)=a shortcut

  void validate() const;
};

struct Multipliers {
  Matrix l1;  // d_h x 1, pairs with a_N coupling
  Matrix l2;  // d_h x 1, pairs with s_N coupling
  Matrix l3;  // d_o x 1, pairs with o_N coupling
};

struct AdmmState {
  RnnParams params;
  UnfoldedVars vars;
  Multipliers duals;
  AdmmHyper hyper;
  long iteration = 0;
};

Multipliers zero_multipliers(const Dims& dims);

// Violations of the three cell constraints at the final timestep.
struct CouplingResiduals {
  Matrix r1;  // a_N - u x_N - w s_{N-1} - b
  Matrix r2;  // s_N - tanh(a_N)
  Matrix r3;  // o_N - v s_N - c
};
CouplingResiduals coupling_residuals(const AdmmState& state, const std::vector<Matrix>& xs);

// Penalty-plus-multiplier part of the augmented Lagrangian.
double eval_phi(const AdmmState& state, const std::vector<Matrix>& xs);
// Full augmented Lagrangian: R(o) + Omega(w) + phi.
double eval_lagrangian(const AdmmState& state, const std::vector<Matrix>& xs,
                       const SequenceTargets& targets, const LossSpec& loss);

// Subproblem updates. Timesteps t are 1-based; each call reads the current
// state and returns the new value for its block only.
Matrix update_u(const AdmmState& state, const std::vector<Matrix>& xs);
Matrix update_w(const AdmmState& state, const std::vector<Matrix>& xs);
Matrix update_b(const AdmmState& state, const std::vector<Matrix>& xs);
Matrix update_a(const AdmmState& state, const std::vector<Matrix>& xs, std::size_t t);
Matrix update_s(const AdmmState& state, const std::vector<Matrix>& xs, std::size_t t);
Matrix update_v(const AdmmState& state, const std::vector<Matrix>& xs);
Matrix update_c(const AdmmState& state, const std::vector<Matrix>& xs);
Matrix update_o(const AdmmState& state, const std::vector<Matrix>& xs,
                const SequenceTargets& targets, const LossSpec& loss, std::size_t t);
Multipliers update_multipliers(const AdmmState& state, const std::vector<Matrix>& xs);

// One outer iteration: per timestep a backward sweep o,c,v,s,a,b,w,u followed
// by the reversed sweep u,w,b,a,s,v,c,o; multipliers update once at the end.
AdmmState admm_iteration(AdmmState state, const std::vector<Matrix>& xs,
                         const SequenceTargets& targets, const LossSpec& loss);

// One sequence of a shared-parameter batch: its inputs, targets, and the
// per-sequence blocks that persist across iterations.
struct SequenceProblem {
  const std::vector<Matrix>* xs = nullptr;
  const SequenceTargets* targets = nullptr;
  UnfoldedVars vars;
  Multipliers duals;
};

// One outer iteration over a batch: auxiliary blocks sweep per sequence
// (backward then forward), the tied parameters solve their batch
// subproblems after each sweep, and every sequence's multipliers update
// once at the end. With a single sequence this matches admm_iteration up to
// the interleaving of parameter updates inside the timestep loop.
RnnParams admm_batch_iteration(RnnParams params, const AdmmHyper& hyper,
                               std::vector<SequenceProblem>& batch, const LossSpec& loss);

// Squared distance between two states over theta = (u,w,b,a,s,v,c,o).
double theta_distance_sq(const AdmmState& prev, const AdmmState& next);

// Running minimum of squared successive-step distances.
class StepTracker {
 public:
  double observe(double step_sq);
  double value() const;
  long count() const { return count_; }

 private:
  double min_ = 0.0;
  long count_ = 0;
};

struct ConvergenceReport {
  std::vector<double> step_sq;     // per transition
  std::vector<double> m_k;         // running min, per transition
  std::vector<double> k_m_k;       // k * m_k
  std::vector<double> res1, res2, res3;  // per state
  std::vector<double> lagrangian;        // per state
};
ConvergenceReport convergence_metrics(const std::vector<AdmmState>& history,
                                      const std::vector<Matrix>& xs,
                                      const SequenceTargets& targets, const LossSpec& loss);

// Empirical Lipschitz constant of a loss gradient from sampled outputs.
// Coincident pairs are skipped; with no usable pair this throws.
double estimate_lipschitz(const std::function<Matrix(const Matrix&)>& grad,
                          const std::vector<Matrix>& samples);

// Largest squared input norm; G = r I - rho1 x x' is PSD iff r >= rho1 * this.
double max_input_norm_sq(const std::vector<Matrix>& xs);

}  // namespace admmrnn

#endif
