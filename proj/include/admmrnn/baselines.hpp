#ifndef ADMMRNN_BASELINES_HPP
#define ADMMRNN_BASELINES_HPP

#include <string>
#include <vector>

#include "admmrnn/model.hpp"

namespace admmrnn {

enum class OptKind { kSgd, kMomentum, kAdagrad, kRmsprop, kAdam };

OptKind opt_kind_from_string(const std::string& name);
std::string to_string(OptKind kind);

struct OptimizerConfig {
  OptKind kind = OptKind::kSgd;
  double learning_rate = 0.1;
  double momentum = 0.9;     // momentum beta
  double rms_decay = 0.9;    // rmsprop decay
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;    // 0 disables clipping

  void validate() const;
};

// Common default learning rates per kind (the experiments leave them unstated).
OptimizerConfig default_optimizer(OptKind kind);

struct GradientSet {
  Matrix u, w, b, v, c;

  static GradientSet zeros_like(const RnnParams& p);
  double norm() const;
};

struct OptimizerState {
  long step = 0;
  GradientSet first;   // momentum buffer / first moment
  GradientSet second;  // squared-gradient accumulator / second moment

  static OptimizerState zeros_like(const RnnParams& p);
};

// Exact reverse-mode gradient of the total loss over all targeted steps,
// accumulating tied-weight contributions across the unrolled sequence.
GradientSet bptt_gradient(const RnnParams& params, const std::vector<Matrix>& xs,
                          const SequenceTargets& targets, const LossSpec& loss);

// Central-difference gradient of the same total loss; the test oracle.
GradientSet fd_gradient(const RnnParams& params, const std::vector<Matrix>& xs,
                        const SequenceTargets& targets, const LossSpec& loss, double h);

// In-place global-norm clipping; returns the pre-clip norm.
double clip_gradients(GradientSet& grads, double clip_norm);

struct StepResult {
  RnnParams params;
  OptimizerState state;
};
StepResult optimizer_step(const OptimizerConfig& config, const RnnParams& params,
                          const GradientSet& grads, OptimizerState state);

}  // namespace admmrnn

#endif
