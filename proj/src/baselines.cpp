#include "admmrnn/baselines.hpp"

#include <cmath>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

using ParamField = Matrix RnnParams::*;
using GradField = Matrix GradientSet::*;

constexpr ParamField kParamFields[] = {&RnnParams::u, &RnnParams::w, &RnnParams::b,
                                       &RnnParams::v, &RnnParams::c};
constexpr GradField kGradFields[] = {&GradientSet::u, &GradientSet::w, &GradientSet::b,
                                     &GradientSet::v, &GradientSet::c};

}  // namespace

OptKind opt_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptKind::kSgd;
  if (name == "momentum") return OptKind::kMomentum;
  if (name == "adagrad") return OptKind::kAdagrad;
  if (name == "rmsprop") return OptKind::kRmsprop;
  if (name == "adam") return OptKind::kAdam;
  throw config_error("unknown optimizer kind: " + name);
}

std::string to_string(OptKind kind) {
  switch (kind) {
    case OptKind::kSgd: return "sgd";
    case OptKind::kMomentum: return "momentum";
    case OptKind::kAdagrad: return "adagrad";
    case OptKind::kRmsprop: return "rmsprop";
    case OptKind::kAdam: return "adam";
  }
  throw config_error("unknown optimizer kind");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw config_error("OptimizerConfig: learning rate must be > 0");
  if (!(epsilon > 0.0)) throw config_error("OptimizerConfig: epsilon must be > 0");
  auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (kind == OptKind::kMomentum && !in_unit(momentum)) {
    throw config_error("OptimizerConfig: momentum must be in (0,1)");
  }
  if (kind == OptKind::kRmsprop && !in_unit(rms_decay)) {
    throw config_error("OptimizerConfig: rms decay must be in (0,1)");
  }
  if (kind == OptKind::kAdam && (!in_unit(adam_beta1) || !in_unit(adam_beta2))) {
    throw config_error("OptimizerConfig: adam betas must be in (0,1)");
  }
  if (clip_norm < 0.0) throw config_error("OptimizerConfig: clip norm must be >= 0");
}

OptimizerConfig default_optimizer(OptKind kind) {
  OptimizerConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case OptKind::kSgd:
    case OptKind::kMomentum: cfg.learning_rate = 0.1; break;
    case OptKind::kAdagrad: cfg.learning_rate = 0.01; break;
    case OptKind::kRmsprop:
    case OptKind::kAdam: cfg.learning_rate = 0.001; break;
  }
  return cfg;
}

GradientSet GradientSet::zeros_like(const RnnParams& p) {
  return GradientSet{Matrix(p.u.rows(), p.u.cols()), Matrix(p.w.rows(), p.w.cols()),
                     Matrix(p.b.rows(), p.b.cols()), Matrix(p.v.rows(), p.v.cols()),
                     Matrix(p.c.rows(), p.c.cols())};
}

double GradientSet::norm() const {
  return std::sqrt(norm_sq(u) + norm_sq(w) + norm_sq(b) + norm_sq(v) + norm_sq(c));
}

OptimizerState OptimizerState::zeros_like(const RnnParams& p) {
  return OptimizerState{0, GradientSet::zeros_like(p), GradientSet::zeros_like(p)};
}

GradientSet bptt_gradient(const RnnParams& params, const std::vector<Matrix>& xs,
                          const SequenceTargets& targets, const LossSpec& loss) {
  if (targets.size() != xs.size()) {
    throw shape_error("bptt_gradient: " + std::to_string(targets.size()) + " target slots for " +
                      std::to_string(xs.size()) + " steps");
  }
  const std::size_t n = xs.size();
  const Matrix s0(params.u.rows(), 1);
  UnfoldedVars vars = forward_sequence(xs, params, s0);

  GradientSet g = GradientSet::zeros_like(params);
  const Matrix vt = transpose(params.v);
  const Matrix wt = transpose(params.w);
  Matrix carry(params.u.rows(), 1);  // w' da_{t+1}

  for (std::size_t t = n; t >= 1; --t) {
    Matrix ds = carry;
    if (targets[t - 1].has_value()) {
      Matrix dout = loss_grad(loss, vars.o[t - 1], *targets[t - 1]);
      g.v = add(g.v, matmul(dout, transpose(vars.s[t - 1])));
      g.c = add(g.c, dout);
      ds = add(ds, matmul(vt, dout));
    }
    // da = ds .* (1 - s^2)
    Matrix da = ds;
    for (std::size_t i = 0; i < da.size(); ++i) {
      const double s = vars.s[t - 1][i];
      da[i] *= 1.0 - s * s;
    }
    g.u = add(g.u, matmul(da, transpose(xs[t - 1])));
    g.w = add(g.w, matmul(da, transpose(vars.s_prev(t))));
    g.b = add(g.b, da);
    carry = matmul(wt, da);
  }
  return g;
}

GradientSet fd_gradient(const RnnParams& params, const std::vector<Matrix>& xs,
                        const SequenceTargets& targets, const LossSpec& loss, double h) {
  if (!(h > 0.0)) throw config_error("fd_gradient: h must be > 0");
  GradientSet g = GradientSet::zeros_like(params);
  RnnParams probe = params;
  for (std::size_t f = 0; f < 5; ++f) {
    Matrix& field = probe.*kParamFields[f];
    Matrix& out = g.*kGradFields[f];
    for (std::size_t i = 0; i < field.size(); ++i) {
      const double saved = field[i];
      field[i] = saved + h;
      const double plus = sequence_loss(probe, xs, targets, loss).total;
      field[i] = saved - h;
      const double minus = sequence_loss(probe, xs, targets, loss).total;
      field[i] = saved;
      out[i] = (plus - minus) / (2.0 * h);
    }
  }
  return g;
}

double clip_gradients(GradientSet& grads, double clip_norm) {
  const double total = grads.norm();
  if (clip_norm > 0.0 && total > clip_norm) {
    const double factor = clip_norm / total;
    for (std::size_t f = 0; f < 5; ++f) {
      Matrix& m = grads.*kGradFields[f];
      for (std::size_t i = 0; i < m.size(); ++i) m[i] *= factor;
    }
  }
  return total;
}

StepResult optimizer_step(const OptimizerConfig& cfg, const RnnParams& params,
                          const GradientSet& grads, OptimizerState state) {
  cfg.validate();
  RnnParams next = params;
  ++state.step;

  for (std::size_t f = 0; f < 5; ++f) {
    Matrix& p = next.*kParamFields[f];
    const Matrix& g = grads.*kGradFields[f];
    require_same_shape(p, g, "optimizer_step");
    Matrix& m1 = state.first.*kGradFields[f];
    Matrix& m2 = state.second.*kGradFields[f];

    switch (cfg.kind) {
      case OptKind::kSgd:
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
        break;
      case OptKind::kMomentum:
        for (std::size_t i = 0; i < p.size(); ++i) {
          m1[i] = cfg.momentum * m1[i] + g[i];
          p[i] -= cfg.learning_rate * m1[i];
        }
        break;
      case OptKind::kAdagrad:
        for (std::size_t i = 0; i < p.size(); ++i) {
          m2[i] += g[i] * g[i];
          p[i] -= cfg.learning_rate * g[i] / (std::sqrt(m2[i]) + cfg.epsilon);
        }
        break;
      case OptKind::kRmsprop:
        for (std::size_t i = 0; i < p.size(); ++i) {
          m2[i] = cfg.rms_decay * m2[i] + (1.0 - cfg.rms_decay) * g[i] * g[i];
          p[i] -= cfg.learning_rate * g[i] / (std::sqrt(m2[i]) + cfg.epsilon);
        }
        break;
      case OptKind::kAdam: {
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
        for (std::size_t i = 0; i < p.size(); ++i) {
          m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * g[i];
          m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
          const double mhat = m1[i] / bc1;
          const double vhat = m2[i] / bc2;
          p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
        break;
      }
    }
    p.check_finite("optimizer_step");
  }
  return StepResult{std::move(next), std::move(state)};
}

}  // namespace admmrnn
