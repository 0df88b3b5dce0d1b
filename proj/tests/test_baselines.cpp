#include <doctest.h>

#include <cmath>
#include <random>

#include "admmrnn/baselines.hpp"
#include "admmrnn/check.hpp"
#include "admmrnn/errors.hpp"

using namespace admmrnn;

namespace {

constexpr LossSpec kSquared{LossKind::kSquared, 0.0};

RnnParams scalar_params(double u, double w, double b, double v, double c) {
  RnnParams p;
  p.u = Matrix(1, 1, {u});
  p.w = Matrix(1, 1, {w});
  p.b = Matrix(1, 1, {b});
  p.v = Matrix(1, 1, {v});
  p.c = Matrix(1, 1, {c});
  return p;
}

}  // namespace

TEST_CASE("bptt gradient is zero on the all-zero instance") {
  const RnnParams p = scalar_params(0, 0, 0, 0, 0);
  const std::vector<Matrix> xs(3, Matrix(1, 1));
  SequenceTargets targets(3);
  targets[2] = Target{Matrix(1, 1)};
  const GradientSet g = bptt_gradient(p, xs, targets, kSquared);
  CHECK(g.norm() == 0.0);
}

TEST_CASE("bptt matches the hand chain rule on a scalar cell") {
  const double u = 0.7, w = -0.3, b = 0.2, v = 1.1, c = -0.4;
  const double x = 0.6, y = 0.9;
  const RnnParams p = scalar_params(u, w, b, v, c);
  SequenceTargets targets = {Target{Matrix(1, 1, {y})}};
  const GradientSet g = bptt_gradient(p, {Matrix(1, 1, {x})}, targets, kSquared);

  // L = 1/2 (v tanh(u x + b) + c - y)^2 with s0 = 0
  const double a = u * x + b;
  const double s = std::tanh(a);
  const double e = v * s + c - y;
  CHECK(g.c[0] == doctest::Approx(e).epsilon(1e-10));
  CHECK(g.v[0] == doctest::Approx(e * s).epsilon(1e-10));
  CHECK(g.b[0] == doctest::Approx(e * v * (1 - s * s)).epsilon(1e-10));
  CHECK(g.u[0] == doctest::Approx(e * v * (1 - s * s) * x).epsilon(1e-10));
  CHECK(g.w[0] == 0.0);  // s0 = 0 kills the w path at N=1
}

TEST_CASE("bptt agrees with central differences on random instances") {
  const check::GradCheckResult result = check::run_gradcheck(10, 1234);
  CHECK(result.pass);
  CHECK(result.max_rel_err <= 1e-5);
}

TEST_CASE("fd gradient is exact on a quadratic coordinate") {
  // with v=1, u=w=b=0 the loss is quadratic in c alone
  const RnnParams p = scalar_params(0, 0, 0, 1, 0.3);
  SequenceTargets targets = {Target{Matrix(1, 1, {0.8})}};
  const GradientSet g = fd_gradient(p, {Matrix(1, 1, {0.5})}, targets, kSquared, 1e-4);
  CHECK(g.c[0] == doctest::Approx(0.3 - 0.8).epsilon(1e-10));
  CHECK_THROWS_AS(fd_gradient(p, {Matrix(1, 1)}, targets, kSquared, 0.0), config_error);
}

TEST_CASE("fd truncation error shrinks ~4x when h halves") {
  // tanh makes the third derivative nonzero, so the h^2 term dominates
  const RnnParams p = scalar_params(1.1, 0, 0.4, 1.3, 0);
  SequenceTargets targets = {Target{Matrix(1, 1, {-0.9})}};
  const std::vector<Matrix> xs = {Matrix(1, 1, {0.8})};
  const double exact = bptt_gradient(p, xs, targets, kSquared).u[0];
  const double err_h = std::fabs(fd_gradient(p, xs, targets, kSquared, 1e-3).u[0] - exact);
  const double err_h2 = std::fabs(fd_gradient(p, xs, targets, kSquared, 5e-4).u[0] - exact);
  CHECK(err_h / err_h2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("optimizer kinds parse and validate") {
  CHECK(opt_kind_from_string("adam") == OptKind::kAdam);
  CHECK_THROWS_AS(opt_kind_from_string("newton"), config_error);
  OptimizerConfig bad = default_optimizer(OptKind::kSgd);
  bad.learning_rate = 0.0;
  const RnnParams p = scalar_params(0, 0, 0, 0, 0);
  CHECK_THROWS_AS(
      optimizer_step(bad, p, GradientSet::zeros_like(p), OptimizerState::zeros_like(p)),
      config_error);
}

TEST_CASE("sgd takes a plain scaled step") {
  const RnnParams p = scalar_params(1.0, 0, 0, 0, 0);
  GradientSet g = GradientSet::zeros_like(p);
  g.u[0] = 1.0;
  OptimizerConfig cfg = default_optimizer(OptKind::kSgd);
  const StepResult out = optimizer_step(cfg, p, g, OptimizerState::zeros_like(p));
  CHECK(out.params.u[0] == doctest::Approx(0.9));
}

TEST_CASE("adam first step is roughly lr in magnitude") {
  const RnnParams p = scalar_params(0.5, 0, 0, 0, 0);
  GradientSet g = GradientSet::zeros_like(p);
  g.u[0] = 0.37;
  OptimizerConfig cfg = default_optimizer(OptKind::kAdam);
  const StepResult out = optimizer_step(cfg, p, g, OptimizerState::zeros_like(p));
  const double step = p.u[0] - out.params.u[0];

  // hand-evaluated recurrences at t=1
  const double m_hat = (1.0 - cfg.adam_beta1) * g.u[0] / (1.0 - cfg.adam_beta1);
  const double v_hat = (1.0 - cfg.adam_beta2) * g.u[0] * g.u[0] / (1.0 - cfg.adam_beta2);
  const double expected = cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  CHECK(step == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::fabs(step) == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
}

TEST_CASE("adagrad with zero gradient changes nothing") {
  const RnnParams p = scalar_params(0.5, -0.2, 0.1, 0.9, 0.0);
  OptimizerConfig cfg = default_optimizer(OptKind::kAdagrad);
  OptimizerState state = OptimizerState::zeros_like(p);
  state.second.u[0] = 0.25;  // pre-seeded accumulator
  const StepResult out = optimizer_step(cfg, p, GradientSet::zeros_like(p), state);
  CHECK(out.params.u[0] == 0.5);
  CHECK(out.state.second.u[0] == 0.25);
}

TEST_CASE("all five optimizers hold parameters on zero gradients") {
  const RnnParams p = scalar_params(0.4, -0.6, 0.2, 1.2, -0.8);
  for (OptKind kind : {OptKind::kSgd, OptKind::kMomentum, OptKind::kAdagrad, OptKind::kRmsprop,
                       OptKind::kAdam}) {
    const OptimizerConfig cfg = default_optimizer(kind);
    const StepResult out =
        optimizer_step(cfg, p, GradientSet::zeros_like(p), OptimizerState::zeros_like(p));
    CHECK(out.params.u[0] == p.u[0]);
    CHECK(out.params.w[0] == p.w[0]);
    CHECK(out.params.b[0] == p.b[0]);
    CHECK(out.params.v[0] == p.v[0]);
    CHECK(out.params.c[0] == p.c[0]);
  }
}

TEST_CASE("global-norm clipping rescales and reports the raw norm") {
  const RnnParams p = scalar_params(0, 0, 0, 0, 0);
  GradientSet g = GradientSet::zeros_like(p);
  g.u[0] = 3.0;
  g.v[0] = 4.0;
  const double raw = clip_gradients(g, 1.0);
  CHECK(raw == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(1.0));

  GradientSet unclipped = GradientSet::zeros_like(p);
  unclipped.u[0] = 3.0;
  CHECK(clip_gradients(unclipped, 0.0) == doctest::Approx(3.0));
  CHECK(unclipped.u[0] == 3.0);
}
