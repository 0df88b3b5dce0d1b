#include "admmrnn/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

void require_step(std::size_t t, std::size_t n, const char* where) {
  if (t < 1 || t > n) {
    throw config_error(std::string(where) + ": timestep " + std::to_string(t) +
                       " out of range [1," + std::to_string(n) + "]");
  }
}

// e_t = a_t - u x_t - w s_{t-1} - b, 1-based t
Matrix cell_residual(const AdmmState& st, const std::vector<Matrix>& xs, std::size_t t) {
  const Matrix& a = st.vars.a[t - 1];
  Matrix pred = add(add(matmul(st.params.u, xs[t - 1]), matmul(st.params.w, st.vars.s_prev(t))),
                    st.params.b);
  return sub(a, pred);
}

// o_t - v s_t - c
Matrix output_residual(const AdmmState& st, std::size_t t) {
  return sub(st.vars.o[t - 1], add(matmul(st.params.v, st.vars.s[t - 1]), st.params.c));
}

// Solves x + ln x = L for x > 0. The map is increasing and concave, so
// Newton from either side converges monotonically without sign trouble.
double solve_x_plus_logx(double target) {
  double x = target > 1.0 ? target - std::log(target) : std::exp(target - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double diff = x + std::log(x) - target;
    if (std::fabs(diff) <= 1e-14 * std::max(1.0, std::fabs(target))) break;
    x -= diff * x / (x + 1.0);
    if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  }
  return x;
}

// Exact solution of the cross-entropy prox through its scalar dual: with
// x_i = p_i / mu and shifted anchors c_i = z_i + [i==y]/mu, optimality
// reads x_i e^{x_i} = beta e^{c_i}, and beta solves sum_i x_i(beta) = 1/mu
// (monotone in beta). Solved in logs to avoid overflow; used to restart the
// Newton loop when backtracking stalls.
Matrix cross_entropy_prox_dual(const Matrix& z, int label, double mu) {
  const std::size_t d = z.rows();
  Matrix shifted = z;
  shifted[static_cast<std::size_t>(label)] += 1.0 / mu;

  const auto sum_x = [&](double log_beta, Matrix* x_out) {
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double x = solve_x_plus_logx(log_beta + shifted[i]);
      if (x_out) (*x_out)[i] = x;
      total += x;
    }
    return total;
  };

  const double want = 1.0 / mu;
  double lo = -shifted[static_cast<std::size_t>(label)];  // x_label = W(e^0) < 1 <= 1/mu
  double span = 1.0;
  while (sum_x(lo, nullptr) >= want) {
    lo -= span;
    span *= 2.0;
  }
  double hi = lo;
  span = 1.0;
  while (sum_x(hi, nullptr) < want) {
    hi += span;
    span *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (sum_x(mid, nullptr) < want ? lo : hi) = mid;
  }
  Matrix x(d, 1);
  sum_x(0.5 * (lo + hi), &x);
  Matrix o(d, 1);
  for (std::size_t i = 0; i < d; ++i) o[i] = shifted[i] - x[i];
  return o;
}

// Cross-entropy prox: argmin_o CE(o, label) + mu/2 ||o - z||^2 by damped Newton.
// The Hessian diag(p) - p p' + mu I inverts in O(d) via Sherman-Morrison.
// Backtracking accepts on objective decrease or on gradient-norm decrease:
// across saturated-softmax plateaus only the objective moves, while at the
// fp floor only the gradient change stays measurable.
Matrix cross_entropy_prox(const Matrix& z, int label, double mu) {
  const std::size_t d = z.rows();
  const LossSpec ce{LossKind::kCrossEntropy, 0.0};
  const auto objective = [&](const Matrix& o) {
    return loss_eval(ce, o, Target{label}) + 0.5 * mu * norm_sq(sub(o, z));
  };
  const auto grad_at = [&](const Matrix& o) {
    Matrix g = softmax(o);
    g[static_cast<std::size_t>(label)] -= 1.0;
    for (std::size_t i = 0; i < d; ++i) g[i] += mu * (o[i] - z[i]);
    return g;
  };

  Matrix o = z;
  Matrix grad = grad_at(o);
  double grad_norm = norm_fro(grad);
  for (int it = 0; it < 50; ++it) {
    if (grad_norm <= 1e-10) return o;
    const Matrix p = softmax(o);

    // delta = -H^{-1} grad with H = D - p p', D = diag(p) + mu I.
    // 1 - p'D^{-1}p cancels catastrophically for small mu; the equivalent
    // sum(p_i mu / (p_i + mu)) is all-positive and stable.
    Matrix dinv_g(d, 1), dinv_p(d, 1);
    double ptg = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double di = p[i] + mu;
      dinv_g[i] = grad[i] / di;
      dinv_p[i] = p[i] / di;
      ptg += p[i] * dinv_g[i];
      denom += p[i] * mu / di;
    }
    const double corr = ptg / denom;
    Matrix delta(d, 1);
    for (std::size_t i = 0; i < d; ++i) delta[i] = -(dinv_g[i] + dinv_p[i] * corr);

    // saturated-softmax anchors invert the near-singular mu-direction into
    // huge moves; cap the step at logit scale so progress stays measurable
    const double widest = max_abs(delta);
    if (widest > 20.0) {
      for (std::size_t i = 0; i < d; ++i) delta[i] *= 20.0 / widest;
    }

    double slope = 0.0;
    for (std::size_t i = 0; i < d; ++i) slope += grad[i] * delta[i];
    const double f0 = objective(o);
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(f0);

    // Two merit regimes: across softmax plateaus only the objective moves;
    // at the fp floor only the gradient does. Track the Armijo-accepted
    // trial and the lowest-gradient trial, then keep whichever the
    // objective can still distinguish (gradient norm breaks ties; strong
    // convexity makes it a sound certificate).
    double step = 1.0;
    Matrix best = o;
    Matrix best_grad = grad;
    double best_norm = grad_norm;
    bool have_armijo = false;
    Matrix armijo, armijo_grad;
    double armijo_norm = 0.0, armijo_obj = 0.0;
    Matrix trial = o;
    for (int halvings = 0; halvings < 40; ++halvings) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = o[i] + step * delta[i];
      const Matrix trial_grad = grad_at(trial);
      const double trial_norm = norm_fro(trial_grad);
      if (trial_norm < best_norm) {
        best = trial;
        best_grad = trial_grad;
        best_norm = trial_norm;
      }
      const double f_trial = objective(trial);
      if (f_trial <= f0 + 1e-4 * step * slope + noise) {
        have_armijo = true;
        armijo = trial;
        armijo_grad = trial_grad;
        armijo_norm = trial_norm;
        armijo_obj = f_trial;
        break;
      }
      step *= 0.5;
    }
    if (have_armijo && armijo_obj < objective(best) - noise) {
      o = std::move(armijo);
      grad = std::move(armijo_grad);
      grad_norm = armijo_norm;
    } else {
      o = best;
      grad = best_grad;
      grad_norm = best_norm;
    }
  }

  // rescue: the scalar-dual solution is exact up to bisection resolution
  o = cross_entropy_prox_dual(z, label, mu);
  grad_norm = norm_fro(grad_at(o));
  if (grad_norm <= 1e-10) return o;
  throw numeric_error("cross_entropy_prox: no convergence in 50 Newton iterations, gradient norm " +
                      std::to_string(grad_norm));
}

}  // namespace

Matrix update_u(const AdmmState& st, const std::vector<Matrix>& xs) {
  const double nr = static_cast<double>(st.vars.n()) * st.hyper.r;
  return add(st.params.u, scale(u_step_numerator(st, xs), 1.0 / nr));
}

Matrix update_w(const AdmmState& st, const std::vector<Matrix>& xs) {
  const double nr = static_cast<double>(st.vars.n()) * st.hyper.r;
  return scale(add(scale(st.params.w, nr), w_step_numerator(st, xs)),
               1.0 / (st.hyper.alpha + nr));
}

Matrix update_b(const AdmmState& st, const std::vector<Matrix>& xs) {
  const AdmmHyper& h = st.hyper;
  const double denom = h.nu * static_cast<double>(st.vars.n() - 1) + h.rho1;
  return scale(b_numerator(st, xs), 1.0 / denom);
}

void AdmmHyper::validate() const {
  if (!(nu > 0.0)) throw config_error("AdmmHyper: nu must be > 0");
  if (!(rho1 > 0.0 && rho2 > 0.0 && rho3 > 0.0)) {
    throw config_error("AdmmHyper: rho1, rho2, rho3 must be > 0");
  }
  if (!(r > 0.0)) throw config_error("AdmmHyper: r must be > 0");
  if (alpha < 0.0) throw config_error("AdmmHyper: alpha must be >= 0");
  if (!(lin_threshold > 0.0)) throw config_error("AdmmHyper: lin_threshold must be > 0");
}

Multipliers zero_multipliers(const Dims& dims) {
  return Multipliers{Matrix(dims.d_h, 1), Matrix(dims.d_h, 1), Matrix(dims.d_o, 1)};
}

CouplingResiduals coupling_residuals(const AdmmState& st, const std::vector<Matrix>& xs) {
  const std::size_t n = st.vars.n();
  CouplingResiduals res;
  res.r1 = cell_residual(st, xs, n);
  res.r2 = sub(st.vars.s[n - 1], elementwise_tanh(st.vars.a[n - 1]));
  res.r3 = output_residual(st, n);
  return res;
}

double eval_phi(const AdmmState& st, const std::vector<Matrix>& xs) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  double phi = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    phi += 0.5 * h.nu *
           (norm_sq(cell_residual(st, xs, t)) +
            norm_sq(sub(st.vars.s[t - 1], elementwise_tanh(st.vars.a[t - 1]))) +
            norm_sq(output_residual(st, t)));
  }
  CouplingResiduals res = coupling_residuals(st, xs);
  phi += dot(st.duals.l1, res.r1) + dot(st.duals.l2, res.r2) + dot(st.duals.l3, res.r3);
  phi += 0.5 * h.rho1 * norm_sq(res.r1) + 0.5 * h.rho2 * norm_sq(res.r2) +
         0.5 * h.rho3 * norm_sq(res.r3);
  return phi;
}

double eval_lagrangian(const AdmmState& st, const std::vector<Matrix>& xs,
                       const SequenceTargets& targets, const LossSpec& loss) {
  double r_term = 0.0;
  for (std::size_t t = 0; t < st.vars.n(); ++t) {
    if (t < targets.size() && targets[t].has_value()) {
      r_term += loss_eval(loss, st.vars.o[t], *targets[t]);
    }
  }
  return r_term + regularizer_eval(st.params.w, st.hyper.alpha) + eval_phi(st, xs);
}

// Shared numerators of the tied-parameter subproblems; batch updates sum
// them across sequences.
Matrix u_step_numerator(const AdmmState& st, const std::vector<Matrix>& xs) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  Matrix step(st.params.u.rows(), st.params.u.cols());
  for (std::size_t t = 1; t < n; ++t) {
    step = add(step, scale(matmul(cell_residual(st, xs, t), transpose(xs[t - 1])), h.nu));
  }
  Matrix e_n = add(cell_residual(st, xs, n), scale(st.duals.l1, 1.0 / h.rho1));
  return add(step, scale(matmul(e_n, transpose(xs[n - 1])), h.rho1));
}

Matrix w_step_numerator(const AdmmState& st, const std::vector<Matrix>& xs) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  Matrix step(st.params.w.rows(), st.params.w.cols());
  for (std::size_t t = 1; t < n; ++t) {
    step = add(step, scale(matmul(cell_residual(st, xs, t), transpose(st.vars.s_prev(t))), h.nu));
  }
  Matrix e_n = add(cell_residual(st, xs, n), scale(st.duals.l1, 1.0 / h.rho1));
  return add(step, scale(matmul(e_n, transpose(st.vars.s_prev(n))), h.rho1));
}

Matrix b_numerator(const AdmmState& st, const std::vector<Matrix>& xs) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  Matrix numer(st.params.b.rows(), 1);
  for (std::size_t t = 1; t < n; ++t) {
    // d_t = a_t - u x_t - w s_{t-1} = e_t + b
    numer = add(numer, scale(add(cell_residual(st, xs, t), st.params.b), h.nu));
  }
  Matrix d_n = add(cell_residual(st, xs, n), st.params.b);
  return add(numer, scale(add(d_n, scale(st.duals.l1, 1.0 / h.rho1)), h.rho1));
}

Matrix v_step_numerator(const AdmmState& st) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  Matrix step(st.params.v.rows(), st.params.v.cols());
  for (std::size_t t = 1; t < n; ++t) {
    step = add(step, scale(matmul(output_residual(st, t), transpose(st.vars.s[t - 1])), h.nu));
  }
  Matrix res_n = add(output_residual(st, n), scale(st.duals.l3, 1.0 / h.rho3));
  return add(step, scale(matmul(res_n, transpose(st.vars.s[n - 1])), h.rho3));
}

Matrix c_numerator(const AdmmState& st) {
  const std::size_t n = st.vars.n();
  const AdmmHyper& h = st.hyper;
  Matrix numer(st.params.c.rows(), 1);
  for (std::size_t t = 1; t < n; ++t) {
    numer = add(numer, scale(add(output_residual(st, t), st.params.c), h.nu));
  }
  Matrix res_n = add(output_residual(st, n), st.params.c);
  return add(numer, scale(add(res_n, scale(st.duals.l3, 1.0 / h.rho3)), h.rho3));
}

Matrix update_a(const AdmmState& st, const std::vector<Matrix>& xs, std::size_t t) {
  const std::size_t n = st.vars.n();
  require_step(t, n, "update_a");
  const AdmmHyper& h = st.hyper;
  const Matrix& a = st.vars.a[t - 1];
  const Matrix& s = st.vars.s[t - 1];
  const bool small = max_abs(a) <= h.lin_threshold;

  if (t < n) {
    Matrix d = cell_residual(st, xs, t);
    if (small) {
      // (r a - nu d + nu s_t) / (r + nu)
      return scale(add(sub(scale(a, h.r), scale(d, h.nu)), scale(s, h.nu)), 1.0 / (h.r + h.nu));
    }
    Matrix out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double f = std::tanh(a[i]);
      const double g = 1.0 - f * f;
      out[i] = a[i] + h.nu * (g * (s[i] - f) - d[i]) / (h.r + h.nu * g * g);
    }
    return out;
  }

  Matrix d_prime = add(cell_residual(st, xs, n), scale(st.duals.l1, 1.0 / h.rho1));
  if (small) {
    Matrix target = add(s, scale(st.duals.l2, 1.0 / h.rho2));
    return scale(add(sub(scale(a, h.r), scale(d_prime, h.rho1)), scale(target, h.rho2)),
                 1.0 / (h.r + h.rho2));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = std::tanh(a[i]);
    const double g = 1.0 - f * f;
    const double mism = s[i] - f + st.duals.l2[i] / h.rho2;
    out[i] = a[i] + (h.rho2 * g * mism - h.rho1 * d_prime[i]) / (h.r + h.rho2 * g * g);
  }
  return out;
}

Matrix update_s(const AdmmState& st, const std::vector<Matrix>& xs, std::size_t t) {
  const std::size_t n = st.vars.n();
  require_step(t, n, "update_s");
  const AdmmHyper& h = st.hyper;
  const Matrix& s = st.vars.s[t - 1];
  const Matrix vt = transpose(st.params.v);

  if (t < n) {
    Matrix pull = matmul(vt, output_residual(st, t));
    Matrix f_a = elementwise_tanh(st.vars.a[t - 1]);
    return scale(add(add(scale(s, h.r), scale(pull, h.nu)), scale(f_a, h.nu)), 1.0 / (h.r + h.nu));
  }

  Matrix res = add(output_residual(st, n), scale(st.duals.l3, 1.0 / h.rho3));
  Matrix pull = matmul(vt, res);
  if (!h.include_rho2_in_sN) {
    return add(s, scale(pull, h.rho3 / h.r));
  }
  Matrix anchor = sub(elementwise_tanh(st.vars.a[n - 1]), scale(st.duals.l2, 1.0 / h.rho2));
  return scale(add(add(scale(s, h.r), scale(pull, h.rho3)), scale(anchor, h.rho2)),
               1.0 / (h.r + h.rho2));
}

Matrix update_v(const AdmmState& st, const std::vector<Matrix>& xs) {
  (void)xs;
  const double nr = static_cast<double>(st.vars.n()) * st.hyper.r;
  return add(st.params.v, scale(v_step_numerator(st), 1.0 / nr));
}

Matrix update_c(const AdmmState& st, const std::vector<Matrix>& xs) {
  (void)xs;
  const AdmmHyper& h = st.hyper;
  const double denom = h.nu * static_cast<double>(st.vars.n() - 1) + h.rho3;
  return scale(c_numerator(st), 1.0 / denom);
}

Matrix update_o(const AdmmState& st, const std::vector<Matrix>& xs,
                const SequenceTargets& targets, const LossSpec& loss, std::size_t t) {
  (void)xs;
  const std::size_t n = st.vars.n();
  require_step(t, n, "update_o");
  const AdmmHyper& h = st.hyper;

  Matrix anchor = add(matmul(st.params.v, st.vars.s[t - 1]), st.params.c);
  const double mu = (t < n) ? h.nu : h.rho3;
  if (t == n) anchor = sub(anchor, scale(st.duals.l3, 1.0 / h.rho3));

  const bool has_target = t - 1 < targets.size() && targets[t - 1].has_value();
  if (!has_target) return anchor;  // prox of the zero loss

  const Target& y = *targets[t - 1];
  if (loss.kind == LossKind::kSquared) {
    return scale(add(std::get<Matrix>(y), scale(anchor, mu)), 1.0 / (1.0 + mu));
  }
  return cross_entropy_prox(anchor, std::get<int>(y), mu);
}

Multipliers update_multipliers(const AdmmState& st, const std::vector<Matrix>& xs) {
  CouplingResiduals res = coupling_residuals(st, xs);
  const AdmmHyper& h = st.hyper;
  Multipliers out;
  out.l1 = st.duals.l1;
  out.l2 = st.duals.l2;
  out.l3 = st.duals.l3;
  for (std::size_t i = 0; i < out.l1.size(); ++i) out.l1[i] = st.duals.l1[i] + h.rho1 * res.r1[i];
  for (std::size_t i = 0; i < out.l2.size(); ++i) out.l2[i] = st.duals.l2[i] + h.rho2 * res.r2[i];
  for (std::size_t i = 0; i < out.l3.size(); ++i) out.l3[i] = st.duals.l3[i] + h.rho3 * res.r3[i];
  return out;
}

AdmmState admm_iteration(AdmmState st, const std::vector<Matrix>& xs,
                         const SequenceTargets& targets, const LossSpec& loss) {
  const std::size_t n = st.vars.n();
  if (xs.size() != n) {
    throw shape_error("admm_iteration: " + std::to_string(xs.size()) + " inputs for " +
                      std::to_string(n) + " unfolded steps");
  }
  st.hyper.validate();
  for (std::size_t t = 1; t <= n; ++t) {
    st.vars.o[t - 1] = update_o(st, xs, targets, loss, t);
    st.params.c = update_c(st, xs);
    st.params.v = update_v(st, xs);
    st.vars.s[t - 1] = update_s(st, xs, t);
    st.vars.a[t - 1] = update_a(st, xs, t);
    st.params.b = update_b(st, xs);
    st.params.w = update_w(st, xs);
    st.params.u = update_u(st, xs);

    st.params.u = update_u(st, xs);
    st.params.w = update_w(st, xs);
    st.params.b = update_b(st, xs);
    st.vars.a[t - 1] = update_a(st, xs, t);
    st.vars.s[t - 1] = update_s(st, xs, t);
    st.params.v = update_v(st, xs);
    st.params.c = update_c(st, xs);
    st.vars.o[t - 1] = update_o(st, xs, targets, loss, t);
  }
  st.duals = update_multipliers(st, xs);
  ++st.iteration;
  return st;
}

RnnParams admm_batch_iteration(RnnParams params, const AdmmHyper& hyper,
                               std::vector<SequenceProblem>& batch, const LossSpec& loss) {
  hyper.validate();
  if (batch.empty()) throw config_error("admm_batch_iteration: empty batch");
  const std::size_t count = batch.size();
  const std::size_t n = batch.front().vars.n();
  for (const SequenceProblem& seq : batch) {
    if (seq.vars.n() != n || seq.xs->size() != n) {
      throw shape_error("admm_batch_iteration: sequences must share the unfolded length");
    }
  }
  const double bnr = static_cast<double>(count) * static_cast<double>(n) * hyper.r;
  const double b_count = static_cast<double>(count);

  // tied parameters solve the summed subproblems, Gauss-Seidel within the block
  const auto update_params = [&](bool forward_order) {
    const auto for_each = [&](auto&& fn) {
      for (SequenceProblem& seq : batch) {
        AdmmState st{params, std::move(seq.vars), std::move(seq.duals), hyper, 0};
        fn(st, *seq.xs);
        seq.vars = std::move(st.vars);
        seq.duals = std::move(st.duals);
      }
    };
    const auto step_c = [&]() {
      Matrix numer(params.c.rows(), 1);
      for_each([&](const AdmmState& st, const std::vector<Matrix>&) {
        numer = add(numer, c_numerator(st));
      });
      params.c = scale(numer, 1.0 / (b_count * (hyper.nu * static_cast<double>(n - 1) + hyper.rho3)));
    };
    const auto step_v = [&]() {
      Matrix step(params.v.rows(), params.v.cols());
      for_each([&](const AdmmState& st, const std::vector<Matrix>&) {
        step = add(step, v_step_numerator(st));
      });
      params.v = add(params.v, scale(step, 1.0 / bnr));
    };
    const auto step_b = [&]() {
      Matrix numer(params.b.rows(), 1);
      for_each([&](const AdmmState& st, const std::vector<Matrix>& xs) {
        numer = add(numer, b_numerator(st, xs));
      });
      params.b = scale(numer, 1.0 / (b_count * (hyper.nu * static_cast<double>(n - 1) + hyper.rho1)));
    };
    const auto step_w = [&]() {
      Matrix numer(params.w.rows(), params.w.cols());
      for_each([&](const AdmmState& st, const std::vector<Matrix>& xs) {
        numer = add(numer, w_step_numerator(st, xs));
      });
      params.w = scale(add(scale(params.w, bnr), numer), 1.0 / (hyper.alpha + bnr));
    };
    const auto step_u = [&]() {
      Matrix step(params.u.rows(), params.u.cols());
      for_each([&](const AdmmState& st, const std::vector<Matrix>& xs) {
        step = add(step, u_step_numerator(st, xs));
      });
      params.u = add(params.u, scale(step, 1.0 / bnr));
    };
    if (forward_order) {
      step_u();
      step_w();
      step_b();
      step_v();
      step_c();
    } else {
      step_c();
      step_v();
      step_b();
      step_w();
      step_u();
    }
  };

  // backward auxiliary sweep per sequence, then parameters
  for (SequenceProblem& seq : batch) {
    AdmmState st{params, std::move(seq.vars), std::move(seq.duals), hyper, 0};
    for (std::size_t t = n; t >= 1; --t) {
      st.vars.o[t - 1] = update_o(st, *seq.xs, *seq.targets, loss, t);
      st.vars.s[t - 1] = update_s(st, *seq.xs, t);
      st.vars.a[t - 1] = update_a(st, *seq.xs, t);
    }
    seq.vars = std::move(st.vars);
    seq.duals = std::move(st.duals);
  }
  update_params(false);

  // forward auxiliary sweep, parameters again, then the dual step
  for (SequenceProblem& seq : batch) {
    AdmmState st{params, std::move(seq.vars), std::move(seq.duals), hyper, 0};
    for (std::size_t t = 1; t <= n; ++t) {
      st.vars.a[t - 1] = update_a(st, *seq.xs, t);
      st.vars.s[t - 1] = update_s(st, *seq.xs, t);
      st.vars.o[t - 1] = update_o(st, *seq.xs, *seq.targets, loss, t);
    }
    seq.vars = std::move(st.vars);
    seq.duals = std::move(st.duals);
  }
  update_params(true);

  for (SequenceProblem& seq : batch) {
    AdmmState st{params, std::move(seq.vars), std::move(seq.duals), hyper, 0};
    st.duals = update_multipliers(st, *seq.xs);
    seq.vars = std::move(st.vars);
    seq.duals = std::move(st.duals);
  }
  return params;
}

double theta_distance_sq(const AdmmState& prev, const AdmmState& next) {
  double d = 0.0;
  d += norm_sq(sub(next.params.u, prev.params.u));
  d += norm_sq(sub(next.params.w, prev.params.w));
  d += norm_sq(sub(next.params.b, prev.params.b));
  d += norm_sq(sub(next.params.v, prev.params.v));
  d += norm_sq(sub(next.params.c, prev.params.c));
  for (std::size_t t = 0; t < prev.vars.n(); ++t) {
    d += norm_sq(sub(next.vars.a[t], prev.vars.a[t]));
    d += norm_sq(sub(next.vars.s[t], prev.vars.s[t]));
    d += norm_sq(sub(next.vars.o[t], prev.vars.o[t]));
  }
  return d;
}

double StepTracker::observe(double step_sq) {
  min_ = (count_ == 0) ? step_sq : std::min(min_, step_sq);
  ++count_;
  return min_;
}

double StepTracker::value() const {
  if (count_ == 0) throw config_error("StepTracker: no steps observed");
  return min_;
}

ConvergenceReport convergence_metrics(const std::vector<AdmmState>& history,
                                      const std::vector<Matrix>& xs,
                                      const SequenceTargets& targets, const LossSpec& loss) {
  if (history.size() < 2) {
    throw config_error("convergence_metrics: history must contain at least 2 states");
  }
  ConvergenceReport rep;
  StepTracker tracker;
  for (std::size_t i = 0; i + 1 < history.size(); ++i) {
    const double step = theta_distance_sq(history[i], history[i + 1]);
    rep.step_sq.push_back(step);
    const double m = tracker.observe(step);
    rep.m_k.push_back(m);
    rep.k_m_k.push_back(static_cast<double>(i + 1) * m);
  }
  for (const AdmmState& st : history) {
    CouplingResiduals res = coupling_residuals(st, xs);
    rep.res1.push_back(norm_fro(res.r1));
    rep.res2.push_back(norm_fro(res.r2));
    rep.res3.push_back(norm_fro(res.r3));
    rep.lagrangian.push_back(eval_lagrangian(st, xs, targets, loss));
  }
  return rep;
}

double estimate_lipschitz(const std::function<Matrix(const Matrix&)>& grad,
                          const std::vector<Matrix>& samples) {
  if (samples.size() < 2) {
    throw config_error("estimate_lipschitz: need at least 2 sample outputs");
  }
  double best = -1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double den = norm_fro(sub(samples[i], samples[j]));
      if (den == 0.0) continue;
      const double num = norm_fro(sub(grad(samples[i]), grad(samples[j])));
      best = std::max(best, num / den);
    }
  }
  if (best < 0.0) throw numeric_error("estimate_lipschitz: all sample pairs coincident");
  return best;
}

double max_input_norm_sq(const std::vector<Matrix>& xs) {
  double m = 0.0;
  for (const Matrix& x : xs) m = std::max(m, norm_sq(x));
  return m;
}

}  // namespace admmrnn
