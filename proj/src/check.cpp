#include "admmrnn/check.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "admmrnn/baselines.hpp"
#include "admmrnn/errors.hpp"

namespace admmrnn::check {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo,
                     double hi) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = uniform(rng, lo, hi);
  return m;
}

// Squared norm of the cell residual a_t - u x_t - w s_{t-1} - b with one
// block substituted; written out directly so the oracle shares no code with
// the update rules.
Matrix cell_res(const Matrix& a, const Matrix& u, const Matrix& x, const Matrix& w,
                const Matrix& s_prev, const Matrix& b) {
  return sub(sub(sub(a, matmul(u, x)), matmul(w, s_prev)), b);
}

Matrix out_res(const Matrix& o, const Matrix& v, const Matrix& s, const Matrix& c) {
  return sub(sub(o, matmul(v, s)), c);
}

}  // namespace

Matrix numeric_argmin(const Objective& objective, Matrix x, double initial_span, double tol) {
  double fx = objective(x);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double start = x[i];
      double span = initial_span;
      int walks = 0;
      while (span > tol && walks < 100000) {
        const double saved = x[i];
        x[i] = saved - span;
        const double fl = objective(x);
        x[i] = saved + span;
        const double fr = objective(x);
        x[i] = saved;
        if (fl < fx && fl <= fr) {
          x[i] = saved - span;
          fx = fl;
          ++walks;
        } else if (fr < fx) {
          x[i] = saved + span;
          fx = fr;
          ++walks;
        } else {
          span *= 0.5;
        }
      }
      max_move = std::max(max_move, std::fabs(x[i] - start));
    }
    if (max_move < tol) break;
  }
  return x;
}

Matrix fd_grad(const Objective& objective, const Matrix& at, double h) {
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + h;
    const double plus = objective(probe);
    probe[i] = at[i] - h;
    const double minus = objective(probe);
    probe[i] = at[i];
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

Instance random_instance(std::mt19937_64& rng, bool small_activations, std::size_t min_steps) {
  const std::size_t d_x = 1 + rng() % 2;
  const std::size_t d_h = 1 + rng() % 2;
  const std::size_t d_o = 1 + rng() % 2;
  const std::size_t n = min_steps + rng() % (5 - min_steps);

  Instance inst;
  AdmmState& st = inst.state;
  st.hyper.nu = uniform(rng, 0.05, 2.0);
  st.hyper.rho1 = uniform(rng, 0.2, 3.0);
  st.hyper.rho2 = uniform(rng, 0.2, 3.0);
  st.hyper.rho3 = uniform(rng, 0.2, 3.0);
  st.hyper.r = uniform(rng, 0.5, 4.0);
  st.hyper.alpha = (rng() % 2 == 0) ? 0.0 : uniform(rng, 0.1, 1.0);
  st.hyper.include_rho2_in_sN = rng() % 3 == 0;

  st.params.u = random_matrix(rng, d_h, d_x, -0.9, 0.9);
  st.params.w = random_matrix(rng, d_h, d_h, -0.9, 0.9);
  st.params.b = random_matrix(rng, d_h, 1, -0.5, 0.5);
  st.params.v = random_matrix(rng, d_o, d_h, -0.9, 0.9);
  st.params.c = random_matrix(rng, d_o, 1, -0.5, 0.5);

  const double a_lo = small_activations ? -0.08 : 0.3;
  const double a_hi = small_activations ? 0.08 : 0.9;
  st.vars.s0 = random_matrix(rng, d_h, 1, -0.5, 0.5);
  for (std::size_t t = 0; t < n; ++t) {
    Matrix a = random_matrix(rng, d_h, 1, a_lo, a_hi);
    if (!small_activations) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (rng() % 2 == 0) a[i] = -a[i];
      }
    }
    st.vars.a.push_back(std::move(a));
    st.vars.s.push_back(random_matrix(rng, d_h, 1, -0.9, 0.9));
    st.vars.o.push_back(random_matrix(rng, d_o, 1, -0.9, 0.9));
  }

  st.duals.l1 = random_matrix(rng, d_h, 1, -0.5, 0.5);
  st.duals.l2 = random_matrix(rng, d_h, 1, -0.5, 0.5);
  st.duals.l3 = random_matrix(rng, d_o, 1, -0.5, 0.5);

  for (std::size_t t = 0; t < n; ++t) {
    inst.xs.push_back(random_matrix(rng, d_x, 1, -0.9, 0.9));
    inst.targets.push_back(Target{random_matrix(rng, d_o, 1, -0.9, 0.9)});
  }
  return inst;
}

Objective objective_u(const Instance& inst) {
  const AdmmState st = inst.state;
  const std::vector<Matrix> xs = inst.xs;
  const std::size_t n = st.vars.n();
  const double nr = static_cast<double>(n) * st.hyper.r;

  const Objective coupling = [st, xs, n](const Matrix& u) {
    double g = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      g += 0.5 * st.hyper.nu *
           norm_sq(cell_res(st.vars.a[t - 1], u, xs[t - 1], st.params.w, st.vars.s_prev(t),
                            st.params.b));
    }
    Matrix rn = cell_res(st.vars.a[n - 1], u, xs[n - 1], st.params.w, st.vars.s_prev(n),
                         st.params.b);
    g += 0.5 * st.hyper.rho1 * norm_sq(add(rn, scale(st.duals.l1, 1.0 / st.hyper.rho1)));
    return g;
  };
  const Matrix lin = fd_grad(coupling, st.params.u);
  const Matrix prior = st.params.u;
  return [nr, lin, prior](const Matrix& u) {
    return 0.5 * nr * norm_sq(sub(u, prior)) + dot(lin, sub(u, prior));
  };
}

Objective objective_w(const Instance& inst) {
  const AdmmState st = inst.state;
  const std::vector<Matrix> xs = inst.xs;
  const std::size_t n = st.vars.n();
  const double nr = static_cast<double>(n) * st.hyper.r;
  const double alpha = st.hyper.alpha;

  const Objective coupling = [st, xs, n](const Matrix& w) {
    double g = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      g += 0.5 * st.hyper.nu *
           norm_sq(cell_res(st.vars.a[t - 1], st.params.u, xs[t - 1], w, st.vars.s_prev(t),
                            st.params.b));
    }
    Matrix rn = cell_res(st.vars.a[n - 1], st.params.u, xs[n - 1], w, st.vars.s_prev(n),
                         st.params.b);
    g += 0.5 * st.hyper.rho1 * norm_sq(add(rn, scale(st.duals.l1, 1.0 / st.hyper.rho1)));
    return g;
  };
  const Matrix lin = fd_grad(coupling, st.params.w);
  const Matrix prior = st.params.w;
  return [nr, alpha, lin, prior](const Matrix& w) {
    return 0.5 * alpha * norm_sq(w) + 0.5 * nr * norm_sq(sub(w, prior)) + dot(lin, sub(w, prior));
  };
}

Objective objective_b(const Instance& inst) {
  const AdmmState st = inst.state;
  const std::vector<Matrix> xs = inst.xs;
  const std::size_t n = st.vars.n();
  return [st, xs, n](const Matrix& b) {
    double g = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      g += 0.5 * st.hyper.nu *
           norm_sq(cell_res(st.vars.a[t - 1], st.params.u, xs[t - 1], st.params.w,
                            st.vars.s_prev(t), b));
    }
    Matrix rn = cell_res(st.vars.a[n - 1], st.params.u, xs[n - 1], st.params.w, st.vars.s_prev(n),
                         b);
    g += 0.5 * st.hyper.rho1 * norm_sq(add(rn, scale(st.duals.l1, 1.0 / st.hyper.rho1)));
    return g;
  };
}

Objective objective_a(const Instance& inst, std::size_t t) {
  const AdmmState st = inst.state;
  const std::vector<Matrix> xs = inst.xs;
  const std::size_t n = st.vars.n();
  const Matrix prior = st.vars.a[t - 1];
  const bool small = max_abs(prior) <= st.hyper.lin_threshold;

  // f under the update's linearization convention
  const auto f_lin = [prior, small](const Matrix& a) {
    Matrix out = a;
    if (small) return out;  // tanh(a) = a shortcut
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double f0 = std::tanh(prior[i]);
      const double g0 = 1.0 - f0 * f0;
      out[i] = f0 + g0 * (a[i] - prior[i]);
    }
    return out;
  };

  if (t < n) {
    const Matrix d = cell_res(prior, st.params.u, xs[t - 1], st.params.w, st.vars.s_prev(t),
                              st.params.b);
    const Matrix s_t = st.vars.s[t - 1];
    return [st, prior, d, s_t, f_lin](const Matrix& a) {
      return 0.5 * st.hyper.r * norm_sq(sub(a, prior)) + st.hyper.nu * dot(sub(a, prior), d) +
             0.5 * st.hyper.nu * norm_sq(sub(s_t, f_lin(a)));
    };
  }
  const Matrix d_prime = add(cell_res(prior, st.params.u, xs[n - 1], st.params.w,
                                      st.vars.s_prev(n), st.params.b),
                             scale(st.duals.l1, 1.0 / st.hyper.rho1));
  const Matrix target = add(st.vars.s[n - 1], scale(st.duals.l2, 1.0 / st.hyper.rho2));
  return [st, prior, d_prime, target, f_lin](const Matrix& a) {
    return 0.5 * st.hyper.r * norm_sq(sub(a, prior)) +
           st.hyper.rho1 * dot(sub(a, prior), d_prime) +
           0.5 * st.hyper.rho2 * norm_sq(sub(target, f_lin(a)));
  };
}

Objective objective_s(const Instance& inst, std::size_t t) {
  const AdmmState st = inst.state;
  const std::size_t n = st.vars.n();
  const Matrix prior = st.vars.s[t - 1];

  if (t < n) {
    const Objective out_coupling = [st, t](const Matrix& s) {
      return 0.5 * st.hyper.nu * norm_sq(out_res(st.vars.o[t - 1], st.params.v, s, st.params.c));
    };
    const Matrix lin = fd_grad(out_coupling, prior);
    const Matrix f_a = elementwise_tanh(st.vars.a[t - 1]);
    return [st, prior, lin, f_a](const Matrix& s) {
      return 0.5 * st.hyper.r * norm_sq(sub(s, prior)) + dot(lin, sub(s, prior)) +
             0.5 * st.hyper.nu * norm_sq(sub(s, f_a));
    };
  }

  const Objective out_coupling = [st, n](const Matrix& s) {
    Matrix rn = add(out_res(st.vars.o[n - 1], st.params.v, s, st.params.c),
                    scale(st.duals.l3, 1.0 / st.hyper.rho3));
    return 0.5 * st.hyper.rho3 * norm_sq(rn);
  };
  const Matrix lin = fd_grad(out_coupling, prior);
  if (!st.hyper.include_rho2_in_sN) {
    const double r = st.hyper.r;
    return [r, prior, lin](const Matrix& s) {
      return 0.5 * r * norm_sq(sub(s, prior)) + dot(lin, sub(s, prior));
    };
  }
  const Matrix anchor = sub(elementwise_tanh(st.vars.a[n - 1]),
                            scale(st.duals.l2, 1.0 / st.hyper.rho2));
  return [st, prior, lin, anchor](const Matrix& s) {
    return 0.5 * st.hyper.r * norm_sq(sub(s, prior)) + dot(lin, sub(s, prior)) +
           0.5 * st.hyper.rho2 * norm_sq(sub(s, anchor));
  };
}

Objective objective_v(const Instance& inst) {
  const AdmmState st = inst.state;
  const std::size_t n = st.vars.n();
  const double nr = static_cast<double>(n) * st.hyper.r;

  const Objective coupling = [st, n](const Matrix& v) {
    double g = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      g += 0.5 * st.hyper.nu * norm_sq(out_res(st.vars.o[t - 1], v, st.vars.s[t - 1], st.params.c));
    }
    Matrix rn = add(out_res(st.vars.o[n - 1], v, st.vars.s[n - 1], st.params.c),
                    scale(st.duals.l3, 1.0 / st.hyper.rho3));
    g += 0.5 * st.hyper.rho3 * norm_sq(rn);
    return g;
  };
  const Matrix lin = fd_grad(coupling, st.params.v);
  const Matrix prior = st.params.v;
  return [nr, lin, prior](const Matrix& v) {
    return 0.5 * nr * norm_sq(sub(v, prior)) + dot(lin, sub(v, prior));
  };
}

Objective objective_c(const Instance& inst) {
  const AdmmState st = inst.state;
  const std::size_t n = st.vars.n();
  return [st, n](const Matrix& c) {
    double g = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      g += 0.5 * st.hyper.nu * norm_sq(out_res(st.vars.o[t - 1], st.params.v, st.vars.s[t - 1], c));
    }
    Matrix rn = add(out_res(st.vars.o[n - 1], st.params.v, st.vars.s[n - 1], c),
                    scale(st.duals.l3, 1.0 / st.hyper.rho3));
    g += 0.5 * st.hyper.rho3 * norm_sq(rn);
    return g;
  };
}

Objective objective_o(const Instance& inst, std::size_t t) {
  const AdmmState st = inst.state;
  const std::size_t n = st.vars.n();
  const Matrix y = std::get<Matrix>(*inst.targets[t - 1]);
  const Matrix model = add(matmul(st.params.v, st.vars.s[t - 1]), st.params.c);
  if (t < n) {
    const double nu = st.hyper.nu;
    return [y, model, nu](const Matrix& o) {
      return 0.5 * norm_sq(sub(o, y)) + 0.5 * nu * norm_sq(sub(o, model));
    };
  }
  const Matrix anchor = sub(model, scale(st.duals.l3, 1.0 / st.hyper.rho3));
  const double rho3 = st.hyper.rho3;
  return [y, anchor, rho3](const Matrix& o) {
    return 0.5 * norm_sq(sub(o, y)) + 0.5 * rho3 * norm_sq(sub(o, anchor));
  };
}

std::vector<OpCheck> run_oracle_suite(int per_op, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> checks = {{"u"}, {"w"}, {"b"}, {"a(t<N)"}, {"a(t=N)"},
                                 {"s(t<N)"}, {"s(t=N)"}, {"v"}, {"c"}, {"o"}};
  auto record = [&](OpCheck& chk, const Matrix& impl, const Matrix& oracle) {
    chk.max_err = std::max(chk.max_err, max_abs(sub(impl, oracle)));
    ++chk.instances;
  };

  for (int i = 0; i < per_op; ++i) {
    // alternate the tanh-shortcut branch and its linearized fallback; draw
    // at least two steps so the t<N variants always have an instance
    Instance inst = random_instance(rng, i % 2 == 0, 2);
    const std::size_t n = inst.state.vars.n();
    const std::size_t t_mid = 1 + rng() % (n - 1);

    record(checks[0], update_u(inst.state, inst.xs),
           numeric_argmin(objective_u(inst), inst.state.params.u));
    record(checks[1], update_w(inst.state, inst.xs),
           numeric_argmin(objective_w(inst), inst.state.params.w));
    record(checks[2], update_b(inst.state, inst.xs),
           numeric_argmin(objective_b(inst), inst.state.params.b));
    record(checks[3], update_a(inst.state, inst.xs, t_mid),
           numeric_argmin(objective_a(inst, t_mid), inst.state.vars.a[t_mid - 1]));
    record(checks[4], update_a(inst.state, inst.xs, n),
           numeric_argmin(objective_a(inst, n), inst.state.vars.a[n - 1]));
    record(checks[5], update_s(inst.state, inst.xs, t_mid),
           numeric_argmin(objective_s(inst, t_mid), inst.state.vars.s[t_mid - 1]));
    record(checks[6], update_s(inst.state, inst.xs, n),
           numeric_argmin(objective_s(inst, n), inst.state.vars.s[n - 1]));
    record(checks[7], update_v(inst.state, inst.xs),
           numeric_argmin(objective_v(inst), inst.state.params.v));
    record(checks[8], update_c(inst.state, inst.xs),
           numeric_argmin(objective_c(inst), inst.state.params.c));
    const std::size_t t_o = i % 2 == 0 ? t_mid : n;
    record(checks[9], update_o(inst.state, inst.xs, inst.targets, inst.loss, t_o),
           numeric_argmin(objective_o(inst, t_o), inst.state.vars.o[t_o - 1]));
  }
  for (OpCheck& chk : checks) chk.pass = chk.instances > 0 && chk.max_err <= tol;
  return checks;
}

GradCheckResult run_gradcheck(int instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  result.instances = instances;
  for (int i = 0; i < instances; ++i) {
    const std::size_t d_x = 1 + rng() % 3;
    const std::size_t d_h = 1 + rng() % 3;
    const std::size_t d_o = 1 + rng() % 3;
    const std::size_t n = 1 + rng() % 4;

    RnnParams params;
    params.u = random_matrix(rng, d_h, d_x, -0.8, 0.8);
    params.w = random_matrix(rng, d_h, d_h, -0.8, 0.8);
    params.b = random_matrix(rng, d_h, 1, -0.5, 0.5);
    params.v = random_matrix(rng, d_o, d_h, -0.8, 0.8);
    params.c = random_matrix(rng, d_o, 1, -0.5, 0.5);

    std::vector<Matrix> xs;
    SequenceTargets targets;
    const bool cross_entropy = rng() % 2 == 0;
    const bool final_only = rng() % 2 == 0;
    const LossSpec loss{cross_entropy ? LossKind::kCrossEntropy : LossKind::kSquared, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      xs.push_back(random_matrix(rng, d_x, 1, -1.0, 1.0));
      if (final_only && t + 1 < n) {
        targets.push_back(std::nullopt);
      } else if (cross_entropy) {
        targets.push_back(Target{static_cast<int>(rng() % d_o)});
      } else {
        targets.push_back(Target{random_matrix(rng, d_o, 1, -1.0, 1.0)});
      }
    }

    const GradientSet exact = bptt_gradient(params, xs, targets, loss);
    const GradientSet approx = fd_gradient(params, xs, targets, loss, 1e-6);
    double num = 0.0, den = 0.0;
    const Matrix* pairs[][2] = {{&exact.u, &approx.u}, {&exact.w, &approx.w},
                                {&exact.b, &approx.b}, {&exact.v, &approx.v},
                                {&exact.c, &approx.c}};
    for (auto& pair : pairs) {
      num += norm_sq(sub(*pair[0], *pair[1]));
      den += norm_sq(*pair[1]);
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    result.max_rel_err = std::max(result.max_rel_err, rel);
  }
  result.pass = result.max_rel_err <= tol;
  return result;
}

void write_synth_mnist(const std::string& images_path, const std::string& labels_path,
                       std::size_t count, std::uint64_t seed, std::size_t side) {
  std::mt19937_64 rng(seed);
  const std::size_t pixels = side * side;
  std::vector<std::vector<double>> templates(10, std::vector<double>(pixels));
  for (auto& tpl : templates) {
    for (double& p : tpl) p = (rng() % 100 < 30) ? 0.85 : 0.0;
  }

  auto be32 = [](std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  };

  std::vector<std::uint8_t> images, labels;
  be32(images, 2051);
  be32(images, static_cast<std::uint32_t>(count));
  be32(images, static_cast<std::uint32_t>(side));
  be32(images, static_cast<std::uint32_t>(side));
  be32(labels, 2049);
  be32(labels, static_cast<std::uint32_t>(count));

  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 10);
    labels.push_back(static_cast<std::uint8_t>(label));
    for (std::size_t p = 0; p < pixels; ++p) {
      double value = templates[static_cast<std::size_t>(label)][p] + uniform(rng, -0.15, 0.15);
      value = std::clamp(value, 0.0, 1.0);
      images.push_back(static_cast<std::uint8_t>(std::lround(value * 255.0)));
    }
  }

  auto dump = [](const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  };
  dump(images_path, images);
  dump(labels_path, labels);
}

std::string pattern_text(std::size_t length) {
  static const std::string phrase = "hello world. ";
  std::string out;
  out.reserve(length);
  while (out.size() < length) out += phrase;
  out.resize(length);
  return out;
}

Dataset make_tiny_task(const Dims& dims, std::size_t n_steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.meta.d_x = dims.d_x;
  ds.meta.n_steps = n_steps;
  ds.meta.num_classes = 0;
  Sample sample;
  for (std::size_t t = 0; t < n_steps; ++t) {
    sample.xs.push_back(random_matrix(rng, dims.d_x, 1, -0.45, 0.45));
    sample.targets.push_back(std::nullopt);
  }
  sample.targets.back() = Target{random_matrix(rng, dims.d_o, 1, -0.7, 0.7)};
  ds.samples.push_back(std::move(sample));
  return ds;
}

}  // namespace admmrnn::check
