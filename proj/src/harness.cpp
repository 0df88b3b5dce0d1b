#include "admmrnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "admmrnn/errors.hpp"

namespace admmrnn {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw config_error("key '" + key + "': expected on/off, got '" + value + "'");
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<std::size_t> even_eval_indices(std::size_t count, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (limit == 0 || limit >= count) {
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) idx.push_back(i * count / limit);
  return idx;
}

Dims dims_for(const ExperimentConfig& config, const Dataset& train) {
  if (train.samples.empty()) throw config_error("training set is empty");
  std::size_t d_o = train.meta.num_classes;
  if (d_o == 0) {
    for (const auto& slot : train.samples.front().targets) {
      if (slot.has_value() && std::holds_alternative<Matrix>(*slot)) {
        d_o = std::get<Matrix>(*slot).rows();
        break;
      }
    }
  }
  if (d_o == 0) throw config_error("cannot derive output dimension from the training data");
  return Dims{train.meta.d_x, config.hidden, d_o};
}

struct EvalStats {
  double loss = 0.0;
  double acc_pct = 0.0;
};

EvalStats evaluate(const RnnParams& params, const Dataset& ds,
                   const std::vector<std::size_t>& idx, const LossSpec& loss) {
  EvalStats stats;
  if (idx.empty()) return stats;
  const Matrix s0(params.u.rows(), 1);
  double loss_sum = 0.0;
  std::size_t hits = 0, label_steps = 0;
  for (std::size_t i : idx) {
    const Sample& sample = ds.samples[i];
    UnfoldedVars vars = forward_sequence(sample.xs, params, s0);
    double sample_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t t = 0; t < sample.xs.size(); ++t) {
      if (!sample.targets[t].has_value()) continue;
      sample_loss += loss_eval(loss, vars.o[t], *sample.targets[t]);
      ++steps;
      if (std::holds_alternative<int>(*sample.targets[t])) {
        const Matrix& o = vars.o[t];
        std::size_t best = 0;
        for (std::size_t j = 1; j < o.size(); ++j) {
          if (o[j] > o[best]) best = j;
        }
        ++label_steps;
        if (static_cast<int>(best) == std::get<int>(*sample.targets[t])) ++hits;
      }
    }
    loss_sum += steps == 0 ? 0.0 : sample_loss / static_cast<double>(steps);
  }
  stats.loss = loss_sum / static_cast<double>(idx.size());
  stats.acc_pct = label_steps == 0
                      ? 0.0
                      : 100.0 * static_cast<double>(hits) / static_cast<double>(label_steps);
  return stats;
}

bool row_finite(const MetricsRow& row) {
  const double fields[] = {row.train_loss, row.test_loss, row.train_acc, row.test_acc,
                           row.lagrangian, row.res1,      row.res2,      row.res3,
                           row.step_sq,    row.m_k};
  for (double f : fields) {
    if (!std::isfinite(f)) return false;
  }
  return true;
}

MetricsRow diverged_row(long k) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  MetricsRow row;
  row.k = k;
  row.train_loss = row.test_loss = row.train_acc = row.test_acc = nan;
  row.lagrangian = row.res1 = row.res2 = row.res3 = row.step_sq = row.m_k = nan;
  row.diverged = true;
  return row;
}

double params_distance_sq(const RnnParams& a, const RnnParams& b) {
  return norm_sq(sub(a.u, b.u)) + norm_sq(sub(a.w, b.w)) + norm_sq(sub(a.b, b.b)) +
         norm_sq(sub(a.v, b.v)) + norm_sq(sub(a.c, b.c));
}

class IterationClock {
 public:
  explicit IterationClock(bool enabled) : enabled_(enabled) { reset(); }
  void reset() {
    if (enabled_) start_ = std::chrono::steady_clock::now();
  }
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

RunResult run_admm(const ExperimentConfig& config, const Dataset& train, const Dataset& test,
                   std::uint64_t seed) {
  const Dims dims = dims_for(config, train);
  const LossSpec loss = resolve_loss(config);
  RnnParams params = init_params(dims, seed, config.init_scale);
  const Matrix s0(dims.d_h, 1);

  // Auxiliary variables and multipliers persist per sample across visits.
  struct SampleState {
    UnfoldedVars vars;
    Multipliers duals;
  };
  std::vector<std::optional<SampleState>> store(train.samples.size());

  const auto train_idx = even_eval_indices(train.samples.size(), config.eval_limit);
  const auto test_idx = even_eval_indices(test.samples.size(), config.eval_limit);
  const bool smooth = loss.kind == LossKind::kSmoothedCrossEntropy;
  SmoothedTrace train_trace(loss.smoothing), test_trace(loss.smoothing);

  RunResult result;
  result.method = Method::kAdmm;
  result.seed = seed;
  StepTracker tracker;

  for (long k = 1; k <= config.iterations; ++k) {
    IterationClock clock(config.timing);
    const std::size_t idx = static_cast<std::size_t>((k - 1) % static_cast<long>(train.samples.size()));
    const Sample& sample = train.samples[idx];
    MetricsRow row;
    row.k = k;
    try {
      if (!store[idx].has_value()) {
        store[idx] = SampleState{forward_sequence(sample.xs, params, s0),
                                 zero_multipliers(dims)};
      }
      AdmmState state{params, store[idx]->vars, store[idx]->duals, config.hyper, k - 1};
      const AdmmState before = state;
      state = admm_iteration(state, sample.xs, sample.targets, loss);
      row.step_sq = theta_distance_sq(before, state);
      row.lagrangian = eval_lagrangian(state, sample.xs, sample.targets, loss);
      const CouplingResiduals res = coupling_residuals(state, sample.xs);
      row.res1 = norm_fro(res.r1);
      row.res2 = norm_fro(res.r2);
      row.res3 = norm_fro(res.r3);
      params = state.params;
      store[idx]->vars = std::move(state.vars);
      store[idx]->duals = std::move(state.duals);

      row.m_k = tracker.observe(row.step_sq);
      const EvalStats tr = evaluate(params, train, train_idx, loss);
      const EvalStats te = evaluate(params, test, test_idx, loss);
      row.train_loss = smooth ? train_trace.update(tr.loss) : tr.loss;
      row.test_loss = smooth ? test_trace.update(te.loss) : te.loss;
      row.train_acc = tr.acc_pct;
      row.test_acc = te.acc_pct;
    } catch (const numeric_error&) {
      MetricsRow mark = diverged_row(k);
      mark.ms = clock.elapsed_ms();
      result.rows.push_back(mark);
      result.diverged = true;
      break;
    }
    row.ms = clock.elapsed_ms();
    if (!row_finite(row)) {
      row.diverged = true;
      result.rows.push_back(row);
      result.diverged = true;
      break;
    }
    result.rows.push_back(row);
    if (result.iters_to_target < 0 && row.train_acc >= config.target_acc) {
      result.iters_to_target = k;
    }
  }
  if (!result.rows.empty()) result.final_train_loss = result.rows.back().train_loss;
  return result;
}

RunResult run_baseline(const ExperimentConfig& config, const Dataset& train, const Dataset& test,
                       std::uint64_t seed) {
  const Dims dims = dims_for(config, train);
  const LossSpec loss = resolve_loss(config);
  RnnParams params = init_params(dims, seed, config.init_scale);

  OptimizerConfig opt = default_optimizer(opt_kind_of(config.method));
  if (config.learning_rate > 0.0) opt.learning_rate = config.learning_rate;
  opt.clip_norm = config.clip_norm;
  OptimizerState opt_state = OptimizerState::zeros_like(params);

  const auto train_idx = even_eval_indices(train.samples.size(), config.eval_limit);
  const auto test_idx = even_eval_indices(test.samples.size(), config.eval_limit);
  const bool smooth = loss.kind == LossKind::kSmoothedCrossEntropy;
  SmoothedTrace train_trace(loss.smoothing), test_trace(loss.smoothing);

  RunResult result;
  result.method = config.method;
  result.seed = seed;
  StepTracker tracker;

  for (long k = 1; k <= config.iterations; ++k) {
    IterationClock clock(config.timing);
    const std::size_t idx = static_cast<std::size_t>((k - 1) % static_cast<long>(train.samples.size()));
    const Sample& sample = train.samples[idx];
    MetricsRow row;
    row.k = k;
    try {
      GradientSet grads = bptt_gradient(params, sample.xs, sample.targets, loss);
      row.res1 = clip_gradients(grads, config.clip_norm);  // gradient norm trace
      StepResult stepped = optimizer_step(opt, params, grads, std::move(opt_state));
      row.step_sq = params_distance_sq(params, stepped.params);
      params = std::move(stepped.params);
      opt_state = std::move(stepped.state);

      row.m_k = tracker.observe(row.step_sq);
      const EvalStats tr = evaluate(params, train, train_idx, loss);
      const EvalStats te = evaluate(params, test, test_idx, loss);
      row.train_loss = smooth ? train_trace.update(tr.loss) : tr.loss;
      row.test_loss = smooth ? test_trace.update(te.loss) : te.loss;
      row.train_acc = tr.acc_pct;
      row.test_acc = te.acc_pct;
    } catch (const numeric_error&) {
      MetricsRow mark = diverged_row(k);
      mark.ms = clock.elapsed_ms();
      result.rows.push_back(mark);
      result.diverged = true;
      break;
    }
    row.ms = clock.elapsed_ms();
    if (!row_finite(row)) {
      row.diverged = true;
      result.rows.push_back(row);
      result.diverged = true;
      break;
    }
    result.rows.push_back(row);
    if (result.iters_to_target < 0 && row.train_acc >= config.target_acc) {
      result.iters_to_target = k;
    }
  }
  if (!result.rows.empty()) result.final_train_loss = result.rows.back().train_loss;
  return result;
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw io_error("write failed for " + path);
}

void write_aggregate(const std::vector<RunResult>& runs, long iterations,
                     const std::string& path) {
  std::ostringstream os;
  os << "k,train_loss_mean,train_loss_std,test_loss_mean,test_loss_std,train_acc_mean,test_acc_mean,runs\n";
  for (long k = 1; k <= iterations; ++k) {
    std::vector<double> tl, sl, ta, sa;
    for (const RunResult& run : runs) {
      if (static_cast<std::size_t>(k) > run.rows.size()) continue;
      const MetricsRow& row = run.rows[static_cast<std::size_t>(k - 1)];
      if (row.diverged) continue;
      tl.push_back(row.train_loss);
      sl.push_back(row.test_loss);
      ta.push_back(row.train_acc);
      sa.push_back(row.test_acc);
    }
    auto mean = [](const std::vector<double>& v) {
      if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
      if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
      const double m = mean(v);
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return std::sqrt(s / static_cast<double>(v.size()));
    };
    os << k << ',' << format_metric(mean(tl)) << ',' << format_metric(stddev(tl)) << ','
       << format_metric(mean(sl)) << ',' << format_metric(stddev(sl)) << ','
       << format_metric(mean(ta)) << ',' << format_metric(mean(sa)) << ',' << tl.size() << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "admm") return Method::kAdmm;
  if (name == "sgd") return Method::kSgd;
  if (name == "momentum") return Method::kMomentum;
  if (name == "adagrad") return Method::kAdagrad;
  if (name == "rmsprop") return Method::kRmsprop;
  if (name == "adam") return Method::kAdam;
  throw config_error("unknown method: " + name);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kAdmm: return "admm";
    case Method::kSgd: return "sgd";
    case Method::kMomentum: return "momentum";
    case Method::kAdagrad: return "adagrad";
    case Method::kRmsprop: return "rmsprop";
    case Method::kAdam: return "adam";
  }
  throw config_error("unknown method");
}

OptKind opt_kind_of(Method method) {
  switch (method) {
    case Method::kSgd: return OptKind::kSgd;
    case Method::kMomentum: return OptKind::kMomentum;
    case Method::kAdagrad: return OptKind::kAdagrad;
    case Method::kRmsprop: return OptKind::kRmsprop;
    case Method::kAdam: return OptKind::kAdam;
    case Method::kAdmm: break;
  }
  throw config_error("admm is not a gradient optimizer");
}

void ExperimentConfig::validate() const {
  if (task != "mnist" && task != "text") throw config_error("task must be mnist or text");
  if (iterations < 1) throw config_error("iterations must be >= 1");
  if (seeds.empty()) throw config_error("at least one seed is required");
  if (hidden == 0) throw config_error("hidden size must be positive");
  if (!(init_scale > 0.0)) throw config_error("init scale must be > 0");
  if (seq_len < 1) throw config_error("seq_len must be >= 1");
  if (threads < 1) throw config_error("threads must be >= 1");
  if (method == Method::kAdmm) {
    hyper.validate();
  } else if (learning_rate < 0.0) {
    throw config_error("learning rate must be >= 0");
  }
}

const char* const kMetricsHeader =
    "k,train_loss,test_loss,train_acc,test_acc,lagrangian,res1,res2,res3,step_sq,m_k,ms";

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const MetricsRow& row : rows) {
    os << row.k << ',' << format_metric(row.train_loss) << ',' << format_metric(row.test_loss)
       << ',' << format_metric(row.train_acc) << ',' << format_metric(row.test_acc) << ','
       << format_metric(row.lagrangian) << ',' << format_metric(row.res1) << ','
       << format_metric(row.res2) << ',' << format_metric(row.res3) << ','
       << format_metric(row.step_sq) << ',' << format_metric(row.m_k) << ','
       << format_metric(row.ms) << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<MetricsRow> parse_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw format_error("metrics file " + path + " is empty");
  if (trim(line) != kMetricsHeader) throw format_error("unexpected metrics header in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != 12) throw format_error("bad metrics row in " + path + ": " + line);
    MetricsRow row;
    row.k = parse_long("k", cells[0]);
    double* fields[] = {&row.train_loss, &row.test_loss, &row.train_acc, &row.test_acc,
                        &row.lagrangian, &row.res1,      &row.res2,      &row.res3,
                        &row.step_sq,    &row.m_k,       &row.ms};
    for (std::size_t i = 0; i < 11; ++i) *fields[i] = std::strtod(cells[i + 1].c_str(), nullptr);
    row.diverged = !row_finite(row);
    rows.push_back(row);
  }
  return rows;
}

LossSpec resolve_loss(const ExperimentConfig& config) {
  LossSpec spec;
  spec.smoothing = config.smoothing;
  std::string name = config.loss_name;
  if (name.empty()) name = config.task == "mnist" ? "cross-entropy" : "smoothed";
  if (name == "squared") {
    spec.kind = LossKind::kSquared;
  } else if (name == "cross-entropy") {
    spec.kind = LossKind::kCrossEntropy;
  } else if (name == "smoothed" || name == "smoothed-cross-entropy") {
    spec.kind = LossKind::kSmoothedCrossEntropy;
  } else {
    throw config_error("unknown loss kind: " + name);
  }
  return spec;
}

SplitData resolve_data(const ExperimentConfig& config) {
  SplitData out;
  if (config.task == "mnist") {
    if (config.images.empty() || config.labels.empty()) {
      throw config_error("mnist task requires --images and --labels");
    }
    const MnistData train_raw = load_mnist_idx(config.images, config.labels);
    if (!config.test_images.empty() && !config.test_labels.empty()) {
      out.train = mnist_to_dataset(train_raw, config.limit);
      out.test = mnist_to_dataset(load_mnist_idx(config.test_images, config.test_labels),
                                  config.limit);
    } else {
      // no test files: every sixth sample becomes the held-out split
      Dataset full = mnist_to_dataset(train_raw, 0);
      out.train.meta = out.test.meta = full.meta;
      for (std::size_t i = 0; i < full.samples.size(); ++i) {
        (i % 6 == 5 ? out.test : out.train).samples.push_back(std::move(full.samples[i]));
      }
      out.train = subsample_evenly(out.train, config.limit);
      out.test = subsample_evenly(out.test, config.limit);
    }
    return out;
  }

  if (config.text_path.empty()) throw config_error("text task requires --text");
  std::ifstream in(config.text_path, std::ios::binary);
  if (!in) throw io_error("cannot open " + config.text_path);
  const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (content.empty()) throw config_error("text input is empty");
  const std::vector<std::uint32_t> cps = decode_utf8(content);

  const std::size_t need = config.seq_len + 1;
  if (cps.size() < 2 * need) {
    throw config_error("text too short: need at least " + std::to_string(2 * need) +
                       " characters for train and test splits");
  }
  std::size_t split = (cps.size() * 9) / 10;
  split = std::min(split, cps.size() - need);

  // vocabulary over the whole text so both splits share indices
  TextData whole = text_to_dataset(content, config.seq_len);
  const std::vector<std::uint32_t> train_cps(cps.begin(), cps.begin() + static_cast<long>(split));
  const std::vector<std::uint32_t> test_cps(cps.begin() + static_cast<long>(split), cps.end());
  out.train = windows_from_codepoints(train_cps, config.seq_len, whole.vocab);
  out.test = windows_from_codepoints(test_cps, config.seq_len, whole.vocab);
  if (out.train.samples.empty() || out.test.samples.empty()) {
    throw config_error("text too short for seq_len " + std::to_string(config.seq_len));
  }
  out.train = subsample_evenly(out.train, config.limit);
  out.test = subsample_evenly(out.test, config.limit);
  return out;
}

RunResult run_single(const ExperimentConfig& config, const Dataset& train, const Dataset& test,
                     std::uint64_t seed) {
  config.validate();
  if (train.samples.empty() || test.samples.empty()) {
    throw config_error("train and test sets must be nonempty");
  }
  return config.method == Method::kAdmm ? run_admm(config, train, test, seed)
                                        : run_baseline(config, train, test, seed);
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& train,
                                      const Dataset& test) {
  config.validate();
  if (config.method == Method::kAdmm && !train.samples.empty()) {
    const double max_sq = max_input_norm_sq(train.samples.front().xs);
    if (config.hyper.r < config.hyper.rho1 * max_sq) {
      std::fprintf(stderr,
                   "warning: r=%g < rho1*max|x|^2=%g, G = rI - rho1 x x' is not PSD; "
                   "steps may overshoot\n",
                   config.hyper.r, config.hyper.rho1 * max_sq);
    }
  }

  std::vector<RunResult> results(config.seeds.size());
  const int threads = std::min<int>(config.threads, static_cast<int>(config.seeds.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      results[i] = run_single(config, train, test, config.seeds[i]);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < config.seeds.size(); i = next.fetch_add(1)) {
          results[i] = run_single(config, train, test, config.seeds[i]);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  if (!config.out_dir.empty()) {
    const std::string method = to_string(config.method);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string path = config.out_dir + "/run_" + method + "_seed" +
                               std::to_string(config.seeds[i]) + ".csv";
      emit_metrics(results[i].rows, path);
    }
    write_aggregate(results, config.iterations, config.out_dir + "/aggregate_" + method + ".csv");
  }
  return results;
}

StabilityResult stability_study(const ExperimentConfig& config,
                                const std::vector<Method>& methods, const Dataset& train,
                                const Dataset& test) {
  if (config.seeds.size() < 2) throw config_error("stability study needs at least 2 seeds");
  StabilityResult result;
  for (Method method : methods) {
    ExperimentConfig sub = config;
    sub.method = method;
    const std::vector<RunResult> runs = run_experiment(sub, train, test);
    StabilityStats stats;
    for (long k = 1; k <= config.iterations; ++k) {
      std::vector<double> tl, sl;
      for (const RunResult& run : runs) {
        if (static_cast<std::size_t>(k) > run.rows.size()) continue;
        const MetricsRow& row = run.rows[static_cast<std::size_t>(k - 1)];
        if (row.diverged) continue;
        tl.push_back(row.train_loss);
        sl.push_back(row.test_loss);
      }
      auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      auto stddev = [&](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        const double m = mean(v);
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size()));
      };
      stats.train_mean.push_back(mean(tl));
      stats.train_std.push_back(stddev(tl));
      stats.test_mean.push_back(mean(sl));
      stats.test_std.push_back(stddev(sl));
    }
    result.per_method[to_string(method)] = std::move(stats);
    result.runs[to_string(method)] = runs;
  }

  if (!config.out_dir.empty()) {
    std::ostringstream os;
    os << "method,k,train_loss_mean,train_loss_std,test_loss_mean,test_loss_std\n";
    for (const auto& [name, stats] : result.per_method) {
      for (std::size_t i = 0; i < stats.train_mean.size(); ++i) {
        os << name << ',' << (i + 1) << ',' << format_metric(stats.train_mean[i]) << ','
           << format_metric(stats.train_std[i]) << ',' << format_metric(stats.test_mean[i]) << ','
           << format_metric(stats.test_std[i]) << '\n';
      }
    }
    write_text_file(config.out_dir + "/stability.csv", os.str());
  }
  return result;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& axis,
                            const std::vector<double>& values, const DataProvider& provider) {
  if (values.empty()) throw config_error("sweep requires at least one value");
  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig sub = config;
    sub.seeds = {config.seeds.front()};
    sub.out_dir.clear();
    if (axis == "rho1") {
      sub.hyper.rho1 = value;
    } else if (axis == "rho2") {
      sub.hyper.rho2 = value;
    } else if (axis == "rho3") {
      sub.hyper.rho3 = value;
    } else if (axis == "r") {
      sub.hyper.r = value;
    } else if (axis == "nu") {
      sub.hyper.nu = value;
    } else if (axis == "seq_len") {
      if (config.task != "text") throw config_error("seq_len sweep requires the text task");
      if (value < 1.0 || value != std::floor(value)) {
        throw config_error("seq_len values must be positive integers");
      }
      sub.seq_len = static_cast<std::size_t>(value);
    } else {
      throw config_error("unknown sweep axis: " + axis +
                         " (expected rho1|rho2|rho3|r|nu|seq_len)");
    }
    const SplitData data = provider(sub);
    const RunResult run = run_single(sub, data.train, data.test, sub.seeds.front());

    SweepRow row;
    row.value = value;
    row.iters_to_target = run.iters_to_target;
    row.final_loss = run.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : run.rows.back().train_loss;
    double sum = 0.0;
    std::size_t count = 0;
    const std::size_t tail = std::min<std::size_t>(20, run.rows.size());
    for (std::size_t i = run.rows.size() - tail; i < run.rows.size(); ++i) {
      if (run.rows[i].diverged) continue;
      sum += run.rows[i].train_loss;
      ++count;
    }
    row.final20_loss =
        count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
    rows.push_back(row);
  }

  if (!config.out_dir.empty()) {
    std::ostringstream os;
    os << "axis,value,final_train_loss,final20_train_loss,iters_to_target\n";
    for (const SweepRow& row : rows) {
      os << axis << ',' << format_metric(row.value) << ',' << format_metric(row.final_loss) << ','
         << format_metric(row.final20_loss) << ',';
      if (row.iters_to_target < 0) {
        os << "inf";
      } else {
        os << row.iters_to_target;
      }
      os << '\n';
    }
    write_text_file(config.out_dir + "/sweep_" + axis + ".csv", os.str());
  }
  return rows;
}

void apply_config_kv(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "task") {
    config.task = value;
  } else if (key == "method") {
    config.method = method_from_string(value);
  } else if (key == "iters" || key == "iterations") {
    config.iterations = parse_long(key, value);
  } else if (key == "seeds") {
    config.seeds = parse_seed_list(value);
  } else if (key == "nu") {
    config.hyper.nu = parse_double(key, value);
  } else if (key == "rho1") {
    config.hyper.rho1 = parse_double(key, value);
  } else if (key == "rho2") {
    config.hyper.rho2 = parse_double(key, value);
  } else if (key == "rho3") {
    config.hyper.rho3 = parse_double(key, value);
  } else if (key == "r") {
    config.hyper.r = parse_double(key, value);
  } else if (key == "alpha") {
    config.hyper.alpha = parse_double(key, value);
  } else if (key == "include-rho2-in-sn") {
    config.hyper.include_rho2_in_sN = parse_bool(key, value);
  } else if (key == "lin-threshold") {
    config.hyper.lin_threshold = parse_double(key, value);
  } else if (key == "lr") {
    config.learning_rate = parse_double(key, value);
  } else if (key == "clip-norm") {
    config.clip_norm = parse_double(key, value);
  } else if (key == "loss") {
    config.loss_name = value;
  } else if (key == "smoothing") {
    config.smoothing = parse_double(key, value);
  } else if (key == "hidden") {
    config.hidden = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "scale") {
    config.init_scale = parse_double(key, value);
  } else if (key == "seq-len") {
    config.seq_len = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "limit") {
    config.limit = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "eval-limit") {
    config.eval_limit = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "target-acc") {
    config.target_acc = parse_double(key, value);
  } else if (key == "images") {
    config.images = value;
  } else if (key == "labels") {
    config.labels = value;
  } else if (key == "test-images") {
    config.test_images = value;
  } else if (key == "test-labels") {
    config.test_labels = value;
  } else if (key == "text") {
    config.text_path = value;
  } else if (key == "out") {
    config.out_dir = value;
  } else if (key == "threads") {
    config.threads = static_cast<int>(parse_long(key, value));
  } else if (key == "timing") {
    config.timing = parse_bool(key, value);
  } else {
    throw config_error("unknown config key: " + key);
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path);
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_kv(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split_commas(text)) {
    seeds.push_back(static_cast<std::uint64_t>(parse_long("seeds", part)));
  }
  if (seeds.empty()) throw config_error("seeds: empty list");
  return seeds;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const std::string& part : split_commas(text)) {
    values.push_back(parse_double("values", part));
  }
  return values;
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> methods;
  for (const std::string& part : split_commas(text)) {
    methods.push_back(method_from_string(part));
  }
  return methods;
}

}  // namespace admmrnn
