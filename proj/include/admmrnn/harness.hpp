#ifndef ADMMRNN_HARNESS_HPP
#define ADMMRNN_HARNESS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "admmrnn/baselines.hpp"
#include "admmrnn/data.hpp"
#include "admmrnn/solver.hpp"

namespace admmrnn {

enum class Method { kAdmm, kSgd, kMomentum, kAdagrad, kRmsprop, kAdam };

Method method_from_string(const std::string& name);
std::string to_string(Method method);
OptKind opt_kind_of(Method method);  // rejects kAdmm

struct ExperimentConfig {
  std::string task = "text";  // mnist | text
  Method method = Method::kAdmm;
  long iterations = 100;
  std::vector<std::uint64_t> seeds = {1};

  AdmmHyper hyper;
  double learning_rate = 0.0;  // 0 keeps the per-method default
  double clip_norm = 0.0;

  std::string loss_name;  // empty = task default (mnist: cross-entropy, text: smoothed)
  double smoothing = 0.999;

  std::size_t hidden = 32;
  double init_scale = 0.01;
  std::size_t seq_len = 25;
  std::size_t limit = 0;
  std::size_t eval_limit = 256;
  double target_acc = 100.0;  // percent, for iterations-to-target

  std::string images, labels, test_images, test_labels, text_path;
  std::string out_dir;  // empty = no files written
  int threads = 1;
  bool timing = true;

  void validate() const;
};

// One CSV line. Columns carry ADMM diagnostics; gradient methods store the
// BPTT gradient norm in res1 and zero in lagrangian/res2/res3.
struct MetricsRow {
  long k = 0;
  double train_loss = 0.0, test_loss = 0.0;
  double train_acc = 0.0, test_acc = 0.0;
  double lagrangian = 0.0;
  double res1 = 0.0, res2 = 0.0, res3 = 0.0;
  double step_sq = 0.0, m_k = 0.0;
  double ms = 0.0;
  bool diverged = false;
};

struct RunResult {
  Method method = Method::kAdmm;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  bool diverged = false;
  long iters_to_target = -1;  // -1 = target accuracy never reached
  double final_train_loss = 0.0;
};

extern const char* const kMetricsHeader;
std::string format_metric(double v);
void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> parse_metrics(const std::string& path);

LossSpec resolve_loss(const ExperimentConfig& config);

struct SplitData {
  Dataset train;
  Dataset test;
};
SplitData resolve_data(const ExperimentConfig& config);

RunResult run_single(const ExperimentConfig& config, const Dataset& train, const Dataset& test,
                     std::uint64_t seed);

// One run per seed (threaded when configured) plus a per-iteration aggregate.
// Writes run_<method>_seed<seed>.csv and aggregate_<method>.csv under out_dir.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& train,
                                      const Dataset& test);

struct StabilityStats {
  std::vector<double> train_mean, train_std, test_mean, test_std;
};
struct StabilityResult {
  std::map<std::string, StabilityStats> per_method;
  std::map<std::string, std::vector<RunResult>> runs;
};
// Every method rerun over the same seed list; writes stability.csv.
StabilityResult stability_study(const ExperimentConfig& config,
                                const std::vector<Method>& methods, const Dataset& train,
                                const Dataset& test);

struct SweepRow {
  double value = 0.0;
  double final_loss = 0.0;
  double final20_loss = 0.0;     // mean train loss over the final 20 iterations
  long iters_to_target = -1;
};
using DataProvider = std::function<SplitData(const ExperimentConfig&)>;
// axis: rho1 | rho2 | rho3 | r | nu | seq_len. Writes sweep_<axis>.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& axis,
                            const std::vector<double>& values,
                            const DataProvider& provider = resolve_data);

ExperimentConfig load_config_file(const std::string& path);
// Shared by the config-file parser and the CLI flag overrides.
void apply_config_kv(ExperimentConfig& config, const std::string& key, const std::string& value);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<Method> parse_method_list(const std::string& text);

}  // namespace admmrnn

#endif
