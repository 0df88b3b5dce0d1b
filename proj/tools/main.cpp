#include <chrono>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "admmrnn/check.hpp"
#include "admmrnn/errors.hpp"
#include "admmrnn/harness.hpp"

using namespace admmrnn;

namespace {

void print_run_summary(const std::vector<RunResult>& runs, const ExperimentConfig& config) {
  for (const RunResult& run : runs) {
    const MetricsRow& last = run.rows.back();
    std::printf("%-8s seed=%llu iters=%zu final_train_loss=%s final_test_loss=%s "
                "train_acc=%.2f%%%s\n",
                to_string(run.method).c_str(), static_cast<unsigned long long>(run.seed),
                run.rows.size(), format_metric(last.train_loss).c_str(),
                format_metric(last.test_loss).c_str(), last.train_acc,
                run.diverged ? " DIVERGED" : "");
  }
  if (!config.out_dir.empty()) {
    std::printf("metrics written under %s/\n", config.out_dir.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-free ADMM training for unfolded RNNs, with gradient baselines"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  app.add_option("--config", config_path, "flat 'key = value' config file (# comments)");
  auto add_kv = [&](const std::string& name, const std::string& desc) {
    app.add_option_function<std::string>(
        "--" + name,
        [&overrides, name](const std::string& value) { overrides.emplace_back(name, value); },
        desc);
  };
  add_kv("task", "mnist | text");
  add_kv("method", "admm | sgd | momentum | adagrad | rmsprop | adam");
  add_kv("iters", "iterations per run");
  add_kv("seeds", "comma-separated seed list");
  add_kv("nu", "coupling weight for t < N");
  add_kv("rho1", "penalty on the a_N coupling");
  add_kv("rho2", "penalty on the s_N coupling");
  add_kv("rho3", "penalty on the o_N coupling");
  add_kv("r", "proximal coefficient");
  add_kv("alpha", "l2 weight on w");
  add_kv("include-rho2-in-sn", "fold the rho2 term into the s_N step (on/off)");
  add_kv("lin-threshold", "|a| cutoff for the tanh(a)=a shortcut");
  add_kv("lr", "learning rate for gradient methods (0 = per-method default)");
  add_kv("clip-norm", "gradient clipping norm (0 = off)");
  add_kv("loss", "squared | cross-entropy | smoothed");
  add_kv("smoothing", "reported-loss smoothing factor");
  add_kv("hidden", "hidden state size");
  add_kv("scale", "init scale for u, w, v");
  add_kv("seq-len", "text window length N");
  add_kv("limit", "subsample each split to this many samples (0 = all)");
  add_kv("eval-limit", "samples used per metrics evaluation (0 = all)");
  add_kv("target-acc", "target accuracy %% for iterations-to-target");
  add_kv("images", "IDX image file (train)");
  add_kv("labels", "IDX label file (train)");
  add_kv("test-images", "IDX image file (test)");
  add_kv("test-labels", "IDX label file (test)");
  add_kv("text", "plain text file for the text task");
  add_kv("out", "output directory for CSV files");
  add_kv("threads", "parallel seeds in studies");
  add_kv("timing", "wall-time column on/off");

  CLI::App* train_cmd = app.add_subcommand("train", "run the configured method once per seed");
  std::string methods_text = "admm,sgd,adam,rmsprop";
  CLI::App* stability_cmd =
      app.add_subcommand("stability", "repeat each method over all seeds; emit mean/std");
  stability_cmd->add_option("--methods", methods_text, "comma-separated method list");
  std::string axis;
  std::string values_text;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "one run per value along one axis");
  sweep_cmd->add_option("--axis", axis, "rho1 | rho2 | rho3 | r | nu | seq_len")->required();
  sweep_cmd->add_option("--values", values_text, "comma-separated values")->required();
  int gradcheck_instances = 50;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "compare BPTT against central finite differences");
  gradcheck_cmd->add_option("--instances", gradcheck_instances, "random instances");
  int oracle_instances = 100;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-check", "compare every subproblem update against a numeric minimizer");
  oracle_cmd->add_option("--instances", oracle_instances, "random instances per update");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_config_file(config_path);
    for (const auto& [key, value] : overrides) apply_config_kv(config, key, value);

    if (gradcheck_cmd->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      const check::GradCheckResult result =
          check::run_gradcheck(gradcheck_instances, config.seeds.front());
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("gradcheck: %d instances, max relative error %.3g (tolerance 1e-5), %.2fs %s\n",
                  result.instances, result.max_rel_err, secs, result.pass ? "PASS" : "FAIL");
      return result.pass ? 0 : 4;
    }

    if (oracle_cmd->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<check::OpCheck> checks =
          check::run_oracle_suite(oracle_instances, config.seeds.front());
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      bool all = true;
      for (const check::OpCheck& chk : checks) {
        std::printf("oracle-check %-8s %4d instances, max abs error %.3g %s\n", chk.op.c_str(),
                    chk.instances, chk.max_err, chk.pass ? "PASS" : "FAIL");
        all = all && chk.pass;
      }
      std::printf("oracle-check: %.2fs total, tolerance 1e-6, %s\n", secs,
                  all ? "PASS" : "FAIL");
      return all ? 0 : 4;
    }

    if (config.out_dir.empty()) config.out_dir = "out";
    const SplitData data = resolve_data(config);

    if (train_cmd->parsed()) {
      print_run_summary(run_experiment(config, data.train, data.test), config);
    } else if (stability_cmd->parsed()) {
      const std::vector<Method> methods = parse_method_list(methods_text);
      const StabilityResult result = stability_study(config, methods, data.train, data.test);
      for (const auto& [name, stats] : result.per_method) {
        std::printf("%-8s final train loss mean=%s std=%s\n", name.c_str(),
                    format_metric(stats.train_mean.back()).c_str(),
                    format_metric(stats.train_std.back()).c_str());
      }
      std::printf("stability table written to %s/stability.csv\n", config.out_dir.c_str());
    } else if (sweep_cmd->parsed()) {
      const std::vector<SweepRow> rows = sweep(config, axis, parse_double_list(values_text));
      std::printf("%-10s %14s %16s %16s\n", axis.c_str(), "value", "final20_loss",
                  "iters_to_target");
      for (const SweepRow& row : rows) {
        const std::string iters =
            row.iters_to_target < 0 ? "inf" : std::to_string(row.iters_to_target);
        std::printf("%-10s %14s %16s %16s\n", axis.c_str(), format_metric(row.value).c_str(),
                    format_metric(row.final20_loss).c_str(), iters.c_str());
      }
      std::printf("sweep table written to %s/sweep_%s.csv\n", config.out_dir.c_str(),
                  axis.c_str());
    }
    return 0;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error (config): %s\n", e.what());
    return 2;
  } catch (const format_error& e) {
    std::fprintf(stderr, "error (data format): %s\n", e.what());
    return 3;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return 3;
  } catch (const shape_error& e) {
    std::fprintf(stderr, "error (shape): %s\n", e.what());
    return 4;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "error (numeric): %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
