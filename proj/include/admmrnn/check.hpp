#ifndef ADMMRNN_CHECK_HPP
#define ADMMRNN_CHECK_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "admmrnn/data.hpp"
#include "admmrnn/solver.hpp"

// Verification utilities, kept apart from the solver so the oracles stay
// independent of the update formulas they check.
namespace admmrnn::check {

using Objective = std::function<double(const Matrix&)>;

// Derivative-free minimizer: cyclic coordinate search with a shrinking
// bracket, refined until moves fall below tol.
Matrix numeric_argmin(const Objective& objective, Matrix start, double initial_span = 1.0,
                      double tol = 1e-12);

// Central-difference gradient of a scalar function of a matrix block.
Matrix fd_grad(const Objective& objective, const Matrix& at, double h = 1e-5);

// One randomly shaped, randomly valued solver state plus its inputs/targets.
struct Instance {
  AdmmState state;
  std::vector<Matrix> xs;
  SequenceTargets targets;   // dense targets, squared loss
  LossSpec loss{LossKind::kSquared, 0.0};
};
Instance random_instance(std::mt19937_64& rng, bool small_activations, std::size_t min_steps = 1);

// Objectives for each subproblem under the solver's stated conventions:
// quadratic couplings carry residual - lambda/rho, and linearized blocks
// use the finite-difference gradient of the coupling at the prior point.
Objective objective_u(const Instance& inst);
Objective objective_w(const Instance& inst);
Objective objective_b(const Instance& inst);
Objective objective_a(const Instance& inst, std::size_t t);
Objective objective_s(const Instance& inst, std::size_t t);
Objective objective_v(const Instance& inst);
Objective objective_c(const Instance& inst);
Objective objective_o(const Instance& inst, std::size_t t);

struct OpCheck {
  std::string op;
  double max_err = 0.0;
  int instances = 0;
  bool pass = true;
};
// Compares every update against numeric_argmin of its objective on random
// instances; tol is the max absolute entry error.
std::vector<OpCheck> run_oracle_suite(int per_op, std::uint64_t seed, double tol = 1e-6);

struct GradCheckResult {
  double max_rel_err = 0.0;
  int instances = 0;
  bool pass = true;
};
GradCheckResult run_gradcheck(int instances, std::uint64_t seed, double tol = 1e-5);

// Deterministic digit-like IDX files: per-class templates plus noise.
void write_synth_mnist(const std::string& images_path, const std::string& labels_path,
                       std::size_t count, std::uint64_t seed, std::size_t side = 28);

// Deterministic phrase cycle for the text task.
std::string pattern_text(std::size_t length);

// One-sample squared-loss task with a dense target at the final step.
Dataset make_tiny_task(const Dims& dims, std::size_t n_steps, std::uint64_t seed);

}  // namespace admmrnn::check

#endif
