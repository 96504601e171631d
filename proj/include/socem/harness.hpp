#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socem/baseline_lqr.hpp"
#include "socem/em_core.hpp"
#include "socem/io.hpp"
#include "socem/simulator.hpp"

namespace socem {

/// Random-stream tags for derive_seed(root, tag, iteration, index).
enum SeedStream : std::uint64_t {
  kStreamExplore = 1,
  kStreamCollect = 2,
  kStreamObserve = 3,
  kStreamEvaluate = 4,
  kStreamDescent = 5,
};

struct RunConfig {
  PlantConfig plant;
  QuadraticCost cost;
  CostObservationLaw law;
  FitOptions fit;
  EmOptions em;
  int M = 20;
  int n_iters = 10;
  int eval_rollouts = 20;
  std::uint64_t seed = 1;
  /// Random-action rollouts that train the model behind the baseline.
  int init_rollouts = 20;
  double random_action_std = 2.0;
  /// Covariance factor scale of the baseline policy.
  double exploration_sigma = 2.0;
  /// Refit the model only while i < refit_until; negative refits every iteration.
  int refit_until = -1;
  /// false replaces the optimize step with the identity update.
  bool optimize = true;
  bool eval_deterministic = false;
  /// Latent paths per cost-descent estimate; 0 disables it.
  int cost_descent_samples = 1000;
  /// Optional externally supplied initial policy.
  std::string phi0_path;

  void validate() const;
};

/// Defaults of the point-mass experiment.
RunConfig default_config();
json config_to_json(const RunConfig& cfg);
/// Accepts a config document or a run manifest holding one under "config".
RunConfig config_from_json(const json& j);
RunConfig load_config(const std::string& path);

struct EvalSummary {
  std::vector<double> cum_cost_mean;  // T, running sum of Y over k
  std::vector<double> cum_cost_std;   // T
  double total_mean = 0.0;
  double total_se = 0.0;
  std::vector<Rollout> rollouts;
};

/// Rollout r always uses stream (evaluate, 0, r), so every policy evaluated
/// under one root seed sees the same noise realizations.
EvalSummary evaluate_policy(const PlantConfig& plant, const PolicyParams& policy,
                            const QuadraticCost& cost, int rollouts, std::uint64_t root_seed,
                            SamplingMode mode = SamplingMode::kStochastic);

struct IterationRecord {
  int iteration = 0;
  PolicyParams policy;
  EvalSummary eval;
  double trace_sum = 0.0;
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  double min_neg_hessian_eig = 0.0;
  CostDescentEstimate descent;
  bool refit = true;
};

struct RunResult {
  std::vector<IterationRecord> records;
  PolicyParams final_policy;
};

/// Rolls the fitted model forward under the policy, sampling (s_{k+1}, y_k)
/// from each step's conditional Gaussian; y is clamped into (0, 1].
std::vector<double> generate_observations(const LtvModel& model, const PolicyParams& policy,
                                          const VectorXd& s1, Rng& rng);

/// Fits a model to random-action rollouts and returns the LQR policy on it.
PolicyParams baseline_policy(const RunConfig& cfg);

RunResult run_soc_em(const RunConfig& cfg);

/// Writes costs.csv, trajectories.csv, actions.csv, covariance.csv,
/// diagnostics.csv, policy_final.json and manifest.json into `dir`.
void export_results(const RunResult& result, const RunConfig& cfg, const std::string& dir);

struct CostRow {
  int iteration;
  int k;
  double mean;
  double std;
};
std::vector<CostRow> read_costs_csv(const std::string& path);

}  // namespace socem
