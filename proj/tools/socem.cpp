#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "socem/harness.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::string>& variant,
            const std::optional<int>& iters, const std::optional<std::uint64_t>& seed,
            const std::string& out) {
  socem::json doc = socem::read_json_file(config_path);
  socem::json& cfg_json = doc.contains("config") ? doc["config"] : doc;
  if (variant) cfg_json["em"]["variant"] = *variant;
  if (iters) cfg_json["run"]["iters"] = *iters;
  if (seed) cfg_json["run"]["seed"] = *seed;
  const socem::RunConfig cfg = socem::config_from_json(cfg_json);
  const socem::RunResult result = socem::run_soc_em(cfg);
  socem::export_results(result, cfg, out);
  for (const auto& rec : result.records) {
    std::cout << "iteration " << rec.iteration << ": cost " << rec.eval.total_mean << " +/- "
              << rec.eval.total_se << ", trace sum " << rec.trace_sum << "\n";
  }
  std::cout << "results written to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& policy_path, const std::string& config_path, int rollouts) {
  const socem::RunConfig cfg = socem::load_config(config_path);
  const socem::PolicyParams policy = socem::load_policy(policy_path);
  const socem::EvalSummary s = socem::evaluate_policy(
      cfg.plant, policy, cfg.cost, rollouts, cfg.seed,
      cfg.eval_deterministic ? socem::SamplingMode::kDeterministic
                             : socem::SamplingMode::kStochastic);
  socem::json out = {{"rollouts", rollouts},
                     {"total_cost_mean", s.total_mean},
                     {"total_cost_se", s.total_se},
                     {"cum_cost_mean", s.cum_cost_mean},
                     {"cum_cost_std", s.cum_cost_std}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& out_path,
            const std::optional<std::string>& config_path) {
  const socem::FitOptions options =
      config_path ? socem::load_config(*config_path).fit : socem::FitOptions{};
  const socem::LtvModel model = socem::fit_model(socem::read_episode_csv(data_path), options);
  socem::write_json_file(socem::model_to_json(model), out_path);
  std::cout << "model with " << model.horizon() << " steps written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOC-EM trajectory optimization toolkit"};
  app.require_subcommand(1);

  std::string config, out, policy, data, fit_out;
  std::optional<std::string> variant, fit_config;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
  int rollouts = 20;

  auto* run = app.add_subcommand("run", "Run SOC-EM on the point-mass plant");
  run->add_option("--config", config, "Config JSON or a run manifest")->required();
  run->add_option("--variant", variant, "em1 or em2")->check(CLI::IsMember({"em1", "em2"}));
  run->add_option("--iters", iters, "EM iterations")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Root seed");
  run->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a policy on the plant");
  eval->add_option("--policy", policy, "Policy JSON")->required();
  eval->add_option("--config", config, "Config JSON")->required();
  eval->add_option("--rollouts", rollouts, "Evaluation rollouts")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit a time-varying linear-Gaussian model");
  fit->add_option("--data", data, "Episode CSV")->required();
  fit->add_option("--out", fit_out, "Model JSON")->required();
  fit->add_option("--config", fit_config, "Config JSON supplying the prior");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config, variant, iters, seed, out);
    if (eval->parsed()) return cmd_eval(policy, config, rollouts);
    if (fit->parsed()) return cmd_fit(data, fit_out, fit_config);
  } catch (const std::exception& e) {
    std::cerr << "socem " << (run->parsed() ? "run" : eval->parsed() ? "eval" : "fit")
              << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}
