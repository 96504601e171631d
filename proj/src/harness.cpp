#include "socem/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace socem {

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

const char* variant_name(Variant v) { return v == Variant::kSocEmI ? "em1" : "em2"; }

Variant parse_variant(const std::string& s) {
  if (s == "em1") return Variant::kSocEmI;
  if (s == "em2") return Variant::kSocEmII;
  throw Error("unknown variant '" + s + "' (expected em1 or em2)");
}

std::string stage_message(const std::string& stage, int iteration, std::uint64_t seed,
                          const std::string& what) {
  std::ostringstream os;
  os << "stage " << stage << ", iteration " << iteration << ", seed " << seed << ": " << what;
  return os.str();
}

template <typename Fn>
auto run_stage(const std::string& stage, int iteration, std::uint64_t seed, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(stage_message(stage, iteration, seed, e.what()));
  }
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace

void RunConfig::validate() const {
  plant.validate();
  cost.validate();
  law.validate();
  require_size(cost.s_star, kPlantStateDim, "cost: s_star");
  require_size(cost.a_star, kPlantActionDim, "cost: a_star");
  if (M < 1) throw Error("config: M must be at least 1");
  if (n_iters < 1) throw Error("config: iters must be at least 1");
  if (eval_rollouts < 1) throw Error("config: eval_rollouts must be at least 1");
  if (init_rollouts < 1) throw Error("config: init_rollouts must be at least 1");
  if (!(random_action_std > 0.0)) throw Error("config: random_action_std must be positive");
  if (!(exploration_sigma >= 0.0)) throw Error("config: exploration_sigma must be >= 0");
  if (!(em.trust_radius > 0.0)) throw Error("config: trust_radius must be positive");
  if (cost_descent_samples == 1 || cost_descent_samples < 0) {
    throw Error("config: cost_descent_samples must be 0 or at least 2");
  }
}

RunConfig default_config() {
  RunConfig c;
  c.cost.Q_s = VectorXd((VectorXd(4) << 1.0, 1.0, 0.1, 0.1).finished()).asDiagonal();
  c.cost.Q_a = 0.01 * MatrixXd::Identity(2, 2);
  c.cost.s_star = (VectorXd(4) << 5.0, 20.0, 0.0, 0.0).finished();
  c.cost.a_star = VectorXd::Zero(2);
  c.fit.prior.window = -1;
  c.fit.prior.pooled_scatter = true;
  return c;
}

json config_to_json(const RunConfig& c) {
  const NiwPrior& p = c.fit.prior;
  return {
      {"plant",
       {{"mass", c.plant.mass},
        {"gravity", {c.plant.gravity.x(), c.plant.gravity.y()}},
        {"damping", c.plant.damping},
        {"dt", c.plant.dt},
        {"rho", c.plant.rho},
        {"T", c.plant.T},
        {"x0", vector_to_json(c.plant.x0)}}},
      {"cost",
       {{"Q_s", matrix_to_json(c.cost.Q_s)},
        {"Q_a", matrix_to_json(c.cost.Q_a)},
        {"s_star", vector_to_json(c.cost.s_star)},
        {"a_star", vector_to_json(c.cost.a_star)},
        {"lambda", c.law.lambda}}},
      {"prior",
       {{"kappa0", p.kappa0},
        {"nu0_extra", p.nu0_extra},
        {"scatter_scale", p.scatter_scale},
        {"window", p.window},
        {"pooled_scatter", p.pooled_scatter},
        {"min_samples", p.min_samples},
        {"p1_floor", c.fit.p1_floor},
        {"rank_tol", c.fit.rank_tol}}},
      {"em",
       {{"variant", variant_name(c.em.variant)},
        {"coupling", c.em.coupling == Coupling::kPooled ? "pooled" : "per_step"},
        {"m_step", c.em.m_step == MStep::kClosedForm ? "closed_form" : "trust_region"},
        {"trust_radius", c.em.trust_radius},
        {"max_condition", c.em.max_condition},
        {"square_root", c.em.filter.square_root}}},
      {"run",
       {{"M", c.M},
        {"iters", c.n_iters},
        {"eval_rollouts", c.eval_rollouts},
        {"seed", c.seed},
        {"init_rollouts", c.init_rollouts},
        {"random_action_std", c.random_action_std},
        {"exploration_sigma", c.exploration_sigma},
        {"refit_until", c.refit_until},
        {"optimize", c.optimize},
        {"eval_deterministic", c.eval_deterministic},
        {"cost_descent_samples", c.cost_descent_samples},
        {"phi0", c.phi0_path}}},
  };
}

RunConfig config_from_json(const json& doc) {
  const json& j = doc.contains("config") ? doc.at("config") : doc;
  RunConfig c = default_config();
  try {
    if (j.contains("plant")) {
      const json& p = j.at("plant");
      read_if(p, "mass", c.plant.mass);
      read_if(p, "damping", c.plant.damping);
      read_if(p, "dt", c.plant.dt);
      read_if(p, "rho", c.plant.rho);
      read_if(p, "T", c.plant.T);
      if (p.contains("gravity")) {
        const VectorXd g = vector_from_json(p.at("gravity"), "plant.gravity");
        require_size(g, 2, "plant.gravity");
        c.plant.gravity = g;
      }
      if (p.contains("x0")) c.plant.x0 = vector_from_json(p.at("x0"), "plant.x0");
    }
    if (j.contains("cost")) {
      const json& q = j.at("cost");
      if (q.contains("Q_s")) c.cost.Q_s = matrix_from_json(q.at("Q_s"), "cost.Q_s");
      if (q.contains("Q_a")) c.cost.Q_a = matrix_from_json(q.at("Q_a"), "cost.Q_a");
      if (q.contains("s_star")) c.cost.s_star = vector_from_json(q.at("s_star"), "cost.s_star");
      if (q.contains("a_star")) c.cost.a_star = vector_from_json(q.at("a_star"), "cost.a_star");
      read_if(q, "lambda", c.law.lambda);
    }
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      read_if(p, "kappa0", c.fit.prior.kappa0);
      read_if(p, "nu0_extra", c.fit.prior.nu0_extra);
      read_if(p, "scatter_scale", c.fit.prior.scatter_scale);
      read_if(p, "window", c.fit.prior.window);
      read_if(p, "pooled_scatter", c.fit.prior.pooled_scatter);
      read_if(p, "min_samples", c.fit.prior.min_samples);
      read_if(p, "p1_floor", c.fit.p1_floor);
      read_if(p, "rank_tol", c.fit.rank_tol);
      c.em.rank_tol = c.fit.rank_tol;
    }
    if (j.contains("em")) {
      const json& e = j.at("em");
      if (e.contains("variant")) c.em.variant = parse_variant(e.at("variant").get<std::string>());
      if (e.contains("coupling")) {
        const auto s = e.at("coupling").get<std::string>();
        if (s != "per_step" && s != "pooled") throw Error("em.coupling must be per_step or pooled");
        c.em.coupling = s == "pooled" ? Coupling::kPooled : Coupling::kPerStep;
      }
      if (e.contains("m_step")) {
        const auto s = e.at("m_step").get<std::string>();
        if (s != "trust_region" && s != "closed_form") {
          throw Error("em.m_step must be trust_region or closed_form");
        }
        c.em.m_step = s == "closed_form" ? MStep::kClosedForm : MStep::kTrustRegion;
      }
      read_if(e, "trust_radius", c.em.trust_radius);
      read_if(e, "max_condition", c.em.max_condition);
      read_if(e, "square_root", c.em.filter.square_root);
    }
    if (j.contains("run")) {
      const json& r = j.at("run");
      read_if(r, "M", c.M);
      read_if(r, "iters", c.n_iters);
      read_if(r, "eval_rollouts", c.eval_rollouts);
      read_if(r, "seed", c.seed);
      read_if(r, "init_rollouts", c.init_rollouts);
      read_if(r, "random_action_std", c.random_action_std);
      read_if(r, "exploration_sigma", c.exploration_sigma);
      read_if(r, "refit_until", c.refit_until);
      read_if(r, "optimize", c.optimize);
      read_if(r, "eval_deterministic", c.eval_deterministic);
      read_if(r, "cost_descent_samples", c.cost_descent_samples);
      read_if(r, "phi0", c.phi0_path);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

EvalSummary evaluate_policy(const PlantConfig& plant, const PolicyParams& policy,
                            const QuadraticCost& cost, int rollouts, std::uint64_t root_seed,
                            SamplingMode mode) {
  if (rollouts < 1) throw Error("evaluate_policy: needs at least one rollout");
  const auto T = static_cast<std::size_t>(plant.T);
  EvalSummary out;
  std::vector<std::vector<double>> cum(static_cast<std::size_t>(rollouts));
  for (int r = 0; r < rollouts; ++r) {
    Rng rng(derive_seed(root_seed, kStreamEvaluate, 0, static_cast<std::uint64_t>(r)));
    out.rollouts.push_back(run_episode(plant, policy, cost, rng, mode));
    double running = 0.0;
    for (double Y : out.rollouts.back().Y) cum[static_cast<std::size_t>(r)].push_back(running += Y);
  }
  const double n = rollouts;
  out.cum_cost_mean.assign(T, 0.0);
  out.cum_cost_std.assign(T, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    double mean = 0.0;
    for (const auto& c : cum) mean += c[k];
    mean /= n;
    double var = 0.0;
    for (const auto& c : cum) var += (c[k] - mean) * (c[k] - mean);
    out.cum_cost_mean[k] = mean;
    out.cum_cost_std[k] = rollouts > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  }
  out.total_mean = out.cum_cost_mean.back();
  out.total_se = out.cum_cost_std.back() / std::sqrt(n);
  return out;
}

std::vector<double> generate_observations(const LtvModel& model, const PolicyParams& policy,
                                          const VectorXd& s1, Rng& rng) {
  if (policy.horizon() != model.horizon()) {
    throw DimensionError("generate_observations: policy and model horizons differ");
  }
  require_size(s1, model.state_dim(), "generate_observations: s1");
  const double floor = std::exp(-kMaxCost);
  std::vector<double> y;
  VectorXd s = s1;
  for (int k = 0; k < model.horizon(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const LtvStep& m = model.steps[ku];
    const PolicyStep& ps = policy.steps[ku];
    const VectorXd a = sample_action(
        ps, s, rng, ps.noise_free() ? SamplingMode::kDeterministic : SamplingMode::kStochastic,
        k + 1);
    const double mean_y = (m.A_r * s + m.B_r * a)(0) + m.c_r;
    const VectorXd next = sample_gaussian(m.A_d * s + m.B_d * a + m.c_d, m.Sigma_d, rng);
    const double yk = mean_y + std::sqrt(m.Sigma_r) * standard_normal(1, rng)(0);
    y.push_back(std::clamp(yk, floor, 1.0));
    s = next;
  }
  return y;
}

PolicyParams baseline_policy(const RunConfig& cfg) {
  std::vector<Rollout> rollouts;
  for (int m = 0; m < cfg.init_rollouts; ++m) {
    Rng rng(derive_seed(cfg.seed, kStreamExplore, 0, static_cast<std::uint64_t>(m)));
    rollouts.push_back(run_random_episode(cfg.plant, cfg.random_action_std, cfg.cost, rng));
  }
  const LtvModel model = fit_model(to_episode_data(rollouts), cfg.fit);
  return make_phi0(lqr_backward(model, cfg.cost), cfg.exploration_sigma);
}

RunResult run_soc_em(const RunConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.seed;
  const SamplingMode eval_mode =
      cfg.eval_deterministic ? SamplingMode::kDeterministic : SamplingMode::kStochastic;

  PolicyParams phi = run_stage("baseline", 0, seed, [&] {
    PolicyParams p = cfg.phi0_path.empty() ? baseline_policy(cfg) : load_policy(cfg.phi0_path);
    if (p.horizon() != cfg.plant.T || p.state_dim() != kPlantStateDim ||
        p.action_dim() != kPlantActionDim) {
      throw DimensionError("initial policy does not match the plant dimensions");
    }
    return p;
  });

  RunResult result;
  LtvModel model;
  for (int i = 0; i < cfg.n_iters; ++i) {
    const auto iu = static_cast<std::uint64_t>(i);
    IterationRecord rec;
    rec.iteration = i;
    rec.policy = phi;
    for (const auto& s : phi.steps) rec.trace_sum += s.covariance().trace();
    rec.eval = run_stage("evaluate", i, seed, [&] {
      return evaluate_policy(cfg.plant, phi, cfg.cost, cfg.eval_rollouts, seed, eval_mode);
    });

    rec.refit = i == 0 || cfg.refit_until < 0 || i < cfg.refit_until;
    if (rec.refit) {
      const EpisodeData data = run_stage("collect", i, seed, [&] {
        std::vector<Rollout> rollouts;
        for (int m = 0; m < cfg.M; ++m) {
          Rng rng(derive_seed(seed, kStreamCollect, iu, static_cast<std::uint64_t>(m)));
          rollouts.push_back(run_episode(cfg.plant, phi, cfg.cost, rng));
        }
        return to_episode_data(rollouts);
      });
      model = run_stage("fit", i, seed, [&] { return fit_model(data, cfg.fit); });
    }

    const std::vector<double> y = run_stage("observe", i, seed, [&] {
      Rng rng(derive_seed(seed, kStreamObserve, iu));
      const VectorXd s1 = sample_gaussian(model.mu1, model.P1, rng);
      return generate_observations(model, phi, s1, rng);
    });
    const SmoothedPosterior post =
        run_stage("smooth", i, seed, [&] { return smooth(model, phi, y, cfg.em.filter); });

    EmStepResult step = run_stage("optimize", i, seed, [&] {
      if (!cfg.optimize) {
        const double v = surrogate_value(post, model, phi);
        return EmStepResult{phi, v, v, 0.0};
      }
      EmStepResult r = cfg.em.variant == Variant::kSocEmI
                           ? soc_em_I(model, y, phi, cfg.em)
                           : soc_em_II(post, model, phi, cfg.em);
      const double slack = 1e-9 * (1.0 + std::abs(r.surrogate_before));
      if (cfg.em.variant == Variant::kSocEmII && r.surrogate_after < r.surrogate_before - slack) {
        std::ostringstream os;
        os << "surrogate decreased from " << r.surrogate_before << " to " << r.surrogate_after;
        throw NumericalError(os.str());
      }
      return r;
    });
    rec.surrogate_before = step.surrogate_before;
    rec.surrogate_after = step.surrogate_after;
    rec.min_neg_hessian_eig = step.min_neg_hessian_eig;
    if (cfg.cost_descent_samples > 0) {
      rec.descent = run_stage("evaluate", i, seed, [&] {
        Rng rng(derive_seed(seed, kStreamDescent, iu));
        return cost_descent_estimate(post, phi, step.policy, cfg.cost, cfg.cost_descent_samples,
                                     rng);
      });
    }
    phi = step.policy;
    result.records.push_back(std::move(rec));
  }
  result.final_policy = phi;
  return result;
}

void export_results(const RunResult& result, const RunConfig& cfg, const std::string& dir) {
  if (result.records.empty()) throw Error("export_results: no records");
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());

  auto costs = open_csv(root / "costs.csv");
  auto traj = open_csv(root / "trajectories.csv");
  auto acts = open_csv(root / "actions.csv");
  auto covs = open_csv(root / "covariance.csv");
  auto diag = open_csv(root / "diagnostics.csv");
  costs << "iteration,k,mean,std\n";
  traj << "iteration,rollout,k,x,y,v_x,v_y\n";
  acts << "iteration,rollout,k,a_x,a_y\n";
  covs << "iteration,k,trace\n";
  diag << "iteration,refit,surrogate_before,surrogate_after,expected_cost_change,"
          "expected_cost_change_se,trace_sum,min_neg_hessian_eig,total_cost_mean,"
          "total_cost_se\n";
  for (const auto& rec : result.records) {
    const int i = rec.iteration;
    for (std::size_t k = 0; k < rec.eval.cum_cost_mean.size(); ++k) {
      costs << i << ',' << k + 1 << ',' << format_double(rec.eval.cum_cost_mean[k]) << ','
            << format_double(rec.eval.cum_cost_std[k]) << '\n';
    }
    for (std::size_t r = 0; r < rec.eval.rollouts.size(); ++r) {
      const Rollout& ro = rec.eval.rollouts[r];
      for (std::size_t k = 0; k < ro.x.size(); ++k) {
        traj << i << ',' << r + 1 << ',' << k + 1;
        for (Eigen::Index d = 0; d < ro.x[k].size(); ++d) traj << ',' << format_double(ro.x[k](d));
        traj << '\n';
      }
      for (std::size_t k = 0; k < ro.a.size(); ++k) {
        acts << i << ',' << r + 1 << ',' << k + 1;
        for (Eigen::Index d = 0; d < ro.a[k].size(); ++d) acts << ',' << format_double(ro.a[k](d));
        acts << '\n';
      }
    }
    for (std::size_t k = 0; k < rec.policy.steps.size(); ++k) {
      covs << i << ',' << k + 1 << ','
           << format_double(rec.policy.steps[k].covariance().trace()) << '\n';
    }
    diag << i << ',' << (rec.refit ? 1 : 0) << ',' << format_double(rec.surrogate_before) << ','
         << format_double(rec.surrogate_after) << ','
         << format_double(rec.descent.mean_difference) << ','
         << format_double(rec.descent.standard_error) << ',' << format_double(rec.trace_sum)
         << ',' << format_double(rec.min_neg_hessian_eig) << ','
         << format_double(rec.eval.total_mean) << ',' << format_double(rec.eval.total_se)
         << '\n';
  }
  for (auto* f : {&costs, &traj, &acts, &covs, &diag}) {
    f->flush();
    if (!*f) throw Error("failed writing results into " + dir);
  }
  save_policy(result.final_policy, (root / "policy_final.json").string());

  const json manifest = {
      {"config", config_to_json(cfg)},
      {"seed", cfg.seed},
      {"variant", variant_name(cfg.em.variant)},
      {"iters", cfg.n_iters},
      {"seed_scheme",
       "derive_seed(root, stream, iteration, index) with splitmix64; streams: explore=1, "
       "collect=2, observe=3, evaluate=4, descent=5"},
      {"files",
       {"costs.csv", "trajectories.csv", "actions.csv", "covariance.csv", "diagnostics.csv",
        "policy_final.json"}},
  };
  write_json_file(manifest, (root / "manifest.json").string());
}

std::vector<CostRow> read_costs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "iteration,k,mean,std") throw Error(path + ": unexpected header");
  std::vector<CostRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c, d;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    std::getline(ss, d, ',');
    rows.push_back({std::stoi(a), std::stoi(b), std::stod(c), std::stod(d)});
  }
  return rows;
}

}  // namespace socem
