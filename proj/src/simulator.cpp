#include "socem/simulator.hpp"

#include <sstream>

namespace socem {

void PlantConfig::validate() const {
  if (!(dt > 0.0)) throw Error("plant: dt must be positive");
  if (!(mass > 0.0)) throw Error("plant: mass must be positive");
  if (!(rho >= 0.0)) throw Error("plant: rho must be nonnegative");
  if (T < 1) throw Error("plant: T must be at least 1");
  require_size(x0, kPlantStateDim, "plant: x0");
}

VectorXd step(const VectorXd& x, const VectorXd& a, const PlantConfig& cfg) {
  require_size(x, kPlantStateDim, "step: state");
  require_size(a, kPlantActionDim, "step: action");
  if (!x.allFinite() || !a.allFinite()) throw NumericalError("step: non-finite state or action");
  const Eigen::Vector2d v = x.tail<2>();
  const Eigen::Vector2d v_next =
      v + cfg.dt * (a / cfg.mass + cfg.gravity - cfg.damping * v);
  VectorXd out(kPlantStateDim);
  out << x.head<2>() + cfg.dt * v_next, v_next;
  return out;
}

VectorXd measure(const VectorXd& x, double rho, Rng& rng) {
  if (!(rho >= 0.0)) throw Error("measure: rho must be nonnegative");
  if (rho == 0.0) return x;
  return x + rho * standard_normal(x.size(), rng);
}

namespace {

template <typename ActionFn>
Rollout rollout(const PlantConfig& cfg, const QuadraticCost& cost, Rng& rng, ActionFn&& act) {
  cfg.validate();
  Rollout r;
  r.x.push_back(cfg.x0);
  r.s.push_back(measure(cfg.x0, cfg.rho, rng));
  for (int k = 0; k < cfg.T; ++k) {
    const VectorXd& s = r.s.back();
    VectorXd a = act(k, s);
    const double Y = instantaneous_cost(s, a, cost);
    r.a.push_back(std::move(a));
    r.Y.push_back(Y);
    r.y.push_back(observed_cost(Y));
    r.x.push_back(step(r.x.back(), r.a.back(), cfg));
    r.s.push_back(measure(r.x.back(), cfg.rho, rng));
  }
  return r;
}

}  // namespace

Rollout run_episode(const PlantConfig& cfg, const PolicyParams& policy, const QuadraticCost& cost,
                    Rng& rng, SamplingMode mode) {
  if (policy.horizon() != cfg.T) {
    std::ostringstream os;
    os << "run_episode: policy horizon " << policy.horizon() << " differs from T=" << cfg.T;
    throw DimensionError(os.str());
  }
  return rollout(cfg, cost, rng, [&](int k, const VectorXd& s) {
    const PolicyStep& ps = policy.steps[static_cast<std::size_t>(k)];
    const SamplingMode m = ps.noise_free() ? SamplingMode::kDeterministic : mode;
    return sample_action(ps, s, rng, m, k + 1);
  });
}

Rollout run_random_episode(const PlantConfig& cfg, double action_std, const QuadraticCost& cost,
                           Rng& rng) {
  return rollout(cfg, cost, rng, [&](int, const VectorXd&) -> VectorXd {
    return action_std * standard_normal(kPlantActionDim, rng);
  });
}

EpisodeData to_episode_data(const std::vector<Rollout>& rollouts) {
  if (rollouts.empty()) throw Error("to_episode_data: no rollouts");
  EpisodeData d;
  d.n_s = rollouts.front().s.front().size();
  d.n_a = rollouts.front().a.front().size();
  const std::size_t T = rollouts.front().a.size();
  d.steps.resize(T);
  for (const auto& r : rollouts) {
    if (r.a.size() != T) throw DimensionError("to_episode_data: rollouts differ in length");
    for (std::size_t k = 0; k < T; ++k) {
      d.steps[k].push_back({r.s[k], r.a[k], r.s[k + 1], r.y[k]});
    }
  }
  return d;
}

}  // namespace socem
