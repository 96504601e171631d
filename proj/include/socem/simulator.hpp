#pragma once

#include <vector>

#include "socem/cost.hpp"
#include "socem/dynamics_fit.hpp"
#include "socem/policy.hpp"

namespace socem {

/// 2D point mass with gravity and linear damping; state (x, y, v_x, v_y).
struct PlantConfig {
  double mass = 1.0;
  Eigen::Vector2d gravity{0.0, -9.8};
  double damping = 0.1;
  double dt = 0.1;
  double rho = 0.3;
  int T = 30;
  VectorXd x0 = (VectorXd(4) << 0.0, 5.0, 0.0, 0.0).finished();

  void validate() const;
};

inline constexpr Eigen::Index kPlantStateDim = 4;
inline constexpr Eigen::Index kPlantActionDim = 2;

struct Rollout {
  std::vector<VectorXd> x;  // T + 1 true states
  std::vector<VectorXd> s;  // T + 1 measured states
  std::vector<VectorXd> a;  // T
  std::vector<double> Y;    // T
  std::vector<double> y;    // T
};

/// Semi-implicit Euler: v' = v + dt (a / m + g - damping v), p' = p + dt v'.
VectorXd step(const VectorXd& x, const VectorXd& a, const PlantConfig& cfg);

/// x + N(0, rho^2 I).
VectorXd measure(const VectorXd& x, double rho, Rng& rng);

/// Runs the policy on the measured state for cfg.T steps. Steps whose
/// covariance factor is exactly zero act deterministically.
Rollout run_episode(const PlantConfig& cfg, const PolicyParams& policy, const QuadraticCost& cost,
                    Rng& rng, SamplingMode mode = SamplingMode::kStochastic);

/// Rollout with i.i.d. N(0, action_std^2 I) actions instead of a policy.
Rollout run_random_episode(const PlantConfig& cfg, double action_std, const QuadraticCost& cost,
                           Rng& rng);

/// Transition tuples (s_k, a_k, s_{k+1}, y_k) of a set of rollouts.
EpisodeData to_episode_data(const std::vector<Rollout>& rollouts);

}  // namespace socem
