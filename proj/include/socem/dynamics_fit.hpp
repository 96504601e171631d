#pragma once

#include <vector>

#include "socem/common.hpp"

namespace socem {

/// One transition (s_k, a_k, s_{k+1}, y_k) of one rollout.
struct Transition {
  VectorXd s;
  VectorXd a;
  VectorXd s_next;
  double y = 1.0;
};

/// Rollout tuples indexed as steps[k][m]: timestep k (0-based), experiment m.
struct EpisodeData {
  Eigen::Index n_s = 0;
  Eigen::Index n_a = 0;
  std::vector<std::vector<Transition>> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  /// Stacked variable (s_k, a_k, s_{k+1}, y_k) of dimension 2 n_s + n_a + 1.
  Eigen::Index joint_dim() const { return 2 * n_s + n_a + 1; }
  VectorXd stacked(int k, std::size_t m) const;
  void validate() const;
};

/// Explicit normal-inverse-Wishart hyperparameters.
struct NiwHyper {
  VectorXd mu0;
  double kappa0 = 1.0;
  MatrixXd Psi0;
  double nu0 = 0.0;
};

/// How posterior_joint builds its prior from the data.
struct NiwPrior {
  double kappa0 = 1.0;
  /// Degrees of freedom above the dimension: nu0 = d + nu0_extra.
  double nu0_extra = 2.0;
  /// Isotropic part of the prior scatter.
  double scatter_scale = 1e-2;
  /// Timesteps pooled into the prior mean on each side of k; negative pools
  /// the whole horizon.
  int window = 1;
  /// When true the prior scatter also carries nu0 times the pooled covariance
  /// of the window, so that the prior regression is the pooled regression.
  bool pooled_scatter = false;
  int min_samples = 1;
};

struct JointGaussianStep {
  VectorXd mu;
  MatrixXd Lambda;
};

/// One step of the conditioned model
///   s_{k+1} = A_d s_k + B_d a_k + c_d + w,  w ~ N(0, Sigma_d)
///   y_k     = A_r s_k + B_r a_k + c_r + v,  v ~ N(0, Sigma_r)
/// with w and v independent.
struct LtvStep {
  MatrixXd A_d;
  MatrixXd B_d;
  VectorXd c_d;
  MatrixXd A_r;  // 1 x n_s
  MatrixXd B_r;  // 1 x n_a
  double c_r = 0.0;
  MatrixXd Sigma_d;
  double Sigma_r = 1.0;

  Eigen::Index state_dim() const { return A_d.rows(); }
  Eigen::Index action_dim() const { return B_d.cols(); }
  void validate(double rank_tol = 1e-8) const;
};

struct LtvModel {
  std::vector<LtvStep> steps;
  VectorXd mu1;
  MatrixXd P1;

  int horizon() const { return static_cast<int>(steps.size()); }
  Eigen::Index state_dim() const { return mu1.size(); }
  Eigen::Index action_dim() const { return steps.empty() ? 0 : steps.front().action_dim(); }
  void validate(double rank_tol = 1e-8) const;
};

struct FitOptions {
  NiwPrior prior;
  /// Floor on the eigenvalues of P_1.
  double p1_floor = 1e-6;
  double rank_tol = 1e-8;
};

/// NIW posterior over a Gaussian from explicit hyperparameters. The returned
/// covariance is (Psi_N) / (nu_N + d + 2), symmetrized and jittered.
JointGaussianStep niw_posterior(const std::vector<VectorXd>& samples, const NiwHyper& hyper);

/// Builds the prior for timestep k from `data` and `prior`, then applies
/// niw_posterior to the records at k.
JointGaussianStep posterior_joint(const EpisodeData& data, int k, const NiwPrior& prior);

/// Conditions (s_{k+1}, y_k) on (s_k, a_k), folding the mean into (c_d, c_r)
/// and zeroing the cross-covariance between the two outputs.
LtvStep condition_step(const JointGaussianStep& joint, Eigen::Index n_s, Eigen::Index n_a,
                       double rank_tol = 1e-8);

LtvModel fit_model(const EpisodeData& data, const FitOptions& options = {});

}  // namespace socem
