#pragma once

#include <vector>

#include "socem/cost.hpp"
#include "socem/smoother.hpp"

namespace socem {

/// Smoothed second moments of zeta = (s_{k+1} - c_d, y_k - c_r) and
/// z = (s_k, a_k) under the policy step being evaluated.
struct ThetaMoments {
  MatrixXd Theta1;  // (n_s+1) x (n_s+1), E[zeta zeta']
  MatrixXd Theta2;  // (n_s+1) x (n_s+n_a), E[zeta z']
  MatrixXd Theta3;  // (n_s+n_a) x (n_s+n_a), E[z z']
};

ThetaMoments theta_moments(const SmoothedPosterior& post, const LtvStep& model,
                           const PolicyStep& policy, int k);

/// L_k = -1/2 Tr{Sigma°^{-1}(Theta1 - Theta2 A°' - A° Theta2' + A° Theta3 A°')} - 1/2 log|Sigma°|.
double surrogate_term(const ThetaMoments& theta, const LtvStep& model);

/// E[log N(s_1; mu_1, P_1) | Y] under the smoothed law.
double initial_state_term(const SmoothedPosterior& post, const LtvModel& model);

/// Sum over k of surrogate_term with each step evaluated at its own policy step.
double surrogate_value(const SmoothedPosterior& post, const LtvModel& model,
                       const PolicyParams& policy);

/// Which surrogate terms a subproblem for step j collects.
enum class Coupling {
  kPerStep,  // only term j, the only one that depends on phi_j
  kPooled,   // every term, each evaluated at phi_j
};

/// The surrogate restricted to one packed step phi = (vec F, e, vec S):
///   value(phi) = constant - 1/2 (1/2 phi' Zbar phi + O' phi),
///   Zbar = diag([[Z1, Z3], [Z3', Z2]], Zsigma).
struct SurrogateQuadratic {
  Eigen::Index n_s = 0;
  Eigen::Index n_a = 0;
  MatrixXd Z1;      // n_a n_s x n_a n_s
  MatrixXd Z2;      // n_a x n_a
  MatrixXd Z3;      // n_a n_s x n_a
  MatrixXd Zsigma;  // n_a^2 x n_a^2
  VectorXd O1;      // n_a n_s
  VectorXd O2;      // n_a
  double constant = 0.0;

  /// [[Z1, Z3], [Z3', Z2]].
  MatrixXd Z() const;
  MatrixXd Zbar() const;
  /// (O1, O2, 0).
  VectorXd O() const;
  double value(const VectorXd& phi) const;
};

SurrogateQuadratic assemble_quadratic(const SmoothedPosterior& post, const LtvModel& model,
                                      int j, Coupling coupling = Coupling::kPerStep,
                                      double rank_tol = 1e-8);

VectorXd surrogate_gradient(const SurrogateQuadratic& q, const VectorXd& phi);
MatrixXd surrogate_hessian(const SurrogateQuadratic& q);

/// Unique stationary point; its covariance factor is exactly zero.
PolicyStep closed_form_step(const SurrogateQuadratic& q, double max_condition = 1e12);

/// Maximizes the quadratic within a Euclidean ball of `radius` around `start`
/// in packed coordinates (exact trust-region solution).
PolicyStep trust_region_step(const SurrogateQuadratic& q, const PolicyStep& start, double radius);

enum class Variant { kSocEmI, kSocEmII };
enum class MStep { kTrustRegion, kClosedForm };

struct EmOptions {
  Variant variant = Variant::kSocEmII;
  Coupling coupling = Coupling::kPerStep;
  MStep m_step = MStep::kTrustRegion;
  double trust_radius = 0.5;
  double max_condition = 1e12;
  double rank_tol = 1e-8;
  FilterOptions filter;
};

struct EmStepResult {
  PolicyParams policy;
  /// Surrogate under the smoothing of the incoming policy, before and after.
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  /// Smallest eigenvalue of the negated Hessian over all subproblems.
  double min_neg_hessian_eig = 0.0;
};

/// Independent per-step maximization against the smoothing of `policy`.
EmStepResult soc_em_II(const SmoothedPosterior& post, const LtvModel& model,
                       const PolicyParams& policy, const EmOptions& options = {});

/// Sequential sweep over j, re-smoothing under the partially updated policy
/// before each subproblem.
EmStepResult soc_em_I(const LtvModel& model, const std::vector<double>& observations,
                      const PolicyParams& policy, const EmOptions& options = {});

/// Dispatches on options.variant.
EmStepResult em_step(const LtvModel& model, const std::vector<double>& observations,
                     const PolicyParams& policy, const EmOptions& options = {});

struct CovarianceDecay {
  /// Per iteration, the sum over k of Tr(Sigma_k), which equals the sum of
  /// the singular values of each PSD Sigma_k.
  std::vector<double> trace_sums;
  /// Iterations i (>= 1) whose sum exceeds the previous one by more than the tolerance.
  std::vector<int> increases;
};

CovarianceDecay covariance_decay_report(const std::vector<PolicyParams>& history,
                                        double tolerance = 0.0);

/// Paired Monte-Carlo estimate of
///   E[V_next(S) | Y] - E[V_prev(S) | Y],
/// with S drawn from the smoothed law and
///   V_phi(S) = sum_k (s_k - s*)' Q_s (s_k - s*) + E_a[(a_k - a*)' Q_a (a_k - a*)].
struct CostDescentEstimate {
  double mean_difference = 0.0;
  double standard_error = 0.0;
  int samples = 0;
};

/// Expected cost of one latent path under a policy; the action expectation is exact.
double path_cost(const std::vector<VectorXd>& path, const PolicyParams& policy,
                 const QuadraticCost& cost);

CostDescentEstimate cost_descent_estimate(const SmoothedPosterior& post,
                                          const PolicyParams& previous,
                                          const PolicyParams& next, const QuadraticCost& cost,
                                          int samples, Rng& rng);

}  // namespace socem
