#pragma once

#include <vector>

#include "socem/dynamics_fit.hpp"
#include "socem/policy.hpp"

namespace socem {

/// Model step with the policy substituted for the action:
///   s_{k+1} = At_d s_k + drift_d + w,  w ~ N(0, Sigma_d)
///   y_k     = At_r s_{k+1} + drift_r + v,  v ~ N(0, Sigma_r)
/// At = A + B F, drift = B e + c, Sigma = B Sigma_pi B' + Sigma_model.
struct ClosedLoopStep {
  MatrixXd At_d;
  MatrixXd At_r;
  VectorXd drift_d;
  double drift_r = 0.0;
  MatrixXd Sigma_d;
  double Sigma_r = 1.0;
};

ClosedLoopStep augment(const LtvStep& model, const PolicyStep& policy);

struct FilterOptions {
  /// Propagate Cholesky factors of the covariances instead of the matrices.
  bool square_root = false;
};

/// States are indexed t = 0..T for s_1..s_{T+1}; y_k (k = 0..T-1) observes
/// state k + 1.
struct FilterState {
  std::vector<ClosedLoopStep> closed_loop;  // T
  std::vector<VectorXd> filtered_mean;      // T + 1, state t given y_1..y_t
  std::vector<MatrixXd> filtered_cov;       // T + 1
  std::vector<VectorXd> predicted_mean;     // T, state k + 1 given y_1..y_k
  std::vector<MatrixXd> predicted_cov;      // T
  std::vector<VectorXd> gain;               // T, n_s x 1 gain for y_k

  int horizon() const { return static_cast<int>(closed_loop.size()); }
};

struct SmoothedPosterior {
  std::vector<VectorXd> mean;     // T + 1
  std::vector<MatrixXd> cov;      // T + 1
  std::vector<MatrixXd> gain;     // T, smoother gain J_k
  std::vector<MatrixXd> lag_cov;  // T, Cov(s_{k+1}, s_k | Y)
  std::vector<MatrixXd> G;        // T + 1, mean mean' + cov
  std::vector<MatrixXd> M;        // T, mean_{k+1} mean_k' + lag_cov_k

  int horizon() const { return static_cast<int>(gain.size()); }
};

FilterState kalman_filter(const LtvModel& model, const PolicyParams& policy,
                          const std::vector<double>& observations, const VectorXd& s1,
                          const MatrixXd& P1, const FilterOptions& options = {});

SmoothedPosterior rts_smooth(const FilterState& filter);

/// kalman_filter followed by rts_smooth, initialized from the model's (mu1, P1).
SmoothedPosterior smooth(const LtvModel& model, const PolicyParams& policy,
                         const std::vector<double>& observations,
                         const FilterOptions& options = {});

/// Draws a latent path s_1..s_{T+1} from the smoothed Gauss-Markov law,
/// using the one-lag covariances for the transitions.
std::vector<VectorXd> sample_smoothed_path(const SmoothedPosterior& post, Rng& rng);

}  // namespace socem
