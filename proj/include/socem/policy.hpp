#pragma once

#include <vector>

#include "socem/common.hpp"

namespace socem {

/// One step of the time-varying linear-Gaussian policy
///   a ~ N(F s + e, S' S),
/// where S (`sigma_sqrt`) is the stored square-root factor.
struct PolicyStep {
  MatrixXd F;           // n_a x n_s
  VectorXd e;           // n_a
  MatrixXd sigma_sqrt;  // n_a x n_a

  Eigen::Index state_dim() const { return F.cols(); }
  Eigen::Index action_dim() const { return F.rows(); }

  MatrixXd covariance() const { return symmetrize(sigma_sqrt.transpose() * sigma_sqrt); }
  VectorXd mean_action(const VectorXd& s) const { return F * s + e; }
  bool noise_free() const { return sigma_sqrt.isZero(0.0); }

  static PolicyStep zeros(Eigen::Index n_s, Eigen::Index n_a);
  /// Packed length n_a n_s + n_a + n_a^2.
  static Eigen::Index packed_size(Eigen::Index n_s, Eigen::Index n_a);
};

struct PolicyParams {
  std::vector<PolicyStep> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  Eigen::Index state_dim() const { return steps.empty() ? 0 : steps.front().state_dim(); }
  Eigen::Index action_dim() const { return steps.empty() ? 0 : steps.front().action_dim(); }

  static PolicyParams zeros(int T, Eigen::Index n_s, Eigen::Index n_a);
  void validate() const;
};

enum class SamplingMode {
  kStochastic,     // requires a positive-definite covariance
  kDeterministic,  // returns the mean action, ignoring the covariance
};

/// Draws F s + e + S' w with w ~ N(0, I). `step_index` (1-based) only tags
/// error messages.
VectorXd sample_action(const PolicyStep& step, const VectorXd& s, Rng& rng,
                       SamplingMode mode = SamplingMode::kStochastic, int step_index = 0);

/// col(vec F, e, vec S) for one step.
VectorXd pack_step(const PolicyStep& step);
PolicyStep unpack_step(const VectorXd& v, Eigen::Index n_s, Eigen::Index n_a);

/// Concatenation of pack_step over the horizon.
VectorXd pack(const PolicyParams& params);
PolicyParams unpack(const VectorXd& v, int T, Eigen::Index n_s, Eigen::Index n_a);

}  // namespace socem
