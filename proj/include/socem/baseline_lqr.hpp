#pragma once

#include <vector>

#include "socem/cost.hpp"
#include "socem/dynamics_fit.hpp"
#include "socem/policy.hpp"

namespace socem {

/// Finite-horizon LQR on the affine dynamics s' = A_d s + B_d a + c_d + w.
/// The expected cost-to-go from step k is s' V_k s + 2 v_k' s + v0_k, with
/// V_T = 0 after the last action (index T).
struct RiccatiPass {
  std::vector<MatrixXd> V;   // T + 1
  std::vector<VectorXd> v;   // T + 1
  std::vector<double> v0;    // T + 1
  std::vector<MatrixXd> K;   // T
  std::vector<VectorXd> k;   // T

  int horizon() const { return static_cast<int>(K.size()); }
  double cost_to_go(const VectorXd& s, int step) const;
};

RiccatiPass lqr_backward(const LtvModel& model, const QuadraticCost& cost);

/// F_k = K_k, e_k = k_k, Sigma_sqrt = exploration_sigma * I.
PolicyParams make_phi0(const RiccatiPass& pass, double exploration_sigma);

}  // namespace socem
