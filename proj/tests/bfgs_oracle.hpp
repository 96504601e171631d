#pragma once

#include <ceres/ceres.h>

// glog's CHECK macros collide with the test framework's.
#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_GT
#undef CHECK_LT
#undef CHECK_GE
#undef CHECK_LE

#include "socem/em_core.hpp"

namespace socem::testing {

/// Maximizes the surrogate quadratic with Ceres' line-search BFGS, using only
/// value and gradient evaluations.
class NegatedSurrogate final : public ceres::FirstOrderFunction {
 public:
  explicit NegatedSurrogate(const SurrogateQuadratic& q) : q_(q) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const VectorXd> phi(parameters, NumParameters());
    *cost = -q_.value(phi);
    if (gradient != nullptr) {
      Eigen::Map<VectorXd>(gradient, NumParameters()) = -surrogate_gradient(q_, phi);
    }
    return true;
  }

  int NumParameters() const override {
    return static_cast<int>(PolicyStep::packed_size(q_.n_s, q_.n_a));
  }

 private:
  SurrogateQuadratic q_;
};

inline VectorXd bfgs_maximize(const SurrogateQuadratic& q, VectorXd start,
                              ceres::GradientProblemSolver::Summary* summary = nullptr) {
  ceres::GradientProblem problem(new NegatedSurrogate(q));
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::BFGS;
  options.max_num_iterations = 5000;
  options.function_tolerance = 0.0;
  options.parameter_tolerance = 0.0;
  options.gradient_tolerance = 1e-14;
  options.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary local;
  ceres::Solve(options, problem, start.data(), summary != nullptr ? summary : &local);
  return start;
}

}  // namespace socem::testing
