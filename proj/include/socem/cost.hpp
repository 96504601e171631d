#pragma once

#include "socem/common.hpp"

namespace socem {

/// Quadratic instantaneous cost
///   Y(s, a) = (s - s*)' Q_s (s - s*) + (a - a*)' Q_a (a - a*).
struct QuadraticCost {
  MatrixXd Q_s;
  MatrixXd Q_a;
  VectorXd s_star;
  VectorXd a_star;

  Eigen::Index state_dim() const { return s_star.size(); }
  Eigen::Index action_dim() const { return a_star.size(); }

  /// Throws unless both weights are symmetric (1e-12) positive definite and
  /// all shapes agree.
  void validate() const;
};

/// Exponential law of the cost, p(Y) = lambda exp(-lambda Y), lambda > 1.
struct CostObservationLaw {
  double lambda = 2.0;

  void validate() const;
};

/// Costs above this are clipped before exponentiation so that y stays in (0, 1].
inline constexpr double kMaxCost = 700.0;

double instantaneous_cost(const VectorXd& s, const VectorXd& a, const QuadraticCost& cost);

/// y = exp(-min(Y, kMaxCost)); throws for Y < 0.
double observed_cost(double Y);

/// Density of y = exp(-Y) when Y is exponential(lambda): lambda y^(lambda-1).
double observed_cost_pdf(double y, const CostObservationLaw& law);

/// Distribution function of the same law, y^lambda.
double observed_cost_cdf(double y, const CostObservationLaw& law);

}  // namespace socem
