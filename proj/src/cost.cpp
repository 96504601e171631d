#include "socem/cost.hpp"

#include <cmath>
#include <sstream>

namespace socem {

namespace {

void require_spd(const MatrixXd& q, const std::string& name) {
  if (q.rows() != q.cols()) throw DimensionError(name + " must be square");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(name + " must be symmetric");
  }
  if (!(min_eigenvalue(q) > 0.0)) throw Error(name + " must be positive definite");
}

}  // namespace

void QuadraticCost::validate() const {
  require_spd(Q_s, "Q_s");
  require_spd(Q_a, "Q_a");
  require_dims(Q_s, s_star.size(), s_star.size(), "Q_s");
  require_dims(Q_a, a_star.size(), a_star.size(), "Q_a");
}

void CostObservationLaw::validate() const {
  if (!(lambda > 1.0)) {
    std::ostringstream os;
    os << "cost observation law: lambda must exceed 1, got " << lambda;
    throw Error(os.str());
  }
}

double instantaneous_cost(const VectorXd& s, const VectorXd& a, const QuadraticCost& cost) {
  require_size(s, cost.s_star.size(), "instantaneous_cost: state s");
  require_size(a, cost.a_star.size(), "instantaneous_cost: action a");
  const VectorXd ds = s - cost.s_star;
  const VectorXd da = a - cost.a_star;
  // Both forms are PD, so clamp away the -1e-17 rounding that dot products produce.
  return std::max(0.0, ds.dot(cost.Q_s * ds) + da.dot(cost.Q_a * da));
}

double observed_cost(double Y) {
  if (!(Y >= 0.0)) throw Error("observed_cost: cost must be nonnegative");
  return std::exp(-std::min(Y, kMaxCost));
}

double observed_cost_pdf(double y, const CostObservationLaw& law) {
  law.validate();
  if (!(y > 0.0 && y <= 1.0)) throw Error("observed_cost_pdf: y must lie in (0, 1]");
  return law.lambda * std::pow(y, law.lambda - 1.0);
}

double observed_cost_cdf(double y, const CostObservationLaw& law) {
  law.validate();
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  return std::pow(y, law.lambda);
}

}  // namespace socem
