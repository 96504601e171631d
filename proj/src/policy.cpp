#include "socem/policy.hpp"

#include <sstream>

namespace socem {

PolicyStep PolicyStep::zeros(Eigen::Index n_s, Eigen::Index n_a) {
  return {MatrixXd::Zero(n_a, n_s), VectorXd::Zero(n_a), MatrixXd::Zero(n_a, n_a)};
}

Eigen::Index PolicyStep::packed_size(Eigen::Index n_s, Eigen::Index n_a) {
  return n_a * n_s + n_a + n_a * n_a;
}

PolicyParams PolicyParams::zeros(int T, Eigen::Index n_s, Eigen::Index n_a) {
  return {std::vector<PolicyStep>(static_cast<std::size_t>(T), PolicyStep::zeros(n_s, n_a))};
}

void PolicyParams::validate() const {
  if (steps.empty()) throw Error("policy: horizon must be at least 1");
  const auto n_s = state_dim();
  const auto n_a = action_dim();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::string tag = "policy step " + std::to_string(k + 1);
    require_dims(steps[k].F, n_a, n_s, tag + " F");
    require_size(steps[k].e, n_a, tag + " e");
    require_dims(steps[k].sigma_sqrt, n_a, n_a, tag + " Sigma_sqrt");
  }
}

VectorXd sample_action(const PolicyStep& step, const VectorXd& s, Rng& rng, SamplingMode mode,
                       int step_index) {
  require_size(s, step.state_dim(), "sample_action: state");
  VectorXd a = step.mean_action(s);
  if (mode == SamplingMode::kDeterministic) return a;
  // S'S is positive definite exactly when the factor S is nonsingular.
  Eigen::JacobiSVD<MatrixXd> svd(step.sigma_sqrt);
  if (!(svd.singularValues().minCoeff() > 0.0)) {
    std::ostringstream os;
    os << "sample_action: covariance at timestep " << step_index
       << " is not positive definite";
    throw NumericalError(os.str());
  }
  return a + step.sigma_sqrt.transpose() * standard_normal(a.size(), rng);
}

VectorXd pack_step(const PolicyStep& step) {
  const auto n_s = step.state_dim();
  const auto n_a = step.action_dim();
  VectorXd v(PolicyStep::packed_size(n_s, n_a));
  v << vec(step.F), step.e, vec(step.sigma_sqrt);
  return v;
}

PolicyStep unpack_step(const VectorXd& v, Eigen::Index n_s, Eigen::Index n_a) {
  require_size(v, PolicyStep::packed_size(n_s, n_a), "unpack_step: parameter vector");
  const Eigen::Index nf = n_a * n_s;
  return {unvec(v.head(nf), n_a, n_s), v.segment(nf, n_a), unvec(v.tail(n_a * n_a), n_a, n_a)};
}

VectorXd pack(const PolicyParams& params) {
  params.validate();
  const auto width = PolicyStep::packed_size(params.state_dim(), params.action_dim());
  VectorXd v(width * params.horizon());
  for (int k = 0; k < params.horizon(); ++k) {
    v.segment(k * width, width) = pack_step(params.steps[static_cast<std::size_t>(k)]);
  }
  return v;
}

PolicyParams unpack(const VectorXd& v, int T, Eigen::Index n_s, Eigen::Index n_a) {
  const auto width = PolicyStep::packed_size(n_s, n_a);
  if (T < 1 || v.size() != width * T) {
    std::ostringstream os;
    os << "unpack: expected " << width * T << " parameters for T=" << T << ", n_s=" << n_s
       << ", n_a=" << n_a << ", got " << v.size();
    throw DimensionError(os.str());
  }
  PolicyParams p;
  p.steps.reserve(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    p.steps.push_back(unpack_step(v.segment(k * width, width), n_s, n_a));
  }
  return p;
}

}  // namespace socem
