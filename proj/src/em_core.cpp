#include "socem/em_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace socem {

namespace {

MatrixXd stacked_dynamics(const LtvStep& m) {
  const auto n_s = m.state_dim();
  const auto n_a = m.action_dim();
  MatrixXd A(n_s + 1, n_s + n_a);
  A << m.A_d, m.B_d, m.A_r, m.B_r;
  return A;
}

void check_step_index(const SmoothedPosterior& post, int k, const char* who) {
  if (k < 0 || k >= post.horizon()) {
    std::ostringstream os;
    os << who << ": timestep " << k + 1 << " outside 1.." << post.horizon();
    throw Error(os.str());
  }
}

}  // namespace

ThetaMoments theta_moments(const SmoothedPosterior& post, const LtvStep& model,
                           const PolicyStep& policy, int k) {
  check_step_index(post, k, "theta_moments");
  const auto ku = static_cast<std::size_t>(k);
  const auto n_s = model.state_dim();
  const auto n_a = model.action_dim();
  require_dims(policy.F, n_a, n_s, "theta_moments: policy F");
  require_size(policy.e, n_a, "theta_moments: policy e");
  require_size(post.mean[ku], n_s, "theta_moments: smoothed mean");

  const MatrixXd& F = policy.F;
  const VectorXd& e = policy.e;
  const VectorXd& s = post.mean[ku];
  const VectorXd& sn = post.mean[ku + 1];
  const MatrixXd& G = post.G[ku];
  const MatrixXd& Gn = post.G[ku + 1];
  const MatrixXd& M = post.M[ku];
  const VectorXd& c = model.c_d;

  const VectorXd Ea = F * s + e;
  const MatrixXd Esa = G * F.transpose() + s * e.transpose();
  const MatrixXd Eaa = symmetrize(F * G * F.transpose() + F * s * e.transpose() +
                                  e * s.transpose() * F.transpose() + e * e.transpose() +
                                  policy.covariance());

  ThetaMoments th;
  th.Theta3.resize(n_s + n_a, n_s + n_a);
  th.Theta3 << G, Esa, Esa.transpose(), Eaa;

  // Centered next state against z.
  const MatrixXd Ens = M - c * s.transpose();
  const MatrixXd Ena = M * F.transpose() + sn * e.transpose() - c * Ea.transpose();
  MatrixXd Enz(n_s, n_s + n_a);
  Enz << Ens, Ena;
  const MatrixXd Enn = Gn - c * sn.transpose() - sn * c.transpose() + c * c.transpose();

  // Centered cost observation through the reward row.
  MatrixXd Ar(1, n_s + n_a);
  Ar << model.A_r, model.B_r;
  const MatrixXd Eyz = Ar * th.Theta3;
  const double Eyy = (Ar * th.Theta3 * Ar.transpose())(0, 0) + model.Sigma_r;
  const VectorXd Eny = Enz * Ar.transpose();

  th.Theta1.resize(n_s + 1, n_s + 1);
  th.Theta1 << Enn, Eny, Eny.transpose(), Eyy;
  th.Theta1 = symmetrize(th.Theta1);
  th.Theta2.resize(n_s + 1, n_s + n_a);
  th.Theta2 << Enz, Eyz;
  return th;
}

double surrogate_term(const ThetaMoments& theta, const LtvStep& model) {
  const auto n_s = model.state_dim();
  const auto n_a = model.action_dim();
  require_dims(theta.Theta1, n_s + 1, n_s + 1, "surrogate_term: Theta1");
  require_dims(theta.Theta2, n_s + 1, n_s + n_a, "surrogate_term: Theta2");
  require_dims(theta.Theta3, n_s + n_a, n_s + n_a, "surrogate_term: Theta3");
  if (!(model.Sigma_r > 0.0)) throw NumericalError("surrogate_term: Sigma_r must be positive");
  Eigen::LLT<MatrixXd> llt(model.Sigma_d);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("surrogate_term: Sigma_d must be positive definite");
  }
  const MatrixXd A = stacked_dynamics(model);
  const MatrixXd R = theta.Theta1 - theta.Theta2 * A.transpose() -
                     A * theta.Theta2.transpose() + A * theta.Theta3 * A.transpose();
  const double tr = llt.solve(R.topLeftCorner(n_s, n_s)).trace() + R(n_s, n_s) / model.Sigma_r;
  const double logdet = log_det_spd(model.Sigma_d, "Sigma_d") + std::log(model.Sigma_r);
  return -0.5 * tr - 0.5 * logdet;
}

double initial_state_term(const SmoothedPosterior& post, const LtvModel& model) {
  const VectorXd d = post.mean.front() - model.mu1;
  const MatrixXd second = post.cov.front() + d * d.transpose();
  Eigen::LLT<MatrixXd> llt(model.P1);
  if (llt.info() != Eigen::Success) throw NumericalError("P_1 must be positive definite");
  return -0.5 * llt.solve(second).trace() - 0.5 * log_det_spd(model.P1, "P_1");
}

double surrogate_value(const SmoothedPosterior& post, const LtvModel& model,
                       const PolicyParams& policy) {
  if (policy.horizon() != model.horizon() || post.horizon() != model.horizon()) {
    throw DimensionError("surrogate_value: horizons of posterior, model and policy differ");
  }
  double total = 0.0;
  for (int k = 0; k < model.horizon(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    total += surrogate_term(theta_moments(post, model.steps[ku], policy.steps[ku], k),
                            model.steps[ku]);
  }
  return total;
}

MatrixXd SurrogateQuadratic::Z() const {
  const Eigen::Index nf = n_a * n_s;
  MatrixXd z(nf + n_a, nf + n_a);
  z << Z1, Z3, Z3.transpose(), Z2;
  return z;
}

MatrixXd SurrogateQuadratic::Zbar() const {
  const Eigen::Index nfe = n_a * n_s + n_a;
  const Eigen::Index n = nfe + n_a * n_a;
  MatrixXd z = MatrixXd::Zero(n, n);
  z.topLeftCorner(nfe, nfe) = Z();
  z.bottomRightCorner(n_a * n_a, n_a * n_a) = Zsigma;
  return z;
}

VectorXd SurrogateQuadratic::O() const {
  VectorXd o = VectorXd::Zero(PolicyStep::packed_size(n_s, n_a));
  o.head(n_a * n_s) = O1;
  o.segment(n_a * n_s, n_a) = O2;
  return o;
}

double SurrogateQuadratic::value(const VectorXd& phi) const {
  require_size(phi, PolicyStep::packed_size(n_s, n_a), "surrogate value: phi");
  return constant - 0.5 * (0.5 * phi.dot(Zbar() * phi) + O().dot(phi));
}

SurrogateQuadratic assemble_quadratic(const SmoothedPosterior& post, const LtvModel& model,
                                      int j, Coupling coupling, double rank_tol) {
  check_step_index(post, j, "assemble_quadratic");
  if (post.horizon() != model.horizon()) {
    throw DimensionError("assemble_quadratic: posterior and model horizons differ");
  }
  const auto n_s = model.state_dim();
  const auto n_a = model.action_dim();
  SurrogateQuadratic q;
  q.n_s = n_s;
  q.n_a = n_a;
  q.Z1 = MatrixXd::Zero(n_a * n_s, n_a * n_s);
  q.Z2 = MatrixXd::Zero(n_a, n_a);
  q.Z3 = MatrixXd::Zero(n_a * n_s, n_a);
  q.Zsigma = MatrixXd::Zero(n_a * n_a, n_a * n_a);
  q.O1 = VectorXd::Zero(n_a * n_s);
  q.O2 = VectorXd::Zero(n_a);

  const int lo = coupling == Coupling::kPooled ? 0 : j;
  const int hi = coupling == Coupling::kPooled ? model.horizon() - 1 : j;
  const PolicyStep zero = PolicyStep::zeros(n_s, n_a);
  const MatrixXd I_a = MatrixXd::Identity(n_a, n_a);
  for (int k = lo; k <= hi; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const LtvStep& m = model.steps[ku];
    try {
      m.validate(rank_tol);
    } catch (const Error& e) {
      throw NumericalError("assemble_quadratic timestep " + std::to_string(k + 1) + ": " +
                           e.what() + " (the maximizer is unique only for full-rank B_d)");
    }
    Eigen::LLT<MatrixXd> llt(m.Sigma_d);
    const MatrixXd WB = llt.solve(m.B_d);  // Sigma_d^{-1} B_d
    const MatrixXd K = symmetrize(m.B_d.transpose() * WB);
    const VectorXd& s = post.mean[ku];
    const VectorXd& sn = post.mean[ku + 1];

    q.Z1 += 2.0 * kron(post.G[ku], K);
    q.Z2 += 2.0 * K;
    q.Z3 += 2.0 * kron(s, K);
    q.Zsigma += 2.0 * kron(K, I_a);
    q.O1 += 2.0 * vec(WB.transpose() * (m.A_d * post.G[ku] + m.c_d * s.transpose() - post.M[ku]));
    q.O2 += 2.0 * WB.transpose() * (m.A_d * s + m.c_d - sn);
    q.constant += surrogate_term(theta_moments(post, m, zero, k), m);
  }
  return q;
}

VectorXd surrogate_gradient(const SurrogateQuadratic& q, const VectorXd& phi) {
  require_size(phi, PolicyStep::packed_size(q.n_s, q.n_a), "surrogate_gradient: phi");
  return -0.5 * (q.Zbar() * phi + q.O());
}

MatrixXd surrogate_hessian(const SurrogateQuadratic& q) { return -0.5 * q.Zbar(); }

PolicyStep closed_form_step(const SurrogateQuadratic& q, double max_condition) {
  const MatrixXd Z = q.Z();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Z, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition) {
    std::ostringstream os;
    os << "closed_form_step: Z is ill-conditioned (eigenvalues " << lo << " .. " << hi << ")";
    throw NumericalError(os.str());
  }
  VectorXd rhs(q.O1.size() + q.O2.size());
  rhs << q.O1, q.O2;
  const VectorXd fe = -Z.ldlt().solve(rhs);
  VectorXd phi = VectorXd::Zero(PolicyStep::packed_size(q.n_s, q.n_a));
  phi.head(fe.size()) = fe;
  return unpack_step(phi, q.n_s, q.n_a);
}

PolicyStep trust_region_step(const SurrogateQuadratic& q, const PolicyStep& start, double radius) {
  if (!(radius > 0.0)) throw Error("trust_region_step: radius must be positive");
  const VectorXd phi0 = pack_step(start);
  require_size(phi0, PolicyStep::packed_size(q.n_s, q.n_a), "trust_region_step: start");
  const Eigen::Index nfe = q.n_a * q.n_s + q.n_a;
  const Eigen::Index nsig = q.n_a * q.n_a;
  // Minimize 1/2 d' Zbar d + g' d over |d| <= radius. Zbar is block diagonal
  // and the covariance block has no linear term, so g_sigma = Zsigma sigma0.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_fe(q.Z());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_sig(q.Zsigma);
  const VectorXd lam_fe = es_fe.eigenvalues();
  const VectorXd lam_sig = es_sig.eigenvalues();
  if (!(lam_fe.minCoeff() > 0.0) || !(lam_sig.minCoeff() > 0.0)) {
    throw NumericalError("trust_region_step: surrogate curvature is not positive definite");
  }
  const VectorXd g_fe = q.Z() * phi0.head(nfe) + q.O().head(nfe);
  const VectorXd gt_fe = es_fe.eigenvectors().transpose() * g_fe;
  const VectorXd st_sig = es_sig.eigenvectors().transpose() * phi0.tail(nsig);
  auto step_norm = [&](double mu) {
    const double a = (gt_fe.array() / (lam_fe.array() + mu)).matrix().squaredNorm();
    const double b =
        (st_sig.array() * lam_sig.array() / (lam_sig.array() + mu)).matrix().squaredNorm();
    return std::sqrt(a + b);
  };
  double mu = 0.0;
  if (step_norm(0.0) > radius) {
    double lo = 0.0;
    double hi = std::sqrt(g_fe.squaredNorm() + (q.Zsigma * phi0.tail(nsig)).squaredNorm()) / radius;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (step_norm(mid) > radius ? lo : hi) = mid;
    }
    mu = hi;
  }
  VectorXd phi(phi0.size());
  phi.head(nfe) =
      phi0.head(nfe) - es_fe.eigenvectors() * (gt_fe.array() / (lam_fe.array() + mu)).matrix();
  // sigma = mu (Zsigma + mu I)^{-1} sigma0: a contraction, exactly zero at mu = 0.
  phi.tail(nsig) =
      es_sig.eigenvectors() * (st_sig.array() * (mu / (lam_sig.array() + mu))).matrix();
  return unpack_step(phi, q.n_s, q.n_a);
}

namespace {

PolicyStep solve_subproblem(const SurrogateQuadratic& q, const PolicyStep& start,
                            const EmOptions& options, double& min_eig) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * q.Zbar(), Eigen::EigenvaluesOnly);
  min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  if (options.m_step == MStep::kClosedForm) return closed_form_step(q, options.max_condition);
  return trust_region_step(q, start, options.trust_radius);
}

}  // namespace

EmStepResult soc_em_II(const SmoothedPosterior& post, const LtvModel& model,
                       const PolicyParams& policy, const EmOptions& options) {
  EmStepResult r;
  r.policy = policy;
  r.min_neg_hessian_eig = std::numeric_limits<double>::infinity();
  r.surrogate_before = surrogate_value(post, model, policy);
  for (int j = 0; j < model.horizon(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    try {
      const SurrogateQuadratic q =
          assemble_quadratic(post, model, j, options.coupling, options.rank_tol);
      r.policy.steps[ju] = solve_subproblem(q, policy.steps[ju], options, r.min_neg_hessian_eig);
    } catch (const Error& e) {
      throw Error("SOC-EM II subproblem " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  r.surrogate_after = surrogate_value(post, model, r.policy);
  return r;
}

EmStepResult soc_em_I(const LtvModel& model, const std::vector<double>& observations,
                      const PolicyParams& policy, const EmOptions& options) {
  EmStepResult r;
  r.policy = policy;
  r.min_neg_hessian_eig = std::numeric_limits<double>::infinity();
  const SmoothedPosterior post0 = smooth(model, policy, observations, options.filter);
  r.surrogate_before = surrogate_value(post0, model, policy);
  for (int j = 0; j < model.horizon(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    try {
      const SmoothedPosterior post =
          j == 0 ? post0 : smooth(model, r.policy, observations, options.filter);
      const SurrogateQuadratic q =
          assemble_quadratic(post, model, j, options.coupling, options.rank_tol);
      r.policy.steps[ju] = solve_subproblem(q, policy.steps[ju], options, r.min_neg_hessian_eig);
    } catch (const Error& e) {
      throw Error("SOC-EM I subproblem " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  r.surrogate_after = surrogate_value(post0, model, r.policy);
  return r;
}

EmStepResult em_step(const LtvModel& model, const std::vector<double>& observations,
                     const PolicyParams& policy, const EmOptions& options) {
  if (options.variant == Variant::kSocEmI) return soc_em_I(model, observations, policy, options);
  return soc_em_II(smooth(model, policy, observations, options.filter), model, policy, options);
}

CovarianceDecay covariance_decay_report(const std::vector<PolicyParams>& history,
                                        double tolerance) {
  if (history.size() < 2) throw Error("covariance_decay_report: needs at least two iterations");
  CovarianceDecay out;
  for (const auto& p : history) {
    double sum = 0.0;
    for (const auto& step : p.steps) sum += step.covariance().trace();
    out.trace_sums.push_back(sum);
  }
  for (std::size_t i = 1; i < out.trace_sums.size(); ++i) {
    if (out.trace_sums[i] > out.trace_sums[i - 1] + tolerance) {
      out.increases.push_back(static_cast<int>(i));
    }
  }
  return out;
}

double path_cost(const std::vector<VectorXd>& path, const PolicyParams& policy,
                 const QuadraticCost& cost) {
  if (path.size() != policy.steps.size() + 1) {
    throw DimensionError("path_cost: path length must be the policy horizon plus one");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < policy.steps.size(); ++k) {
    const PolicyStep& ps = policy.steps[k];
    total += instantaneous_cost(path[k], ps.mean_action(path[k]), cost) +
             (cost.Q_a * ps.covariance()).trace();
  }
  return total;
}

CostDescentEstimate cost_descent_estimate(const SmoothedPosterior& post,
                                          const PolicyParams& previous,
                                          const PolicyParams& next, const QuadraticCost& cost,
                                          int samples, Rng& rng) {
  if (samples < 2) throw Error("cost_descent_estimate: needs at least two samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int n = 0; n < samples; ++n) {
    const auto path = sample_smoothed_path(post, rng);
    const double d = path_cost(path, next, cost) - path_cost(path, previous, cost);
    sum += d;
    sum_sq += d * d;
  }
  const double n = samples;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

}  // namespace socem
