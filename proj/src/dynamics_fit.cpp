#include "socem/dynamics_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace socem {

namespace {

void check_rank(const MatrixXd& B_d, double rank_tol, const std::string& where) {
  Eigen::JacobiSVD<MatrixXd> svd(B_d);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin >= rank_tol)) {
    std::ostringstream os;
    os << where << ": B_d must have full column rank (smallest singular value " << smin
       << " < " << rank_tol << ")";
    throw NumericalError(os.str());
  }
}

}  // namespace

VectorXd EpisodeData::stacked(int k, std::size_t m) const {
  const Transition& t = steps.at(static_cast<std::size_t>(k)).at(m);
  VectorXd x(joint_dim());
  x << t.s, t.a, t.s_next, t.y;
  return x;
}

void EpisodeData::validate() const {
  if (n_s < 1 || n_a < 1) throw DimensionError("episode data: n_s and n_a must be positive");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    for (std::size_t m = 0; m < steps[k].size(); ++m) {
      const Transition& t = steps[k][m];
      std::ostringstream tag;
      tag << "episode data k=" << k + 1 << " m=" << m + 1;
      require_size(t.s, n_s, tag.str() + " s");
      require_size(t.a, n_a, tag.str() + " a");
      require_size(t.s_next, n_s, tag.str() + " s_next");
      if (!(t.y > 0.0 && t.y <= 1.0)) throw Error(tag.str() + ": y must lie in (0, 1]");
    }
  }
}

void LtvStep::validate(double rank_tol) const {
  const auto n_s = state_dim();
  const auto n_a = action_dim();
  require_dims(A_d, n_s, n_s, "A_d");
  require_dims(B_d, n_s, n_a, "B_d");
  require_size(c_d, n_s, "c_d");
  require_dims(A_r, 1, n_s, "A_r");
  require_dims(B_r, 1, n_a, "B_r");
  require_dims(Sigma_d, n_s, n_s, "Sigma_d");
  if (!(min_eigenvalue(Sigma_d) > 0.0)) throw NumericalError("Sigma_d must be positive definite");
  if (!(Sigma_r > 0.0)) throw NumericalError("Sigma_r must be positive");
  check_rank(B_d, rank_tol, "model step");
}

void LtvModel::validate(double rank_tol) const {
  if (steps.empty()) throw Error("model: horizon must be at least 1");
  require_dims(P1, mu1.size(), mu1.size(), "P_1");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    try {
      steps[k].validate(rank_tol);
      require_dims(steps[k].A_d, mu1.size(), mu1.size(), "A_d");
      require_dims(steps[k].B_d, mu1.size(), action_dim(), "B_d");
    } catch (const Error& e) {
      throw Error("model timestep " + std::to_string(k + 1) + ": " + e.what());
    }
  }
}

JointGaussianStep niw_posterior(const std::vector<VectorXd>& samples, const NiwHyper& hyper) {
  const Eigen::Index d = hyper.mu0.size();
  require_dims(hyper.Psi0, d, d, "NIW prior scatter");
  if (!(hyper.kappa0 > 0.0)) throw Error("NIW prior: kappa0 must be positive");
  if (!(hyper.nu0 > static_cast<double>(d) - 1.0)) {
    throw Error("NIW prior: nu0 must exceed d - 1");
  }
  const auto n = static_cast<double>(samples.size());
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& x : samples) {
    require_size(x, d, "NIW sample");
    mean += x;
  }
  MatrixXd psi = hyper.Psi0;
  VectorXd mu = hyper.mu0;
  if (!samples.empty()) {
    mean /= n;
    MatrixXd scatter = MatrixXd::Zero(d, d);
    for (const auto& x : samples) scatter.noalias() += (x - mean) * (x - mean).transpose();
    const double kappa_n = hyper.kappa0 + n;
    const VectorXd dev = mean - hyper.mu0;
    mu = (hyper.kappa0 * hyper.mu0 + n * mean) / kappa_n;
    psi += scatter + (hyper.kappa0 * n / kappa_n) * dev * dev.transpose();
  }
  const double nu_n = hyper.nu0 + n;
  MatrixXd lambda = psi / (nu_n + static_cast<double>(d) + 2.0);
  return {mu, add_jitter(symmetrize(lambda))};
}

JointGaussianStep posterior_joint(const EpisodeData& data, int k, const NiwPrior& prior) {
  if (k < 0 || k >= data.horizon()) throw Error("posterior_joint: timestep out of range");
  const auto& here = data.steps[static_cast<std::size_t>(k)];
  if (static_cast<int>(here.size()) < prior.min_samples) {
    std::ostringstream os;
    os << "posterior_joint: timestep " << k + 1 << " has " << here.size()
       << " records, fewer than the minimum " << prior.min_samples
       << "; collect more rollouts";
    throw Error(os.str());
  }
  const Eigen::Index d = data.joint_dim();
  const int lo = prior.window < 0 ? 0 : std::max(0, k - prior.window);
  const int hi = prior.window < 0 ? data.horizon() - 1 : std::min(data.horizon() - 1, k + prior.window);

  std::vector<VectorXd> pooled;
  for (int j = lo; j <= hi; ++j) {
    for (std::size_t m = 0; m < data.steps[static_cast<std::size_t>(j)].size(); ++m) {
      pooled.push_back(data.stacked(j, m));
    }
  }

  NiwHyper hyper;
  hyper.kappa0 = prior.kappa0;
  hyper.nu0 = static_cast<double>(d) + prior.nu0_extra;
  hyper.mu0 = VectorXd::Zero(d);
  hyper.Psi0 = prior.scatter_scale * MatrixXd::Identity(d, d);
  if (!pooled.empty()) {
    for (const auto& x : pooled) hyper.mu0 += x;
    hyper.mu0 /= static_cast<double>(pooled.size());
    if (prior.pooled_scatter) {
      MatrixXd cov = MatrixXd::Zero(d, d);
      for (const auto& x : pooled) cov.noalias() += (x - hyper.mu0) * (x - hyper.mu0).transpose();
      cov /= static_cast<double>(pooled.size());
      hyper.Psi0 += hyper.nu0 * cov;
    }
  }

  std::vector<VectorXd> samples;
  samples.reserve(here.size());
  for (std::size_t m = 0; m < here.size(); ++m) samples.push_back(data.stacked(k, m));
  return niw_posterior(samples, hyper);
}

LtvStep condition_step(const JointGaussianStep& joint, Eigen::Index n_s, Eigen::Index n_a,
                       double rank_tol) {
  const Eigen::Index n_in = n_s + n_a;
  const Eigen::Index n_out = n_s + 1;
  require_size(joint.mu, n_in + n_out, "condition_step: mean");
  require_dims(joint.Lambda, n_in + n_out, n_in + n_out, "condition_step: covariance");

  const MatrixXd L_ii = joint.Lambda.topLeftCorner(n_in, n_in);
  const MatrixXd L_oi = joint.Lambda.bottomLeftCorner(n_out, n_in);
  const MatrixXd L_oo = joint.Lambda.bottomRightCorner(n_out, n_out);
  Eigen::LLT<MatrixXd> llt(L_ii);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(
        "condition_step: (s_k, a_k) covariance block is singular; increase the jitter");
  }
  const MatrixXd A = llt.solve(L_oi.transpose()).transpose();
  const MatrixXd S = symmetrize(L_oo - A * L_oi.transpose());
  const VectorXd c = joint.mu.tail(n_out) - A * joint.mu.head(n_in);

  LtvStep step;
  step.A_d = A.topLeftCorner(n_s, n_s);
  step.B_d = A.topRightCorner(n_s, n_a);
  step.c_d = c.head(n_s);
  step.A_r = A.bottomLeftCorner(1, n_s);
  step.B_r = A.bottomRightCorner(1, n_a);
  step.c_r = c(n_s);
  step.Sigma_d = S.topLeftCorner(n_s, n_s);
  step.Sigma_r = S(n_s, n_s);
  if (!(min_eigenvalue(step.Sigma_d) > 0.0) || !(step.Sigma_r > 0.0)) {
    throw NumericalError("condition_step: conditional covariance is not positive definite");
  }
  check_rank(step.B_d, rank_tol, "condition_step");
  return step;
}

LtvModel fit_model(const EpisodeData& data, const FitOptions& options) {
  data.validate();
  if (data.horizon() < 1) throw Error("fit_model: data must cover at least one timestep");
  LtvModel model;
  model.steps.resize(static_cast<std::size_t>(data.horizon()));
  for (int k = 0; k < data.horizon(); ++k) {
    try {
      model.steps[static_cast<std::size_t>(k)] =
          condition_step(posterior_joint(data, k, options.prior), data.n_s, data.n_a,
                         options.rank_tol);
    } catch (const Error& e) {
      throw Error("fit_model timestep " + std::to_string(k + 1) + ": " + e.what());
    }
  }

  const auto& first = data.steps.front();
  if (first.empty()) throw Error("fit_model: no records at the first timestep");
  const auto m = static_cast<double>(first.size());
  model.mu1 = VectorXd::Zero(data.n_s);
  for (const auto& t : first) model.mu1 += t.s;
  model.mu1 /= m;
  MatrixXd cov = MatrixXd::Zero(data.n_s, data.n_s);
  for (const auto& t : first) cov.noalias() += (t.s - model.mu1) * (t.s - model.mu1).transpose();
  if (first.size() > 1) cov /= m - 1.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(cov));
  const VectorXd ev = es.eigenvalues().cwiseMax(options.p1_floor);
  model.P1 = symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
  return model;
}

}  // namespace socem
