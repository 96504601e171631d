#include "socem/smoother.hpp"

#include <cmath>
#include <sstream>

namespace socem {

namespace {

MatrixXd cholesky_lower(const MatrixXd& p, const std::string& name) {
  Eigen::LLT<MatrixXd> llt(symmetrize(p));
  if (llt.info() != Eigen::Success) {
    llt.compute(add_jitter(symmetrize(p)));
    if (llt.info() != Eigen::Success) throw NumericalError(name + " is not positive definite");
  }
  return llt.matrixL();
}

/// Lower factor L with L L' = X X' for a wide pre-array X, via QR of X'.
MatrixXd triangularize(const MatrixXd& pre) {
  Eigen::HouseholderQR<MatrixXd> qr(pre.transpose());
  const Eigen::Index n = pre.rows();
  MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  return r.transpose();
}

}  // namespace

ClosedLoopStep augment(const LtvStep& model, const PolicyStep& policy) {
  const auto n_s = model.state_dim();
  const auto n_a = model.action_dim();
  require_dims(policy.F, n_a, n_s, "augment: policy F");
  require_size(policy.e, n_a, "augment: policy e");
  require_dims(policy.sigma_sqrt, n_a, n_a, "augment: policy Sigma_sqrt");
  const MatrixXd sigma = policy.covariance();
  ClosedLoopStep cl;
  cl.At_d = model.A_d + model.B_d * policy.F;
  cl.At_r = model.A_r + model.B_r * policy.F;
  cl.drift_d = model.B_d * policy.e + model.c_d;
  cl.drift_r = (model.B_r * policy.e)(0) + model.c_r;
  cl.Sigma_d = symmetrize(model.B_d * sigma * model.B_d.transpose() + model.Sigma_d);
  cl.Sigma_r = (model.B_r * sigma * model.B_r.transpose())(0, 0) + model.Sigma_r;
  return cl;
}

FilterState kalman_filter(const LtvModel& model, const PolicyParams& policy,
                          const std::vector<double>& observations, const VectorXd& s1,
                          const MatrixXd& P1, const FilterOptions& options) {
  const int T = model.horizon();
  const auto n_s = model.state_dim();
  if (policy.horizon() != T) throw DimensionError("kalman_filter: policy horizon differs from model");
  if (static_cast<int>(observations.size()) != T) {
    throw DimensionError("kalman_filter: expected one observation per timestep");
  }
  require_size(s1, n_s, "kalman_filter: initial mean");
  require_dims(P1, n_s, n_s, "kalman_filter: initial covariance");

  FilterState f;
  f.closed_loop.reserve(static_cast<std::size_t>(T));
  f.filtered_mean.push_back(s1);
  f.filtered_cov.push_back(symmetrize(P1));
  MatrixXd L = options.square_root ? cholesky_lower(P1, "initial covariance") : MatrixXd();

  for (int k = 0; k < T; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const ClosedLoopStep cl = augment(model.steps[ku], policy.steps[ku]);
    const VectorXd pred_mean = cl.At_d * f.filtered_mean.back() + cl.drift_d;
    MatrixXd pred_cov;
    MatrixXd L_pred;
    if (options.square_root) {
      MatrixXd pre(n_s, 2 * n_s);
      pre << cl.At_d * L, cholesky_lower(cl.Sigma_d, "closed-loop dynamics covariance");
      L_pred = triangularize(pre);
      pred_cov = L_pred * L_pred.transpose();
    } else {
      pred_cov = symmetrize(cl.At_d * f.filtered_cov.back() * cl.At_d.transpose() + cl.Sigma_d);
    }

    const VectorXd ph = pred_cov * cl.At_r.transpose();
    const double innovation_var = (cl.At_r * ph)(0) + cl.Sigma_r;
    if (!(innovation_var > 0.0) || !std::isfinite(innovation_var)) {
      std::ostringstream os;
      os << "kalman_filter: nonpositive innovation variance at timestep " << k + 1;
      throw NumericalError(os.str());
    }
    const VectorXd gain = ph / innovation_var;
    const double innovation = observations[ku] - (cl.At_r * pred_mean)(0) - cl.drift_r;

    MatrixXd post_cov;
    if (options.square_root) {
      const MatrixXd ikh = MatrixXd::Identity(n_s, n_s) - gain * cl.At_r;
      MatrixXd pre(n_s, n_s + 1);
      pre << ikh * L_pred, std::sqrt(cl.Sigma_r) * gain;
      L = triangularize(pre);
      post_cov = L * L.transpose();
    } else {
      post_cov = symmetrize(pred_cov - gain * (cl.At_r * pred_cov));
    }

    f.closed_loop.push_back(cl);
    f.predicted_mean.push_back(pred_mean);
    f.predicted_cov.push_back(pred_cov);
    f.gain.push_back(gain);
    f.filtered_mean.push_back(pred_mean + gain * innovation);
    f.filtered_cov.push_back(post_cov);
  }
  return f;
}

SmoothedPosterior rts_smooth(const FilterState& f) {
  const int T = f.horizon();
  if (T < 1) throw Error("rts_smooth: empty filter");
  const auto Tu = static_cast<std::size_t>(T);
  const auto n_s = f.filtered_mean.front().size();

  SmoothedPosterior sp;
  sp.mean.resize(Tu + 1);
  sp.cov.resize(Tu + 1);
  sp.gain.resize(Tu);
  sp.lag_cov.resize(Tu);
  sp.mean[Tu] = f.filtered_mean[Tu];
  sp.cov[Tu] = f.filtered_cov[Tu];

  for (int k = T - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    Eigen::LLT<MatrixXd> llt(f.predicted_cov[ku]);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "rts_smooth: predicted covariance at timestep " << k + 1
         << " is singular; increase the jitter";
      throw NumericalError(os.str());
    }
    // J = P_{k|k} At' P_{k+1|k}^{-1}
    const MatrixXd J =
        llt.solve(f.closed_loop[ku].At_d * f.filtered_cov[ku]).transpose();
    sp.gain[ku] = J;
    sp.mean[ku] = f.filtered_mean[ku] + J * (sp.mean[ku + 1] - f.predicted_mean[ku]);
    sp.cov[ku] = symmetrize(f.filtered_cov[ku] +
                            J * (sp.cov[ku + 1] - f.predicted_cov[ku]) * J.transpose());
  }

  const MatrixXd I = MatrixXd::Identity(n_s, n_s);
  const ClosedLoopStep& last = f.closed_loop[Tu - 1];
  sp.lag_cov[Tu - 1] = (I - f.gain[Tu - 1] * last.At_r) * last.At_d * f.filtered_cov[Tu - 1];
  for (int t = T - 1; t >= 1; --t) {
    const auto tu = static_cast<std::size_t>(t);
    sp.lag_cov[tu - 1] =
        f.filtered_cov[tu] * sp.gain[tu - 1].transpose() +
        sp.gain[tu] * (sp.lag_cov[tu] - f.closed_loop[tu].At_d * f.filtered_cov[tu]) *
            sp.gain[tu - 1].transpose();
  }

  sp.G.resize(Tu + 1);
  sp.M.resize(Tu);
  for (std::size_t t = 0; t <= Tu; ++t) {
    sp.G[t] = sp.mean[t] * sp.mean[t].transpose() + sp.cov[t];
  }
  for (std::size_t k = 0; k < Tu; ++k) {
    sp.M[k] = sp.mean[k + 1] * sp.mean[k].transpose() + sp.lag_cov[k];
  }
  return sp;
}

SmoothedPosterior smooth(const LtvModel& model, const PolicyParams& policy,
                         const std::vector<double>& observations, const FilterOptions& options) {
  return rts_smooth(kalman_filter(model, policy, observations, model.mu1, model.P1, options));
}

std::vector<VectorXd> sample_smoothed_path(const SmoothedPosterior& post, Rng& rng) {
  const auto Tu = static_cast<std::size_t>(post.horizon());
  std::vector<VectorXd> path;
  path.reserve(Tu + 1);
  path.push_back(sample_gaussian(post.mean[0], post.cov[0], rng));
  for (std::size_t k = 0; k < Tu; ++k) {
    Eigen::LLT<MatrixXd> llt(post.cov[k]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("sample_smoothed_path: smoothed covariance is singular");
    }
    // Cov(s_{k+1}, s_k) Cov(s_k)^{-1}
    const MatrixXd W = llt.solve(post.lag_cov[k].transpose()).transpose();
    const VectorXd mean = post.mean[k + 1] + W * (path.back() - post.mean[k]);
    const MatrixXd cov = symmetrize(post.cov[k + 1] - W * post.lag_cov[k].transpose());
    path.push_back(sample_gaussian(mean, cov, rng));
  }
  return path;
}

}  // namespace socem
