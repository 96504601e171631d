#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "socem/em_core.hpp"
#include "socem/smoother.hpp"

namespace socem::testing {

inline MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline VectorXd random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale);
}

inline MatrixXd random_spd(Eigen::Index n, Rng& rng, double floor = 0.1) {
  const MatrixXd L = random_matrix(n, n, rng, 0.5);
  return symmetrize(L * L.transpose() + floor * MatrixXd::Identity(n, n));
}

inline double uniform(double lo, double hi, Rng& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(int lo, int hi, Rng& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline LtvStep random_step(Eigen::Index n_s, Eigen::Index n_a, Rng& rng) {
  LtvStep s;
  s.A_d = random_matrix(n_s, n_s, rng, 0.5);
  s.B_d = random_matrix(n_s, n_a, rng, 1.0);
  s.c_d = random_vector(n_s, rng, 0.5);
  s.A_r = random_matrix(1, n_s, rng, 0.5);
  s.B_r = random_matrix(1, n_a, rng, 0.5);
  s.c_r = uniform(-1.0, 1.0, rng);
  s.Sigma_d = random_spd(n_s, rng);
  s.Sigma_r = uniform(0.2, 1.0, rng);
  return s;
}

/// n x r matrix with orthonormal columns.
inline MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index r, Rng& rng) {
  const Eigen::HouseholderQR<MatrixXd> qr(random_matrix(n, r, rng));
  return qr.householderQ() * MatrixXd::Identity(n, r);
}

/// B_d with singular values drawn from [0.5, 2].
inline MatrixXd well_conditioned_input(Eigen::Index n_s, Eigen::Index n_a, Rng& rng) {
  VectorXd sv(n_a);
  for (Eigen::Index i = 0; i < n_a; ++i) sv(i) = uniform(0.5, 2.0, rng);
  return random_orthonormal(n_s, n_a, rng) * sv.asDiagonal() *
         random_orthonormal(n_a, n_a, rng).transpose();
}

inline LtvModel random_model(int T, Eigen::Index n_s, Eigen::Index n_a, Rng& rng,
                             bool well_conditioned = false) {
  LtvModel m;
  for (int k = 0; k < T; ++k) {
    m.steps.push_back(random_step(n_s, n_a, rng));
    if (well_conditioned) m.steps.back().B_d = well_conditioned_input(n_s, n_a, rng);
  }
  m.mu1 = random_vector(n_s, rng);
  m.P1 = random_spd(n_s, rng);
  return m;
}

inline PolicyStep random_policy_step(Eigen::Index n_s, Eigen::Index n_a, Rng& rng,
                                     bool noise = true) {
  PolicyStep p;
  p.F = random_matrix(n_a, n_s, rng, 0.5);
  p.e = random_vector(n_a, rng, 0.5);
  if (noise) {
    MatrixXd S = random_matrix(n_a, n_a, rng, 0.2);
    S.diagonal().array() = S.diagonal().array().abs() + 0.3;
    p.sigma_sqrt = S;
  } else {
    p.sigma_sqrt = MatrixXd::Zero(n_a, n_a);
  }
  return p;
}

inline PolicyParams random_policy(int T, Eigen::Index n_s, Eigen::Index n_a, Rng& rng,
                                  bool noise = true) {
  PolicyParams p;
  for (int k = 0; k < T; ++k) p.steps.push_back(random_policy_step(n_s, n_a, rng, noise));
  return p;
}

inline std::vector<double> random_observations(int T, Rng& rng) {
  std::vector<double> y;
  for (int k = 0; k < T; ++k) y.push_back(uniform(-1.5, 1.5, rng));
  return y;
}

/// Exact Gaussian conditioning of the stacked latent path on all observations.
/// The latent path and the observations are written as affine maps of the
/// independent noises (s_1 - mu_1, w_1..w_T, v_1..v_T); nothing here shares
/// code with the recursive filter.
struct JointOracle {
  int T = 0;
  Eigen::Index n_s = 0;
  VectorXd mean_s, mean_y;
  MatrixXd cov_ss, cov_sy, cov_yy;
  VectorXd post_mean;
  MatrixXd post_cov;

  VectorXd mean(int t) const { return post_mean.segment(t * n_s, n_s); }
  MatrixXd cov(int t, int u) const { return post_cov.block(t * n_s, u * n_s, n_s, n_s); }

  /// log N(y; mean_y, cov_yy).
  double log_likelihood(const std::vector<double>& y) const {
    const Eigen::Map<const VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::LLT<MatrixXd> llt(cov_yy);
    const VectorXd r = yv - mean_y;
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (r.dot(llt.solve(r)) + logdet +
                   static_cast<double>(T) * std::log(2.0 * 3.14159265358979323846));
  }
};

inline JointOracle joint_oracle(const LtvModel& model, const PolicyParams& policy,
                                const std::vector<double>& y) {
  JointOracle o;
  o.T = model.horizon();
  o.n_s = model.state_dim();
  const int T = o.T;
  const Eigen::Index n = o.n_s;
  const Eigen::Index n_noise = n * (T + 1) + T;

  // s_t = mean + Ls_t * noise, y_k = mean + Ly_k * noise.
  std::vector<VectorXd> ms(T + 1);
  std::vector<MatrixXd> Ls(T + 1, MatrixXd::Zero(n, n_noise));
  VectorXd my(T);
  MatrixXd Ly = MatrixXd::Zero(T, n_noise);
  MatrixXd D = MatrixXd::Zero(n_noise, n_noise);

  ms[0] = model.mu1;
  Ls[0].block(0, 0, n, n) = MatrixXd::Identity(n, n);
  D.block(0, 0, n, n) = model.P1;
  for (int k = 0; k < T; ++k) {
    const LtvStep& m = model.steps[static_cast<std::size_t>(k)];
    const PolicyStep& p = policy.steps[static_cast<std::size_t>(k)];
    const MatrixXd Sp = p.sigma_sqrt.transpose() * p.sigma_sqrt;
    const MatrixXd Ad = m.A_d + m.B_d * p.F;
    const MatrixXd Ar = m.A_r + m.B_r * p.F;
    const Eigen::Index w = n * (k + 1);
    const Eigen::Index v = n * (T + 1) + k;
    ms[static_cast<std::size_t>(k + 1)] = Ad * ms[static_cast<std::size_t>(k)] + m.B_d * p.e + m.c_d;
    Ls[static_cast<std::size_t>(k + 1)] = Ad * Ls[static_cast<std::size_t>(k)];
    Ls[static_cast<std::size_t>(k + 1)].block(0, w, n, n) += MatrixXd::Identity(n, n);
    D.block(w, w, n, n) = m.B_d * Sp * m.B_d.transpose() + m.Sigma_d;
    my(k) = (Ar * ms[static_cast<std::size_t>(k + 1)])(0) + (m.B_r * p.e)(0) + m.c_r;
    Ly.row(k) = Ar * Ls[static_cast<std::size_t>(k + 1)];
    Ly(k, v) += 1.0;
    D(v, v) = (m.B_r * Sp * m.B_r.transpose())(0, 0) + m.Sigma_r;
  }
  MatrixXd L(n * (T + 1), n_noise);
  o.mean_s.resize(n * (T + 1));
  for (int t = 0; t <= T; ++t) {
    L.block(t * n, 0, n, n_noise) = Ls[static_cast<std::size_t>(t)];
    o.mean_s.segment(t * n, n) = ms[static_cast<std::size_t>(t)];
  }
  o.mean_y = my;
  o.cov_ss = L * D * L.transpose();
  o.cov_sy = L * D * Ly.transpose();
  o.cov_yy = Ly * D * Ly.transpose();

  const Eigen::Map<const VectorXd> yv(y.data(), T);
  const Eigen::PartialPivLU<MatrixXd> lu(o.cov_yy);
  o.post_mean = o.mean_s + o.cov_sy * lu.solve(yv - o.mean_y);
  o.post_cov = o.cov_ss - o.cov_sy * lu.solve(o.cov_sy.transpose());
  return o;
}

inline double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// A smoothed quadratic subproblem on a random instance, as used by the
/// gradient and optimizer checks.
struct QuadraticInstance {
  LtvModel model;
  PolicyParams policy;
  std::vector<double> y;
  SmoothedPosterior post;
  int j = 0;
  SurrogateQuadratic q;
};

/// By default B_d is well conditioned, so that the maximizer is resolvable
/// from function values in double precision.
inline QuadraticInstance random_quadratic_instance(Rng& rng,
                                                   Coupling coupling = Coupling::kPerStep,
                                                   bool well_conditioned = true) {
  QuadraticInstance inst;
  const int T = uniform_int(1, 5, rng);
  const Eigen::Index n_s = uniform_int(1, 3, rng);
  const Eigen::Index n_a = uniform_int(1, static_cast<int>(n_s), rng);
  inst.model = random_model(T, n_s, n_a, rng, well_conditioned);
  inst.policy = random_policy(T, n_s, n_a, rng);
  inst.y = random_observations(T, rng);
  inst.post = smooth(inst.model, inst.policy, inst.y);
  inst.j = uniform_int(0, T - 1, rng);
  inst.q = assemble_quadratic(inst.post, inst.model, inst.j, coupling);
  return inst;
}

/// The surrogate of step j evaluated directly from its Theta moments.
inline double direct_surrogate(const QuadraticInstance& inst, const VectorXd& phi,
                               Coupling coupling = Coupling::kPerStep) {
  const auto n_s = inst.model.state_dim();
  const auto n_a = inst.model.action_dim();
  const PolicyStep step = unpack_step(phi, n_s, n_a);
  if (coupling == Coupling::kPerStep) {
    const LtvStep& m = inst.model.steps[static_cast<std::size_t>(inst.j)];
    return surrogate_term(theta_moments(inst.post, m, step, inst.j), m);
  }
  double total = 0.0;
  for (int k = 0; k < inst.model.horizon(); ++k) {
    const LtvStep& m = inst.model.steps[static_cast<std::size_t>(k)];
    total += surrogate_term(theta_moments(inst.post, m, step, k), m);
  }
  return total;
}

}  // namespace socem::testing
