#include "socem/baseline_lqr.hpp"

namespace socem {

double RiccatiPass::cost_to_go(const VectorXd& s, int step) const {
  const auto su = static_cast<std::size_t>(step);
  return s.dot(V.at(su) * s) + 2.0 * v.at(su).dot(s) + v0.at(su);
}

RiccatiPass lqr_backward(const LtvModel& model, const QuadraticCost& cost) {
  cost.validate();
  const int T = model.horizon();
  const auto n_s = model.state_dim();
  const auto n_a = model.action_dim();
  if (T < 1) throw Error("lqr_backward: empty model");
  require_dims(cost.Q_s, n_s, n_s, "lqr_backward: Q_s");
  require_dims(cost.Q_a, n_a, n_a, "lqr_backward: Q_a");

  const auto Tu = static_cast<std::size_t>(T);
  RiccatiPass r;
  r.V.assign(Tu + 1, MatrixXd::Zero(n_s, n_s));
  r.v.assign(Tu + 1, VectorXd::Zero(n_s));
  r.v0.assign(Tu + 1, 0.0);
  r.K.resize(Tu);
  r.k.resize(Tu);

  const double target = cost.s_star.dot(cost.Q_s * cost.s_star) +
                        cost.a_star.dot(cost.Q_a * cost.a_star);
  for (int t = T - 1; t >= 0; --t) {
    const auto tu = static_cast<std::size_t>(t);
    const LtvStep& m = model.steps[tu];
    const MatrixXd& P = r.V[tu + 1];
    const VectorXd& p = r.v[tu + 1];
    const VectorXd Pc_p = P * m.c_d + p;

    const MatrixXd H_ss = cost.Q_s + m.A_d.transpose() * P * m.A_d;
    const MatrixXd H_as = m.B_d.transpose() * P * m.A_d;
    const MatrixXd H_aa = symmetrize(cost.Q_a + m.B_d.transpose() * P * m.B_d);
    const VectorXd h_s = -cost.Q_s * cost.s_star + m.A_d.transpose() * Pc_p;
    const VectorXd h_a = -cost.Q_a * cost.a_star + m.B_d.transpose() * Pc_p;

    Eigen::LLT<MatrixXd> llt(H_aa);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("lqr_backward: control Hessian is singular at timestep " +
                           std::to_string(t + 1));
    }
    r.K[tu] = -llt.solve(H_as);
    r.k[tu] = -llt.solve(h_a);
    r.V[tu] = symmetrize(H_ss + H_as.transpose() * r.K[tu]);
    r.v[tu] = h_s + H_as.transpose() * r.k[tu];
    r.v0[tu] = r.v0[tu + 1] + target + m.c_d.dot(P * m.c_d) + 2.0 * p.dot(m.c_d) +
               (P * m.Sigma_d).trace() + h_a.dot(r.k[tu]);
  }
  return r;
}

PolicyParams make_phi0(const RiccatiPass& pass, double exploration_sigma) {
  if (!(exploration_sigma >= 0.0)) throw Error("make_phi0: exploration_sigma must be >= 0");
  PolicyParams p;
  for (int t = 0; t < pass.horizon(); ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const auto n_a = pass.K[tu].rows();
    p.steps.push_back({pass.K[tu], pass.k[tu],
                       exploration_sigma * MatrixXd::Identity(n_a, n_a)});
  }
  return p;
}

}  // namespace socem
