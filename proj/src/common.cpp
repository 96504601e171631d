#include "socem/common.hpp"

#include <cmath>
#include <sstream>

namespace socem {

void require_dims(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x"
       << m.cols();
    throw DimensionError(os.str());
  }
}

void require_size(const VectorXd& v, Eigen::Index size, const std::string& name) {
  if (v.size() != size) {
    std::ostringstream os;
    os << name << ": expected length " << size << ", got " << v.size();
    throw DimensionError(os.str());
  }
}

MatrixXd add_jitter(const MatrixXd& m, double scale) {
  const auto d = static_cast<double>(m.rows());
  double tr = m.trace();
  if (!(tr > 0.0)) tr = d;
  MatrixXd out = m;
  out.diagonal().array() += scale * tr / d;
  return out;
}

double min_eigenvalue(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double log_det_spd(const MatrixXd& a, const std::string& name) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(name + " is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

VectorXd vec(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

MatrixXd unvec(const VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  require_size(v, rows * cols, "unvec: vector");
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t a,
                          std::uint64_t b) {
  return mix_seed(mix_seed(mix_seed(mix_seed(root) ^ tag) ^ a) ^ b);
}

VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = nd(rng);
  return w;
}

VectorXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, Rng& rng) {
  Eigen::LLT<MatrixXd> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success) {
    llt.compute(add_jitter(symmetrize(cov), 1e-12));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("sample_gaussian: covariance is not positive semidefinite");
    }
  }
  return mean + llt.matrixL() * standard_normal(mean.size(), rng);
}

}  // namespace socem
