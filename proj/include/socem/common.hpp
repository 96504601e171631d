#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace socem {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Base error for every failure raised by the library. Messages name the
/// offending operand or timestep so callers can report them verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

void require_dims(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& name);
void require_size(const VectorXd& v, Eigen::Index size, const std::string& name);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Adds 1e-9 * trace / d (or `scale` instead of 1e-9) to the diagonal.
MatrixXd add_jitter(const MatrixXd& m, double scale = 1e-9);

double min_eigenvalue(const MatrixXd& symmetric);

/// log|A| of a symmetric positive-definite matrix; throws if not PD.
double log_det_spd(const MatrixXd& a, const std::string& name);

/// Column-major vectorization, vec(X).
VectorXd vec(const MatrixXd& m);
MatrixXd unvec(const VectorXd& v, Eigen::Index rows, Eigen::Index cols);

MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

// Random streams -----------------------------------------------------------

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for stream `tag` under `root`, indexed by (a, b). All random
/// sources in a run descend from the root seed through this function.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t a = 0,
                          std::uint64_t b = 0);

VectorXd standard_normal(Eigen::Index n, Rng& rng);

/// Draws from N(mean, cov) using the lower Cholesky factor of cov (cov PSD;
/// a tiny jitter is used for semidefinite inputs).
VectorXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, Rng& rng);

}  // namespace socem
