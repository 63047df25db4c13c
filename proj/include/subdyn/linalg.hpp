#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace subdyn {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SuperOperator = Eigen::MatrixXcd;  // acts on column-stacked vec(rho)

constexpr double kDefaultTol = 1e-9;
constexpr double kDegeneracyTol = 1e-8;

// Bad input or violated precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The numerics cannot deliver a trustworthy answer (defective matrix, resonance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorFactor {
  std::string label;
  std::size_t dim = 1;
};

class TensorSpace {
 public:
  TensorSpace() = default;
  explicit TensorSpace(std::vector<TensorFactor> factors);

  const std::vector<TensorFactor>& factors() const { return factors_; }
  std::size_t total_dim() const;
  std::size_t factor_position(const std::string& label) const;

  // Row-major over factors: the first factor varies slowest.
  std::size_t flat_index(const std::vector<std::size_t>& digits) const;
  std::vector<std::size_t> digits(std::size_t flat) const;

 private:
  std::vector<TensorFactor> factors_;
};

struct EigenSystem {
  ComplexVector values;
  ComplexMatrix right;  // columns
  ComplexMatrix left;   // rows, left * right = I
  bool hermitian = false;
  double condition = 1.0;  // of the right eigenvector matrix
};

ComplexMatrix tensor(const std::vector<ComplexMatrix>& ops);
ComplexMatrix tensor(std::initializer_list<ComplexMatrix> ops);

// L with L vec(rho) = vec(H rho - rho H).
SuperOperator commutator_superop(const ComplexMatrix& h);

EigenSystem eig(const ComplexMatrix& m, bool hermitian, double tol = kDefaultTol);

ComplexMatrix sqrtm_psd(const ComplexMatrix& m, double tol = kDefaultTol);

// exp(-i M t) v
ComplexVector expm_action(const ComplexMatrix& m, double t, const ComplexVector& v);

// Caches the decomposition of M for repeated exp(-i M t) v.
class Propagator {
 public:
  explicit Propagator(const ComplexMatrix& m);
  ComplexVector apply(double t, const ComplexVector& v) const;
  bool spectral() const { return spectral_; }

 private:
  ComplexMatrix generator_;
  bool spectral_ = false;
  ComplexVector values_;
  ComplexMatrix right_;
  ComplexMatrix left_;
};

ComplexVector vec(const ComplexMatrix& m);
ComplexMatrix unvec(const ComplexVector& v, Eigen::Index rows, Eigen::Index cols);
ComplexMatrix unvec(const ComplexVector& v);  // square

// Traces out the named factors; the remaining factors keep their order.
ComplexMatrix partial_trace(const ComplexMatrix& rho, const TensorSpace& space,
                            const std::vector<std::string>& traced);

double opnorm(const ComplexMatrix& m);
double hermiticity_defect(const ComplexMatrix& m);
bool is_diagonal(const ComplexMatrix& m, double tol = 0.0);
// Scales every column to unit norm with its largest entry real and positive.
ComplexMatrix fix_phases(const ComplexMatrix& vectors);

// Maximum-total-weight perfect matching on a square weight matrix.
// result[row] = assigned column.
std::vector<std::size_t> assign_max_weight(const Eigen::MatrixXd& weight);

// Groups of indices whose values lie within tol of one another (transitively).
std::vector<std::vector<std::size_t>> cluster_values(const ComplexVector& values, double tol);

}  // namespace subdyn
