#pragma once

#include <string>
#include <vector>

#include "subdyn/linalg.hpp"
#include "subdyn/model.hpp"

namespace subdyn {

// nu = (row, col) labels the dyad |f_row><f_col| of the sorted H0 eigenbasis.
// Flat Liouville index is row + d * col (column stacking).
struct NuIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const NuIndex&) const = default;
};

std::string to_string(const NuIndex& nu);

enum class Order { Exact, First, Second };

std::string to_string(Order order);
Order order_from_string(const std::string& text);

struct PerturbationOptions {
  double eta = 0.0;      // retarded regulator: denominators E0_mu - E0_nu - i eta
  bool strict = false;   // throw on coupled degenerate partners instead of zeroing them
  double degeneracy_tol = kDegeneracyTol;
};

class ResonanceError : public NumericalError {
 public:
  ResonanceError(NuIndex nu, NuIndex mu, const std::string& what);
  NuIndex nu;
  NuIndex mu;
};

// H0 eigenbasis plus L0 and L1 expressed on the dyads |f_i><f_j|.
class LiouvilleFrame {
 public:
  LiouvilleFrame(const ComplexMatrix& h0, const ComplexMatrix& h1, double lambda);
  explicit LiouvilleFrame(const ModelOperators& ops);

  std::size_t hilbert_dim() const { return static_cast<std::size_t>(free_basis_.rows()); }
  std::size_t dim() const { return hilbert_dim() * hilbert_dim(); }
  double lambda() const { return lambda_; }
  bool h1_hermitian() const { return h1_hermitian_; }

  const Eigen::VectorXd& free_energies() const { return free_energies_; }
  const ComplexMatrix& free_basis() const { return free_basis_; }
  const ComplexVector& e0() const { return e0_; }
  const SuperOperator& l1() const { return l1_; }
  SuperOperator l0() const;
  SuperOperator liouvillian() const;
  // H0 + lambda H1 written in the free eigenbasis
  ComplexMatrix total_hamiltonian() const;

  std::size_t flat(NuIndex nu) const;
  NuIndex nu(std::size_t flat) const;

  ComplexVector coordinates(const ComplexMatrix& rho) const;
  ComplexMatrix operator_from(const ComplexVector& coefficients) const;
  // Phi with columns vec(|f_i><f_j|); Phi X Phi^+ maps frame superoperators to the vec basis
  ComplexMatrix phi() const;
  SuperOperator to_standard(const SuperOperator& frame_op) const;

  // index groups sharing the same E0 within tolerance
  std::vector<std::vector<std::size_t>> degenerate_groups(double tol = kDegeneracyTol) const;

 private:
  ComplexMatrix h1_frame_;
  ComplexMatrix free_basis_;
  Eigen::VectorXd free_energies_;
  ComplexVector e0_;
  SuperOperator l1_;
  double lambda_ = 0.0;
  bool h1_hermitian_ = true;
};

// Whole-frame bundle. Column nu of `creation` holds C_nu|phi_nu); row nu of
// `destruction` holds (phi_nu|D_nu. Both vanish on the nu entry itself.
struct SubdynDecomposition {
  Order order = Order::Exact;
  std::size_t hilbert_dim = 0;
  ComplexVector e0;
  ComplexVector energies;
  ComplexMatrix creation;
  ComplexMatrix destruction;
  double omega_condition = 1.0;
  std::vector<std::string> warnings;
  std::size_t zeroed_couplings = 0;

  std::size_t dim() const { return static_cast<std::size_t>(e0.size()); }
  NuIndex nu(std::size_t flat) const;

  SuperOperator P(std::size_t nu) const;
  SuperOperator Q(std::size_t nu) const;
  SuperOperator C(std::size_t nu) const;
  SuperOperator D(std::size_t nu) const;
  SuperOperator Pi(std::size_t nu) const;
  cplx E(std::size_t nu) const { return energies(static_cast<Eigen::Index>(nu)); }
};

// Rank-one |phi_nu)(phi_nu| in the vec basis, one per ordered eigenvector pair.
std::vector<SuperOperator> eigenprojectors(const EigenSystem& free_basis);

SubdynDecomposition decompose(const LiouvilleFrame& frame, Order order,
                              const PerturbationOptions& options = {});

// -(Q L Q - z - i eta)^{-1} Q L P and -P L Q (Q L Q - z - i eta)^{-1} on the frame.
SuperOperator creation_resolvent(const LiouvilleFrame& frame, std::size_t nu, cplx z, double eta = 0.0);
SuperOperator destruction_resolvent(const LiouvilleFrame& frame, std::size_t nu, cplx z, double eta = 0.0);

SuperOperator creation_exact(const LiouvilleFrame& frame, std::size_t nu);
SuperOperator creation_first_order(const LiouvilleFrame& frame, std::size_t nu,
                                   const PerturbationOptions& options = {});
SuperOperator destruction_first_order(const LiouvilleFrame& frame, std::size_t nu,
                                      const PerturbationOptions& options = {});
SuperOperator creation_second_order(const LiouvilleFrame& frame, std::size_t nu,
                                    const PerturbationOptions& options = {});
SuperOperator destruction_second_order(const LiouvilleFrame& frame, std::size_t nu,
                                       const PerturbationOptions& options = {});
cplx energy_second_order(const LiouvilleFrame& frame, std::size_t nu,
                         const PerturbationOptions& options = {});
ComplexVector energies_second_order(const LiouvilleFrame& frame, const PerturbationOptions& options = {});

struct ThetaResult {
  SuperOperator theta;  // frame basis, diagonal
  ComplexVector energies;
};

// Theta = sum_nu (P L P + P L1 Q C P), built from the decomposition's creation operators.
ThetaResult theta(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition);

SuperOperator similarity_operator(const SubdynDecomposition& decomposition);
SuperOperator similarity_inverse(const SubdynDecomposition& decomposition);
SuperOperator total_projector(const SubdynDecomposition& decomposition, std::size_t nu);

struct ProjectedDensity {
  ComplexVector coefficients;  // flat nu order
  std::string basis_ref;

  cplx at(NuIndex nu, std::size_t hilbert_dim) const {
    return coefficients(static_cast<Eigen::Index>(nu.row + hilbert_dim * nu.col));
  }
};

ProjectedDensity project_density(const ComplexMatrix& rho, const LiouvilleFrame& frame,
                                 const SubdynDecomposition& decomposition);
ProjectedDensity evolve_projected(const ProjectedDensity& pd, const ComplexVector& energies, double t);
ComplexMatrix reconstruct(const ProjectedDensity& pd, const LiouvilleFrame& frame);

ComplexMatrix evolve_exact(const ComplexMatrix& rho0, const SuperOperator& liouvillian, double t);

// exp(-i L t) for a fixed L, reused across a time grid
class ExactEvolution {
 public:
  explicit ExactEvolution(const SuperOperator& liouvillian) : propagator_(liouvillian) {}
  ComplexMatrix operator()(const ComplexMatrix& rho0, double t) const;

 private:
  Propagator propagator_;
};

}  // namespace subdyn
