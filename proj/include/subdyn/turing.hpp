#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "subdyn/linalg.hpp"

namespace subdyn {

// 2x2 right basis (columns |0>, |1>) with its dual rows <~0|, <~1|.
struct PseudoSpinBasis {
  ComplexMatrix right;
  ComplexMatrix left;

  static PseudoSpinBasis standard();
  static PseudoSpinBasis from_right(const ComplexMatrix& right);
  // |1> tilted towards |0> by `skew`; exact duals
  static PseudoSpinBasis skewed(cplx skew);
};

// States are kets in the ambient 2^(n+1) space. Duals are stored as the
// components of the bra <psi~|, so pairings are plain (unconjugated) products.
class TuringMachine {
 public:
  TuringMachine(std::size_t n_tape, std::vector<PseudoSpinBasis> bases, std::size_t head_index = 0);
  static TuringMachine orthonormal(std::size_t n_tape, std::size_t head_index = 0);

  std::size_t n_tape() const { return n_tape_; }
  std::size_t factors() const { return n_tape_ + 1; }
  std::size_t dim() const { return std::size_t{1} << factors(); }
  std::size_t head_index() const { return head_index_; }
  const PseudoSpinBasis& basis(std::size_t factor) const { return bases_.at(factor); }

  // product-basis kets (columns) and bras (rows), factor 0 most significant
  const ComplexMatrix& right_basis() const { return right_; }
  const ComplexMatrix& left_basis() const { return left_; }

  double biorthonormality_defect() const;

  // c_i = <a~_i|psi>
  ComplexVector coefficients(const ComplexVector& psi) const;
  // bra components of sum_i conj(c_i) <a~_i|
  ComplexVector dual_of(const ComplexVector& psi) const;
  // head (2-vector of coefficients) times tape configuration (2^n coefficients)
  ComplexVector product_state(const ComplexVector& head, const ComplexVector& tape) const;

  // digit of the head and flat tape index for a product-basis index
  std::pair<std::size_t, std::size_t> split(std::size_t flat) const;
  std::size_t join(std::size_t head, std::size_t tape) const;

 private:
  std::size_t n_tape_;
  std::size_t head_index_;
  std::vector<PseudoSpinBasis> bases_;
  ComplexMatrix right_;
  ComplexMatrix left_;
};

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double norm2() const { return x * x + y * y + z * z; }
};

struct ComplexBloch {
  cplx x, y, z;
};

// lambda_x = P01 + P10, lambda_y = i P01 - i P10, lambda_z = P11 - P00 with
// P_ik = |i><k~| at `factor`, identity elsewhere.
std::array<ComplexMatrix, 3> generators(const TuringMachine& machine, std::size_t factor);
// The same triple acting on 2-component coefficient vectors.
std::array<ComplexMatrix, 3> coefficient_generators();

ComplexBloch bloch_head_complex(const ComplexVector& psi, const ComplexVector& psi_dual, const TuringMachine& machine);
// Throws NumericalError if any component has |Im| > tol.
BlochVector bloch_head(const ComplexVector& psi, const ComplexVector& psi_dual, const TuringMachine& machine,
                       double tol = 1e-10);

double bloch_circle_residual(const std::vector<BlochVector>& trajectory);

// Dual evolution U^{-+}; the bra components evolve with U^{-T}.
ComplexMatrix dual_evolution(const ComplexMatrix& u);
ComplexVector evolve_dual(const ComplexMatrix& u, const ComplexVector& psi_dual);

// max |<U~ psi~|U psi> - <psi~|psi>| over random pairs
double isometry_defect(const ComplexMatrix& u, std::size_t samples, std::uint64_t seed);

// exp(-i theta/2 lambda_x) on the head, identity on the tape
ComplexMatrix head_rotation(const TuringMachine& machine, double theta);
// sum_j R_x(theta_j) (x) |t_j><t~_j|, one angle per tape configuration
ComplexMatrix tape_controlled_rotation(const TuringMachine& machine, const std::vector<double>& angles);

std::vector<BlochVector> rotation_trajectory(const TuringMachine& machine, const ComplexVector& psi0,
                                             double omega, const std::vector<double>& times);

struct Branch {
  std::size_t tape = 0;
  cplx weight;  // a_j b_j
  ComplexBloch bloch;
};

struct EntangledDecomposition {
  std::vector<Branch> branches;
  ComplexBloch total;       // direct expectation values
  ComplexBloch recomposed;  // sum_j a_j b_j lambda(phi_j)
  double residual() const;
};

// psi0 must be (head) x (tape superposition), and psi0_dual likewise; `steps` are
// applied in order (kets with U, bras with U^{-T}) before decomposing into tape branches.
EntangledDecomposition decompose_entangled(const ComplexVector& psi0, const ComplexVector& psi0_dual,
                                           const TuringMachine& machine,
                                           const std::vector<ComplexMatrix>& steps = {});

}  // namespace subdyn
