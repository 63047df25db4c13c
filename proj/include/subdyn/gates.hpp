#pragma once

#include <string>
#include <utility>
#include <vector>

#include "subdyn/linalg.hpp"
#include "subdyn/subdynamics.hpp"

namespace subdyn {

constexpr double kHomogeneityTol = 1e-6;

// diag(exp(-i E_nu t)) on the |phi_nu) basis
SuperOperator ideal_swap(const ComplexVector& energies_free, double t_sw);
SuperOperator nonideal_swap(const ComplexVector& energies_int, double t);

struct SwapCalibration {
  double t_sw = 0.0;
  double delta_t = 0.0;
  double e0_over_de = 0.0;  // infinite when there is no shift
  Order order = Order::First;
  double residual = 0.0;     // max_nu |exp(-i E0 t_sw) - exp(-i E (t_sw + dt))|
  double phase_error = 0.0;  // max_nu |E (t_sw + dt) - E0 t_sw| reduced mod 2 pi
  double spread = 0.0;       // relative spread of dE / E0 across nu
  bool homogeneous = true;
  bool flagged = false;      // least-squares fallback
  std::vector<std::string> warnings;
};

// Scalar form: E0/dE given directly.
SwapCalibration calibrate_timing(double e0_over_de, double t_sw);
SwapCalibration calibrate_timing(const ComplexVector& e0, const ComplexVector& energies, double t_sw,
                                 double homogeneity_tol = kHomogeneityTol);

// All dt in [-max_branch, max_branch] windows for a single frequency, sorted by |dt|.
std::vector<double> timing_branches(double e0, double de, double t_sw, int max_branch);

SwapCalibration calibrate_timing_second_order(const LiouvilleFrame& frame, double t_sw,
                                              const PerturbationOptions& options = {},
                                              double homogeneity_tol = kHomogeneityTol);
SwapCalibration calibrate_timing_exact(const LiouvilleFrame& frame, double t_sw,
                                       double homogeneity_tol = kHomogeneityTol);

// g (|01><10| + |10><01|) on two qubits, basis order |00>, |01>, |10>, |11>
ComplexMatrix exchange_hamiltonian(double g);

struct RLSGate {
  std::vector<std::string> labels{"00", "01", "10", "11"};
  ComplexMatrix right_states;  // n x 4, columns |ab)
  ComplexMatrix left_states;   // 4 x n, rows (~ab|
  ComplexMatrix op;            // n x n ambient operator
  ComplexMatrix matrix;        // left * op * right
  double pairing_defect = 0.0;
};

ComplexMatrix default_left_states(const ComplexMatrix& right_states);

// op = right * action * left
RLSGate make_rls_gate(const ComplexMatrix& right_states, const ComplexMatrix& left_states,
                      const ComplexMatrix& action, double pairing_tol = 1e-12);
RLSGate build_cnot_rls(const ComplexMatrix& right_states, const ComplexMatrix& left_states,
                       double pairing_tol = 1e-12);
RLSGate build_cnot_rls(const ComplexMatrix& right_states);

ComplexMatrix cnot_permutation();

struct ClosureReport {
  bool closed = false;
  double right_defect = 0.0;  // ||op R - R M||
  double left_defect = 0.0;   // ||L op - M L||
  double permutation_defect = 0.0;
};

ClosureReport closure_report(const RLSGate& gate, double tol = 1e-10);
bool verify_closure(const RLSGate& gate, double tol = 1e-10);

// Residuals of CN|ab) = |a,a^b) and (~ab|CN = (~a,a^b| for the eight basis relations.
std::vector<std::pair<std::string, double>> cnot_relations(const RLSGate& gate);

}  // namespace subdyn
