#pragma once

#include <string>
#include <vector>

#include "subdyn/linalg.hpp"
#include "subdyn/model.hpp"
#include "subdyn/subdynamics.hpp"

namespace subdyn {

enum class Verdict { DF, PE, D };

std::string to_string(Verdict verdict);

// Thresholds for the four classification cells.
struct DFThresholds {
  double spectral_weight = 1e-10;    // stationary_total
  double population_drift = 1e-6;    // evolution_total
  double offdiagonal = 1e-10;        // stationary_proj
  double eigenvector_deficit = 1e-10;
  double energy_shift = 1e-10;       // evolution_proj
};

struct Evidence {
  std::string name;
  std::string cell;  // stationary_total, evolution_total, stationary_proj, evolution_proj
  double value = 0.0;
  double threshold = 0.0;
  bool decisive = true;  // false for supporting diagnostics
  std::string rule;
};

struct ConditionCheck {
  bool holds = false;
  double violation = 0.0;
  double threshold = 0.0;
  bool one_sided = false;  // off-diagonal L1 entries all move E0 in one direction
};

// max_nu ||P_nu L1 Q_nu|| <= 1e-12
ConditionCheck check_diagonal_condition(const LiouvilleFrame& frame);
// max_nu ||P_nu L1 Q_nu C_nu P_nu|| <= 1e-10 with C from the given decomposition
ConditionCheck check_triangular_condition(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition);

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> values;

  double min() const;
};

// Tr sqrt(sqrt(rho0) rhot sqrt(rho0)); both inputs Hermitian PSD within tol.
double fidelity(const ComplexMatrix& rho0, const ComplexMatrix& rhot, double tol = 1e-9);

std::vector<double> time_grid(double start, double end, std::size_t steps);

// Fidelity of a stationary projected mixture sum_i p_i |f_i><f_i| evolved with the decomposition energies.
FidelityTrace projected_fidelity(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition,
                                 const Eigen::VectorXd& weights, const std::vector<double>& times);

struct SpectralInvariance {
  double eigenvector_deficit = 0.0;   // relative off-diagonal weight of both Theta
  double max_shift = 0.0;             // max |E_nu - E0_nu|
  double max_interaction_shift = 0.0; // max lambda |(phi_nu| L1 C_nu |phi_nu)|
  double max_imaginary_shift = 0.0;
  double hamiltonian_shift = 0.0;     // sorted eigenvalues of H vs H0
};

SpectralInvariance spectral_invariance(const ThetaResult& theta_free, const ThetaResult& theta_int);
SpectralInvariance spectral_invariance(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition);

struct DecoherenceTrace {
  std::vector<double> times;
  std::vector<double> offdiagonal_deviation;  // reduced system state, exact vs free
  std::vector<double> population_deviation;   // reduced system state diagonal
  double max_offdiagonal = 0.0;
  double max_population = 0.0;
  bool phase_only() const { return max_population <= 1e-10; }
};

DecoherenceTrace total_space_decoherence(const ModelOperators& ops, const ComplexMatrix& rho0,
                                         const std::vector<double>& times);

// max_i |<f_i|rho(t)|f_i> - p_i| over the grid for rho0 = sum_i p_i |f_i><f_i|
double free_population_drift(const ModelOperators& ops, const Eigen::VectorXd& weights,
                             const std::vector<double>& times);

// max |W - permutation| for W_ia = <f_i|r_a><l_a|f_i>
double spectral_weight_deficit(const LiouvilleFrame& frame);

struct DFReport {
  ModelSpec model;
  Order order = Order::Exact;
  Verdict stationary_total = Verdict::DF;
  Verdict evolution_total = Verdict::DF;
  Verdict stationary_proj = Verdict::DF;
  Verdict evolution_proj = Verdict::DF;
  std::vector<Evidence> evidence;
  FidelityTrace projected;
  DecoherenceTrace total;
  ComplexVector e0;
  ComplexVector energies;
  std::vector<std::string> warnings;
  double omega_condition = 1.0;
};

DFReport classify(const ModelSpec& model, Order order, const std::vector<double>& times,
                  const PerturbationOptions& options = {}, const DFThresholds& thresholds = {},
                  std::size_t dimension_cap = kDefaultDimensionCap);
DFReport classify(const ModelOperators& ops, Order order, const std::vector<double>& times,
                  const PerturbationOptions& options = {}, const DFThresholds& thresholds = {});

// Deterministic probe weights p_i proportional to d - i.
Eigen::VectorXd probe_weights(std::size_t dim);

}  // namespace subdyn
