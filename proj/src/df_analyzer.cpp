#include "subdyn/df_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace subdyn {

namespace {

void require_density(const ComplexMatrix& rho, double tol, const char* what) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw ValidationError(std::string("fidelity: ") + what + " is not a square matrix");
  }
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  if (hermiticity_defect(rho) > tol * scale) {
    throw ValidationError(std::string("fidelity: ") + what + " is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -tol * scale) {
    std::ostringstream os;
    os << "fidelity: " << what << " has eigenvalue " << solver.eigenvalues().minCoeff() << " below -tolerance";
    throw ValidationError(os.str());
  }
}

// U(t) = exp(-i H t) as a dense matrix
class HilbertEvolution {
 public:
  explicit HilbertEvolution(const ComplexMatrix& h) : propagator_(h), dim_(h.rows()) {}

  ComplexMatrix unitary(double t) const {
    ComplexMatrix u(dim_, dim_);
    for (Eigen::Index k = 0; k < dim_; ++k) {
      u.col(k) = propagator_.apply(t, ComplexVector::Unit(dim_, k));
    }
    return u;
  }

  ComplexMatrix evolve(const ComplexMatrix& rho0, double t) const { return unitary(t) * rho0 * unitary(-t); }

 private:
  Propagator propagator_;
  Eigen::Index dim_;
};

ComplexMatrix free_mixture(const ComplexMatrix& basis, const Eigen::VectorXd& weights) {
  return basis * weights.cast<cplx>().asDiagonal() * basis.adjoint();
}

void add(DFReport& report, std::string name, std::string cell, double value, double threshold, bool decisive,
         std::string rule) {
  report.evidence.push_back({std::move(name), std::move(cell), value, threshold, decisive, std::move(rule)});
}

}  // namespace

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::DF: return "DF";
    case Verdict::PE: return "PE";
    case Verdict::D: return "D";
  }
  return "?";
}

ConditionCheck check_diagonal_condition(const LiouvilleFrame& frame) {
  const SuperOperator& l1 = frame.l1();
  ConditionCheck out;
  out.threshold = 1e-12;
  for (Eigen::Index nu = 0; nu < l1.rows(); ++nu) {
    // P L1 Q is rank one: its norm is the row norm without the diagonal entry
    const double norm = std::sqrt(std::max(0.0, l1.row(nu).squaredNorm() - std::norm(l1(nu, nu))));
    out.violation = std::max(out.violation, norm);
  }
  out.holds = out.violation <= out.threshold;
  out.one_sided = true;
  return out;
}

ConditionCheck check_triangular_condition(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition) {
  const SuperOperator& l1 = frame.l1();
  const ComplexVector& e0 = frame.e0();
  if (decomposition.creation.rows() != l1.rows()) {
    throw ValidationError("check_triangular_condition: decomposition does not match the frame");
  }
  ConditionCheck out;
  out.threshold = 1e-10;
  for (Eigen::Index nu = 0; nu < l1.rows(); ++nu) {
    const cplx value = (l1.row(nu) * decomposition.creation.col(nu))(0);
    out.violation = std::max(out.violation, std::abs(value));
  }
  out.holds = out.violation <= out.threshold;

  const double scale = std::max(1.0, e0.cwiseAbs().maxCoeff());
  const double tiny = 1e-14 * std::max(1.0, l1.cwiseAbs().maxCoeff());
  bool raises = false, lowers = false, flat = false;
  for (Eigen::Index c = 0; c < l1.cols(); ++c) {
    for (Eigen::Index r = 0; r < l1.rows(); ++r) {
      if (r == c || std::abs(l1(r, c)) <= tiny) continue;
      const double step = e0(r).real() - e0(c).real();
      if (step > kDegeneracyTol * scale) {
        raises = true;
      } else if (step < -kDegeneracyTol * scale) {
        lowers = true;
      } else {
        flat = true;
      }
    }
  }
  out.one_sided = !flat && !(raises && lowers);
  return out;
}

double FidelityTrace::min() const {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::min_element(values.begin(), values.end());
}

double fidelity(const ComplexMatrix& rho0, const ComplexMatrix& rhot, double tol) {
  require_density(rho0, tol, "rho0");
  require_density(rhot, tol, "rhot");
  if (rho0.rows() != rhot.rows()) throw ValidationError("fidelity: dimension mismatch");
  const ComplexMatrix root = sqrtm_psd(rho0, tol);
  const ComplexMatrix inner = root * (0.5 * (rhot + rhot.adjoint())) * root;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) sum += std::sqrt(std::max(0.0, solver.eigenvalues()(k)));
  return sum;
}

std::vector<double> time_grid(double start, double end, std::size_t steps) {
  if (steps < 1) throw ValidationError("time_grid: steps must be >= 1");
  if (end < start) throw ValidationError("time_grid: t_end must be >= t_start");
  std::vector<double> out(steps);
  if (steps == 1) {
    out[0] = start;
    return out;
  }
  const double h = (end - start) / static_cast<double>(steps - 1);
  for (std::size_t k = 0; k < steps; ++k) out[k] = start + h * static_cast<double>(k);
  out.back() = end;
  return out;
}

Eigen::VectorXd probe_weights(std::size_t dim) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) p(static_cast<Eigen::Index>(i)) = static_cast<double>(dim - i);
  return p / p.sum();
}

FidelityTrace projected_fidelity(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition,
                                 const Eigen::VectorXd& weights, const std::vector<double>& times) {
  const auto d = static_cast<Eigen::Index>(frame.hilbert_dim());
  if (weights.size() != d) throw ValidationError("projected_fidelity: weight count does not match dimension");
  if (weights.minCoeff() < 0.0) throw ValidationError("projected_fidelity: negative weight");
  ProjectedDensity pd;
  pd.coefficients = ComplexVector::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i) pd.coefficients(i + d * i) = weights(i);
  const ComplexMatrix rho0 = reconstruct(pd, frame);
  FidelityTrace trace;
  trace.times = times;
  trace.values.reserve(times.size());
  for (double t : times) {
    const ComplexMatrix rhot = reconstruct(evolve_projected(pd, decomposition.energies, t), frame);
    trace.values.push_back(fidelity(rho0, rhot));
  }
  return trace;
}

SpectralInvariance spectral_invariance(const ThetaResult& theta_free, const ThetaResult& theta_int) {
  if (theta_free.theta.rows() != theta_int.theta.rows()) {
    throw ValidationError("spectral_invariance: Theta dimensions differ");
  }
  SpectralInvariance out;
  auto deficit = [](const SuperOperator& theta) {
    if (theta.size() == 0) return 0.0;
    SuperOperator off = theta;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() / std::max(1.0, theta.cwiseAbs().maxCoeff());
  };
  out.eigenvector_deficit = std::max(deficit(theta_free.theta), deficit(theta_int.theta));
  const ComplexVector shift = theta_int.theta.diagonal() - theta_free.theta.diagonal();
  if (shift.size() > 0) {
    out.max_shift = shift.cwiseAbs().maxCoeff();
    out.max_imaginary_shift = shift.imag().cwiseAbs().maxCoeff();
  }
  return out;
}

SpectralInvariance spectral_invariance(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition) {
  ThetaResult free;
  free.energies = frame.e0();
  free.theta = frame.e0().asDiagonal();
  SpectralInvariance out = spectral_invariance(free, theta(frame, decomposition));

  for (Eigen::Index nu = 0; nu < frame.e0().size(); ++nu) {
    const cplx term = frame.lambda() * (frame.l1().row(nu) * decomposition.creation.col(nu))(0);
    out.max_interaction_shift = std::max(out.max_interaction_shift, std::abs(term));
  }

  const EigenSystem hs = eig(frame.total_hamiltonian(), frame.h1_hermitian());
  std::vector<double> shifted(static_cast<std::size_t>(hs.values.size()));
  for (Eigen::Index k = 0; k < hs.values.size(); ++k) shifted[static_cast<std::size_t>(k)] = hs.values(k).real();
  std::sort(shifted.begin(), shifted.end());
  for (std::size_t k = 0; k < shifted.size(); ++k) {
    out.hamiltonian_shift =
        std::max(out.hamiltonian_shift, std::abs(shifted[k] - frame.free_energies()(static_cast<Eigen::Index>(k))));
  }
  return out;
}

DecoherenceTrace total_space_decoherence(const ModelOperators& ops, const ComplexMatrix& rho0,
                                         const std::vector<double>& times) {
  if (rho0.rows() != ops.H0.rows() || rho0.cols() != ops.H0.cols()) {
    throw ValidationError("total_space_decoherence: rho0 dimension mismatch");
  }
  const HilbertEvolution exact(ops.total());
  const HilbertEvolution free(ops.H0);
  DecoherenceTrace trace;
  trace.times = times;
  for (double t : times) {
    const ComplexMatrix a = partial_trace(exact.evolve(rho0, t), ops.space, ops.environment);
    const ComplexMatrix b = partial_trace(free.evolve(rho0, t), ops.space, ops.environment);
    const ComplexMatrix diff = a - b;
    double off = 0.0, pop = 0.0;
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
      for (Eigen::Index r = 0; r < diff.rows(); ++r) {
        if (r == c) {
          pop = std::max(pop, std::abs(diff(r, c)));
        } else {
          off = std::max(off, std::abs(diff(r, c)));
        }
      }
    }
    trace.offdiagonal_deviation.push_back(off);
    trace.population_deviation.push_back(pop);
    trace.max_offdiagonal = std::max(trace.max_offdiagonal, off);
    trace.max_population = std::max(trace.max_population, pop);
  }
  return trace;
}

double free_population_drift(const ModelOperators& ops, const Eigen::VectorXd& weights,
                             const std::vector<double>& times) {
  const EigenSystem free = eig(ops.H0, true);
  if (weights.size() != free.values.size()) throw ValidationError("free_population_drift: weight count mismatch");
  const ComplexMatrix rho0 = free_mixture(free.right, weights);
  const HilbertEvolution exact(ops.total());
  double drift = 0.0;
  for (double t : times) {
    const ComplexMatrix in_frame = free.right.adjoint() * exact.evolve(rho0, t) * free.right;
    for (Eigen::Index i = 0; i < weights.size(); ++i) drift = std::max(drift, std::abs(in_frame(i, i) - weights(i)));
  }
  return drift;
}

double spectral_weight_deficit(const LiouvilleFrame& frame) {
  const EigenSystem hs = eig(frame.total_hamiltonian(), frame.h1_hermitian());
  const auto d = hs.values.size();
  ComplexMatrix w(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index i = 0; i < d; ++i) w(i, a) = hs.right(i, a) * hs.left(a, i);
  }
  const auto match = assign_max_weight(w.cwiseAbs());
  double deficit = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index a = 0; a < d; ++a) {
      const double target = static_cast<std::size_t>(a) == match[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      deficit = std::max(deficit, std::abs(w(i, a) - target));
    }
  }
  return deficit;
}

DFReport classify(const ModelSpec& model, Order order, const std::vector<double>& times,
                  const PerturbationOptions& options, const DFThresholds& thresholds, std::size_t dimension_cap) {
  DFReport report = classify(build_model(model, dimension_cap), order, times, options, thresholds);
  report.model = model;
  return report;
}

DFReport classify(const ModelOperators& ops, Order order, const std::vector<double>& times,
                  const PerturbationOptions& options, const DFThresholds& thresholds) {
  DFReport report;
  report.order = order;
  const LiouvilleFrame frame(ops);
  const SubdynDecomposition exact = decompose(frame, Order::Exact, options);
  const SubdynDecomposition dec = order == Order::Exact ? exact : decompose(frame, order, options);
  report.e0 = dec.e0;
  report.energies = dec.energies;
  report.warnings = dec.warnings;
  report.omega_condition = dec.omega_condition;
  const Eigen::VectorXd weights = probe_weights(ops.dim());

  // total space, stationary: do the eigenvectors of H keep the free spectral weights?
  const double weight_deficit = spectral_weight_deficit(frame);
  report.stationary_total = weight_deficit > thresholds.spectral_weight ? Verdict::D : Verdict::DF;
  add(report, "spectral_weight_deficit", "stationary_total", weight_deficit, thresholds.spectral_weight, true,
      "max |<f_i|r_a><l_a|f_i> - permutation| > threshold -> D");

  // total space, evolution: do free stationary mixtures stay put?
  const double drift = free_population_drift(ops, weights, times);
  report.evolution_total = drift > thresholds.population_drift ? Verdict::D : Verdict::DF;
  add(report, "free_population_drift", "evolution_total", drift, thresholds.population_drift, true,
      "max_t |<f_i|rho(t)|f_i> - p_i| > threshold -> D");

  ComplexVector uniform = frame.free_basis().rowwise().sum();
  uniform.normalize();
  report.total = total_space_decoherence(ops, uniform * uniform.adjoint(), times);
  add(report, "reduced_offdiagonal_deviation", "evolution_total", report.total.max_offdiagonal,
      thresholds.population_drift, false,
      report.total.phase_only() ? "supporting: phase-only deviation of the reduced state"
                                : "supporting: reduced-state deviation with population change");
  if (frame.h1_hermitian()) {
    const HilbertEvolution exact_evolution(ops.total());
    const ComplexMatrix rho0 = free_mixture(frame.free_basis(), weights);
    double worst = 0.0;
    for (double t : times) worst = std::max(worst, 1.0 - fidelity(rho0, exact_evolution.evolve(rho0, t)));
    add(report, "total_fidelity_loss", "evolution_total", worst, thresholds.population_drift, false,
        "supporting: max_t 1 - F(rho0, rho(t)) for the free mixture");
  }

  // projected subspace, stationary: is Omega^{-1} L Omega diagonal?
  const SuperOperator l = frame.liouvillian();
  SuperOperator transformed = similarity_inverse(exact) * l * similarity_operator(exact);
  transformed.diagonal().setZero();
  const double off = transformed.size() ? transformed.cwiseAbs().maxCoeff() / std::max(1.0, l.cwiseAbs().maxCoeff()) : 0.0;
  report.stationary_proj = off > thresholds.offdiagonal ? Verdict::D : Verdict::DF;
  add(report, "similarity_offdiagonal", "stationary_proj", off, thresholds.offdiagonal, true,
      "max |offdiag(Omega^-1 L Omega)| / max |L| > threshold -> D");

  // projected subspace, evolution: eigenvectors fixed, eigenvalues shifted?
  const SpectralInvariance inv = spectral_invariance(frame, dec);
  if (inv.eigenvector_deficit > thresholds.eigenvector_deficit) {
    report.evolution_proj = Verdict::D;
  } else if (inv.max_shift > thresholds.energy_shift) {
    report.evolution_proj = Verdict::PE;
  } else {
    report.evolution_proj = Verdict::DF;
  }
  add(report, "theta_eigenvector_deficit", "evolution_proj", inv.eigenvector_deficit,
      thresholds.eigenvector_deficit, true, "relative off-diagonal weight of Theta > threshold -> D");
  add(report, "energy_shift", "evolution_proj", inv.max_shift, thresholds.energy_shift, true,
      "max |E_nu - E0_nu| > threshold (eigenvectors fixed) -> PE");
  add(report, "interaction_shift", "evolution_proj", inv.max_interaction_shift, thresholds.energy_shift, false,
      "supporting: max lambda |(phi_nu|L1 C_nu|phi_nu)|");
  add(report, "imaginary_shift", "evolution_proj", inv.max_imaginary_shift, thresholds.energy_shift, false,
      "supporting: max |Im(E_nu - E0_nu)|");
  add(report, "hamiltonian_shift", "evolution_total", inv.hamiltonian_shift, thresholds.energy_shift, false,
      "supporting: sorted eigenvalues of H0 + lambda H1 vs H0");

  try {
    report.projected = projected_fidelity(frame, dec, weights, times);
    add(report, "projected_fidelity_loss", "evolution_proj", 1.0 - report.projected.min(), 1e-9, false,
        "supporting: max_t 1 - F for a stationary projected mixture");
  } catch (const ValidationError& e) {
    report.warnings.push_back(std::string("projected fidelity unavailable: ") + e.what());
  }
  return report;
}

}  // namespace subdyn
