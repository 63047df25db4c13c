#include "subdyn/gates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace subdyn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r > std::numbers::pi) r -= kTwoPi;
  if (r < -std::numbers::pi) r += kTwoPi;
  return r;
}

cplx wrap_phase(cplx x) { return {wrap_phase(x.real()), x.imag()}; }

void finish(SwapCalibration& cal, const ComplexVector& e0, const ComplexVector& energies) {
  cal.residual = 0.0;
  cal.phase_error = 0.0;
  const double t = cal.t_sw + cal.delta_t;
  for (Eigen::Index nu = 0; nu < e0.size(); ++nu) {
    const cplx ideal = std::exp(cplx(0.0, -cal.t_sw) * e0(nu));
    const cplx actual = std::exp(cplx(0.0, -t) * energies(nu));
    cal.residual = std::max(cal.residual, std::abs(ideal - actual));
    cal.phase_error = std::max(cal.phase_error, std::abs(wrap_phase(energies(nu) * t - e0(nu) * cal.t_sw)));
  }
}

}  // namespace

SuperOperator ideal_swap(const ComplexVector& energies_free, double t_sw) {
  ComplexVector phases(energies_free.size());
  for (Eigen::Index nu = 0; nu < energies_free.size(); ++nu) phases(nu) = std::exp(cplx(0.0, -t_sw) * energies_free(nu));
  return phases.asDiagonal();
}

SuperOperator nonideal_swap(const ComplexVector& energies_int, double t) { return ideal_swap(energies_int, t); }

SwapCalibration calibrate_timing(double e0_over_de, double t_sw) {
  if (!std::isfinite(t_sw)) throw ValidationError("calibrate_timing: t_sw must be finite");
  SwapCalibration cal;
  cal.t_sw = t_sw;
  cal.e0_over_de = e0_over_de;
  if (std::isinf(e0_over_de)) return cal;
  if (e0_over_de == -1.0) throw NumericalError("calibrate_timing: E0 + dE = 0, the phase cannot be matched");
  // (E0 + dE)(t_sw + dt) = E0 t_sw with E0 = r dE
  cal.delta_t = -t_sw / (e0_over_de + 1.0);
  const double relative = (1.0 + 1.0 / e0_over_de) * (t_sw + cal.delta_t) - t_sw;
  cal.phase_error = std::abs(relative);
  return cal;
}

SwapCalibration calibrate_timing(const ComplexVector& e0, const ComplexVector& energies, double t_sw,
                                 double homogeneity_tol) {
  if (e0.size() != energies.size()) throw ValidationError("calibrate_timing: energy vectors differ in length");
  if (!std::isfinite(t_sw)) throw ValidationError("calibrate_timing: t_sw must be finite");
  SwapCalibration cal;
  cal.t_sw = t_sw;
  const ComplexVector de = energies - e0;
  const double scale = std::max(1.0, e0.cwiseAbs().maxCoeff());
  const double zero = 1e-14 * scale;

  if (de.size() == 0 || de.cwiseAbs().maxCoeff() <= zero) {
    cal.e0_over_de = std::numeric_limits<double>::infinity();
    finish(cal, e0, energies);
    return cal;
  }

  // homogeneity: dE_nu / E0_nu constant, and no shift where E0_nu = 0
  std::vector<cplx> ratios;
  bool stranded = false;
  for (Eigen::Index nu = 0; nu < e0.size(); ++nu) {
    if (std::abs(e0(nu)) <= zero) {
      stranded = stranded || std::abs(de(nu)) > zero;
      continue;
    }
    ratios.push_back(de(nu) / e0(nu));
  }
  cplx mean = 0.0;
  for (const cplx& r : ratios) mean += r;
  if (!ratios.empty()) mean /= static_cast<double>(ratios.size());
  double spread = 0.0;
  for (const cplx& r : ratios) spread = std::max(spread, std::abs(r - mean));
  cal.spread = spread / std::max(std::abs(mean), std::numeric_limits<double>::min());
  cal.homogeneous = !stranded && !ratios.empty() && cal.spread <= homogeneity_tol && std::abs(mean.imag()) <= zero;

  if (cal.homogeneous) {
    const double s = mean.real();
    if (std::abs(1.0 + s) <= 1e-14) throw NumericalError("calibrate_timing: E0 + dE = 0, the phase cannot be matched");
    cal.e0_over_de = 1.0 / s;
    cal.delta_t = -t_sw * s / (1.0 + s);
  } else {
    // least squares over sum_nu |E_nu (t_sw + dt) - E0_nu t_sw|^2
    double num = 0.0, den = 0.0;
    for (Eigen::Index nu = 0; nu < e0.size(); ++nu) {
      num += (std::conj(energies(nu)) * de(nu)).real();
      den += std::norm(energies(nu));
    }
    cal.delta_t = den > 0.0 ? -t_sw * num / den : 0.0;
    cal.e0_over_de = std::abs(mean) > 0.0 ? 1.0 / std::abs(mean) : std::numeric_limits<double>::infinity();
    cal.flagged = true;
    std::ostringstream os;
    os << "inhomogeneous shifts (relative spread " << cal.spread << (stranded ? ", shift on E0 = 0" : "")
       << "); least-squares dt";
    cal.warnings.push_back(os.str());
  }
  finish(cal, e0, energies);
  if (cal.flagged) {
    std::ostringstream os;
    os << "post-correction residual " << cal.residual;
    cal.warnings.push_back(os.str());
  }
  return cal;
}

std::vector<double> timing_branches(double e0, double de, double t_sw, int max_branch) {
  if (max_branch < 0) throw ValidationError("timing_branches: max_branch must be >= 0");
  const double e = e0 + de;
  if (e == 0.0) throw NumericalError("timing_branches: E0 + dE = 0");
  std::vector<double> out;
  for (int k = -max_branch; k <= max_branch; ++k) out.push_back((e0 * t_sw + kTwoPi * k) / e - t_sw);
  std::stable_sort(out.begin(), out.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  return out;
}

SwapCalibration calibrate_timing_second_order(const LiouvilleFrame& frame, double t_sw,
                                              const PerturbationOptions& options, double homogeneity_tol) {
  SwapCalibration cal = calibrate_timing(frame.e0(), energies_second_order(frame, options), t_sw, homogeneity_tol);
  cal.order = Order::Second;
  return cal;
}

SwapCalibration calibrate_timing_exact(const LiouvilleFrame& frame, double t_sw, double homogeneity_tol) {
  const SubdynDecomposition dec = decompose(frame, Order::Exact);
  SwapCalibration cal = calibrate_timing(frame.e0(), dec.energies, t_sw, homogeneity_tol);
  cal.order = Order::Exact;
  return cal;
}

ComplexMatrix exchange_hamiltonian(double g) {
  ComplexMatrix h = ComplexMatrix::Zero(4, 4);
  h(1, 2) = g;
  h(2, 1) = g;
  return h;
}

ComplexMatrix cnot_permutation() {
  ComplexMatrix p = ComplexMatrix::Zero(4, 4);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  p(3, 2) = 1.0;
  p(2, 3) = 1.0;
  return p;
}

ComplexMatrix default_left_states(const ComplexMatrix& right_states) {
  if (right_states.cols() != 4 || right_states.rows() < 4) {
    throw ValidationError("default_left_states: expected an n x 4 right-state matrix with n >= 4");
  }
  if (right_states.rows() == 4) {
    Eigen::FullPivLU<ComplexMatrix> lu(right_states);
    if (!lu.isInvertible()) throw ValidationError("default_left_states: right states are linearly dependent");
    return lu.inverse();
  }
  Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod(right_states);
  if (cod.rank() < 4) throw ValidationError("default_left_states: right states are linearly dependent");
  return cod.pseudoInverse();
}

RLSGate make_rls_gate(const ComplexMatrix& right_states, const ComplexMatrix& left_states, const ComplexMatrix& action,
                      double pairing_tol) {
  if (right_states.cols() != 4 || left_states.rows() != 4 || left_states.cols() != right_states.rows()) {
    throw ValidationError("RLS gate: expected n x 4 right states and 4 x n left states");
  }
  if (action.rows() != 4 || action.cols() != 4) throw ValidationError("RLS gate: action must be 4 x 4");
  RLSGate gate;
  gate.right_states = right_states;
  gate.left_states = left_states;
  gate.pairing_defect = (left_states * right_states - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff();
  if (gate.pairing_defect > pairing_tol) {
    std::ostringstream os;
    os << "RLS gate: biorthonormal pairing violated (max |<~i|j> - delta_ij| = " << gate.pairing_defect << ")";
    throw ValidationError(os.str());
  }
  gate.op = right_states * action * left_states;
  gate.matrix = left_states * gate.op * right_states;
  return gate;
}

RLSGate build_cnot_rls(const ComplexMatrix& right_states, const ComplexMatrix& left_states, double pairing_tol) {
  return make_rls_gate(right_states, left_states, cnot_permutation(), pairing_tol);
}

RLSGate build_cnot_rls(const ComplexMatrix& right_states) {
  return build_cnot_rls(right_states, default_left_states(right_states));
}

ClosureReport closure_report(const RLSGate& gate, double tol) {
  const ComplexMatrix& r = gate.right_states;
  const ComplexMatrix& l = gate.left_states;
  ClosureReport rep;
  const ComplexMatrix m = l * gate.op * r;
  rep.right_defect = opnorm(gate.op * r - r * m);
  rep.left_defect = opnorm(l * gate.op - m * l);
  // each row and column holds a single unit entry
  double defect = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    m.row(i).cwiseAbs().maxCoeff(&best);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      defect = std::max(defect, std::abs(m(i, j) - (j == best ? 1.0 : 0.0)));
    }
  }
  const Eigen::VectorXd col_sums = m.cwiseAbs().colwise().sum().transpose();
  defect = std::max(defect, (col_sums.array() - 1.0).abs().maxCoeff());
  rep.permutation_defect = defect;
  rep.closed = rep.right_defect <= tol && rep.left_defect <= tol && rep.permutation_defect <= tol;
  return rep;
}

bool verify_closure(const RLSGate& gate, double tol) { return closure_report(gate, tol).closed; }

std::vector<std::pair<std::string, double>> cnot_relations(const RLSGate& gate) {
  const ComplexMatrix& r = gate.right_states;
  const ComplexMatrix& l = gate.left_states;
  const int target[4] = {0, 1, 3, 2};
  std::vector<std::pair<std::string, double>> out;
  for (int k = 0; k < 4; ++k) {
    const double res = (gate.op * r.col(k) - r.col(target[k])).cwiseAbs().maxCoeff();
    out.emplace_back("CN|" + gate.labels[k] + ") = |" + gate.labels[target[k]] + ")", res);
  }
  for (int k = 0; k < 4; ++k) {
    const double res = (l.row(k) * gate.op - l.row(target[k])).cwiseAbs().maxCoeff();
    out.emplace_back("(~" + gate.labels[k] + "|CN = (~" + gate.labels[target[k]] + "|", res);
  }
  return out;
}

}  // namespace subdyn
