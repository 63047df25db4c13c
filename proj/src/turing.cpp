#include "subdyn/turing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace subdyn {

namespace {

constexpr std::size_t kMaxTape = 10;

ComplexMatrix x_rotation(double theta) {
  const auto gens = coefficient_generators();
  return std::cos(theta / 2.0) * ComplexMatrix::Identity(2, 2) - cplx(0.0, std::sin(theta / 2.0)) * gens[0];
}

ComplexMatrix invert(const ComplexMatrix& u, const char* what) {
  Eigen::FullPivLU<ComplexMatrix> lu(u);
  if (!lu.isInvertible()) throw NumericalError(std::string(what) + ": evolution operator is singular");
  return lu.inverse();
}

ComplexMatrix coefficient_matrix(const TuringMachine& machine, const ComplexVector& c) {
  const auto tapes = static_cast<Eigen::Index>(std::size_t{1} << machine.n_tape());
  ComplexMatrix m(2, tapes);
  for (Eigen::Index t = 0; t < tapes; ++t) {
    for (Eigen::Index h = 0; h < 2; ++h) m(h, t) = c(static_cast<Eigen::Index>(machine.join(h, t)));
  }
  return m;
}

void require_product_head(const ComplexMatrix& m, const char* what) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) throw ValidationError(std::string("decompose_entangled: ") + what + " is zero");
  if (s.size() > 1 && s(1) > 1e-10 * s(0)) {
    std::ostringstream os;
    os << "decompose_entangled: " << what << " is not (head) x (tape superposition); second singular value "
       << s(1) / s(0) << " relative";
    throw ValidationError(os.str());
  }
}

}  // namespace

PseudoSpinBasis PseudoSpinBasis::standard() { return {ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(2, 2)}; }

PseudoSpinBasis PseudoSpinBasis::from_right(const ComplexMatrix& right) {
  if (right.rows() != 2 || right.cols() != 2) throw ValidationError("PseudoSpinBasis: right basis must be 2 x 2");
  Eigen::FullPivLU<ComplexMatrix> lu(right);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) throw ValidationError("PseudoSpinBasis: right basis is singular");
  return {right, lu.inverse()};
}

PseudoSpinBasis PseudoSpinBasis::skewed(cplx skew) {
  ComplexMatrix r(2, 2);
  r << 1.0, skew, 0.0, 1.0;
  r.col(1).normalize();
  return from_right(r);
}

TuringMachine::TuringMachine(std::size_t n_tape, std::vector<PseudoSpinBasis> bases, std::size_t head_index)
    : n_tape_(n_tape), head_index_(head_index), bases_(std::move(bases)) {
  if (n_tape_ > kMaxTape) throw ValidationError("TuringMachine: at most 10 tape spins are supported");
  if (bases_.size() != n_tape_ + 1) {
    throw ValidationError("TuringMachine: expected one basis per factor (n_tape + 1)");
  }
  if (head_index_ > n_tape_) throw ValidationError("TuringMachine: head index out of range");
  std::vector<ComplexMatrix> rights, lefts;
  for (std::size_t f = 0; f < bases_.size(); ++f) {
    const auto& b = bases_[f];
    if (b.right.rows() != 2 || b.right.cols() != 2 || b.left.rows() != 2 || b.left.cols() != 2) {
      throw ValidationError("TuringMachine: factor bases must be 2 x 2");
    }
    const double defect = (b.left * b.right - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff();
    if (defect > 1e-12) {
      std::ostringstream os;
      os << "TuringMachine: factor " << f << " basis is not biorthonormal (defect " << defect << ")";
      throw ValidationError(os.str());
    }
    rights.push_back(b.right);
    lefts.push_back(b.left);
  }
  right_ = tensor(rights);
  left_ = tensor(lefts);
}

TuringMachine TuringMachine::orthonormal(std::size_t n_tape, std::size_t head_index) {
  return TuringMachine(n_tape, std::vector<PseudoSpinBasis>(n_tape + 1, PseudoSpinBasis::standard()), head_index);
}

double TuringMachine::biorthonormality_defect() const {
  const auto d = static_cast<Eigen::Index>(dim());
  return (left_ * right_ - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

ComplexVector TuringMachine::coefficients(const ComplexVector& psi) const {
  if (psi.size() != right_.rows()) throw ValidationError("TuringMachine: state dimension mismatch");
  return left_ * psi;
}

ComplexVector TuringMachine::dual_of(const ComplexVector& psi) const {
  const ComplexVector c = coefficients(psi);
  return (c.adjoint() * left_).transpose();
}

ComplexVector TuringMachine::product_state(const ComplexVector& head, const ComplexVector& tape) const {
  const auto tapes = static_cast<Eigen::Index>(std::size_t{1} << n_tape_);
  if (head.size() != 2 || tape.size() != tapes) throw ValidationError("TuringMachine: product state size mismatch");
  ComplexVector c(static_cast<Eigen::Index>(dim()));
  for (Eigen::Index t = 0; t < tapes; ++t) {
    for (Eigen::Index h = 0; h < 2; ++h) c(static_cast<Eigen::Index>(join(h, t))) = head(h) * tape(t);
  }
  return right_ * c;
}

std::pair<std::size_t, std::size_t> TuringMachine::split(std::size_t flat) const {
  const std::size_t f = factors();
  std::size_t head = 0, tape = 0;
  for (std::size_t k = 0; k < f; ++k) {
    const std::size_t bit = (flat >> (f - 1 - k)) & 1U;
    if (k == head_index_) {
      head = bit;
    } else {
      tape = (tape << 1) | bit;
    }
  }
  return {head, tape};
}

std::size_t TuringMachine::join(std::size_t head, std::size_t tape) const {
  const std::size_t f = factors();
  std::size_t flat = 0;
  std::size_t tape_bit = n_tape_;
  for (std::size_t k = 0; k < f; ++k) {
    std::size_t bit;
    if (k == head_index_) {
      bit = head & 1U;
    } else {
      --tape_bit;
      bit = (tape >> tape_bit) & 1U;
    }
    flat = (flat << 1) | bit;
  }
  return flat;
}

std::array<ComplexMatrix, 3> coefficient_generators() {
  const cplx i(0.0, 1.0);
  ComplexMatrix x(2, 2), y(2, 2), z(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  y << 0.0, i, -i, 0.0;
  z << -1.0, 0.0, 0.0, 1.0;
  return {x, y, z};
}

std::array<ComplexMatrix, 3> generators(const TuringMachine& machine, std::size_t factor) {
  if (factor >= machine.factors()) throw ValidationError("generators: factor index out of range");
  const auto local = coefficient_generators();
  std::array<ComplexMatrix, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<ComplexMatrix> ops;
    for (std::size_t f = 0; f < machine.factors(); ++f) {
      if (f == factor) {
        ops.push_back(machine.basis(f).right * local[k] * machine.basis(f).left);
      } else {
        ops.push_back(ComplexMatrix::Identity(2, 2));
      }
    }
    out[k] = tensor(ops);
  }
  return out;
}

ComplexBloch bloch_head_complex(const ComplexVector& psi, const ComplexVector& psi_dual,
                                const TuringMachine& machine) {
  if (psi.size() != psi_dual.size() || static_cast<std::size_t>(psi.size()) != machine.dim()) {
    throw ValidationError("bloch_head: state dimension mismatch");
  }
  const auto gens = generators(machine, machine.head_index());
  auto expect = [&](const ComplexMatrix& g) { return psi_dual.transpose() * (g * psi); };
  return {expect(gens[0]), expect(gens[1]), expect(gens[2])};
}

BlochVector bloch_head(const ComplexVector& psi, const ComplexVector& psi_dual, const TuringMachine& machine,
                       double tol) {
  const ComplexBloch b = bloch_head_complex(psi, psi_dual, machine);
  const double worst = std::max({std::abs(b.x.imag()), std::abs(b.y.imag()), std::abs(b.z.imag())});
  if (worst > tol) {
    std::ostringstream os;
    os << "bloch_head: expectation values are not real (max |Im| = " << worst << ")";
    throw NumericalError(os.str());
  }
  return {b.x.real(), b.y.real(), b.z.real()};
}

double bloch_circle_residual(const std::vector<BlochVector>& trajectory) {
  double worst = 0.0;
  for (const auto& b : trajectory) worst = std::max(worst, std::abs(b.y * b.y + b.z * b.z - 1.0));
  return worst;
}

ComplexMatrix dual_evolution(const ComplexMatrix& u) { return invert(u, "dual_evolution").adjoint(); }

ComplexVector evolve_dual(const ComplexMatrix& u, const ComplexVector& psi_dual) {
  return invert(u, "evolve_dual").transpose() * psi_dual;
}

double isometry_defect(const ComplexMatrix& u, std::size_t samples, std::uint64_t seed) {
  if (u.rows() != u.cols()) throw ValidationError("isometry_defect: evolution must be square");
  const ComplexMatrix inv_t = invert(u, "isometry_defect").transpose();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&] {
    ComplexVector v(u.rows());
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = cplx(normal(rng), normal(rng));
    return ComplexVector(v.normalized());
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const ComplexVector psi = draw();
    const ComplexVector bra = draw();
    const cplx before = bra.transpose() * psi;
    const cplx after = (inv_t * bra).transpose() * (u * psi);
    worst = std::max(worst, std::abs(after - before));
  }
  return worst;
}

ComplexMatrix head_rotation(const TuringMachine& machine, double theta) {
  std::vector<ComplexMatrix> ops;
  for (std::size_t f = 0; f < machine.factors(); ++f) {
    if (f == machine.head_index()) {
      ops.push_back(machine.basis(f).right * x_rotation(theta) * machine.basis(f).left);
    } else {
      ops.push_back(ComplexMatrix::Identity(2, 2));
    }
  }
  return tensor(ops);
}

ComplexMatrix tape_controlled_rotation(const TuringMachine& machine, const std::vector<double>& angles) {
  const std::size_t tapes = std::size_t{1} << machine.n_tape();
  if (angles.size() != tapes) throw ValidationError("tape_controlled_rotation: one angle per tape configuration");
  const auto d = static_cast<Eigen::Index>(machine.dim());
  ComplexMatrix k = ComplexMatrix::Zero(d, d);
  for (std::size_t t = 0; t < tapes; ++t) {
    const ComplexMatrix r = x_rotation(angles[t]);
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        k(static_cast<Eigen::Index>(machine.join(a, t)), static_cast<Eigen::Index>(machine.join(b, t))) =
            r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  }
  return machine.right_basis() * k * machine.left_basis();
}

std::vector<BlochVector> rotation_trajectory(const TuringMachine& machine, const ComplexVector& psi0, double omega,
                                             const std::vector<double>& times) {
  const ComplexVector dual0 = machine.dual_of(psi0);
  std::vector<BlochVector> out;
  out.reserve(times.size());
  for (double t : times) {
    const ComplexMatrix u = head_rotation(machine, omega * t);
    out.push_back(bloch_head(u * psi0, evolve_dual(u, dual0), machine));
  }
  return out;
}

double EntangledDecomposition::residual() const {
  return std::max({std::abs(total.x - recomposed.x), std::abs(total.y - recomposed.y),
                   std::abs(total.z - recomposed.z)});
}

EntangledDecomposition decompose_entangled(const ComplexVector& psi0, const ComplexVector& psi0_dual,
                                           const TuringMachine& machine, const std::vector<ComplexMatrix>& steps) {
  if (static_cast<std::size_t>(psi0.size()) != machine.dim() || psi0_dual.size() != psi0.size()) {
    throw ValidationError("decompose_entangled: state dimension mismatch");
  }
  require_product_head(coefficient_matrix(machine, machine.coefficients(psi0)), "psi0");
  require_product_head(coefficient_matrix(machine, machine.right_basis().transpose() * psi0_dual), "psi0 dual");

  ComplexVector psi = psi0;
  ComplexVector bra = psi0_dual;
  for (const auto& u : steps) {
    if (u.rows() != psi.size() || u.cols() != psi.size()) throw ValidationError("decompose_entangled: step size mismatch");
    psi = u * psi;
    bra = evolve_dual(u, bra);
  }

  const ComplexMatrix c = coefficient_matrix(machine, machine.coefficients(psi));
  const ComplexMatrix e = coefficient_matrix(machine, machine.right_basis().transpose() * bra);
  const auto gens = coefficient_generators();

  EntangledDecomposition out;
  out.total = bloch_head_complex(psi, bra, machine);
  out.recomposed = {0.0, 0.0, 0.0};
  const double scale = std::max(1.0, std::max(c.cwiseAbs().maxCoeff(), e.cwiseAbs().maxCoeff()));
  for (Eigen::Index t = 0; t < c.cols(); ++t) {
    const ComplexVector h = c.col(t);
    const ComplexVector k = e.col(t);
    const cplx weight = k.transpose() * h;
    const cplx raw[3] = {k.transpose() * gens[0] * h, k.transpose() * gens[1] * h, k.transpose() * gens[2] * h};
    if (std::abs(weight) <= 1e-14 * scale) {
      if (std::max({std::abs(raw[0]), std::abs(raw[1]), std::abs(raw[2])}) <= 1e-14 * scale) continue;
      std::ostringstream os;
      os << "decompose_entangled: tape branch " << t << " has vanishing pairing but nonzero head coherence";
      throw NumericalError(os.str());
    }
    Branch b;
    b.tape = static_cast<std::size_t>(t);
    b.weight = weight;
    b.bloch = {raw[0] / weight, raw[1] / weight, raw[2] / weight};
    out.recomposed.x += weight * b.bloch.x;
    out.recomposed.y += weight * b.bloch.y;
    out.recomposed.z += weight * b.bloch.z;
    out.branches.push_back(b);
  }
  return out;
}

}  // namespace subdyn
