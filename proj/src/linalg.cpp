#include "subdyn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace subdyn {

namespace {

void require_square(const ComplexMatrix& m, const char* fn) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << fn << ": matrix is " << m.rows() << "x" << m.cols() << ", expected square";
    throw ValidationError(os.str());
  }
}

bool complex_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

std::vector<Eigen::Index> sorted_order(const ComplexVector& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return complex_less(values(a), values(b));
  });
  return order;
}

double one_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

EigenSystem diagonal_system(const ComplexMatrix& m, bool hermitian) {
  const Eigen::Index n = m.rows();
  ComplexVector diag = m.diagonal();
  if (hermitian) diag = diag.real().cast<cplx>();
  auto order = sorted_order(diag);
  EigenSystem es;
  es.hermitian = hermitian;
  es.values.resize(n);
  es.right = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    es.values(k) = diag(order[static_cast<std::size_t>(k)]);
    es.right(order[static_cast<std::size_t>(k)], k) = 1.0;
  }
  es.left = es.right.transpose();
  return es;
}

}  // namespace

// ---------------------------------------------------------------------------
// TensorSpace

TensorSpace::TensorSpace(std::vector<TensorFactor> factors) : factors_(std::move(factors)) {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].dim < 1) {
      throw ValidationError("TensorSpace: factor '" + factors_[i].label + "' has dimension 0");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (factors_[j].label == factors_[i].label) {
        throw ValidationError("TensorSpace: duplicate factor label '" + factors_[i].label + "'");
      }
    }
  }
}

std::size_t TensorSpace::total_dim() const {
  std::size_t total = 1;
  for (const auto& f : factors_) total *= f.dim;
  return total;
}

std::size_t TensorSpace::factor_position(const std::string& label) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].label == label) return i;
  }
  throw ValidationError("TensorSpace: no factor labelled '" + label + "'");
}

std::size_t TensorSpace::flat_index(const std::vector<std::size_t>& digits) const {
  if (digits.size() != factors_.size()) {
    throw ValidationError("TensorSpace::flat_index: digit count does not match factor count");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (digits[i] >= factors_[i].dim) {
      throw ValidationError("TensorSpace::flat_index: digit out of range for '" +
                            factors_[i].label + "'");
    }
    flat = flat * factors_[i].dim + digits[i];
  }
  return flat;
}

std::vector<std::size_t> TensorSpace::digits(std::size_t flat) const {
  if (flat >= total_dim()) throw ValidationError("TensorSpace::digits: index out of range");
  std::vector<std::size_t> out(factors_.size());
  for (std::size_t i = factors_.size(); i-- > 0;) {
    out[i] = flat % factors_[i].dim;
    flat /= factors_[i].dim;
  }
  return out;
}

// ---------------------------------------------------------------------------

ComplexMatrix tensor(const std::vector<ComplexMatrix>& ops) {
  if (ops.empty()) throw ValidationError("tensor: empty operand list");
  for (const auto& op : ops) require_square(op, "tensor");
  ComplexMatrix acc = ops.front();
  for (std::size_t k = 1; k < ops.size(); ++k) {
    const ComplexMatrix& b = ops[k];
    ComplexMatrix next(acc.rows() * b.rows(), acc.cols() * b.cols());
    for (Eigen::Index i = 0; i < acc.rows(); ++i) {
      for (Eigen::Index j = 0; j < acc.cols(); ++j) {
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = acc(i, j) * b;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

ComplexMatrix tensor(std::initializer_list<ComplexMatrix> ops) {
  return tensor(std::vector<ComplexMatrix>(ops));
}

SuperOperator commutator_superop(const ComplexMatrix& h) {
  require_square(h, "commutator_superop");
  const Eigen::Index d = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  return tensor({id, h}) - tensor({ComplexMatrix(h.transpose()), id});
}

ComplexMatrix fix_phases(const ComplexMatrix& vectors) {
  ComplexMatrix out = vectors;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm == 0.0) continue;
    Eigen::Index pivot = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      // first entry within 1e-12 of the maximum wins, keeping ties reproducible
      const double mag = std::abs(out(r, c));
      if (mag > best * (1.0 + 1e-12) + 1e-300) {
        best = mag;
        pivot = r;
      }
    }
    const cplx phase = std::conj(out(pivot, c)) / std::abs(out(pivot, c));
    out.col(c) *= phase / norm;
  }
  return out;
}

EigenSystem eig(const ComplexMatrix& m, bool hermitian, double tol) {
  require_square(m, "eig");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, opnorm(m));
  if (hermitian) {
    const double defect = hermiticity_defect(m);
    if (defect > tol * scale) {
      std::ostringstream os;
      os << "eig: hermitian flag set but ||M - M^+|| = " << defect;
      throw ValidationError(os.str());
    }
  }
  if (n == 0) return EigenSystem{ComplexVector(0), ComplexMatrix(0, 0), ComplexMatrix(0, 0), hermitian, 1.0};
  if (is_diagonal(m)) return diagonal_system(m, hermitian);

  EigenSystem es;
  es.hermitian = hermitian;
  if (hermitian) {
    ComplexMatrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("eig: Hermitian solver failed");
    es.values = solver.eigenvalues().cast<cplx>();
    es.right = fix_phases(solver.eigenvectors());
    es.left = es.right.adjoint();
    return es;
  }

  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, true);
  if (solver.info() != Eigen::Success) throw NumericalError("eig: general solver failed");
  auto order = sorted_order(solver.eigenvalues());
  es.values.resize(n);
  ComplexMatrix right(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    es.values(k) = solver.eigenvalues()(order[static_cast<std::size_t>(k)]);
    right.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  es.right = fix_phases(right);
  Eigen::FullPivLU<ComplexMatrix> lu(es.right);
  es.condition = lu.isInvertible() ? one_norm(es.right) * one_norm(lu.inverse())
                                   : std::numeric_limits<double>::infinity();
  if (!(es.condition < 1.0 / (tol * 1e-3))) {
    std::ostringstream os;
    os << "eig: matrix is defective within tolerance (eigenvector condition estimate "
       << es.condition << ")";
    throw NumericalError(os.str());
  }
  es.left = lu.inverse();
  return es;
}

ComplexMatrix sqrtm_psd(const ComplexMatrix& m, double tol) {
  require_square(m, "sqrtm_psd");
  const double scale = std::max(1.0, opnorm(m));
  if (hermiticity_defect(m) > tol * scale) throw ValidationError("sqrtm_psd: input is not Hermitian");
  ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  Eigen::VectorXd values = solver.eigenvalues();
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) < -tol * scale) {
      std::ostringstream os;
      os << "sqrtm_psd: eigenvalue " << values(k) << " below -tolerance";
      throw ValidationError(os.str());
    }
    values(k) = std::sqrt(std::max(0.0, values(k)));
  }
  const ComplexMatrix& v = solver.eigenvectors();
  ComplexMatrix root = v * values.cast<cplx>().asDiagonal() * v.adjoint();
  return 0.5 * (root + root.adjoint());
}

// ---------------------------------------------------------------------------
// Matrix exponential

Propagator::Propagator(const ComplexMatrix& m) : generator_(m) {
  require_square(m, "Propagator");
  const double scale = std::max(1.0, opnorm(m));
  if (hermiticity_defect(m) <= 1e-12 * scale) {
    ComplexMatrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    values_ = solver.eigenvalues().cast<cplx>();
    right_ = solver.eigenvectors();
    left_ = right_.adjoint();
    spectral_ = true;
    return;
  }
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, true);
  if (solver.info() == Eigen::Success) {
    Eigen::FullPivLU<ComplexMatrix> lu(solver.eigenvectors());
    if (lu.isInvertible()) {
      ComplexMatrix inv = lu.inverse();
      const double cond = one_norm(solver.eigenvectors()) * one_norm(inv);
      if (cond < 1e4) {
        values_ = solver.eigenvalues();
        right_ = solver.eigenvectors();
        left_ = std::move(inv);
        spectral_ = true;
      }
    }
  }
}

ComplexVector Propagator::apply(double t, const ComplexVector& v) const {
  if (v.size() != generator_.cols()) throw ValidationError("expm_action: dimension mismatch");
  if (spectral_) {
    ComplexVector coeff = left_ * v;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::exp(cplx(0.0, -t) * values_(k));
    return right_ * coeff;
  }
  ComplexMatrix scaled = cplx(0.0, -t) * generator_;
  ComplexMatrix u = scaled.exp();
  return u * v;
}

ComplexVector expm_action(const ComplexMatrix& m, double t, const ComplexVector& v) {
  require_square(m, "expm_action");
  if (v.size() != m.cols()) throw ValidationError("expm_action: dimension mismatch");
  return Propagator(m).apply(t, v);
}

// ---------------------------------------------------------------------------

ComplexVector vec(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

ComplexMatrix unvec(const ComplexVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != v.size()) throw ValidationError("unvec: size mismatch");
  return Eigen::Map<const ComplexMatrix>(v.data(), rows, cols);
}

ComplexMatrix unvec(const ComplexVector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size()) throw ValidationError("unvec: length is not a perfect square");
  return unvec(v, d, d);
}

double opnorm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::BDCSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, const TensorSpace& space,
                            const std::vector<std::string>& traced) {
  const auto d = static_cast<Eigen::Index>(space.total_dim());
  if (rho.rows() != d || rho.cols() != d) throw ValidationError("partial_trace: dimension mismatch");
  const auto& factors = space.factors();
  std::vector<bool> drop(factors.size(), false);
  for (const auto& label : traced) drop[space.factor_position(label)] = true;

  std::size_t kept_dim = 1;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (!drop[f]) kept_dim *= factors[f].dim;
  }
  auto split = [&](std::size_t flat, std::size_t& kept, std::size_t& gone) {
    const auto dig = space.digits(flat);
    kept = 0;
    gone = 0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      if (drop[f]) {
        gone = gone * factors[f].dim + dig[f];
      } else {
        kept = kept * factors[f].dim + dig[f];
      }
    }
  };
  std::vector<std::size_t> kept(static_cast<std::size_t>(d)), gone(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < kept.size(); ++k) split(k, kept[k], gone[k]);

  const auto kd = static_cast<Eigen::Index>(kept_dim);
  ComplexMatrix out = ComplexMatrix::Zero(kd, kd);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) {
      if (gone[static_cast<std::size_t>(r)] != gone[static_cast<std::size_t>(c)]) continue;
      out(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(r)]),
          static_cast<Eigen::Index>(kept[static_cast<std::size_t>(c)])) += rho(r, c);
    }
  }
  return out;
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_diagonal(const ComplexMatrix& m, double tol) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && std::abs(m(i, j)) > tol) return false;
    }
  }
  return true;
}

std::vector<std::size_t> assign_max_weight(const Eigen::MatrixXd& weight) {
  const auto n = static_cast<std::size_t>(weight.rows());
  if (weight.cols() != weight.rows()) throw ValidationError("assign_max_weight: weight matrix not square");
  // Hungarian algorithm with potentials on cost = -weight, 1-based internals.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) result[p[j] - 1] = j - 1;
  return result;
}

std::vector<std::vector<std::size_t>> cluster_values(const ComplexVector& values, double tol) {
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  // sweep in real-part order so only nearby candidates are compared
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)).real() < values(static_cast<Eigen::Index>(b)).real();
  });
  for (std::size_t a = 0; a < n; ++a) {
    const cplx va = values(static_cast<Eigen::Index>(order[a]));
    for (std::size_t b = a + 1; b < n; ++b) {
      const cplx vb = values(static_cast<Eigen::Index>(order[b]));
      if (vb.real() - va.real() > tol) break;
      if (std::abs(vb - va) <= tol) {
        const std::size_t ra = find(order[a]), rb = find(order[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] == n) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

}  // namespace subdyn
