#include "subdyn/subdynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace subdyn {

namespace {

constexpr std::size_t kMaxWarnings = 20;

double one_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Records coupled degenerate partners, or throws in strict mode.
class ResonanceLog {
 public:
  ResonanceLog(const LiouvilleFrame& frame, const PerturbationOptions& options,
               std::vector<std::string>* warnings, std::size_t* zeroed)
      : frame_(frame), options_(options), warnings_(warnings), zeroed_(zeroed) {}

  void report(std::size_t nu, std::size_t mu, double coupling) {
    const NuIndex a = frame_.nu(nu), b = frame_.nu(mu);
    if (options_.strict) {
      std::ostringstream os;
      os << "resonance: degenerate partners " << to_string(a) << " and " << to_string(b)
         << " coupled by |L1| = " << coupling << " at eta = 0";
      throw ResonanceError(a, b, os.str());
    }
    if (zeroed_) ++*zeroed_;
    if (warnings_ && warnings_->size() < kMaxWarnings) {
      std::ostringstream os;
      os << "degenerate partners " << to_string(a) << " and " << to_string(b) << " coupled by |L1| = "
         << coupling << "; element set to zero";
      warnings_->push_back(os.str());
    }
  }

 private:
  const LiouvilleFrame& frame_;
  const PerturbationOptions& options_;
  std::vector<std::string>* warnings_;
  std::size_t* zeroed_;
};

// 1 / (E0_k - E0_nu - i eta), zero on nu and on unregularized degenerate partners.
ComplexVector denominators(const LiouvilleFrame& frame, std::size_t nu, const PerturbationOptions& options,
                           ResonanceLog& log) {
  const ComplexVector& e0 = frame.e0();
  const auto n = e0.size();
  const double scale = std::max(1.0, e0.cwiseAbs().maxCoeff());
  const double tol = options.degeneracy_tol * scale;
  const double significant = 1e-14 * std::max(1.0, frame.l1().cwiseAbs().maxCoeff());
  const auto inu = static_cast<Eigen::Index>(nu);
  ComplexVector g = ComplexVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == inu) continue;
    const cplx gap = e0(k) - e0(inu);
    if (options.eta == 0.0 && std::abs(gap) <= tol) {
      const double coupling = std::max(std::abs(frame.l1()(k, inu)), std::abs(frame.l1()(inu, k)));
      if (coupling > significant) log.report(nu, static_cast<std::size_t>(k), coupling);
      continue;
    }
    g(k) = 1.0 / (gap - cplx(0.0, options.eta));
  }
  return g;
}

struct NuTerms {
  ComplexVector c;  // C_nu |phi_nu)
  ComplexVector d;  // (phi_nu| D_nu, stored as a column of coefficients
};

NuTerms perturbative_terms(const LiouvilleFrame& frame, std::size_t nu, Order order,
                           const PerturbationOptions& options, ResonanceLog& log) {
  const double lambda = frame.lambda();
  const SuperOperator& l1 = frame.l1();
  const auto inu = static_cast<Eigen::Index>(nu);
  const ComplexVector g = denominators(frame, nu, options, log);

  NuTerms terms;
  ComplexVector first_c = -lambda * g.cwiseProduct(l1.col(inu));
  ComplexVector first_d = -lambda * g.cwiseProduct(l1.row(inu).transpose());
  terms.c = first_c;
  terms.d = first_d;
  if (order == Order::Second) {
    // expansion of (Q L Q - E0)^{-1} to first order in lambda L1
    terms.c -= lambda * g.cwiseProduct(l1 * first_c);
    terms.d -= lambda * g.cwiseProduct(l1.transpose() * first_d);
  }
  terms.c(inu) = 0.0;
  terms.d(inu) = 0.0;
  return terms;
}

SuperOperator column_operator(const ComplexVector& column, std::size_t nu) {
  const auto n = column.size();
  SuperOperator op = SuperOperator::Zero(n, n);
  op.col(static_cast<Eigen::Index>(nu)) = column;
  return op;
}

SuperOperator row_operator(const ComplexVector& row, std::size_t nu) {
  const auto n = row.size();
  SuperOperator op = SuperOperator::Zero(n, n);
  op.row(static_cast<Eigen::Index>(nu)) = row.transpose();
  return op;
}

void check_nu(const LiouvilleFrame& frame, std::size_t nu, const char* fn) {
  if (nu >= frame.dim()) {
    std::ostringstream os;
    os << fn << ": nu index " << nu << " out of range (Liouville dimension " << frame.dim() << ")";
    throw ValidationError(os.str());
  }
}

// Exact-order decomposition from the eigen-dyads |r_a><l_b| of the total Liouvillian.
SubdynDecomposition exact_decomposition(const LiouvilleFrame& frame) {
  const auto d = static_cast<Eigen::Index>(frame.hilbert_dim());
  const Eigen::Index n = d * d;
  const EigenSystem hs = eig(frame.total_hamiltonian(), frame.h1_hermitian());

  const ComplexMatrix right = tensor({ComplexMatrix(hs.left.transpose()), hs.right});
  const ComplexMatrix left = tensor({ComplexMatrix(hs.right.transpose()), hs.left});
  ComplexVector values(n);
  for (Eigen::Index b = 0; b < d; ++b) {
    for (Eigen::Index a = 0; a < d; ++a) values(a + d * b) = hs.values(a) - hs.values(b);
  }

  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const auto clusters = cluster_values(values, kDegeneracyTol * scale);

  // weight of each nu inside each cluster's spectral projector
  Eigen::MatrixXd weight(n, static_cast<Eigen::Index>(clusters.size()));
  for (std::size_t s = 0; s < clusters.size(); ++s) {
    for (Eigen::Index nu = 0; nu < n; ++nu) {
      cplx w = 0.0;
      for (std::size_t a : clusters[s]) {
        const auto ia = static_cast<Eigen::Index>(a);
        w += right(nu, ia) * left(ia, nu);
      }
      weight(nu, static_cast<Eigen::Index>(s)) = std::abs(w);
    }
  }

  std::vector<std::size_t> owner(static_cast<std::size_t>(n));
  std::vector<std::size_t> load(clusters.size(), 0);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    Eigen::Index best = 0;
    weight.row(nu).maxCoeff(&best);
    owner[static_cast<std::size_t>(nu)] = static_cast<std::size_t>(best);
    ++load[static_cast<std::size_t>(best)];
  }
  bool consistent = true;
  for (std::size_t s = 0; s < clusters.size(); ++s) consistent = consistent && load[s] == clusters[s].size();
  if (!consistent) {
    Eigen::MatrixXd slots(n, n);
    std::vector<std::size_t> slot_cluster;
    for (std::size_t s = 0; s < clusters.size(); ++s) {
      for (std::size_t k = 0; k < clusters[s].size(); ++k) {
        const auto col = static_cast<Eigen::Index>(slot_cluster.size());
        for (Eigen::Index nu = 0; nu < n; ++nu) {
          slots(nu, col) = std::log(std::max(weight(nu, static_cast<Eigen::Index>(s)), 1e-300));
        }
        slot_cluster.push_back(s);
      }
    }
    const auto match = assign_max_weight(slots);
    for (std::size_t nu = 0; nu < match.size(); ++nu) owner[nu] = slot_cluster[match[nu]];
  }

  ComplexMatrix omega = ComplexMatrix::Zero(n, n);
  ComplexMatrix omega_inv = ComplexMatrix::Zero(n, n);
  std::vector<std::vector<Eigen::Index>> members(clusters.size());
  for (Eigen::Index nu = 0; nu < n; ++nu) members[owner[static_cast<std::size_t>(nu)]].push_back(nu);
  for (std::size_t s = 0; s < clusters.size(); ++s) {
    const auto& cols = clusters[s];
    const auto& rows = members[s];
    const auto m = static_cast<Eigen::Index>(cols.size());
    ComplexMatrix x(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) x(r, c) = right(rows[static_cast<std::size_t>(r)], static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]));
    }
    Eigen::FullPivLU<ComplexMatrix> lu(x);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
      std::ostringstream os;
      os << "exact decomposition: eigenvector cluster of size " << m << " near "
         << values(static_cast<Eigen::Index>(cols.front())) << " has no P-component on "
         << to_string(frame.nu(static_cast<std::size_t>(rows.front())))
         << " (resonant subspace, rcond " << lu.rcond() << ")";
      throw ResonanceError(frame.nu(static_cast<std::size_t>(rows.front())),
                           frame.nu(static_cast<std::size_t>(rows.back())), os.str());
    }
    const ComplexMatrix x_inv = lu.inverse();
    ComplexMatrix block_right(n, m);
    ComplexMatrix block_left(m, n);
    for (Eigen::Index c = 0; c < m; ++c) {
      block_right.col(c) = right.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]));
      block_left.row(c) = left.row(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]));
    }
    const ComplexMatrix rotated_right = block_right * x_inv;
    const ComplexMatrix rotated_left = x * block_left;
    for (Eigen::Index k = 0; k < m; ++k) {
      omega.col(rows[static_cast<std::size_t>(k)]) = rotated_right.col(k);
      omega_inv.row(rows[static_cast<std::size_t>(k)]) = rotated_left.row(k);
    }
  }

  SubdynDecomposition dec;
  dec.order = Order::Exact;
  dec.hilbert_dim = frame.hilbert_dim();
  dec.e0 = frame.e0();
  dec.creation = omega - ComplexMatrix::Identity(n, n);
  dec.destruction = ComplexMatrix::Zero(n, n);
  dec.energies.resize(n);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    dec.creation(nu, nu) = 0.0;
    const cplx pivot = omega_inv(nu, nu);
    dec.destruction.row(nu) = omega_inv.row(nu) / pivot;
    dec.destruction(nu, nu) = 0.0;
    dec.energies(nu) = frame.e0()(nu) + frame.lambda() * (frame.l1().row(nu) * omega.col(nu))(0);
  }
  dec.omega_condition = one_norm(omega) * one_norm(omega_inv);
  return dec;
}

SubdynDecomposition perturbative_decomposition(const LiouvilleFrame& frame, Order order,
                                               const PerturbationOptions& options) {
  const auto n = static_cast<Eigen::Index>(frame.dim());
  SubdynDecomposition dec;
  dec.order = order;
  dec.hilbert_dim = frame.hilbert_dim();
  dec.e0 = frame.e0();
  dec.creation = ComplexMatrix::Zero(n, n);
  dec.destruction = ComplexMatrix::Zero(n, n);
  dec.energies.resize(n);
  ResonanceLog log(frame, options, &dec.warnings, &dec.zeroed_couplings);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    const NuTerms terms = perturbative_terms(frame, static_cast<std::size_t>(nu), order, options, log);
    dec.creation.col(nu) = terms.c;
    dec.destruction.row(nu) = terms.d.transpose();
  }
  if (dec.zeroed_couplings > dec.warnings.size()) {
    std::ostringstream os;
    os << dec.zeroed_couplings << " degenerate couplings zeroed in total";
    dec.warnings.push_back(os.str());
  }
  dec.energies = theta(frame, dec).energies;
  SuperOperator omega = similarity_operator(dec);
  Eigen::FullPivLU<ComplexMatrix> lu(omega);
  dec.omega_condition = lu.isInvertible() ? one_norm(omega) * one_norm(lu.inverse())
                                          : std::numeric_limits<double>::infinity();
  return dec;
}

}  // namespace

std::string to_string(const NuIndex& nu) {
  return "(" + std::to_string(nu.row) + "," + std::to_string(nu.col) + ")";
}

std::string to_string(Order order) {
  switch (order) {
    case Order::Exact: return "exact";
    case Order::First: return "1";
    case Order::Second: return "2";
  }
  return "unknown";
}

Order order_from_string(const std::string& text) {
  if (text == "exact") return Order::Exact;
  if (text == "1") return Order::First;
  if (text == "2") return Order::Second;
  throw ValidationError("unknown order '" + text + "' (expected exact, 1 or 2)");
}

ResonanceError::ResonanceError(NuIndex a, NuIndex b, const std::string& what)
    : NumericalError(what), nu(a), mu(b) {}

// ---------------------------------------------------------------------------
// LiouvilleFrame

LiouvilleFrame::LiouvilleFrame(const ComplexMatrix& h0, const ComplexMatrix& h1, double lambda)
    : lambda_(lambda) {
  if (h0.rows() != h0.cols() || h1.rows() != h1.cols() || h0.rows() != h1.rows()) {
    throw ValidationError("LiouvilleFrame: H0 and H1 must be square and of equal dimension");
  }
  if (h0.rows() == 0) throw ValidationError("LiouvilleFrame: empty Hamiltonian");
  const EigenSystem free = eig(h0, true, 1e-12);
  free_energies_ = free.values.real();
  free_basis_ = free.right;
  h1_frame_ = free_basis_.adjoint() * h1 * free_basis_;
  h1_hermitian_ = hermiticity_defect(h1) <= 1e-12 * std::max(1.0, h1.cwiseAbs().maxCoeff());
  const auto d = h0.rows();
  e0_.resize(d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) e0_(i + d * j) = free_energies_(i) - free_energies_(j);
  }
  l1_ = commutator_superop(h1_frame_);
}

LiouvilleFrame::LiouvilleFrame(const ModelOperators& ops) : LiouvilleFrame(ops.H0, ops.H1, ops.lambda) {}

SuperOperator LiouvilleFrame::l0() const { return e0_.asDiagonal(); }

SuperOperator LiouvilleFrame::liouvillian() const {
  SuperOperator l = lambda_ * l1_;
  l.diagonal() += e0_;
  return l;
}

ComplexMatrix LiouvilleFrame::total_hamiltonian() const {
  ComplexMatrix h = lambda_ * h1_frame_;
  h.diagonal() += free_energies_.cast<cplx>();
  return h;
}

std::size_t LiouvilleFrame::flat(NuIndex nu) const {
  if (nu.row >= hilbert_dim() || nu.col >= hilbert_dim()) {
    throw ValidationError("LiouvilleFrame: nu index " + to_string(nu) + " out of range");
  }
  return nu.row + hilbert_dim() * nu.col;
}

NuIndex LiouvilleFrame::nu(std::size_t flat) const {
  if (flat >= dim()) throw ValidationError("LiouvilleFrame: flat nu index out of range");
  return {flat % hilbert_dim(), flat / hilbert_dim()};
}

ComplexVector LiouvilleFrame::coordinates(const ComplexMatrix& rho) const {
  if (rho.rows() != free_basis_.rows() || rho.cols() != free_basis_.rows()) {
    throw ValidationError("LiouvilleFrame::coordinates: density matrix dimension mismatch");
  }
  return vec(free_basis_.adjoint() * rho * free_basis_);
}

ComplexMatrix LiouvilleFrame::operator_from(const ComplexVector& coefficients) const {
  if (static_cast<std::size_t>(coefficients.size()) != dim()) {
    throw ValidationError("LiouvilleFrame::operator_from: coefficient count mismatch");
  }
  return free_basis_ * unvec(coefficients) * free_basis_.adjoint();
}

ComplexMatrix LiouvilleFrame::phi() const {
  return tensor({ComplexMatrix(free_basis_.conjugate()), free_basis_});
}

SuperOperator LiouvilleFrame::to_standard(const SuperOperator& frame_op) const {
  const ComplexMatrix p = phi();
  return p * frame_op * p.adjoint();
}

std::vector<std::vector<std::size_t>> LiouvilleFrame::degenerate_groups(double tol) const {
  const double scale = std::max(1.0, e0_.cwiseAbs().maxCoeff());
  std::vector<std::vector<std::size_t>> groups;
  for (auto& g : cluster_values(e0_, tol * scale)) {
    if (g.size() > 1) groups.push_back(std::move(g));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// SubdynDecomposition accessors (frame basis)

NuIndex SubdynDecomposition::nu(std::size_t flat) const { return {flat % hilbert_dim, flat / hilbert_dim}; }

SuperOperator SubdynDecomposition::P(std::size_t nu) const {
  const auto n = static_cast<Eigen::Index>(dim());
  SuperOperator p = SuperOperator::Zero(n, n);
  p(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nu)) = 1.0;
  return p;
}

SuperOperator SubdynDecomposition::Q(std::size_t nu) const {
  const auto n = static_cast<Eigen::Index>(dim());
  return SuperOperator::Identity(n, n) - P(nu);
}

SuperOperator SubdynDecomposition::C(std::size_t nu) const {
  return column_operator(creation.col(static_cast<Eigen::Index>(nu)), nu);
}

SuperOperator SubdynDecomposition::D(std::size_t nu) const {
  return row_operator(destruction.row(static_cast<Eigen::Index>(nu)).transpose(), nu);
}

SuperOperator SubdynDecomposition::Pi(std::size_t nu) const { return total_projector(*this, nu); }

// ---------------------------------------------------------------------------

std::vector<SuperOperator> eigenprojectors(const EigenSystem& free_basis) {
  const auto d = free_basis.right.rows();
  if (free_basis.right.cols() != d || free_basis.left.rows() != d || free_basis.left.cols() != d) {
    throw ValidationError("eigenprojectors: incomplete eigenbasis");
  }
  if ((free_basis.left * free_basis.right - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError("eigenprojectors: eigenbasis is not biorthonormal");
  }
  std::vector<SuperOperator> out;
  out.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      // |r_i><l_j| and its dual functional X -> l_i X r_j
      const ComplexVector ket = vec(free_basis.right.col(i) * free_basis.left.row(j));
      const ComplexVector bra = vec(ComplexMatrix(free_basis.left.row(i).transpose() *
                                                  free_basis.right.col(j).transpose()));
      out.push_back(ket * bra.transpose());
    }
  }
  return out;
}

SubdynDecomposition decompose(const LiouvilleFrame& frame, Order order, const PerturbationOptions& options) {
  if (options.eta < 0.0) throw ValidationError("decompose: eta must be >= 0");
  if (order == Order::Exact) return exact_decomposition(frame);
  return perturbative_decomposition(frame, order, options);
}

SuperOperator creation_resolvent(const LiouvilleFrame& frame, std::size_t nu, cplx z, double eta) {
  check_nu(frame, nu, "creation_resolvent");
  const SuperOperator l = frame.liouvillian();
  const auto n = l.rows();
  const auto inu = static_cast<Eigen::Index>(nu);
  std::vector<Eigen::Index> q;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k != inu) q.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(q.size());
  ComplexMatrix shifted(m, m);
  ComplexVector rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) shifted(r, c) = l(q[static_cast<std::size_t>(r)], q[static_cast<std::size_t>(c)]);
    shifted(r, r) -= z + cplx(0.0, eta);
    rhs(r) = l(q[static_cast<std::size_t>(r)], inu);
  }
  Eigen::FullPivLU<ComplexMatrix> lu(shifted);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    Eigen::Index nearest = (inu + 1) % n;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != inu && std::abs(frame.e0()(k) - z) < std::abs(frame.e0()(nearest) - z)) nearest = k;
    }
    std::ostringstream os;
    os << "creation_resolvent: (QLQ - z) singular at nu " << to_string(frame.nu(nu)) << " with partner "
       << to_string(frame.nu(static_cast<std::size_t>(nearest))) << " (rcond " << lu.rcond() << ")";
    throw ResonanceError(frame.nu(nu), frame.nu(static_cast<std::size_t>(nearest)), os.str());
  }
  const ComplexVector x = -lu.solve(rhs);
  ComplexVector column = ComplexVector::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) column(q[static_cast<std::size_t>(r)]) = x(r);
  return column_operator(column, nu);
}

SuperOperator destruction_resolvent(const LiouvilleFrame& frame, std::size_t nu, cplx z, double eta) {
  check_nu(frame, nu, "destruction_resolvent");
  const SuperOperator l = frame.liouvillian();
  const auto n = l.rows();
  const auto inu = static_cast<Eigen::Index>(nu);
  std::vector<Eigen::Index> q;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k != inu) q.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(q.size());
  ComplexMatrix shifted_t(m, m);
  ComplexVector rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) shifted_t(c, r) = l(q[static_cast<std::size_t>(r)], q[static_cast<std::size_t>(c)]);
    shifted_t(r, r) -= z + cplx(0.0, eta);
    rhs(r) = l(inu, q[static_cast<std::size_t>(r)]);
  }
  Eigen::FullPivLU<ComplexMatrix> lu(shifted_t);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    std::ostringstream os;
    os << "destruction_resolvent: (QLQ - z) singular at nu " << to_string(frame.nu(nu));
    throw ResonanceError(frame.nu(nu), frame.nu(nu), os.str());
  }
  const ComplexVector y = -lu.solve(rhs);
  ComplexVector row = ComplexVector::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) row(q[static_cast<std::size_t>(r)]) = y(r);
  return row_operator(row, nu);
}

SuperOperator creation_exact(const LiouvilleFrame& frame, std::size_t nu) {
  check_nu(frame, nu, "creation_exact");
  return exact_decomposition(frame).C(nu);
}

SuperOperator creation_first_order(const LiouvilleFrame& frame, std::size_t nu, const PerturbationOptions& options) {
  check_nu(frame, nu, "creation_first_order");
  ResonanceLog log(frame, options, nullptr, nullptr);
  return column_operator(perturbative_terms(frame, nu, Order::First, options, log).c, nu);
}

SuperOperator destruction_first_order(const LiouvilleFrame& frame, std::size_t nu,
                                      const PerturbationOptions& options) {
  check_nu(frame, nu, "destruction_first_order");
  ResonanceLog log(frame, options, nullptr, nullptr);
  return row_operator(perturbative_terms(frame, nu, Order::First, options, log).d, nu);
}

SuperOperator creation_second_order(const LiouvilleFrame& frame, std::size_t nu,
                                    const PerturbationOptions& options) {
  check_nu(frame, nu, "creation_second_order");
  ResonanceLog log(frame, options, nullptr, nullptr);
  return column_operator(perturbative_terms(frame, nu, Order::Second, options, log).c, nu);
}

SuperOperator destruction_second_order(const LiouvilleFrame& frame, std::size_t nu,
                                       const PerturbationOptions& options) {
  check_nu(frame, nu, "destruction_second_order");
  ResonanceLog log(frame, options, nullptr, nullptr);
  return row_operator(perturbative_terms(frame, nu, Order::Second, options, log).d, nu);
}

cplx energy_second_order(const LiouvilleFrame& frame, std::size_t nu, const PerturbationOptions& options) {
  check_nu(frame, nu, "energy_second_order");
  ResonanceLog log(frame, options, nullptr, nullptr);
  const auto inu = static_cast<Eigen::Index>(nu);
  const NuTerms terms = perturbative_terms(frame, nu, Order::First, options, log);
  const double lambda = frame.lambda();
  return frame.e0()(inu) + lambda * frame.l1()(inu, inu) + lambda * (frame.l1().row(inu) * terms.c)(0);
}

ComplexVector energies_second_order(const LiouvilleFrame& frame, const PerturbationOptions& options) {
  ComplexVector out(static_cast<Eigen::Index>(frame.dim()));
  for (std::size_t nu = 0; nu < frame.dim(); ++nu) out(static_cast<Eigen::Index>(nu)) = energy_second_order(frame, nu, options);
  return out;
}

ThetaResult theta(const LiouvilleFrame& frame, const SubdynDecomposition& decomposition) {
  const auto n = static_cast<Eigen::Index>(frame.dim());
  if (decomposition.creation.rows() != n || decomposition.creation.cols() != n) {
    throw ValidationError("theta: decomposition does not match the frame dimension");
  }
  const double lambda = frame.lambda();
  ThetaResult out;
  out.energies.resize(n);
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    out.energies(nu) = frame.e0()(nu) + lambda * frame.l1()(nu, nu) +
                       lambda * (frame.l1().row(nu) * decomposition.creation.col(nu))(0);
  }
  out.theta = out.energies.asDiagonal();
  return out;
}

SuperOperator similarity_operator(const SubdynDecomposition& decomposition) {
  const auto n = static_cast<Eigen::Index>(decomposition.dim());
  return SuperOperator::Identity(n, n) + decomposition.creation;
}

SuperOperator similarity_inverse(const SubdynDecomposition& decomposition) {
  Eigen::FullPivLU<ComplexMatrix> lu(similarity_operator(decomposition));
  if (!lu.isInvertible()) throw NumericalError("similarity_inverse: Omega is singular");
  return lu.inverse();
}

SuperOperator total_projector(const SubdynDecomposition& decomposition, std::size_t nu) {
  if (nu >= decomposition.dim()) throw ValidationError("total_projector: nu out of range");
  const auto inu = static_cast<Eigen::Index>(nu);
  ComplexVector ket = decomposition.creation.col(inu);
  ket(inu) += 1.0;
  ComplexVector bra = decomposition.destruction.row(inu).transpose();
  bra(inu) += 1.0;
  // (P + DC) restricted to the P block is the scalar 1 + d.c
  const cplx norm = 1.0 + (decomposition.destruction.row(inu) * decomposition.creation.col(inu))(0);
  if (std::abs(norm) < 1e-12) {
    throw NumericalError("total_projector: (P + DC) singular on the P block at nu " +
                         to_string(decomposition.nu(nu)));
  }
  return (ket / norm) * bra.transpose();
}

ProjectedDensity project_density(const ComplexMatrix& rho, const LiouvilleFrame& frame,
                                 const SubdynDecomposition& decomposition) {
  const ComplexVector x = frame.coordinates(rho);
  const auto n = x.size();
  ProjectedDensity pd;
  pd.coefficients.resize(n);
  const ComplexVector dx = decomposition.destruction * x;
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    cplx value = x(nu) + dx(nu);
    if (decomposition.order == Order::Exact) {
      const cplx norm = 1.0 + (decomposition.destruction.row(nu) * decomposition.creation.col(nu))(0);
      if (std::abs(norm) < 1e-12) {
        throw NumericalError("project_density: (P + DC) singular on the P block at nu " +
                             to_string(decomposition.nu(static_cast<std::size_t>(nu))));
      }
      value /= norm;
    }
    pd.coefficients(nu) = value;
  }
  std::ostringstream ref;
  ref << "frame:d=" << frame.hilbert_dim() << ",order=" << to_string(decomposition.order);
  pd.basis_ref = ref.str();
  return pd;
}

ProjectedDensity evolve_projected(const ProjectedDensity& pd, const ComplexVector& energies, double t) {
  if (energies.size() != pd.coefficients.size()) {
    throw ValidationError("evolve_projected: energy count does not match coefficient count");
  }
  ProjectedDensity out = pd;
  for (Eigen::Index nu = 0; nu < energies.size(); ++nu) {
    out.coefficients(nu) *= std::exp(cplx(0.0, -t) * energies(nu));
  }
  return out;
}

ComplexMatrix reconstruct(const ProjectedDensity& pd, const LiouvilleFrame& frame) {
  return frame.operator_from(pd.coefficients);
}

ComplexMatrix evolve_exact(const ComplexMatrix& rho0, const SuperOperator& liouvillian, double t) {
  return ExactEvolution(liouvillian)(rho0, t);
}

ComplexMatrix ExactEvolution::operator()(const ComplexMatrix& rho0, double t) const {
  if (rho0.rows() != rho0.cols()) throw ValidationError("evolve_exact: density matrix not square");
  return unvec(propagator_.apply(t, vec(rho0)), rho0.rows(), rho0.cols());
}

}  // namespace subdyn
