#include "subdyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subdyn {

namespace {

ComplexMatrix annihilation(std::size_t cutoff) {
  const auto n = static_cast<Eigen::Index>(cutoff + 1);
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

ComplexMatrix embed(const ComplexMatrix& op, std::size_t position, const TensorSpace& space) {
  std::vector<ComplexMatrix> ops;
  const auto& factors = space.factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k == position) {
      ops.push_back(op);
    } else {
      const auto d = static_cast<Eigen::Index>(factors[k].dim);
      ops.push_back(ComplexMatrix::Identity(d, d));
    }
  }
  return tensor(ops);
}

void require_kind(const ModelSpec& spec, ModelKind kind, const char* fn) {
  if (spec.kind != kind) {
    throw ValidationError(std::string(fn) + ": model kind is " + to_string(spec.kind) +
                          ", expected " + to_string(kind));
  }
}

TensorSpace atom_field_space(const ModelSpec& spec) {
  return TensorSpace({{"atom", 2}, {"field", spec.fock_cutoff + 1}});
}

std::vector<std::string> atom_field_labels(std::size_t cutoff) {
  std::vector<std::string> labels;
  for (int j = 1; j <= 2; ++j) {
    for (std::size_t n = 0; n <= cutoff; ++n) {
      labels.push_back("|" + std::to_string(j) + "," + std::to_string(n) + ">");
    }
  }
  return labels;
}

double sigma_z_sign(int j) { return j == 2 ? 1.0 : -1.0; }

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Diagonal: return "diagonal";
    case ModelKind::Triangular: return "triangular";
    case ModelKind::General: return "general";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& text) {
  if (text == "diagonal") return ModelKind::Diagonal;
  if (text == "triangular") return ModelKind::Triangular;
  if (text == "general") return ModelKind::General;
  throw ValidationError("unknown model kind '" + text + "' (expected diagonal, triangular or general)");
}

std::size_t model_dimension(const ModelSpec& spec) {
  std::size_t dim = (spec.kind == ModelKind::General ? 4 : 2) * (spec.fock_cutoff + 1);
  if (spec.kind == ModelKind::General) {
    for (std::size_t k = 0; k < spec.bath.size(); ++k) dim *= spec.bath_cutoff + 1;
  }
  return dim;
}

void validate(const ModelSpec& spec, std::size_t dimension_cap) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (spec.fock_cutoff < 1) throw ValidationError("model: fock_cutoff must be >= 1");
  if (spec.bath_cutoff < 1) throw ValidationError("model: bath_cutoff must be >= 1");
  bool ok = finite(spec.omega0) && finite(spec.omega) && finite(spec.g) && finite(spec.lambda);
  for (double w : spec.omega_j) ok = ok && finite(w);
  for (const auto& mode : spec.bath) ok = ok && finite(mode.omega_k) && finite(mode.g_k);
  if (!ok) throw ValidationError("model: frequencies and couplings must be finite");
  if (spec.kind != ModelKind::General) {
    if (!spec.bath.empty()) {
      throw ValidationError("model: " + to_string(spec.kind) +
                            " model takes its single field mode as environment; bath must be empty");
    }
    if (!spec.omega_j.empty()) throw ValidationError("model: omega_j applies to the general model only");
  } else {
    if (spec.bath.empty()) throw ValidationError("model: general model needs at least one bath mode");
    if (!spec.omega_j.empty() && spec.omega_j.size() != 2) {
      throw ValidationError("model: omega_j must list exactly two atom frequencies");
    }
  }
  if (spec.hermitian_variant && spec.kind != ModelKind::Triangular) {
    throw ValidationError("model: hermitian_variant applies to the triangular model only");
  }
  const std::size_t dim = model_dimension(spec);
  if (dim > dimension_cap) {
    std::ostringstream os;
    os << "model: Hilbert dimension " << dim << " exceeds the cap of " << dimension_cap
       << " (Liouville dimension " << dim * dim << "); pass --allow-large to override";
    throw ValidationError(os.str());
  }
}

ModelOperators build_model(const ModelSpec& spec, std::size_t dimension_cap) {
  validate(spec, dimension_cap);
  switch (spec.kind) {
    case ModelKind::Diagonal: return build_diagonal_model(spec);
    case ModelKind::Triangular: return build_triangular_model(spec);
    case ModelKind::General: return build_general_model(spec, dimension_cap);
  }
  throw ValidationError("build_model: unknown kind");
}

std::size_t atom_field_index(int j, std::size_t n, std::size_t fock_cutoff) {
  if ((j != 1 && j != 2) || n > fock_cutoff) throw ValidationError("atom_field_index: out of range");
  return static_cast<std::size_t>(j - 1) * (fock_cutoff + 1) + n;
}

ModelOperators build_diagonal_model(const ModelSpec& spec) {
  require_kind(spec, ModelKind::Diagonal, "build_diagonal_model");
  ModelOperators ops;
  ops.space = atom_field_space(spec);
  const auto d = static_cast<Eigen::Index>(ops.space.total_dim());
  ops.H0 = ComplexMatrix::Zero(d, d);
  ops.H1 = ComplexMatrix::Zero(d, d);
  for (int j = 1; j <= 2; ++j) {
    for (std::size_t n = 0; n <= spec.fock_cutoff; ++n) {
      const auto i = static_cast<Eigen::Index>(atom_field_index(j, n, spec.fock_cutoff));
      ops.H0(i, i) = sigma_z_sign(j) * spec.omega0 + static_cast<double>(n) * spec.omega;
      if (j == 2) ops.H1(i, i) = spec.g * static_cast<double>(n);
    }
  }
  ops.lambda = spec.lambda;
  ops.basis_labels = atom_field_labels(spec.fock_cutoff);
  ops.environment = {"field"};
  return ops;
}

ComplexMatrix triangular_coupling_elements(double g, std::size_t fock_cutoff) {
  const auto d = static_cast<Eigen::Index>(2 * (fock_cutoff + 1));
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (int j = 1; j <= 2; ++j) {
    for (std::size_t n = 0; n <= fock_cutoff; ++n) {
      const auto col = static_cast<Eigen::Index>(atom_field_index(j, n, fock_cutoff));
      h(col, col) = sigma_z_sign(j) * g * static_cast<double>(n);
      if (j == 2 && n >= 1) {
        const auto row = static_cast<Eigen::Index>(atom_field_index(1, n - 1, fock_cutoff));
        h(row, col) = g * std::sqrt(static_cast<double>(n - 1));
      }
    }
  }
  return h;
}

ModelOperators build_triangular_model(const ModelSpec& spec) {
  require_kind(spec, ModelKind::Triangular, "build_triangular_model");
  ModelOperators ops;
  ops.space = atom_field_space(spec);
  const auto d = static_cast<Eigen::Index>(ops.space.total_dim());
  const ComplexMatrix coupling = triangular_coupling_elements(spec.g, spec.fock_cutoff);
  ops.H0 = ComplexMatrix::Zero(d, d);
  for (int j = 1; j <= 2; ++j) {
    for (std::size_t n = 0; n <= spec.fock_cutoff; ++n) {
      const auto i = static_cast<Eigen::Index>(atom_field_index(j, n, spec.fock_cutoff));
      ops.H0(i, i) = sigma_z_sign(j) * spec.omega0 + static_cast<double>(n) * spec.omega;
    }
  }
  // the diagonal (-1)^j g n part is part of the free dynamics; H1 keeps the lowering term
  ops.H0.diagonal() += coupling.diagonal();
  ops.H1 = coupling;
  ops.H1.diagonal().setZero();
  if (spec.hermitian_variant) ops.H1 += ComplexMatrix(ops.H1.adjoint());
  ops.h1_hermitian = spec.hermitian_variant;
  ops.lambda = spec.lambda;
  ops.basis_labels = atom_field_labels(spec.fock_cutoff);
  ops.environment = {"field"};
  return ops;
}

std::size_t general_index(const ModelSpec& spec, int s1, int s2, std::size_t n,
                          const std::vector<std::size_t>& bath_occupation) {
  if (bath_occupation.size() != spec.bath.size()) {
    throw ValidationError("general_index: bath occupation count does not match bath modes");
  }
  auto level = [](int s) -> std::size_t {
    if (s != 1 && s != -1) throw ValidationError("general_index: atom state must be +1 or -1");
    return s > 0 ? 1 : 0;
  };
  if (n > spec.fock_cutoff) throw ValidationError("general_index: field occupation above cutoff");
  std::size_t flat = level(s1) * 2 + level(s2);
  flat = flat * (spec.fock_cutoff + 1) + n;
  for (std::size_t occ : bath_occupation) {
    if (occ > spec.bath_cutoff) throw ValidationError("general_index: bath occupation above cutoff");
    flat = flat * (spec.bath_cutoff + 1) + occ;
  }
  return flat;
}

ModelOperators build_general_model(const ModelSpec& spec, std::size_t dimension_cap) {
  require_kind(spec, ModelKind::General, "build_general_model");
  validate(spec, dimension_cap);
  std::vector<TensorFactor> factors = {{"atom1", 2}, {"atom2", 2}, {"field", spec.fock_cutoff + 1}};
  for (std::size_t k = 0; k < spec.bath.size(); ++k) {
    factors.push_back({"bath" + std::to_string(k + 1), spec.bath_cutoff + 1});
  }
  ModelOperators ops;
  ops.space = TensorSpace(std::move(factors));
  const auto d = static_cast<Eigen::Index>(ops.space.total_dim());

  // atom levels ordered (-, +); sigma_z = (|+><+| - |-><-|)/2
  ComplexMatrix sz = ComplexMatrix::Zero(2, 2);
  sz(0, 0) = -0.5;
  sz(1, 1) = 0.5;
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  const ComplexMatrix raise = lower.transpose();
  const ComplexMatrix a = annihilation(spec.fock_cutoff);
  const ComplexMatrix a_dag = a.adjoint();

  const std::array<double, 2> omega_j =
      spec.omega_j.size() == 2 ? std::array<double, 2>{spec.omega_j[0], spec.omega_j[1]}
                               : std::array<double, 2>{spec.omega0, spec.omega0};

  ops.H0 = ComplexMatrix::Zero(d, d);
  ops.H1 = ComplexMatrix::Zero(d, d);
  const ComplexMatrix field_up = embed(a_dag, 2, ops.space);
  const ComplexMatrix field_down = embed(a, 2, ops.space);
  for (std::size_t j = 0; j < 2; ++j) {
    ops.H0 += omega_j[j] * embed(sz, j, ops.space);
    ops.H0 += spec.g * (field_up * embed(lower, j, ops.space) + field_down * embed(raise, j, ops.space));
  }
  ops.H0 += spec.omega * embed(a_dag * a, 2, ops.space);

  const ComplexMatrix b = annihilation(spec.bath_cutoff);
  const ComplexMatrix atom_flip = embed(lower + raise, 0, ops.space) + embed(lower + raise, 1, ops.space);
  for (std::size_t k = 0; k < spec.bath.size(); ++k) {
    ops.H0 += spec.bath[k].omega_k * embed(b.adjoint() * b, 3 + k, ops.space);
    ops.H1 += spec.bath[k].g_k * embed(b + b.adjoint(), 3 + k, ops.space) * atom_flip;
  }

  ops.lambda = spec.lambda;
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto digits = ops.space.digits(static_cast<std::size_t>(i));
    std::string label = "|";
    label += digits[0] == 1 ? "+" : "-";
    label += ",";
    label += digits[1] == 1 ? "+" : "-";
    label += "," + std::to_string(digits[2]);
    for (std::size_t k = 3; k < digits.size(); ++k) label += "," + std::to_string(digits[k]);
    label += ">";
    ops.basis_labels.push_back(std::move(label));
  }
  for (std::size_t k = 0; k < spec.bath.size(); ++k) ops.environment.push_back("bath" + std::to_string(k + 1));
  return ops;
}

ComplexMatrix extract_block(const ModelOperators& ops, const ModelSpec& spec, std::size_t n,
                            const std::vector<std::size_t>& bath_occupation) {
  if (spec.kind != ModelKind::General) throw ValidationError("extract_block: general model only");
  if (n + 1 > spec.fock_cutoff) throw ValidationError("extract_block: n + 1 exceeds the Fock cutoff");
  const std::array<std::size_t, 3> idx = {
      general_index(spec, +1, +1, n, bath_occupation),
      general_index(spec, -1, +1, n + 1, bath_occupation),
      general_index(spec, +1, -1, n + 1, bath_occupation),
  };
  ComplexMatrix block(3, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          ops.H0(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
    }
  }
  return block;
}

BlockEigenProblem block_eigensolve(double a, double b, double gamma) {
  BlockEigenProblem bp;
  bp.a = a;
  bp.b = b;
  bp.gamma = gamma;
  bp.matrix = ComplexMatrix::Zero(3, 3);
  bp.matrix(0, 0) = a;
  bp.matrix(1, 1) = b;
  bp.matrix(2, 2) = b;
  bp.matrix(0, 1) = bp.matrix(1, 0) = gamma;
  bp.matrix(0, 2) = bp.matrix(2, 0) = gamma;

  const double root = 0.5 * std::sqrt((a - b) * (a - b) + 8.0 * gamma * gamma);
  std::vector<std::pair<double, ComplexVector>> pairs;

  // antisymmetric combination decouples from the first basis state
  ComplexVector dark = ComplexVector::Zero(3);
  dark(1) = -1.0 / std::sqrt(2.0);
  dark(2) = 1.0 / std::sqrt(2.0);
  pairs.emplace_back(b, dark);

  // the symmetric pair {e1, (e2 + e3)/sqrt2} carries [[a, sqrt2 gamma], [sqrt2 gamma, b]]
  ComplexMatrix reduced(2, 2);
  reduced << a, std::sqrt(2.0) * gamma, std::sqrt(2.0) * gamma, b;
  const EigenSystem es = eig(reduced, true);
  const std::array<double, 2> closed = {0.5 * (a + b) - root, 0.5 * (a + b) + root};
  for (Eigen::Index k = 0; k < 2; ++k) {
    ComplexVector v = ComplexVector::Zero(3);
    v(0) = es.right(0, k);
    v(1) = v(2) = es.right(1, k) / std::sqrt(2.0);
    pairs.emplace_back(closed[static_cast<std::size_t>(k)], v);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t k = 0; k < 3; ++k) {
    bp.eigenvalues[k] = pairs[k].first;
    bp.eigenvectors[k] = pairs[k].second;
  }
  return bp;
}

std::vector<std::pair<double, ComplexVector>> spectral_decomposition(const ComplexMatrix& h) {
  if (hermiticity_defect(h) > 1e-12 * std::max(1.0, opnorm(h))) {
    throw ValidationError("spectral_decomposition: input is not Hermitian");
  }
  const EigenSystem es = eig(h, true);
  std::vector<std::pair<double, ComplexVector>> out;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) out.emplace_back(es.values(k).real(), es.right.col(k));
  return out;
}

}  // namespace subdyn
