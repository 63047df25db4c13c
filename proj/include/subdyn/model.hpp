#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "subdyn/linalg.hpp"

namespace subdyn {

enum class ModelKind { Diagonal, Triangular, General };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

struct BathMode {
  double omega_k = 1.0;
  double g_k = 0.0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Diagonal;
  double omega0 = 1.0;
  double omega = 1.0;
  std::vector<double> omega_j;  // general model: atom frequencies, two entries
  double g = 0.0;
  double lambda = 1.0;
  std::vector<BathMode> bath;
  std::size_t fock_cutoff = 1;
  std::size_t bath_cutoff = 1;
  bool hermitian_variant = false;  // triangular model: add the adjoint of the lowering term
};

struct ModelOperators {
  TensorSpace space;
  ComplexMatrix H0;
  ComplexMatrix H1;
  double lambda = 1.0;
  std::vector<std::string> basis_labels;
  bool h1_hermitian = true;
  std::vector<std::string> environment;  // factor labels traced out for reduced states

  ComplexMatrix total() const { return H0 + lambda * H1; }
  std::size_t dim() const { return static_cast<std::size_t>(H0.rows()); }
};

constexpr std::size_t kDefaultDimensionCap = 64;

std::size_t model_dimension(const ModelSpec& spec);
void validate(const ModelSpec& spec, std::size_t dimension_cap = kDefaultDimensionCap);

ModelOperators build_model(const ModelSpec& spec, std::size_t dimension_cap = kDefaultDimensionCap);
ModelOperators build_diagonal_model(const ModelSpec& spec);
ModelOperators build_triangular_model(const ModelSpec& spec);
ModelOperators build_general_model(const ModelSpec& spec, std::size_t dimension_cap = kDefaultDimensionCap);

// Full interaction matrix of the triangular model including its diagonal
// (-1)^j g n part, on the basis |j, n>, j in {1, 2}, n <= cutoff.
ComplexMatrix triangular_coupling_elements(double g, std::size_t fock_cutoff);

// Flat index of |j, n> (j = 1, 2) in the atom-field models.
std::size_t atom_field_index(int j, std::size_t n, std::size_t fock_cutoff);

// Flat index of |s1, s2, n, {n_k}> in the general model; s = +1 or -1.
std::size_t general_index(const ModelSpec& spec, int s1, int s2, std::size_t n,
                          const std::vector<std::size_t>& bath_occupation);

struct BlockEigenProblem {
  double a = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  ComplexMatrix matrix;
  std::array<double, 3> eigenvalues{};       // ascending, closed form
  std::array<ComplexVector, 3> eigenvectors;  // orthonormal, matching eigenvalues
};

BlockEigenProblem block_eigensolve(double a, double b, double gamma);

// H0 compressed to {|++,n,k>, |-+,n+1,k>, |+-,n+1,k>}.
ComplexMatrix extract_block(const ModelOperators& ops, const ModelSpec& spec, std::size_t n,
                            const std::vector<std::size_t>& bath_occupation);

std::vector<std::pair<double, ComplexVector>> spectral_decomposition(const ComplexMatrix& h);

}  // namespace subdyn
