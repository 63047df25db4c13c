#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "subdyn/linalg.hpp"
#include "subdyn/model.hpp"

using namespace subdyn;

namespace {

ComplexMatrix diag2(double a, double b) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

ComplexMatrix sigma_x() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}

double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("tensor of diagonal factors") {
  const ComplexMatrix t = tensor({diag2(1, 2), diag2(3, 5)});
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected.diagonal() << 3.0, 5.0, 6.0, 10.0;
  CHECK(max_abs(t - expected) == 0.0);
}

TEST_CASE("tensor matches loop Kronecker on random factors") {
  gen::Source src(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto r1 = 1 + static_cast<Eigen::Index>(src.index(3));
    const auto r2 = 1 + static_cast<Eigen::Index>(src.index(3));
    const auto r3 = 1 + static_cast<Eigen::Index>(src.index(2));
    const ComplexMatrix a = src.matrix(r1, r1), b = src.matrix(r2, r2), c = src.matrix(r3, r3);
    const ComplexMatrix expected = oracle::kron(oracle::kron(a, b), c);
    CHECK(max_abs(tensor({a, b, c}) - expected) <= 1e-13);
  }
  CHECK_THROWS_AS(tensor(std::vector<ComplexMatrix>{}), ValidationError);
}

TEST_CASE("tensor space digits round trip, first factor slowest") {
  const TensorSpace space({{"a", 2}, {"b", 3}, {"c", 2}});
  CHECK(space.total_dim() == 12);
  CHECK(space.flat_index({1, 0, 0}) == 6);
  CHECK(space.flat_index({0, 1, 1}) == 3);
  for (std::size_t k = 0; k < 12; ++k) CHECK(space.flat_index(space.digits(k)) == k);
  CHECK_THROWS_AS(space.flat_index({2, 0, 0}), ValidationError);
  CHECK_THROWS_AS(space.factor_position("d"), ValidationError);
  CHECK_THROWS_AS(TensorSpace({{"a", 2}, {"a", 2}}), ValidationError);
}

TEST_CASE("commutator superoperator of sigma_x") {
  const SuperOperator l = commutator_superop(sigma_x());
  const EigenSystem es = eig(l, true);
  std::vector<double> values;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) values.push_back(es.values(k).real());
  std::sort(values.begin(), values.end());
  CHECK(values[0] == doctest::Approx(-2.0));
  CHECK(std::abs(values[1]) < 1e-12);
  CHECK(std::abs(values[2]) < 1e-12);
  CHECK(values[3] == doctest::Approx(2.0));
}

TEST_CASE("commutator superoperator agrees with the loop oracle and with [H, rho]") {
  gen::Source src(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = 1 + static_cast<Eigen::Index>(src.index(5));
    const ComplexMatrix h = src.matrix(d, d);  // not necessarily Hermitian
    const ComplexMatrix rho = src.matrix(d, d);
    const SuperOperator l = commutator_superop(h);
    CHECK(max_abs(l - oracle::commutator(h)) <= 1e-13);
    CHECK(max_abs(unvec(l * vec(rho)) - (h * rho - rho * h)) <= 1e-12);
  }
}

TEST_CASE("vec stacks columns and unvec inverts it") {
  ComplexMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const ComplexVector v = vec(m);
  CHECK(v(1) == cplx(4.0));
  CHECK(v(2) == cplx(2.0));
  CHECK(max_abs(unvec(v, 2, 3) - m) == 0.0);
  gen::Source src(13);
  const ComplexMatrix sq = src.matrix(4, 4);
  CHECK(max_abs(unvec(vec(sq)) - sq) == 0.0);
  CHECK(max_abs(vec(sq) - oracle::vec(sq)) == 0.0);
  CHECK_THROWS_AS(unvec(ComplexVector::Zero(5)), ValidationError);
}

TEST_CASE("eig on a rank-one projector") {
  const ComplexMatrix p = ComplexMatrix::Constant(2, 2, 0.5);
  const EigenSystem es = eig(p, true);
  CHECK(std::abs(es.values(0)) < 1e-14);
  CHECK(es.values(1).real() == doctest::Approx(1.0));
  const ComplexVector r = es.right.col(1);
  CHECK(max_abs(r * r.adjoint() - p) < 1e-14);
}

TEST_CASE("eig biorthonormality and reconstruction for general matrices") {
  gen::Source src(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 2 + static_cast<Eigen::Index>(src.index(6));
    const ComplexMatrix m = src.matrix(n, n);
    const EigenSystem es = eig(m, false);
    CHECK(max_abs(es.left * es.right - ComplexMatrix::Identity(n, n)) <= 1e-9);
    CHECK(max_abs(es.right * es.values.asDiagonal() * es.left - m) <= 1e-9 * std::max(1.0, opnorm(m)));
  }
}

TEST_CASE("Hermitian eig matches the Jacobi oracle") {
  gen::Source src(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 1 + static_cast<Eigen::Index>(src.index(8));
    const ComplexMatrix h = src.hermitian(n);
    const EigenSystem es = eig(h, true);
    const Eigen::VectorXd expected = oracle::hermitian_eigenvalues(h);
    for (Eigen::Index k = 0; k < n; ++k) CHECK(std::abs(es.values(k) - expected(k)) <= 1e-10);
    CHECK(max_abs(es.left * es.right - ComplexMatrix::Identity(n, n)) <= 1e-12);
  }
}

TEST_CASE("eig rejects a defective matrix and a mislabeled non-Hermitian one") {
  ComplexMatrix jordan = ComplexMatrix::Zero(2, 2);
  jordan(0, 1) = 1.0;
  CHECK_THROWS_AS(eig(jordan, false), NumericalError);
  CHECK_THROWS_AS(eig(jordan, true), ValidationError);
}

TEST_CASE("spectral decomposition reconstructs random Hermitian 8x8") {
  gen::Source src(16);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix h = src.hermitian(8);
    ComplexMatrix sum = ComplexMatrix::Zero(8, 8);
    for (const auto& [value, v] : spectral_decomposition(h)) sum += value * v * v.adjoint();
    CHECK(max_abs(sum - h) <= 1e-10);
  }
}

TEST_CASE("expm_action matches the Taylor oracle") {
  gen::Source src(17);
  const ComplexMatrix m = src.hermitian(6);
  const ComplexVector v = src.vector(6);
  const ComplexVector expected = oracle::expm_taylor(cplx(0.0, -0.37) * m) * v;
  CHECK((expm_action(m, 0.37, v) - expected).cwiseAbs().maxCoeff() <= 1e-9);

  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix g = src.matrix(5, 5);
    const ComplexVector x = src.vector(5);
    const double t = src.uniform(0.0, 2.0);
    const ComplexVector ref = oracle::expm_taylor(cplx(0.0, -t) * g) * x;
    CHECK((expm_action(g, t, x) - ref).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, ref.norm()));
    const Propagator prop(g);
    CHECK((prop.apply(t, x) - ref).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("Propagator handles a defective generator") {
  ComplexMatrix jordan = ComplexMatrix::Zero(2, 2);
  jordan(0, 1) = 1.0;
  const Propagator prop(jordan);
  CHECK_FALSE(prop.spectral());
  ComplexVector v(2);
  v << 0.0, 1.0;
  const ComplexVector out = prop.apply(2.0, v);
  CHECK(std::abs(out(0) - cplx(0.0, -2.0)) < 1e-12);
  CHECK(std::abs(out(1) - 1.0) < 1e-12);
}

TEST_CASE("partial trace matches the loop oracle") {
  gen::Source src(18);
  const TensorSpace space({{"sys", 3}, {"env", 4}});
  const ComplexMatrix rho = src.density(12);
  CHECK(max_abs(partial_trace(rho, space, {"env"}) - oracle::partial_trace_last(rho, 3, 4)) <= 1e-14);

  // middle factor: move it last with a permutation and reuse the oracle
  const TensorSpace three({{"a", 2}, {"b", 3}, {"c", 2}});
  const ComplexMatrix big = src.density(12);
  ComplexMatrix perm = ComplexMatrix::Zero(12, 12);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 2; ++c)
        perm(static_cast<Eigen::Index>((a * 2 + c) * 3 + b), static_cast<Eigen::Index>(three.flat_index({a, b, c}))) = 1.0;
  const ComplexMatrix moved = perm * big * perm.transpose();
  CHECK(max_abs(partial_trace(big, three, {"b"}) - oracle::partial_trace_last(moved, 4, 3)) <= 1e-14);
  CHECK(std::abs(partial_trace(big, three, {"a", "b", "c"})(0, 0) - big.trace()) <= 1e-14);
}

TEST_CASE("norms and structure predicates") {
  gen::Source src(19);
  const ComplexMatrix m = src.matrix(5, 5);
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  CHECK(opnorm(m) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
  CHECK(hermiticity_defect(src.hermitian(4)) <= 1e-15);
  CHECK(hermiticity_defect(m) > 0.1);
  CHECK(is_diagonal(diag2(1, 2)));
  CHECK_FALSE(is_diagonal(sigma_x()));
  CHECK(is_diagonal(1e-13 * sigma_x(), 1e-12));
}

TEST_CASE("fix_phases gives unit columns with a positive largest entry") {
  gen::Source src(20);
  const ComplexMatrix fixed = fix_phases(src.matrix(6, 6));
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(fixed.col(j).norm() == doctest::Approx(1.0));
    Eigen::Index k = 0;
    fixed.col(j).cwiseAbs().maxCoeff(&k);
    CHECK(std::abs(fixed(k, j).imag()) <= 1e-15);
    CHECK(fixed(k, j).real() > 0.0);
  }
}

TEST_CASE("assign_max_weight is optimal against brute force") {
  gen::Source src(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 1 + src.index(6);
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = src.uniform();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto got = assign_max_weight(w);
    double s = 0.0;
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(got[i] < n);
      CHECK_FALSE(used[got[i]]);
      used[got[i]] = true;
      s += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(got[i]));
    }
    CHECK(s == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("cluster_values groups transitively") {
  ComplexVector v(5);
  v << 0.0, 1.0, 0.5e-8, 1e-8, 3.0;
  const auto groups = cluster_values(v, 0.6e-8);
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  CHECK(total == 5);
  CHECK(groups.size() == 3);
}

TEST_CASE("sqrtm_psd squares back") {
  gen::Source src(22);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix rho = src.density(5);
    const ComplexMatrix s = sqrtm_psd(rho);
    CHECK(max_abs(s * s - rho) <= 1e-12);
    CHECK(hermiticity_defect(s) <= 1e-14);
  }
  CHECK_THROWS_AS(sqrtm_psd(-ComplexMatrix::Identity(2, 2)), ValidationError);
}
