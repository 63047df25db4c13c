#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "frozen_values.hpp"
#include "oracles.hpp"

// The frozen header must be reproducible from the oracles, and the oracles must
// agree with closed forms where those exist.

namespace {

using oracle::cplx;
using oracle::Mat;

Eigen::VectorXd as_vector(const double* data, Eigen::Index n) { return Eigen::Map<const Eigen::VectorXd>(data, n); }

const oracle::HandModel& general() {
  static const auto model = oracle::general_model(1.0, 1.0, 1.0, 0.2, 0.731, 0.5, 1, 1);
  return model;
}

}  // namespace

TEST_CASE("general-model free spectrum is reproducible") {
  const Eigen::VectorXd free = as_vector(frozen::kGeneralFreeSpectrum, 16);
  CHECK((oracle::hermitian_eigenvalues(general().h0) - free).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::abs(free.sum() - general().h0.trace().real()) <= 1e-12);
  CHECK(std::abs(free.squaredNorm() - (general().h0 * general().h0).trace().real()) <= 1e-12);
}

TEST_CASE("general-model coupled spectrum and shifts are reproducible") {
  const Eigen::VectorXd free = as_vector(frozen::kGeneralFreeSpectrum, 16);
  const Eigen::VectorXd total = oracle::hermitian_eigenvalues(general().h0 + 0.05 * general().h1);
  CHECK((total - as_vector(frozen::kGeneralTotalSpectrum, 16)).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(std::abs(total.sum() - free.sum() - 0.05 * general().h1.trace().real()) <= 1e-12);
  double pair = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) pair = std::max(pair, std::abs((total(i) - total(j)) - (free(i) - free(j))));
  CHECK(std::abs(pair - frozen::kGeneralMaxShift) <= 1e-14);
  CHECK(std::abs((total - free).cwiseAbs().maxCoeff() - frozen::kGeneralHamiltonianShift) <= 1e-14);
  CHECK(frozen::kGeneralMaxShift <= 2.0 * frozen::kGeneralHamiltonianShift + 1e-15);
}

TEST_CASE("decoherence figures are converged in the integrator step") {
  const Mat h = general().h0 + 0.1 * general().h1;
  const Eigen::Index d = h.rows();
  const oracle::Vec psi = oracle::Vec::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Mat rho_int = psi * psi.adjoint();
  Mat rho_free = rho_int;
  double off = 0.0, pop = 0.0;
  for (int k = 0; k <= 100; ++k) {
    if (k > 0) {
      rho_int = oracle::rk4_evolve(h, rho_int, 0.1, 400);
      rho_free = oracle::rk4_evolve(general().h0, rho_free, 0.1, 400);
    }
    const Mat diff = oracle::partial_trace_last(rho_int, d / 2, 2) - oracle::partial_trace_last(rho_free, d / 2, 2);
    for (Eigen::Index c = 0; c < diff.cols(); ++c)
      for (Eigen::Index r = 0; r < diff.rows(); ++r) {
        double& worst = r == c ? pop : off;
        worst = std::max(worst, std::abs(diff(r, c)));
      }
  }
  CHECK(std::abs(off - frozen::kGeneralDecoherenceOffdiag) <= 1e-9);
  CHECK(std::abs(pop - frozen::kGeneralDecoherencePopulation) <= 1e-9);
}

TEST_CASE("toy levels: perturbation series against exact diagonalization") {
  Eigen::VectorXd eps(3);
  eps << 0.0, 1.3, 3.1;
  Mat v(3, 3);
  v << 0.2, cplx(0.5, 0.1), 0.3, cplx(0.5, -0.1), -0.1, cplx(0.4, -0.2), 0.3, cplx(0.4, 0.2), 0.15;
  const double lambda = 0.01;
  const Eigen::VectorXcd rs = oracle::rs_levels(eps, v, lambda);
  Mat h = lambda * v;
  h.diagonal() += eps.cast<cplx>();
  const Eigen::VectorXd exact = oracle::hermitian_eigenvalues(h);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(rs(k).real() - frozen::kToyRsLevels[k]) <= 1e-15);
    CHECK(std::abs(exact(k) - frozen::kToyExactLevels[k]) <= 1e-14);
    // third-order remainder
    CHECK(std::abs(frozen::kToyRsLevels[k] - frozen::kToyExactLevels[k]) <= 10.0 * lambda * lambda * lambda);
  }
  // ground level by hand: eps0 + lambda v00 + lambda^2 sum |v0k|^2 / (eps0 - epsk)
  const double hand = 0.0 + lambda * 0.2 + lambda * lambda * (std::norm(v(0, 1)) / -1.3 + std::norm(v(0, 2)) / -3.1);
  CHECK(std::abs(frozen::kToyRsLevels[0] - hand) <= 1e-15);
}

TEST_CASE("two-level swap timings follow from the closed-form gap") {
  const double v = 0.3, lambda = 0.1;
  Mat h(2, 2);
  h << 0.0, lambda * v, lambda * v, 1.0;
  const Eigen::VectorXd e = oracle::hermitian_eigenvalues(h);
  const double gap = e(1) - e(0);
  CHECK(std::abs(frozen::kTwoLevelDeltaTExact - (1.0 / gap - 1.0)) <= 1e-15);
  Eigen::VectorXd eps(2);
  eps << 0.0, 1.0;
  Mat v1(2, 2);
  v1 << 0.0, v, v, 0.0;
  const Eigen::VectorXcd rs = oracle::rs_levels(eps, v1, lambda);
  const double gap2 = (rs(1) - rs(0)).real();
  CHECK(std::abs(frozen::kTwoLevelDeltaT2 - (1.0 / gap2 - 1.0)) <= 1e-15);
}

TEST_CASE("block eigenvalues: closed form against Jacobi") {
  const double inputs[3][3] = {{1.0, 1.0, 1.0}, {0.0, 0.0, 1.0}, {0.3, -0.7, 0.45}};
  for (int b = 0; b < 3; ++b) {
    const auto [a, bb, g] = inputs[b];
    Mat m(3, 3);
    m << a, g, g, g, bb, 0.0, g, 0.0, bb;
    const Eigen::VectorXd jac = oracle::hermitian_eigenvalues(m);
    const std::vector<double> closed = oracle::block_values(a, bb, g);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(jac(k) - closed[static_cast<std::size_t>(k)]) <= 1e-13);
      CHECK(std::abs(jac(k) - frozen::kBlockValues[3 * b + k]) <= 1e-15);
    }
  }
  CHECK(std::abs(frozen::kBlockValues[2] - (1.0 + std::sqrt(2.0))) <= 1e-14);
}
