// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "subdyn/df_analyzer.hpp"
#include "subdyn/gates.hpp"
#include "subdyn/runner.hpp"
#include "subdyn/turing.hpp"

using namespace subdyn;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("AC%-2d %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string config_path(const std::string& name) { return std::string(SUBDYN_SOURCE_DIR) + "/configs/" + name + ".json"; }

double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ComplexMatrix random_density(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(n);
  ComplexMatrix g(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) g(r, c) = cplx(normal(rng), normal(rng));
  const ComplexMatrix rho = g * g.adjoint();
  return rho / rho.trace();
}

ComplexMatrix random_invertible(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ComplexMatrix m = ComplexMatrix::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) m(r, c) += 0.4 * cplx(normal(rng), normal(rng));
  return m;
}

// every decisive evidence value must sit on the side of its threshold that its verdict claims
bool evidence_backs(const DFReport& r) {
  for (const auto& e : r.evidence) {
    if (!e.decisive) continue;
    const bool crossed = e.value > e.threshold;
    if (e.cell == "evolution_proj") {
      if (e.name == "theta_eigenvector_deficit" && crossed != (r.evolution_proj == Verdict::D)) return false;
      if (e.name == "energy_shift" && r.evolution_proj != Verdict::D && crossed != (r.evolution_proj == Verdict::PE))
        return false;
      continue;
    }
    Verdict cell = Verdict::DF;
    if (e.cell == "stationary_total") cell = r.stationary_total;
    if (e.cell == "evolution_total") cell = r.evolution_total;
    if (e.cell == "stationary_proj") cell = r.stationary_proj;
    if (crossed != (cell != Verdict::DF)) return false;
  }
  return true;
}

std::string row_text(const DFReport& r) {
  return "(" + to_string(r.stationary_total) + ", " + to_string(r.evolution_total) + " | " +
         to_string(r.stationary_proj) + ", " + to_string(r.evolution_proj) + ")";
}

void ac1() {
  const auto start = Clock::now();
  struct Row {
    const char* config;
    const char* label;
    Verdict st, et, sp, ep;
  };
  const Row rows[] = {{"diagonal", "Diagonal", Verdict::DF, Verdict::DF, Verdict::DF, Verdict::PE},
                      {"triangular", "Triangular", Verdict::DF, Verdict::DF, Verdict::DF, Verdict::DF},
                      {"general", "Diagonal-Theta", Verdict::D, Verdict::D, Verdict::DF, Verdict::PE}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const ScenarioConfig cfg = load_config_file(config_path(row.config));
    const DFReport r =
        classify(*cfg.model, cfg.order, time_grid(cfg.t_grid.start, cfg.t_grid.end, cfg.t_grid.steps), cfg.perturbation());
    const bool match = r.stationary_total == row.st && r.evolution_total == row.et && r.stationary_proj == row.sp &&
                       r.evolution_proj == row.ep;
    const bool backed = evidence_backs(r);
    ok = ok && match && backed;
    detail += std::string(row.label) + " " + row_text(r) + (backed ? "" : " [evidence does not back verdict]") + "; ";
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 30.0;
  report(1, ok, detail + fmt("runtime %.2f s (limit 30 s)", elapsed));
}

struct GeneralInstance {
  double lambda;
  LiouvilleFrame frame;
  SubdynDecomposition exact;
  ComplexMatrix total;
};

std::vector<GeneralInstance> general_instances() {
  std::vector<GeneralInstance> out;
  const ScenarioConfig cfg = load_config_file(config_path("general"));
  for (double lambda : {cfg.model->lambda, 0.1}) {
    ModelSpec spec = *cfg.model;
    spec.lambda = lambda;
    const ModelOperators ops = build_model(spec);
    LiouvilleFrame frame(ops);
    SubdynDecomposition exact = decompose(frame, Order::Exact);
    out.push_back({lambda, std::move(frame), std::move(exact), ops.total()});
  }
  return out;
}

void ac2_ac3() {
  const auto start = Clock::now();
  const auto instances = general_instances();
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> when(0.0, 10.0);
  double worst_kinetic = 0.0, worst_similarity = 0.0;
  std::size_t dim = 0;
  for (const auto& inst : instances) {
    dim = std::max(dim, inst.frame.hilbert_dim());
    const ExactEvolution evolution(commutator_superop(inst.total));
    for (int sample = 0; sample < 20; ++sample) {
      const ComplexMatrix rho0 = random_density(inst.frame.hilbert_dim(), rng);
      const double t = when(rng);
      const ProjectedDensity direct = project_density(evolution(rho0, t), inst.frame, inst.exact);
      const ProjectedDensity kinetic =
          evolve_projected(project_density(rho0, inst.frame, inst.exact), inst.exact.energies, t);
      worst_kinetic =
          std::max(worst_kinetic, opnorm(inst.frame.operator_from(direct.coefficients - kinetic.coefficients)));
    }
    const SuperOperator l = inst.frame.liouvillian();
    const SuperOperator omega = similarity_operator(inst.exact);
    const ThetaResult th = theta(inst.frame, inst.exact);
    worst_similarity = std::max(worst_similarity, opnorm(l * omega - omega * th.theta) / opnorm(l));
  }
  const double elapsed = seconds_since(start);
  report(2, worst_kinetic <= 1e-6 && elapsed < 60.0 && dim <= 16,
         fmt("max operator-norm kinetic residual %.3e (tol 1e-6) over 2 x 20 samples, lambda in {%.2g, %.2g}, dim %.0f",
             worst_kinetic, instances[0].lambda, instances[1].lambda, static_cast<double>(dim)) +
             fmt("; runtime %.2f s (limit 60 s)", elapsed));
  report(3, worst_similarity <= 1e-8, fmt("max ||L Omega - Omega Theta|| / ||L|| = %.3e (tol 1e-8)", worst_similarity));
}

void ac4() {
  double worst = 0.0;
  std::string detail;
  for (const char* name : {"diagonal", "triangular", "general"}) {
    const ScenarioConfig cfg = load_config_file(config_path(name));
    const ModelOperators ops = build_model(*cfg.model);
    const LiouvilleFrame frame(ops);
    const SubdynDecomposition dec = decompose(frame, cfg.order);
    const auto times = time_grid(0.0, 10.0, 101);
    const FidelityTrace trace = projected_fidelity(frame, dec, probe_weights(ops.dim()), times);
    double dev = trace.values.size() == 101 ? 0.0 : INFINITY;
    for (double f : trace.values) dev = std::max(dev, std::abs(f - 1.0));
    worst = std::max(worst, dev);
    detail += std::string(name) + fmt(" %.2e; ", dev);
  }
  report(4, worst <= 1e-9, "max |F - 1| on 101 points: " + detail + "tol 1e-9");
}

struct Toy {
  const char* name;
  ComplexMatrix h0;
  ComplexMatrix h1;
};

std::vector<Toy> toys() {
  std::vector<Toy> out;
  ComplexMatrix h0 = ComplexMatrix::Zero(3, 3);
  h0.diagonal() << 0.0, 1.3, 3.1;
  ComplexMatrix v(3, 3);
  v << 0.2, cplx(0.5, 0.1), 0.3, cplx(0.5, -0.1), -0.1, cplx(0.4, -0.2), 0.3, cplx(0.4, 0.2), 0.15;
  out.push_back({"3-level", h0, v});

  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  ComplexMatrix g0 = ComplexMatrix::Zero(4, 4);
  g0.diagonal() << -0.4, 0.9, 2.3, 4.6;
  ComplexMatrix g(4, 4);
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index r = 0; r < 4; ++r) g(r, c) = cplx(normal(rng), normal(rng));
  out.push_back({"4-level", g0, 0.5 * (g + g.adjoint())});
  return out;
}

void ac5() {
  const double lambdas[] = {1e-2, 5e-3, 2.5e-3};
  bool ok = true;
  std::string detail;
  for (const auto& toy : toys()) {
    double c_err[3], e_err[3];
    for (int k = 0; k < 3; ++k) {
      const LiouvilleFrame frame(toy.h0, toy.h1, lambdas[k]);
      const SubdynDecomposition exact = decompose(frame, Order::Exact);
      const SubdynDecomposition first = decompose(frame, Order::First);
      c_err[k] = opnorm(exact.creation - first.creation);
      e_err[k] = (energies_second_order(frame) - exact.energies).cwiseAbs().maxCoeff();
    }
    detail += std::string(toy.name) + ":";
    for (int k = 0; k < 2; ++k) {
      const double rc = c_err[k] / c_err[k + 1], re = e_err[k] / e_err[k + 1];
      ok = ok && rc >= 3.5 && rc <= 4.5 && re >= 6.0 && re <= 10.0;
      detail += fmt(" C ratio %.3f, E ratio %.3f;", rc, re);
    }
    detail += " ";
  }
  report(5, ok, detail + "bands [3.5, 4.5] and [6, 10]");
}

void ac6() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  double worst_value = 0.0, worst_vector = 0.0;
  ComplexVector target(3);
  target << 0.0, -1.0, 1.0;
  target /= std::sqrt(2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = coef(rng), b = coef(rng), gamma = coef(rng);
    const BlockEigenProblem block = block_eigensolve(a, b, gamma);
    const EigenSystem solved = eig(block.matrix, true);
    std::vector<double> numeric;
    for (Eigen::Index k = 0; k < 3; ++k) numeric.push_back(solved.values(k).real());
    std::sort(numeric.begin(), numeric.end());
    for (std::size_t k = 0; k < 3; ++k) worst_value = std::max(worst_value, std::abs(numeric[k] - block.eigenvalues[k]));
    // numerical eigenvector of the eigenvalue closest to b
    Eigen::Index at = 0;
    for (Eigen::Index k = 1; k < 3; ++k)
      if (std::abs(solved.values(k).real() - b) < std::abs(solved.values(at).real() - b)) at = k;
    const ComplexVector vec = solved.right.col(at).normalized();
    worst_vector = std::max(worst_vector, 1.0 - std::abs(target.dot(vec)));
  }
  report(6, worst_value <= 1e-10 && worst_vector <= 1e-10,
         fmt("100 random (a, b, gamma): max eigenvalue mismatch %.3e (tol 1e-10), "
             "b-eigenvector 1 - |<(0,-1,1)/sqrt2|v>| max %.3e",
             worst_value, worst_vector));
}

double phase_mismatch(const ComplexVector& e0, const ComplexVector& e, double t_sw, double dt) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < e0.size(); ++k) {
    const double phase = (e(k) * (t_sw + dt) - e0(k) * t_sw).real();
    worst = std::max(worst, std::abs(std::remainder(phase, 2.0 * std::numbers::pi)));
  }
  return worst;
}

void ac7() {
  double worst_residual = 0.0, worst_phase = 0.0;
  int cases = 0;
  auto check = [&](const ComplexVector& e0, const ComplexVector& e, double t_sw, const SwapCalibration& cal) {
    worst_residual = std::max(worst_residual, opnorm(ideal_swap(e0, t_sw) - nonideal_swap(e, t_sw + cal.delta_t)));
    worst_phase = std::max(worst_phase, phase_mismatch(e0, e, t_sw, cal.delta_t));
    ++cases;
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    ComplexVector e0(n);
    for (Eigen::Index k = 0; k < n; ++k) e0(k) = 3.0 * uni(rng);
    const double s = 0.3 * uni(rng), t_sw = 2.0 + uni(rng);
    const ComplexVector e = (1.0 + s) * e0;
    check(e0, e, t_sw, calibrate_timing(e0, e, t_sw));
  }
  // two-level frame: every transition shifts by the same factor
  ComplexMatrix h0 = ComplexMatrix::Zero(2, 2);
  h0(1, 1) = 1.0;
  ComplexMatrix h1 = ComplexMatrix::Zero(2, 2);
  h1(0, 1) = h1(1, 0) = 0.3;
  const LiouvilleFrame frame(h0, h1, 0.1);
  const SwapCalibration second = calibrate_timing_second_order(frame, 1.0);
  check(frame.e0(), energies_second_order(frame), 1.0, second);
  const SwapCalibration exact = calibrate_timing_exact(frame, 1.0);
  check(frame.e0(), decompose(frame, Order::Exact).energies, 1.0, exact);
  report(7, worst_residual <= 1e-8 && worst_phase <= 1e-10,
         fmt("%.0f homogeneous cases: max ||U_ideal - U_nonideal(t_sw + dt)|| %.3e (tol 1e-8), "
             "max phase mismatch mod 2pi %.3e (tol 1e-10)",
             cases, worst_residual, worst_phase));
}

void ac8() {
  std::vector<std::pair<std::string, RLSGate>> gates;
  gates.emplace_back("orthonormal", build_cnot_rls(ComplexMatrix::Identity(4, 4)));
  const PseudoSpinBasis qubit = PseudoSpinBasis::skewed({0.3, 0.2});
  gates.emplace_back("skewed product", build_cnot_rls(tensor({qubit.right, qubit.right})));
  std::mt19937_64 rng(8);
  gates.emplace_back("random non-orthogonal", build_cnot_rls(random_invertible(4, rng)));
  const ComplexMatrix identity = ComplexMatrix::Identity(4, 4);
  double worst_relation = 0.0, worst_perm = 0.0, worst_square = 0.0;
  std::size_t relations = 8;
  bool closed = true;
  for (const auto& [name, gate] : gates) {
    const auto rel = cnot_relations(gate);
    relations = std::min(relations, rel.size());
    for (const auto& r : rel) worst_relation = std::max(worst_relation, r.second);
    worst_perm = std::max(worst_perm, max_abs(gate.matrix - cnot_permutation()));
    worst_square = std::max(worst_square, max_abs(gate.matrix * gate.matrix - identity));
    closed = closed && verify_closure(gate);
  }
  const double tol = 1e-12;
  report(8, relations == 8 && worst_relation <= tol && worst_perm <= tol && worst_square <= tol && closed,
         fmt("orthonormal, skewed and random bases: max relation residual %.3e, permutation deviation %.3e, "
             "||CN^2 - I|| %.3e (tol 1e-12)",
             worst_relation, worst_perm, worst_square));
}

void ac9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_vector = [&](Eigen::Index n) {
    ComplexVector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = cplx(uni(rng), uni(rng));
    return ComplexVector(v.normalized());
  };
  double bio = 0.0, iso = 0.0, circle = 0.0, recomposition = 0.0;
  std::vector<double> times;
  for (int k = 0; k <= 50; ++k) times.push_back(0.2 * k);
  for (std::size_t n = 0; n <= 4; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<PseudoSpinBasis> bases;
      for (std::size_t f = 0; f <= n; ++f) bases.push_back(PseudoSpinBasis::from_right(random_invertible(2, rng)));
      const TuringMachine machine(n, bases, static_cast<std::size_t>(trial) % (n + 1));
      bio = std::max(bio, machine.biorthonormality_defect());
      const auto tapes = static_cast<Eigen::Index>(std::size_t{1} << n);
      std::vector<double> angles;
      for (Eigen::Index t = 0; t < tapes; ++t) angles.push_back(3.0 * uni(rng));
      const ComplexMatrix step = tape_controlled_rotation(machine, angles);
      iso = std::max(iso, isometry_defect(step, 20, 100 + n));
      iso = std::max(iso, isometry_defect(random_invertible(static_cast<Eigen::Index>(machine.dim()), rng), 20, 200 + n));

      ComplexVector up(2);
      up << 0.0, 1.0;
      const ComplexVector psi_up = machine.product_state(up, random_vector(tapes));
      circle = std::max(circle, bloch_circle_residual(rotation_trajectory(machine, psi_up, 0.8, times)));

      const ComplexVector psi0 = machine.product_state(random_vector(2), random_vector(tapes));
      const EntangledDecomposition dec =
          decompose_entangled(psi0, machine.dual_of(psi0), machine, {step, head_rotation(machine, 0.45)});
      recomposition = std::max(recomposition, dec.residual());
    }
  }
  report(9, bio <= 1e-12 && iso <= 1e-10 && circle <= 1e-10 && recomposition <= 1e-10,
         fmt("n_tape 0..4: biorthonormality %.3e (tol 1e-12), isometry %.3e (tol 1e-10), Bloch circle %.3e "
             "(tol 1e-10), recomposition %.3e (tol 1e-10)",
             bio, iso, circle, recomposition));
}

void ac10() {
  bool ok = true;
  int runs = 0;
  for (const char* name : {"diagonal", "triangular", "general"}) {
    ScenarioConfig cfg = load_config_file(config_path(name));
    for (const auto& scenario : scenario_names()) {
      cfg.scenario = scenario_from_string(scenario);
      cfg.verify.samples = 3;
      const RunReport a = run(cfg);
      const RunReport b = run(cfg);
      bool same = a.payload() == b.payload() && a.tables.size() == b.tables.size();
      for (std::size_t k = 0; same && k < a.tables.size(); ++k) same = a.tables[k].render() == b.tables[k].render();
      ok = ok && same;
      ++runs;
    }
  }
  report(10, ok, fmt("%.0f config/scenario pairs run twice: report payloads and tables byte-identical", runs));
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  const auto start = Clock::now();
  guarded(1, ac1);
  guarded(2, ac2_ac3);
  guarded(4, ac4);
  guarded(5, ac5);
  guarded(6, ac6);
  guarded(7, ac7);
  guarded(8, ac8);
  guarded(9, ac9);
  guarded(10, ac10);
  std::printf("acceptance: %d failing, total %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
