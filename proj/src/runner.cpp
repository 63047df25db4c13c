#include "subdyn/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "subdyn/df_analyzer.hpp"
#include "subdyn/gates.hpp"
#include "subdyn/turing.hpp"

namespace subdyn {

using nlohmann::ordered_json;

namespace {

ordered_json cjson(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json matrix_json(const ComplexMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cjson(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

std::string num(double x) { return format_number(x); }

ComplexMatrix random_density(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(dim);
  ComplexMatrix g(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) g(r, c) = cplx(normal(rng), normal(rng));
  }
  ComplexMatrix rho = g * g.adjoint();
  return rho / rho.trace();
}

class HilbertPropagator {
 public:
  explicit HilbertPropagator(const ComplexMatrix& h) : propagator_(h), dim_(h.rows()) {}
  ComplexMatrix unitary(double t) const {
    ComplexMatrix u(dim_, dim_);
    for (Eigen::Index k = 0; k < dim_; ++k) u.col(k) = propagator_.apply(t, ComplexVector::Unit(dim_, k));
    return u;
  }
  ComplexMatrix evolve(const ComplexMatrix& rho, double t) const { return unitary(t) * rho * unitary(-t); }

 private:
  Propagator propagator_;
  Eigen::Index dim_;
};

ComplexVector energies_for(const LiouvilleFrame& frame, Order order, const PerturbationOptions& opts,
                           std::vector<std::string>& warnings) {
  if (order == Order::Second) return energies_second_order(frame, opts);
  SubdynDecomposition dec = decompose(frame, order, opts);
  warnings.insert(warnings.end(), dec.warnings.begin(), dec.warnings.end());
  return dec.energies;
}

std::string table_row(const DFReport& r) {
  return to_string(r.stationary_total) + " " + to_string(r.evolution_total) + " | " + to_string(r.stationary_proj) +
         " " + to_string(r.evolution_proj);
}

// ---------------------------------------------------------------------------

void run_classify(const ScenarioConfig& cfg, RunReport& report) {
  const auto times = time_grid(cfg.t_grid.start, cfg.t_grid.end, cfg.t_grid.steps);
  const DFReport r = classify(*cfg.model, cfg.order, times, cfg.perturbation(), {}, cfg.dimension_cap());
  const ModelOperators ops = build_model(*cfg.model, cfg.dimension_cap());
  const LiouvilleFrame frame(ops);
  const SubdynDecomposition dec = decompose(frame, cfg.order, cfg.perturbation());
  const ConditionCheck diag = check_diagonal_condition(frame);
  const ConditionCheck tri = check_triangular_condition(frame, dec);

  ordered_json payload;
  payload["verdicts"] = {{"stationary_total", to_string(r.stationary_total)},
                         {"evolution_total", to_string(r.evolution_total)},
                         {"stationary_proj", to_string(r.stationary_proj)},
                         {"evolution_proj", to_string(r.evolution_proj)}};
  payload["table_row"] = table_row(r);
  ordered_json evidence = ordered_json::array();
  for (const auto& e : r.evidence) {
    evidence.push_back({{"name", e.name},
                        {"cell", e.cell},
                        {"value", e.value},
                        {"threshold", e.threshold},
                        {"decisive", e.decisive},
                        {"rule", e.rule}});
  }
  payload["evidence"] = evidence;
  payload["conditions"] = {
      {"diagonal", {{"holds", diag.holds}, {"violation", diag.violation}, {"threshold", diag.threshold}}},
      {"triangular",
       {{"holds", tri.holds}, {"violation", tri.violation}, {"threshold", tri.threshold}, {"one_sided", tri.one_sided}}}};
  payload["projected_fidelity_min"] = r.projected.min();
  report.document["payload"] = payload;
  report.document["diagnostics"] = {{"omega_condition", r.omega_condition}, {"warnings", r.warnings}};

  CsvTable energies{"energies", {"nu", "row", "col", "e0", "energy_re", "energy_im"}, {}};
  for (Eigen::Index nu = 0; nu < r.e0.size(); ++nu) {
    const NuIndex idx = frame.nu(static_cast<std::size_t>(nu));
    energies.add_row({std::to_string(nu), std::to_string(idx.row), std::to_string(idx.col), num(r.e0(nu).real()),
                      num(r.energies(nu).real()), num(r.energies(nu).imag())});
  }
  CsvTable trace{"fidelity", {"t", "projected_fidelity", "reduced_offdiagonal_deviation", "reduced_population_deviation"}, {}};
  for (std::size_t k = 0; k < times.size(); ++k) {
    trace.add_row({num(times[k]), k < r.projected.values.size() ? num(r.projected.values[k]) : "nan",
                   num(r.total.offdiagonal_deviation[k]), num(r.total.population_deviation[k])});
  }
  report.tables.push_back(std::move(energies));
  report.tables.push_back(std::move(trace));
}

void run_evolve(const ScenarioConfig& cfg, RunReport& report) {
  const auto times = time_grid(cfg.t_grid.start, cfg.t_grid.end, cfg.t_grid.steps);
  const ModelOperators ops = build_model(*cfg.model, cfg.dimension_cap());
  const LiouvilleFrame frame(ops);
  const SubdynDecomposition dec = decompose(frame, cfg.order, cfg.perturbation());
  const HilbertPropagator exact(ops.total());
  const Eigen::VectorXd weights = probe_weights(ops.dim());
  const ComplexMatrix probe = frame.free_basis() * weights.cast<cplx>().asDiagonal() * frame.free_basis().adjoint();
  std::mt19937_64 rng(cfg.seed);
  const ComplexMatrix rho_k = random_density(ops.dim(), rng);
  const ProjectedDensity pd0 = project_density(rho_k, frame, dec);

  std::vector<std::string> warnings = dec.warnings;
  FidelityTrace projected;
  try {
    projected = projected_fidelity(frame, dec, weights, times);
  } catch (const ValidationError& e) {
    warnings.push_back(std::string("projected fidelity unavailable: ") + e.what());
  }
  const bool hermitian = frame.h1_hermitian();

  CsvTable table{"evolution", {"t", "fidelity_total", "fidelity_projected", "kinetic_residual", "trace"}, {}};
  double min_total = 1.0, max_kinetic = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    std::string f_total = "nan";
    if (hermitian) {
      const double f = fidelity(probe, exact.evolve(probe, t));
      min_total = std::min(min_total, f);
      f_total = num(f);
    }
    const ComplexMatrix rho_t = exact.evolve(rho_k, t);
    const ProjectedDensity direct = project_density(rho_t, frame, dec);
    const ProjectedDensity kinetic = evolve_projected(pd0, dec.energies, t);
    const double residual = (direct.coefficients - kinetic.coefficients).cwiseAbs().maxCoeff();
    max_kinetic = std::max(max_kinetic, residual);
    table.add_row({num(t), f_total, k < projected.values.size() ? num(projected.values[k]) : "nan", num(residual),
                   num(rho_t.trace().real())});
  }
  ordered_json payload;
  payload["fidelity_total_min"] = hermitian ? ordered_json(min_total) : ordered_json(nullptr);
  payload["fidelity_projected_min"] = projected.values.empty() ? ordered_json(nullptr) : ordered_json(projected.min());
  payload["kinetic_residual_max"] = max_kinetic;
  payload["initial_state"] = "free mixture p_i proportional to d - i; kinetic check on a seeded random density";
  report.document["payload"] = payload;
  report.document["diagnostics"] = {{"omega_condition", dec.omega_condition}, {"warnings", warnings}};
  report.tables.push_back(std::move(table));
}

void run_swap(const ScenarioConfig& cfg, RunReport& report) {
  const ModelOperators ops = build_model(*cfg.model, cfg.dimension_cap());
  const LiouvilleFrame frame(ops);
  std::vector<std::string> warnings;
  const ComplexVector energies = energies_for(frame, cfg.order, cfg.perturbation(), warnings);
  SwapCalibration cal = calibrate_timing(frame.e0(), energies, cfg.swap.t_sw, cfg.swap.homogeneity_tol);
  cal.order = cfg.order;
  warnings.insert(warnings.end(), cal.warnings.begin(), cal.warnings.end());

  ordered_json payload;
  payload["t_sw"] = cal.t_sw;
  payload["delta_t"] = cal.delta_t;
  payload["e0_over_de"] = std::isinf(cal.e0_over_de) ? ordered_json(nullptr) : ordered_json(cal.e0_over_de);
  payload["order"] = to_string(cal.order);
  payload["homogeneous"] = cal.homogeneous;
  payload["relative_spread"] = cal.spread;
  payload["residual"] = cal.residual;
  payload["phase_error"] = cal.phase_error;
  payload["flagged"] = cal.flagged;
  if (cfg.swap.branches > 0) {
    Eigen::Index dominant = 0;
    frame.e0().cwiseAbs().maxCoeff(&dominant);
    const double de = (energies(dominant) - frame.e0()(dominant)).real();
    payload["branches"] = timing_branches(frame.e0()(dominant).real(), de, cfg.swap.t_sw, cfg.swap.branches);
  }
  report.document["payload"] = payload;
  report.document["diagnostics"] = {{"warnings", warnings}};

  CsvTable table{"swap", {"nu", "row", "col", "e0", "shift_re", "shift_im", "phase_error_ideal_time", "phase_error_corrected"}, {}};
  for (Eigen::Index nu = 0; nu < energies.size(); ++nu) {
    const NuIndex idx = frame.nu(static_cast<std::size_t>(nu));
    const cplx de = energies(nu) - frame.e0()(nu);
    const double before = std::abs(std::exp(cplx(0.0, -cal.t_sw) * frame.e0()(nu)) -
                                   std::exp(cplx(0.0, -cal.t_sw) * energies(nu)));
    const double after = std::abs(std::exp(cplx(0.0, -cal.t_sw) * frame.e0()(nu)) -
                                  std::exp(cplx(0.0, -(cal.t_sw + cal.delta_t)) * energies(nu)));
    table.add_row({std::to_string(nu), std::to_string(idx.row), std::to_string(idx.col), num(frame.e0()(nu).real()),
                   num(de.real()), num(de.imag()), num(before), num(after)});
  }
  report.tables.push_back(std::move(table));
}

ComplexMatrix demo_right_states(const CnotOptions& opts) {
  const PseudoSpinBasis qubit = PseudoSpinBasis::skewed(opts.skew);
  const ComplexMatrix core = tensor({qubit.right, qubit.right});
  const auto n = static_cast<Eigen::Index>(opts.ambient_dim);
  ComplexMatrix right = ComplexMatrix::Zero(n, 4);
  right.topRows(4) = core;
  for (Eigen::Index r = 4; r < n; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) right(r, c) = 0.1 * static_cast<double>((r - 3) * (c + 1) % 5);
  }
  return right;
}

void run_cnot(const ScenarioConfig& cfg, RunReport& report) {
  const ComplexMatrix right = demo_right_states(cfg.cnot);
  const RLSGate gate = build_cnot_rls(right);
  const ClosureReport closure = closure_report(gate);
  const auto relations = cnot_relations(gate);

  const ComplexMatrix squared = gate.matrix * gate.matrix;
  const double involution = (squared - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff();

  // a 5-dimensional gate sending |11) outside the span
  ComplexMatrix right5 = ComplexMatrix::Zero(5, 4);
  right5.topRows(4) = ComplexMatrix::Identity(4, 4);
  const RLSGate base = build_cnot_rls(right5);
  RLSGate leaky = base;
  leaky.op.col(3) = ComplexVector::Unit(5, 4);
  leaky.matrix = leaky.left_states * leaky.op * leaky.right_states;

  ordered_json rel = ordered_json::array();
  double worst = 0.0;
  for (const auto& [name, value] : relations) {
    rel.push_back({{"relation", name}, {"residual", value}});
    worst = std::max(worst, value);
  }
  ordered_json payload;
  payload["pairing_defect"] = gate.pairing_defect;
  payload["relations"] = rel;
  payload["relations_max_residual"] = worst;
  payload["involution_defect"] = involution;
  payload["closure"] = {{"closed", closure.closed},
                        {"right_defect", closure.right_defect},
                        {"left_defect", closure.left_defect},
                        {"permutation_defect", closure.permutation_defect}};
  payload["counterexample_closed"] = verify_closure(leaky);
  payload["matrix"] = matrix_json(gate.matrix);
  report.document["payload"] = payload;
  report.document["diagnostics"] = {{"warnings", ordered_json::array()}};

  CsvTable table{"cnot", {"relation", "residual"}, {}};
  for (const auto& [name, value] : relations) table.add_row({name, num(value)});
  report.tables.push_back(std::move(table));
}

TuringMachine demo_machine(const TuringOptions& opts) {
  const PseudoSpinBasis basis = opts.skew == cplx(0.0, 0.0) ? PseudoSpinBasis::standard() : PseudoSpinBasis::skewed(opts.skew);
  return TuringMachine(opts.n_tape, std::vector<PseudoSpinBasis>(opts.n_tape + 1, basis), opts.head_index);
}

std::vector<double> demo_angles(const TuringOptions& opts) {
  if (!opts.angles.empty()) return opts.angles;
  const std::size_t tapes = std::size_t{1} << opts.n_tape;
  std::vector<double> angles(tapes);
  for (std::size_t j = 0; j < tapes; ++j) angles[j] = std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(tapes + 1);
  return angles;
}

void run_turing(const ScenarioConfig& cfg, RunReport& report) {
  const auto times = time_grid(cfg.t_grid.start, cfg.t_grid.end, cfg.t_grid.steps);
  const TuringMachine machine = demo_machine(cfg.turing);
  const std::size_t tapes = std::size_t{1} << machine.n_tape();

  ComplexVector up(2);
  up << 0.0, 1.0;
  const ComplexVector blank = ComplexVector::Unit(static_cast<Eigen::Index>(tapes), 0);
  const auto trajectory = rotation_trajectory(machine, machine.product_state(up, blank), cfg.turing.omega, times);
  const double circle = bloch_circle_residual(trajectory);

  ComplexVector head(2);
  head << 1.0, cplx(0.0, 1.0);
  head /= std::sqrt(2.0);
  ComplexVector tape(static_cast<Eigen::Index>(tapes));
  for (std::size_t j = 0; j < tapes; ++j) tape(static_cast<Eigen::Index>(j)) = static_cast<double>(j + 1);
  tape.normalize();
  const ComplexVector psi0 = machine.product_state(head, tape);
  const ComplexMatrix step = tape_controlled_rotation(machine, demo_angles(cfg.turing));
  const EntangledDecomposition dec = decompose_entangled(psi0, machine.dual_of(psi0), machine, {step});

  ordered_json branches = ordered_json::array();
  for (const auto& b : dec.branches) {
    branches.push_back({{"tape", b.tape},
                        {"weight", cjson(b.weight)},
                        {"bloch", {cjson(b.bloch.x), cjson(b.bloch.y), cjson(b.bloch.z)}}});
  }
  ordered_json payload;
  payload["biorthonormality_defect"] = machine.biorthonormality_defect();
  payload["isometry_defect"] = isometry_defect(step, 16, cfg.seed);
  payload["bloch_circle_residual"] = circle;
  payload["recomposition_residual"] = dec.residual();
  payload["head_bloch"] = {cjson(dec.total.x), cjson(dec.total.y), cjson(dec.total.z)};
  payload["branches"] = branches;
  report.document["payload"] = payload;
  report.document["diagnostics"] = {{"warnings", ordered_json::array()}};

  CsvTable table{"turing", {"t", "x", "y", "z", "circle_residual"}, {}};
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& b = trajectory[k];
    table.add_row({num(times[k]), num(b.x), num(b.y), num(b.z), num(std::abs(b.y * b.y + b.z * b.z - 1.0))});
  }
  report.tables.push_back(std::move(table));
}

struct Check {
  std::string name;
  double value;
  double threshold;
  bool passed;
};

Check below(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, std::isfinite(value) && value <= threshold};
}

void run_verify(const ScenarioConfig& cfg, RunReport& report) {
  std::vector<Check> checks;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const ModelOperators ops = build_model(*cfg.model, cfg.dimension_cap());
  const LiouvilleFrame frame(ops);
  const SubdynDecomposition exact = decompose(frame, Order::Exact, cfg.perturbation());
  const SuperOperator l = frame.liouvillian();
  const SuperOperator omega = similarity_operator(exact);
  const double lnorm = std::max(opnorm(l), 1e-300);

  checks.push_back(below("similarity ||L Omega - Omega Theta|| / ||L||",
                         opnorm(l * omega - omega * exact.energies.asDiagonal()) / lnorm, 1e-8));

  {
    const auto n = static_cast<Eigen::Index>(frame.dim());
    ComplexMatrix kets = omega;
    ComplexMatrix bras = exact.destruction + ComplexMatrix::Identity(n, n);
    for (Eigen::Index nu = 0; nu < n; ++nu) bras.row(nu) /= 1.0 + (exact.destruction.row(nu) * exact.creation.col(nu))(0);
    checks.push_back(below("completeness ||sum Pi_nu - I||", opnorm(kets * bras - ComplexMatrix::Identity(n, n)), 1e-8));
  }

  {
    const HilbertPropagator prop(ops.total());
    double worst = 0.0;
    for (std::size_t s = 0; s < cfg.verify.samples; ++s) {
      const ComplexMatrix rho0 = random_density(ops.dim(), rng);
      const double t = 10.0 * uniform(rng);
      const ProjectedDensity direct = project_density(prop.evolve(rho0, t), frame, exact);
      const ProjectedDensity kinetic = evolve_projected(project_density(rho0, frame, exact), exact.energies, t);
      worst = std::max(worst, (direct.coefficients - kinetic.coefficients).cwiseAbs().maxCoeff());
    }
    checks.push_back(below("kinetic equation P Pi exp(-iLt) rho0 vs exp(-i Theta t) P Pi rho0", worst, 1e-6));
  }

  {
    double worst = 0.0;
    for (std::size_t s = 0; s < cfg.verify.samples; ++s) {
      const ComplexMatrix rho = random_density(ops.dim(), rng);
      worst = std::max(worst, std::abs(fidelity(rho, rho) - 1.0));
    }
    checks.push_back(below("fidelity(rho, rho) = 1", worst, 1e-10));
  }

  if (exact.energies.imag().cwiseAbs().maxCoeff() <= 1e-12) {
    const auto times = time_grid(cfg.t_grid.start, cfg.t_grid.end, cfg.t_grid.steps);
    const FidelityTrace trace = projected_fidelity(frame, exact, probe_weights(ops.dim()), times);
    checks.push_back(below("projected fidelity 1 - min F", std::abs(1.0 - trace.min()), 1e-9));
  }

  {
    const ConditionCheck diag = check_diagonal_condition(frame);
    const ConditionCheck tri = check_triangular_condition(frame, exact);
    checks.push_back({"diagonal condition implies triangular condition", diag.holds && !tri.holds ? 1.0 : 0.0, 0.0,
                      !(diag.holds && !tri.holds)});
  }

  {
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    double worst_value = 0.0, worst_vector = 0.0;
    for (int s = 0; s < 100; ++s) {
      const BlockEigenProblem p = block_eigensolve(coeff(rng), coeff(rng), coeff(rng));
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(p.matrix);
      for (int k = 0; k < 3; ++k) worst_value = std::max(worst_value, std::abs(solver.eigenvalues()(k) - p.eigenvalues[k]));
      ComplexVector dark(3);
      dark << 0.0, -1.0, 1.0;
      dark /= std::sqrt(2.0);
      const ComplexVector image = p.matrix * dark;
      worst_vector = std::max(worst_vector, (image - p.b * dark).cwiseAbs().maxCoeff());
    }
    checks.push_back(below("block eigenvalues closed form vs solver", worst_value, 1e-10));
    checks.push_back(below("block eigenvector (0,-1,1)/sqrt2 has eigenvalue b", worst_vector, 1e-10));
  }

  {
    const ComplexVector e0 = ComplexVector::LinSpaced(6, -2.5, 2.5);
    const ComplexVector shifted = e0 * 1.1;
    const SwapCalibration cal = calibrate_timing(e0, shifted, 1.3);
    checks.push_back(below("swap calibration residual (homogeneous shifts)", cal.residual, 1e-8));
    checks.push_back(below("swap phase matching mod 2 pi", cal.phase_error, 1e-10));
  }

  {
    const RLSGate gate = build_cnot_rls(demo_right_states(cfg.cnot));
    double worst = 0.0;
    for (const auto& rel : cnot_relations(gate)) worst = std::max(worst, rel.second);
    checks.push_back(below("CNOT relations", worst, 1e-12));
    checks.push_back(below("CNOT involution", (gate.matrix * gate.matrix - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12));
    checks.push_back({"CNOT closure", verify_closure(gate) ? 0.0 : 1.0, 0.0, verify_closure(gate)});
  }

  {
    const TuringMachine machine = demo_machine(cfg.turing);
    checks.push_back(below("Turing biorthonormality", machine.biorthonormality_defect(), 1e-12));
    const ComplexMatrix step = tape_controlled_rotation(machine, demo_angles(cfg.turing));
    checks.push_back(below("Turing isometry", isometry_defect(step, cfg.verify.samples, cfg.seed), 1e-10));
    ComplexVector up(2);
    up << 0.0, 1.0;
    const auto times = time_grid(0.0, 10.0, 101);
    const auto traj = rotation_trajectory(
        machine, machine.product_state(up, ComplexVector::Unit(static_cast<Eigen::Index>(std::size_t{1} << machine.n_tape()), 0)),
        cfg.turing.omega, times);
    checks.push_back(below("Turing Bloch circle residual", bloch_circle_residual(traj), 1e-10));
  }

  std::size_t passed = 0;
  ordered_json list = ordered_json::array();
  CsvTable table{"verify", {"check", "value", "threshold", "passed"}, {}};
  for (const auto& c : checks) {
    passed += c.passed ? 1 : 0;
    list.push_back({{"check", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
    table.add_row({c.name, num(c.value), num(c.threshold), c.passed ? "true" : "false"});
  }
  report.passed = passed == checks.size();
  report.document["payload"] = {{"checks", list},
                                {"summary", {{"passed", passed}, {"failed", checks.size() - passed}, {"total", checks.size()}}}};
  report.document["diagnostics"] = {{"omega_condition", exact.omega_condition}, {"warnings", exact.warnings}};
  report.tables.push_back(std::move(table));
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::logic_error("CsvTable: row width does not match header");
  rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
  auto quote = [](const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream os;
  for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << quote(columns[k]);
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << quote(row[k]);
    os << "\n";
  }
  return os.str();
}

std::string RunReport::payload() const { return document.dump(2) + "\n"; }

RunReport run(const ScenarioConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.document["schema"] = kReportSchema;
  report.document["scenario"] = to_string(config.scenario);
  report.document["config"] = to_json(config);
  switch (config.scenario) {
    case Scenario::Classify: run_classify(config, report); break;
    case Scenario::Evolve: run_evolve(config, report); break;
    case Scenario::SwapCalibrate: run_swap(config, report); break;
    case Scenario::CnotDemo: run_cnot(config, report); break;
    case Scenario::TuringDemo: run_turing(config, report); break;
    case Scenario::Verify: run_verify(config, report); break;
  }
  ordered_json tables = ordered_json::array();
  for (const auto& t : report.tables) tables.push_back({{"file", t.name + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}});
  report.document["tables"] = tables;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  };
  write("report.json", report.payload());
  for (const auto& t : report.tables) write(t.name + ".csv", t.render());
  ordered_json meta;
  meta["schema"] = kReportSchema;
  meta["timestamp_utc"] = utc_timestamp();
  meta["wall_seconds"] = report.wall_seconds;
  meta["output_dir"] = std::filesystem::absolute(dir).string();
  write("run_metadata.json", meta.dump(2) + "\n");
}

std::filesystem::path resolve_output_dir(const ScenarioConfig& config, const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  const char* root = std::getenv("SUBDYN_OUTPUT_ROOT");
  const std::filesystem::path base = root && *root ? std::filesystem::path(root) : std::filesystem::path("subdyn-out");
  if (config.output_dir.empty()) return base / to_string(config.scenario);
  const std::filesystem::path given(config.output_dir);
  if (given.is_absolute() || !(root && *root)) return given;
  return base / given;
}

}  // namespace subdyn
