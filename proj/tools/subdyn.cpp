#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "subdyn/runner.hpp"

namespace {

enum Exit { kOk = 0, kIo = 1, kValidation = 2, kNumerical = 3 };

struct Flags {
  std::string config;
  std::string out;
  std::string order;
  double eta = -1.0;
  long long seed = -1;
  bool allow_large = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subdynamics scenario runner"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : subdyn::scenario_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", flags.config, "JSON scenario config")->required();
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--order", flags.order, "exact, 1 or 2")->check(CLI::IsMember({"exact", "1", "2"}));
    sub->add_option("--eta", flags.eta, "retarded regulator, >= 0")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", flags.seed, "seed for randomized checks")->check(CLI::NonNegativeNumber);
    sub->add_flag("--allow-large", flags.allow_large, "lift the Hilbert dimension cap of 64");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string scenario = app.get_subcommands().front()->get_name();
  try {
    subdyn::ScenarioConfig cfg = subdyn::load_config_file(flags.config);
    cfg.scenario = subdyn::scenario_from_string(scenario);
    if (!flags.order.empty()) cfg.order = subdyn::order_from_string(flags.order);
    if (flags.eta >= 0.0) cfg.eta = flags.eta;
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.allow_large) cfg.allow_large = true;

    const subdyn::RunReport report = subdyn::run(cfg);
    const auto dir = subdyn::resolve_output_dir(cfg, flags.out);
    subdyn::write_outputs(report, dir);

    const auto& payload = report.document["payload"];
    if (cfg.scenario == subdyn::Scenario::Classify) {
      std::cout << payload["table_row"].get<std::string>() << "\n";
    } else if (cfg.scenario == subdyn::Scenario::Verify) {
      const auto& s = payload["summary"];
      std::cout << s["passed"] << "/" << s["total"] << " checks passed\n";
    }
    std::cout << "report written to " << (dir / "report.json").string() << "\n";
    return report.passed ? kOk : kNumerical;
  } catch (const subdyn::IoError& e) {
    std::cerr << "subdyn " << scenario << ": " << e.what() << "\n";
    return kIo;
  } catch (const subdyn::ValidationError& e) {
    std::cerr << "subdyn " << scenario << ": invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const subdyn::NumericalError& e) {
    std::cerr << "subdyn " << scenario << ": numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "subdyn " << scenario << ": " << e.what() << "\n";
    return kIo;
  }
}
