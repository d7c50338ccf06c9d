// qsim command line: runs a named scenario and writes a JSON or CSV report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;

std::string scenario_list() {
  std::string out;
  for (const auto& n : qsim::scenario_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

int usage_error(const std::string& msg) {
  std::cerr << "qsim: " << msg << "\n"
            << "usage: qsim <scenario> [--seed N] [--dims 2,2] [--trials N] [--epsilon X] [--epsilon-sweep a,b,c]\n"
            << "            [--output PATH] [--format json|csv] [--config PATH] [--weights random|uniform]\n"
            << "            [--threads N]\n"
            << "scenarios: " << scenario_list() << "\n";
  return kExitUsage;
}

qsim::ScenarioConfig base_config() {
  qsim::ScenarioConfig cfg;
  if (const char* env = std::getenv("QSIM_SEED"); env != nullptr && *env != '\0') {
    const std::string text(env);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.front() == '-') throw qsim::UsageError("QSIM_SEED must be an unsigned integer");
    cfg.seed = v;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsim: seeded quantum information-flow scenarios"};
  app.set_help_flag("-h,--help", "Print help (scenarios: " + scenario_list() + ")");

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> dims;
  std::optional<std::size_t> trials;
  std::optional<double> epsilon;
  std::vector<double> sweep;
  std::string output;
  std::string format;
  std::string config_path;
  std::string weights;
  std::optional<std::size_t> threads;

  app.add_option("scenario", scenario, "Scenario: " + scenario_list());
  app.add_option("--seed", seed, "64-bit unsigned seed (default: QSIM_SEED or 20240917)");
  app.add_option("--dims", dims, "Subsystem dimensions, e.g. 2,2")->delimiter(',');
  app.add_option("--trials", trials, "Monte-Carlo trials");
  app.add_option("--epsilon", epsilon, "Selection perturbation strength");
  app.add_option("--epsilon-sweep", sweep, "Ascending epsilon list for second-law")->delimiter(',');
  app.add_option("--output", output, "Write the report here instead of stdout");
  app.add_option("--format", format, "json or csv");
  app.add_option("--config", config_path, "JSON config file with ScenarioConfig field names");
  app.add_option("--weights", weights, "second-law weight sampling: random or uniform");
  app.add_option("--threads", threads, "Worker threads for Monte-Carlo trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  try {
    qsim::ScenarioConfig cfg = base_config();
    bool have_scenario = false;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) return usage_error("cannot read config file " + config_path);
      qsim::Json j;
      try {
        j = qsim::Json::parse(in);
      } catch (const qsim::Json::exception& e) {
        return usage_error(std::string("config is not valid JSON: ") + e.what());
      }
      cfg = qsim::ScenarioConfig::from_json(j, cfg);
      have_scenario = j.contains("scenario");
    }

    if (!scenario.empty()) {
      const auto s = qsim::parse_scenario(scenario);
      if (!s) return usage_error("unknown scenario '" + scenario + "'");
      cfg.scenario = *s;
      have_scenario = true;
    }
    if (!have_scenario) return usage_error("no scenario given");
    if (seed) cfg.seed = *seed;
    if (!dims.empty()) cfg.dims = dims;
    if (trials) {
      if (*trials < 1) return usage_error("--trials must be >= 1");
      cfg.trials = *trials;
    }
    if (epsilon) cfg.epsilon = *epsilon;
    if (!sweep.empty()) cfg.epsilon_sweep = sweep;
    if (!output.empty()) cfg.output_path = output;
    if (!weights.empty()) cfg.weights = weights;
    if (threads) cfg.threads = *threads;
    if (!format.empty()) {
      if (format == "json") {
        cfg.format = qsim::OutputFormat::Json;
      } else if (format == "csv") {
        cfg.format = qsim::OutputFormat::Csv;
      } else {
        return usage_error("--format must be json or csv");
      }
    }

    const qsim::RunReport report = qsim::run_scenario(cfg);
    const std::string text = report.render(cfg.format);
    if (cfg.output_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cfg.output_path, std::ios::binary);
      if (!out) {
        std::cerr << "qsim: cannot write " << cfg.output_path << "\n";
        return kExitFailure;
      }
      out << text;
    }

    if (!report.passed) {
      for (const auto& p : report.results.at("properties")) {
        if (p.at("passed").get<bool>()) continue;
        std::cerr << "qsim: property " << p.at("id").get<std::string>() << " failed (seed " << cfg.seed
                  << "); reproduce with " << p.at("reproduction").dump() << "\n";
      }
      return kExitFailure;
    }
    return kExitOk;
  } catch (const qsim::CapacityError& e) {
    std::cerr << "qsim: capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const qsim::UsageError& e) {
    return usage_error(e.what());
  } catch (const std::exception& e) {
    std::cerr << "qsim: error: " << e.what() << "\n";
    return kExitFailure;
  }
}
