#pragma once

// Scenario runner behind the `qsim` command line.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsim/knowledge_entropy.hpp"
#include "qsim/serialize.hpp"

namespace qsim {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class Scenario { CopyDemo, DecoherenceDemo, PayoffDemo, NoCloning, SecondLaw, PropertySuite };
enum class OutputFormat { Json, Csv };

const std::vector<std::string>& scenario_names();
std::string scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

struct ScenarioConfig {
  Scenario scenario = Scenario::CopyDemo;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::size_t> dims = {2, 2};
  std::optional<std::size_t> trials;  // unset: the scenario's default
  double epsilon = 0.1;
  std::optional<std::vector<double>> epsilon_sweep;
  std::string weights = "random";  // second-law p_ab sampling: random | uniform
  std::size_t threads = 1;
  std::string output_path;  // empty: stdout
  OutputFormat format = OutputFormat::Json;

  // Throws UsageError for malformed values and CapacityError for dims whose
  // product exceeds kMaxTotalDim.
  void validate() const;
  std::size_t effective_trials() const;
  // Field names match the config-file keys.
  Json to_json() const;
  // Overlays keys present in `j` onto `base`.
  static ScenarioConfig from_json(const Json& j, ScenarioConfig base);
};

struct RunReport {
  std::string scenario;
  Json config;
  Json results;
  std::string csv;  // scenario-specific table for --format csv
  std::string tool_version;
  double wall_time_ms = 0.0;
  bool passed = true;  // false only when the property suite finds a violation

  Json to_json() const;
  std::string render(OutputFormat format) const;
};

RunReport run_scenario(const ScenarioConfig& cfg);

struct SweepRow {
  double epsilon = 0.0;
  std::size_t trials = 0;
  double mean_ds1 = 0.0;
  double mean_ds2 = 0.0;
  double violation_fraction_1 = 0.0;
  double violation_fraction_2 = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  Json to_json() const;
  std::string to_csv() const;
};

// One row per epsilon; trial t uses the substream (seed, t) at every epsilon.
SweepReport run_second_law_sweep(const ScenarioConfig& cfg);

// Selection trial t of the second-law scenario at the given epsilon.
struct SecondLawTrial {
  Json row;
  double ds1 = 0.0;
  double ds2 = 0.0;
  double ds1_measured = 0.0;
  double ds2_measured = 0.0;
};
SecondLawTrial second_law_trial(const ScenarioConfig& cfg, double epsilon, std::size_t trial);

// ---------------------------------------------------------------------------
// Property suite

using EntropyFunction = std::function<double(const DensityMatrix&)>;

struct PropertySuiteOptions {
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::size_t> trials;  // unset: each property's own count
  std::size_t threads = 1;
  EntropyFunction entropy = von_neumann_entropy;
};

struct PropertyOutcome {
  std::string id;
  std::string description;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest residual seen (or most negative margin)
  std::optional<std::size_t> first_failing_trial;
  Json reproduction;   // config that replays the first failure

  bool passed() const { return violations == 0; }
  Json to_json() const;
};

struct PropertySuiteReport {
  std::vector<PropertyOutcome> properties;
  bool reduced_confidence = false;

  bool passed() const;
  Json to_json() const;
};

PropertySuiteReport run_property_suite(const PropertySuiteOptions& options);

// Runs fn(0..n-1) on `threads` workers and returns results in index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t threads, const std::function<T(std::size_t)>& fn);

}  // namespace qsim

#include "qsim/detail/parallel_map.hpp"
