#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "qsim/serialize.hpp"

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" QSIM_BINARY "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

qsim::Json parse(const std::string& s) { return qsim::Json::parse(s); }

std::string work(const std::string& name) { return std::string(QSIM_WORK_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("no-cloning").status == 0);
  const auto unknown = run("teleport");
  CHECK(unknown.status == 2);
  CHECK(unknown.out.find("copy-demo") != std::string::npos);
  CHECK(unknown.out.find("property-suite") != std::string::npos);
  CHECK(run("").status == 2);
  CHECK(run("second-law --trials 0").status == 2);
  CHECK(run("second-law --epsilon -1").status == 2);
  CHECK(run("second-law --format xml").status == 2);
  CHECK(run("second-law --bogus-flag").status == 2);
  CHECK(run("second-law --epsilon-sweep 0.2,0.1").status == 2);
  CHECK(run("second-law --dims 8,9").status == 3);
  CHECK(run("copy-demo --dims 1,2").status == 2);
  CHECK(run("property-suite --trials 2").status == 0);
  CHECK(run("--help").status == 0);
}

TEST_CASE("seed precedence: defaults < QSIM_SEED < config file < flag") {
  const auto def = parse(run("no-cloning").out);
  CHECK(def["config"]["seed"] == 20240917);
  const auto env = parse(run("no-cloning", "QSIM_SEED=11").out);
  CHECK(env["config"]["seed"] == 11);
  {
    std::ofstream cfg(work("cli_cfg.json"));
    cfg << R"({"scenario": "second-law", "seed": 22, "trials": 2, "epsilon": 0.3})";
  }
  const auto file = parse(run("--config \"" + work("cli_cfg.json") + "\"", "QSIM_SEED=11").out);
  CHECK(file["scenario"] == "second-law");
  CHECK(file["config"]["seed"] == 22);
  CHECK(file["config"]["epsilon"] == 0.3);
  const auto flag = parse(run("--config \"" + work("cli_cfg.json") + "\" --seed 33 --trials 1", "QSIM_SEED=11").out);
  CHECK(flag["config"]["seed"] == 33);
  CHECK(flag["config"]["trials"] == 1);
  CHECK(flag["config"]["epsilon"] == 0.3);
  const auto other = parse(run("no-cloning --config \"" + work("cli_cfg.json") + "\"").out);
  CHECK(other["scenario"] == "no-cloning");

  CHECK(run("no-cloning", "QSIM_SEED=abc").status == 2);
  {
    std::ofstream bad(work("cli_bad.json"));
    bad << R"({"scenario": "second-law", "sed": 1})";
  }
  CHECK(run("--config \"" + work("cli_bad.json") + "\"").status == 2);
  CHECK(run("--config /nonexistent/qsim.json").status == 2);
}

TEST_CASE("output file, CSV format and byte-identical results") {
  const std::string path = work("cli_sweep.csv");
  const auto r = run("second-law --epsilon-sweep 0,0.1 --trials 5 --format csv --output \"" + path + "\"");
  REQUIRE(r.status == 0);
  CHECK(r.out.empty());
  const std::string csv = slurp(path);
  CHECK(csv.rfind("epsilon,trials,mean_dS1,mean_dS2,violation_fraction_1,violation_fraction_2\n", 0) == 0);
  run("second-law --epsilon-sweep 0,0.1 --trials 5 --format csv --output \"" + path + "\"");
  CHECK(slurp(path) == csv);

  for (const char* scenario : {"copy-demo --trials 5", "decoherence-demo --trials 20", "payoff-demo --trials 300",
                               "no-cloning", "second-law --trials 4", "property-suite --trials 2"}) {
    const auto a = parse(run(scenario).out);
    const auto b = parse(run(std::string(scenario) + " --threads 2").out);
    CHECK_MESSAGE(a["results"].dump() == b["results"].dump(), scenario);
  }
}
