#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "mfg/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stderr_text;
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path err_file = workdir / "stderr.txt";
  const std::string cmd = "cd " + workdir.string() + " && " + MFG_CLI_PATH + " " + args + " 2>" +
                          err_file.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WEXITSTATUS(status);
  if (fs::exists(err_file)) res.stderr_text = mfg::read_file(err_file);
  return res;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json fast_quadratic_config() {
  json cfg = json::parse(mfg::read_file(fs::path(MFG_CONFIG_DIR) / "quadratic2.json"));
  cfg["grid"]["n_steps"] = 200;
  cfg["mc"]["n_paths"] = 2000;
  return cfg;
}

}  // namespace

TEST_CASE("solve writes its artifacts and reports convergence") {
  const fs::path dir = fresh_dir("solve");
  mfg::write_file(dir / "cfg.json", fast_quadratic_config().dump(2));
  const RunResult res = run_cli("solve --config cfg.json --out out", dir);
  CHECK(res.exit_code == 0);
  for (const char* f : {"equilibrium.csv", "value.csv", "policy.csv", "trace.csv", "manifest.json"})
    CHECK(fs::exists(dir / "out" / f));

  const json manifest = json::parse(mfg::read_file(dir / "out" / "manifest.json"));
  CHECK(manifest["command"] == "solve");
  CHECK(manifest["seed"] == 20240923);

  // Final combined residual sits under the configured tolerance.
  std::ifstream trace(dir / "out" / "trace.csv");
  std::string line, last;
  std::getline(trace, line);  // header
  while (std::getline(trace, line))
    if (!line.empty()) last = line;
  std::stringstream ss(last);
  std::string iter, sres, cres;
  std::getline(ss, iter, ',');
  std::getline(ss, sres, ',');
  std::getline(ss, cres, ',');
  CHECK(std::stod(sres) + std::stod(cres) < 1e-6);
}

TEST_CASE("a missing required field names itself and exits 1") {
  const fs::path dir = fresh_dir("missing_m");
  json cfg = fast_quadratic_config();
  cfg.erase("m");
  mfg::write_file(dir / "cfg.json", cfg.dump(2));
  const RunResult res = run_cli("solve --config cfg.json --out out", dir);
  CHECK(res.exit_code == 1);
  CHECK(res.stderr_text.find("'m'") != std::string::npos);
}

TEST_CASE("rates outside the declared band fail validation with exit 1") {
  const fs::path dir = fresh_dir("bad_rates");
  json cfg = fast_quadratic_config();
  cfg["rate_bounds"] = {0.5, 1.5};  // the box reaches controls up to 2
  mfg::write_file(dir / "cfg.json", cfg.dump(2));
  const RunResult res = run_cli("solve --config cfg.json --out out", dir);
  CHECK(res.exit_code == 1);
  CHECK(res.stderr_text.find("rate") != std::string::npos);
}

TEST_CASE("malformed JSON exits 1 with a parse diagnostic") {
  const fs::path dir = fresh_dir("bad_json");
  mfg::write_file(dir / "cfg.json", "{ not json");
  const RunResult res = run_cli("solve --config cfg.json --out out", dir);
  CHECK(res.exit_code == 1);
  CHECK(res.stderr_text.find("parse") != std::string::npos);
}

TEST_CASE("non-convergence exits 2 but still writes the trace") {
  const fs::path dir = fresh_dir("nonconv");
  json cfg = json::parse(mfg::read_file(fs::path(MFG_CONFIG_DIR) / "monotone2.json"));
  cfg["grid"]["n_steps"] = 150;
  cfg["solver"]["max_iter"] = 2;
  mfg::write_file(dir / "cfg.json", cfg.dump(2));
  const RunResult res = run_cli("solve --config cfg.json --out out", dir);
  CHECK(res.exit_code == 2);
  CHECK(fs::exists(dir / "out" / "trace.csv"));
}

TEST_CASE("monotonicity report on the anticongestion model") {
  const fs::path dir = fresh_dir("monotone");
  const RunResult res = run_cli(
      std::string("check-monotone --config ") + MFG_CONFIG_DIR + "/anti.json --out out", dir);
  CHECK(res.exit_code == 0);  // report commands always succeed
  const json rep = json::parse(mfg::read_file(dir / "out" / "monotone.json"));
  CHECK(rep["g_monotone"] == false);
  CHECK(rep["n_witnesses"].get<int>() > 0);

  const RunResult good = run_cli(
      std::string("check-monotone --config ") + MFG_CONFIG_DIR + "/monotone2.json --out good",
      dir);
  CHECK(good.exit_code == 0);
  const json rep_good = json::parse(mfg::read_file(dir / "good" / "monotone.json"));
  CHECK(rep_good["g_monotone"] == true);
  CHECK(rep_good["f1_monotone"] == true);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const fs::path dir = fresh_dir("determinism");
  mfg::write_file(dir / "cfg.json", fast_quadratic_config().dump(2));
  CHECK(run_cli("solve --config cfg.json --out a", dir).exit_code == 0);
  CHECK(run_cli("solve --config cfg.json --out b", dir).exit_code == 0);
  for (const char* f : {"equilibrium.csv", "value.csv", "policy.csv", "trace.csv", "manifest.json"})
    CHECK(mfg::read_file(dir / "a" / f) == mfg::read_file(dir / "b" / f));

  // A different seed reaches the same fixed point but stamps a new manifest.
  CHECK(run_cli("solve --config cfg.json --seed 99 --out c", dir).exit_code == 0);
  const json manifest = json::parse(mfg::read_file(dir / "c" / "manifest.json"));
  CHECK(manifest["seed"] == 99);
}

TEST_CASE("evaluate-cost ties the policy price to the value") {
  const fs::path dir = fresh_dir("cost");
  mfg::write_file(dir / "cfg.json", fast_quadratic_config().dump(2));
  const RunResult res = run_cli("evaluate-cost --config cfg.json --out out", dir);
  CHECK(res.exit_code == 0);
  const json cost = json::parse(mfg::read_file(dir / "out" / "cost.json"));
  CHECK(cost["max_abs_diff"].get<double>() <= 1e-6);
}

TEST_CASE("simulate writes marginal comparisons that agree") {
  const fs::path dir = fresh_dir("simulate");
  json cfg = fast_quadratic_config();
  cfg["mc"]["n_paths"] = 4000;
  mfg::write_file(dir / "cfg.json", cfg.dump(2));
  const RunResult res = run_cli("simulate --config cfg.json --out out", dir);
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "marginals.csv"));
  CHECK(fs::exists(dir / "out" / "paths_sample.csv"));

  std::ifstream in(dir / "out" / "marginals.csv");
  std::string line;
  std::getline(in, line);  // header
  double worst = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    worst = std::max(worst, std::abs(row[1] - row[3]));
  }
  CHECK(worst <= 0.05);  // 4000 paths: binomial noise only
}
