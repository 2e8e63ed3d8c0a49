#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "orfnet/orfnet.h"

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"([experiment]
seed = 11
regime = ConvexSmooth
horizon = 30
repetitions = 2

[network]
family = ring
agents = 3

[scenario]
name = drifting-quadratic
dim = 2
)";

fs::path write_config(const std::string& name, const std::string& text) {
  const auto dir = fs::temp_directory_path() / "orfnet_capi";
  fs::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ORFNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("mixing through the C API") {
  const int edges[] = {0, 1, 1, 2, 2, 3};
  orfnet_mixing* mix = nullptr;
  REQUIRE(orfnet_mixing_from_edges(4, edges, 3, &mix) == ORFNET_OK);
  CHECK(orfnet_mixing_size(mix) == 4);
  double w[16];
  REQUIRE(orfnet_mixing_weights(mix, w, 16) == ORFNET_OK);
  // Path on 4 agents: Metropolis weights 1/3 between interior neighbours.
  CHECK(w[1 * 4 + 2] == doctest::Approx(1.0 / 3.0));
  CHECK(w[0 * 4 + 1] == doctest::Approx(1.0 / 3.0));
  CHECK(w[0] == doctest::Approx(2.0 / 3.0));
  CHECK(orfnet_mixing_weights(mix, w, 3) == ORFNET_ERR_ARGUMENT);
  double eps = 0.0;
  REQUIRE(orfnet_mixing_epsilon(mix, &eps) == ORFNET_OK);
  CHECK(eps > 0.0);
  double dev = 0.0;
  REQUIRE(orfnet_transition_deviation(mix, 1, &dev) == ORFNET_OK);
  CHECK(dev == doctest::Approx(2.0 / 3.0 - 0.25));
  orfnet_mixing_free(mix);

  const int bad[] = {0, 7};
  CHECK(orfnet_mixing_from_edges(4, bad, 1, &mix) == ORFNET_ERR_ARGUMENT);
  CHECK(std::string(orfnet_last_error()).size() > 0);

  const double corrupt[] = {0.5, 0.5, 0.6, 0.5};
  CHECK(orfnet_mixing_from_weights(corrupt, 2, &mix) == ORFNET_ERR_ARGUMENT);
  int ok = 1;
  REQUIRE(orfnet_verify_double_stochastic(corrupt, 2, 2, 1e-12, &ok) == ORFNET_OK);
  CHECK(ok == 0);
}

TEST_CASE("formulas through the C API") {
  double gamma = 0.0, alpha = 0.0;
  REQUIRE(orfnet_mixing_constants(2, 0.5, &gamma, &alpha) == ORFNET_OK);
  CHECK(gamma == doctest::Approx(1.0 - 0.5 / 16.0));
  CHECK(alpha == doctest::Approx(2.0 + 240.0 / (1.0 - gamma * gamma)));

  orfnet_schedule s{};
  REQUIRE(orfnet_make_schedule(ORFNET_NONCONVEX_SMOOTH, 256, 2, 1.0, 0.5, 3.0, nullptr, &s) == ORFNET_OK);
  CHECK(s.eta == doctest::Approx(1.0 / 24.0));
  CHECK(s.delta == doctest::Approx(1.0));
  CHECK(s.beta == doctest::Approx(0.0625));
  CHECK(orfnet_make_schedule(ORFNET_NONCONVEX_LIPSCHITZ, 256, 2, 4.0, 0.5, 3.0, nullptr, &s) == ORFNET_ERR_ARGUMENT);
  const double eps_f = 1.0;
  CHECK(orfnet_make_schedule(ORFNET_NONCONVEX_LIPSCHITZ, 256, 2, 4.0, 0.5, 3.0, &eps_f, &s) == ORFNET_ERR_ARGUMENT);
  CHECK(std::string(orfnet_last_error()).find("minimum valid T is 257") != std::string::npos);

  const double T[] = {100, 1000, 10000};
  const double R[] = {5 * 10.0, 5 * std::sqrt(1000.0), 5 * 100.0};
  double slope = 0.0;
  REQUIRE(orfnet_fit_exponent(T, R, 3, &slope) == ORFNET_OK);
  CHECK(std::abs(slope - 0.5) < 1e-9);
  CHECK(orfnet_fit_exponent(T, R, 2, &slope) == ORFNET_ERR_ARGUMENT);

  double rhs = 0.0;
  REQUIRE(orfnet_second_moment_bound(2, 0.5, 1.0, 0.01, 0.1, &rhs) == ORFNET_OK);
  CHECK(rhs == doctest::Approx(3 * 4 * 1 / 0.25 * 0.01 + 12 * 4 + 3 * 4 / 0.25 * 0.01));
  CHECK(orfnet_second_moment_bound(2, 0.0, 1.0, 0.01, 0.1, &rhs) == ORFNET_ERR_ARGUMENT);
}

TEST_CASE("config and commands through the C API") {
  orfnet_config* cfg = nullptr;
  CHECK(orfnet_config_parse("[experiment]\nseed = x\n", &cfg) == ORFNET_ERR_CONFIG);
  CHECK(std::string(orfnet_last_error()).find("experiment.seed") != std::string::npos);
  REQUIRE(orfnet_config_parse(kConfig, &cfg) == ORFNET_OK);
  const auto out = fs::temp_directory_path() / "orfnet_capi" / "run";
  fs::remove_all(out);
  const std::string dir = out.string();
  orfnet_run_options opts{dir.c_str(), 1, 1};
  CHECK(orfnet_cmd_run(cfg, &opts) == ORFNET_OK);
  CHECK(fs::exists(out / "summary.json"));
  orfnet_config_free(cfg);
  CHECK(orfnet_config_load("/nonexistent/orfnet.ini", &cfg) == ORFNET_ERR_CONFIG);
  CHECK(orfnet_default_workers() >= 1);
  CHECK(std::string(orfnet_version()).size() > 0);
}

TEST_CASE("CLI exit codes") {
  const auto good = write_config("good.ini", kConfig);
  const auto out = (fs::temp_directory_path() / "orfnet_capi" / "cli").string();
  CHECK(cli("run --config " + good.string() + " --out " + out + " --quiet") == 0);
  CHECK(fs::exists(fs::path(out) / "summary.json"));
  CHECK(cli("run --config " + good.string() + " --out " + out + " --workers 2 --quiet") == 0);
  CHECK(cli("--help") == 0);

  const auto bad = write_config("bad.ini", "[experiment]\nseed = 1\n");
  CHECK(cli("run --config " + bad.string() + " --out " + out) == 1);
  CHECK(cli("run --out " + out) == 1);
  CHECK(cli("frobnicate --config " + good.string()) == 1);

  std::string text = kConfig;
  text.replace(text.find("family = ring"), 13,
               "family = matrix\nweights = 0.5 0.25 0.25; 0.25 0.5 0.25; 0.35 0.25 0.5");
  text += "[validate]\nsamples = 2000\nprobes = 5\nt_max = 20\n";
  const auto corrupt = write_config("corrupt.ini", text);
  CHECK(cli("validate --config " + corrupt.string() + " --out " + out) == 2);
  // The same matrix is rejected up front when an experiment must run on it.
  CHECK(cli("run --config " + corrupt.string() + " --out " + out) == 1);
}
