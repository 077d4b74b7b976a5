// Drives the installed-style command-line binary end to end: exit codes,
// emitted JSON, and the simulate/rate loop on the quadratic-well config.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(LANGCERT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path config(const std::string& name) { return fs::path(LANGCERT_CONFIG_DIR) / name; }

fs::path fresh_out_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("langcert_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("certify") == 2);                                    // missing --config
  CHECK(run("certify --config /nonexistent.cfg") == 2);          // unreadable config
  CHECK(run("frobnicate") == 2);                                 // unknown subcommand
}

TEST_CASE("certify: quadratic-well bounded-Hessian certificate JSON") {
  const auto out = fresh_out_dir("certify");
  const int code =
      run("certify --config " + config("single_well.cfg").string() + " --out " + out.string());
  CHECK(code == 0);
  std::ifstream in(out / "certificate.json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  CHECK(j["route"] == "villani");
  const double sigma = j["sigma"]["value"].get<double>();
  // gamma/4 * 1/zeta^2 with zeta^2 = 2.5 + sqrt(2)
  CHECK(sigma == doctest::Approx(0.12773958089728294).epsilon(1e-12));
  // the serialized decimal leads with 0.127739...
  CHECK(j["sigma"]["value"].dump().rfind("0.127739", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("certify: general route on the pair potential") {
  const auto out = fresh_out_dir("certify_pair");
  const int code =
      run("certify --config " + config("singular_pair.cfg").string() + " --out " + out.string());
  CHECK(code == 0);
  std::ifstream in(out / "certificate.json");
  nlohmann::json j;
  in >> j;
  CHECK(j["route"] == "general");
  CHECK(j["sigma"]["value"].get<double>() > 0.0);
  CHECK(j["rho_K"]["provenance"] == "user-supplied");
  CHECK(j["R2"]["value"].get<double>() ==
        doctest::Approx(j["R1"]["value"].get<double>() + 32.0 * 2.0));
  fs::remove_all(out);
}

TEST_CASE("simulate then rate: the measured decay beats sigma/2") {
  const auto out = fresh_out_dir("rate");
  // small but statistically solid run; overrides nothing in the config
  const int sim_code =
      run("simulate --config " + config("single_well.cfg").string() + " --out " + out.string());
  CHECK(sim_code == 0);
  CHECK(fs::exists(out / "trajectory.csv"));

  const int rate_code =
      run("rate --config " + config("single_well.cfg").string() + " --out " + out.string());
  CHECK(rate_code == 0);
  std::ifstream in(out / "rate.json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  CHECK(j["pass"].get<bool>());
  CHECK(j["r_hat"].get<double>() > j["threshold_sigma_over_2"].get<double>());
  CHECK(fs::exists(out / "autocorrelation.csv"));

  // aggregate report picks up the artifacts and their verdicts
  const int report_code = run("report --out " + out.string());
  CHECK(report_code == 0);
  std::ifstream rin(out / "report.json");
  nlohmann::json rep;
  rin >> rep;
  CHECK(rep["all_pass"].get<bool>());
  CHECK(rep.contains("rate"));
  fs::remove_all(out);
}

TEST_CASE("report with nothing to aggregate exits 2") {
  const auto out = fresh_out_dir("empty_report");
  CHECK(run("report --out " + out.string()) == 2);
  fs::remove_all(out);
}

TEST_CASE("verification pipeline is bit-reproducible given the seed") {
  const auto out1 = fresh_out_dir("repro_a");
  const auto out2 = fresh_out_dir("repro_b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  for (const auto* sub : {"certify", "gamma-verify", "lyapunov-verify"}) {
    const std::string base =
        std::string(sub) + " --config " + config("double_well.cfg").string() + " --seed 5 --out ";
    REQUIRE(run(base + out1.string()) == 0);
    REQUIRE(run(base + out2.string()) == 0);
  }
  CHECK(slurp(out1 / "certificate.json") == slurp(out2 / "certificate.json"));
  CHECK(slurp(out1 / "gamma_verify.json") == slurp(out2 / "gamma_verify.json"));
  CHECK(slurp(out1 / "lyapunov_verify.json") == slurp(out2 / "lyapunov_verify.json"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("certify with an eigensolver-estimated local constant") {
  const auto out = fresh_out_dir("estimate");
  const auto cfg_path = out / "estimate.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[potential]\nfamily = single_well\nN = 1\nk = 1\n"
        << "[model]\ngamma = 1.0\nT = 1.0\n"
        << "[certificate]\nroute = general\nrho_K = estimate\n"
        << "[tasks]\ngrid_points = 32\n";
  }
  const int code = run("certify --config " + cfg_path.string() + " --out " + out.string());
  CHECK(code == 0);
  std::ifstream in(out / "certificate.json");
  nlohmann::json j;
  in >> j;
  CHECK(j["rho_K"]["provenance"] == "spectral-estimated");
  // the center set is dozens of standard deviations wide, so the local
  // constant sits near the full-space value T = 1
  CHECK(j["rho_K"]["value"].get<double>() == doctest::Approx(1.0).epsilon(0.15));
  CHECK(j["rho_K"]["diagnostics"]["connected"].get<bool>());
  CHECK(j["rho_K"]["diagnostics"]["lambda1_by_level"].size() == 3);
  fs::remove_all(out);
}

TEST_CASE("seed override changes the simulation stream deterministically") {
  const auto out1 = fresh_out_dir("seed_a");
  const auto out2 = fresh_out_dir("seed_b");
  const auto out3 = fresh_out_dir("seed_c");
  const std::string base = "simulate --config " + config("double_well.cfg").string();
  CHECK(run(base + " --seed 1 --out " + out1.string()) == 0);
  CHECK(run(base + " --seed 1 --out " + out2.string()) == 0);
  CHECK(run(base + " --seed 2 --out " + out3.string()) == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const auto a = slurp(out1 / "trajectory.csv");
  CHECK(a == slurp(out2 / "trajectory.csv"));
  CHECK(a != slurp(out3 / "trajectory.csv"));
  fs::remove_all(out1);
  fs::remove_all(out2);
  fs::remove_all(out3);
}
