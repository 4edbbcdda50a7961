#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "normlens/norm.hpp"
#include "normlens/numfmt.hpp"
#include "normlens/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(NORMLENS_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "normlens_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

}  // namespace

TEST_CASE("signflip example") {
  const auto r = run("signflip --D 256 --mu 1.5 --sigma2 1 --samples 100000 --seed 7");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["seed"] == 7);
  CHECK(j["p_hat"].get<double>() >= 0.40);
  CHECK(j["theorem"]["holds"] == true);

  const auto check = run("signflip check --D 76 --mu 10");
  REQUIRE(check.code == 0);
  CHECK(nlohmann::json::parse(check.out)["corollary"]["holds"] == false);

  const auto sweep = run("signflip sweep --Ds 81,256 --scales 1 --samples 5000 --format csv");
  REQUIRE(sweep.code == 0);
  const auto rows = csv_rows(sweep.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"D", "ratio", "condition_holds", "p_hat", "std_err"});
  CHECK(sweep.out.find("# seed=1\n") != std::string::npos);
}

TEST_CASE("elb examples") {
  const auto r = run("elb k50 --L 1024 --D 512 --tol 1e-9");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["elb_at_k50"].get<double>() - 0.5 * std::log(1024.0)) <= 1e-9);

  CHECK(run("elb curve --L 16 --D 64 --steps 11").code == 0);
  CHECK(run("elb landscape --Ls 64,256 --Ds 64 --format csv").code == 0);
  const auto v = run("elb verify --Ls 2,3 --ks 0,1 --Ds 1,4 --grid 201");
  REQUIRE(v.code == 0);
  CHECK(nlohmann::json::parse(v.out)["pass"] == true);
  // D = 1: ELB does not depend on k
  CHECK(run("elb k50 --L 16 --D 1").code == 1);
}

TEST_CASE("gradcheck example") {
  const auto r = run("gradcheck --trials 100 --seed 1");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["pass"] == true);
  CHECK(j["max"]["jacobian_fd_rel_err"].get<double>() < 1e-6);
  CHECK(j["max"]["grad_w_fd_rel_err"].get<double>() < 1e-6);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("gradcheck --bogus").code == 2);
  CHECK(run("norm apply --method LayerNorm").code == 2);
  CHECK(run("norm apply --input /nonexistent/file.csv").code == 2);
  CHECK(run("shift study --D 4 --mu 1,2").code == 2);
  CHECK(run("elb curve --steps 1").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("norm apply on an embedding file") {
  const auto path = scratch("tokens.csv");
  {
    std::ofstream f(path);
    f << "# three tokens\n3,4\n1,3\n-2,0.5\n";
  }
  const auto r = run("norm apply --method LayerNormPractice --eps 0 --input " + path.string());
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["shape"]["L"] == 3);
  CHECK(j["tokens"][1][0] == -1.0);
  CHECK(j["tokens"][1][1] == 1.0);

  const auto bad = scratch("bad.csv");
  {
    std::ofstream f(bad);
    f << "1,2\n3\n";
  }
  CHECK(run("norm apply --input " + bad.string()).code == 2);
}

TEST_CASE("csv output round-trips exactly") {
  const auto r = run("norm apply --method UnitNorm --k 1.5 --N 2 --L 3 --D 5 --seed 9 --format csv");
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 7);

  const std::vector<double> mu(5, 6.0 / std::pow(5.0, 0.25)), s2(5, 1.0);
  normlens::NormConfig cfg;
  cfg.method = normlens::NormMethod::UnitNorm;
  cfg.k = 1.5;
  const auto y = normlens::normalize(normlens::gaussian_batch(2, 3, mu, s2, 9), cfg);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t d = 0; d < 5; ++d) {
      CHECK(normlens::parse_double(rows[t + 1][3 + d]) == y.data()[t * 5 + d]);
    }
  }
}

TEST_CASE("shift study writes per-set reports") {
  const auto dir = scratch("shift");
  fs::remove_all(dir);
  const auto r = run("shift study --methods UnitNorm --sets 1 --N 3 --L 1 --D 4 --out-dir " + dir.string());
  REQUIRE(r.code == 0);
  const auto file = dir / "UnitNorm_k1.5_set0.json";
  REQUIRE(fs::exists(file));
  std::ifstream f(file);
  const auto j = nlohmann::json::parse(f);
  for (const auto& row : j["report"]["rows"]) CHECK(row["chebyshev"] == 0.0);

  const auto csv = run("shift study --methods RMSNorm,BatchNorm --sets 2 --N 2 --L 8 --D 16 --format csv");
  REQUIRE(csv.code == 0);
  CHECK(csv_rows(csv.out).size() == 3);
}
