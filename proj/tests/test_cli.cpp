// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "conicnmf/cli.hpp"

using namespace conicnmf;
namespace fs = std::filesystem;

namespace {

int run_args(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"conic_nmf"};
  owned.insert(owned.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("factorize writes reports and signals success", "[cli]") {
  TempDir dir("conicnmf_cli_factorize");
  const int rc = run_args({"factorize", "--builtin", "hex_a2", "--k", "3",
                           "--form", "soc", "--maxiter", "750", "--seed", "1",
                           "--out", dir.path.string()});
  REQUIRE(rc == cli::kExitSuccess);
  REQUIRE(fs::exists(dir.path / "report.json"));
  REQUIRE(fs::exists(dir.path / "trace.csv"));
  REQUIRE(fs::exists(dir.path / "W.csv"));
  REQUIRE(fs::exists(dir.path / "H.csv"));
  auto j = nlohmann::json::parse(slurp(dir.path / "report.json"));
  REQUIRE(j["success"] == true);
  REQUIRE(j["final_error"].get<double>() <= 1e-6);

  // the exported factors reproduce the reported error
  auto W = load_matrix((dir.path / "W.csv").string());
  auto H = load_matrix((dir.path / "H.csv").string());
  auto V = builtin_matrix("hex_a2");
  REQUIRE(relative_error(V.matrix(), W.matrix(), H.matrix()) <= 1e-6);
}

TEST_CASE("factorize below the nonnegative rank exits with one", "[cli]") {
  TempDir dir("conicnmf_cli_deficit");
  const int rc = run_args({"factorize", "--builtin", "hex_a2", "--k", "2",
                           "--form", "soc", "--maxiter", "40", "--seed", "1",
                           "--out", dir.path.string()});
  REQUIRE(rc == cli::kExitNoSuccess);
}

TEST_CASE("validation problems exit with two", "[cli]") {
  TempDir dir("conicnmf_cli_bad");
  const auto bad = dir.path / "bad.csv";
  {
    std::ofstream out(bad);
    out << "2,2\n1,2\n3,-1\n";
  }
  REQUIRE(run_args({"factorize", "--matrix", bad.string(), "--out",
                    dir.path.string()}) == cli::kExitError);
  REQUIRE(run_args({"factorize", "--builtin", "no_such_matrix"}) ==
          cli::kExitError);
  REQUIRE(run_args({"factorize", "--bogus-flag"}) == cli::kExitError);
  REQUIRE(run_args({"factorize"}) == cli::kExitError);  // no instance
}

TEST_CASE("campaigns are byte-for-byte deterministic", "[cli]") {
  TempDir a("conicnmf_cli_campaign_a"), b("conicnmf_cli_campaign_b");
  for (const auto& dir : {a.path, b.path}) {
    const int rc = run_args({"campaign", "--random", "5,5,2", "--k", "2",
                             "--inits", "3", "--maxiter", "40", "--seed",
                             "77", "--jobs", "2", "--out", dir.string()});
    REQUIRE(rc == cli::kExitSuccess);
  }
  const auto sa = slurp(a.path / "summary.json");
  REQUIRE_FALSE(sa.empty());
  REQUIRE(sa == slurp(b.path / "summary.json"));
  auto j = nlohmann::json::parse(sa);
  REQUIRE(j["rows"][0]["n_inits"] == 3);
  REQUIRE(j["rows"][0]["final_errors"].size() == 3);
  // a singleton campaign equals its single run
  TempDir c("conicnmf_cli_campaign_c");
  REQUIRE(run_args({"campaign", "--builtin", "hex_a2", "--inits", "1",
                    "--maxiter", "120", "--seed", "5", "--out",
                    c.path.string()}) == cli::kExitSuccess);
  auto jc = nlohmann::json::parse(slurp(c.path / "summary.json"));
  REQUIRE(jc["rows"][0]["successes"] == 1);
  REQUIRE(fs::exists(c.path / "run_soc_0_trace.csv"));
}

TEST_CASE("rank1 reports the over-approximation as JSON", "[cli]") {
  // exact rank-one input: objective is the total mass of V
  REQUIRE(run_args({"rank1", "--builtin", "hex_a2"}) == cli::kExitSuccess);
}

TEST_CASE("gaptrace writes both step rules against the reference curve",
          "[cli]") {
  TempDir dir("conicnmf_cli_gaptrace");
  const int rc = run_args({"gaptrace", "--builtin", "hex_a2", "--k", "3",
                           "--maxiter", "25", "--seed", "2", "--out",
                           dir.path.string()});
  REQUIRE(rc == cli::kExitSuccess);
  std::ifstream in(dir.path / "gaptrace.csv");
  std::string header;
  std::getline(in, header);
  REQUIRE(header == "iter,min_gap_unit,min_gap_adaptive,ref_unit,ref_adaptive");
  double prev_u = kInf, prev_a = kInf;
  int rows = 0;
  for (std::string line; std::getline(in, line); ++rows) {
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    REQUIRE(vals.size() == 5);
    // minimum gaps are nonincreasing and below their reference curves
    REQUIRE(vals[1] <= prev_u + 1e-15);
    REQUIRE(vals[2] <= prev_a + 1e-15);
    REQUIRE(vals[1] <= vals[3] * (1.0 + 1e-9));
    REQUIRE(vals[2] <= vals[4] * (1.0 + 1e-9));
    prev_u = vals[1];
    prev_a = vals[2];
  }
  REQUIRE(rows == 25);
}
