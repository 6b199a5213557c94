#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sketchls/cli.hpp"
#include "test_util.hpp"

using namespace sketchls;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

// CSV text with the wall_time_s column blanked.
std::string without_times(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, out;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() > 8) f[8] = "";
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\n";
  }
  return out;
}

}  // namespace

TEST(CliGen, WritesConsistentProblem) {
  const auto dir = test::scratch_dir("cli_gen") / "d";
  const auto r = run_cli({"gen", "--m", "100", "--n", "10", "--cond", "1", "--beta", "0", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  for (const char* f : {"A.mtx", "b.mtx", "xstar.mtx", "meta.txt"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  const auto loaded = read_problem_dir(dir);
  EXPECT_EQ(loaded.problem.b, matvec(loaded.problem.a, *loaded.problem.x_star));
  EXPECT_EQ(loaded.spec.kappa, 1.0);
}

TEST(CliGen, InvalidSpecIsUsageError) {
  const auto dir = test::scratch_dir("cli_gen_bad");
  const auto r = run_cli({"gen", "--m", "10", "--n", "20", "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("m >= n"), std::string::npos);
  EXPECT_EQ(run_cli({"gen", "--m", "10", "--n", "10", "--out", (dir / "y").string()}).code, 2);
  EXPECT_EQ(run_cli({"gen", "--m", "10", "--n", "2", "--cond", "0.5", "--out", (dir / "z").string()}).code, 2);
}

TEST(CliGen, UnwritableOutputIsIoError) {
  const auto dir = test::scratch_dir("cli_gen_io");
  std::ofstream(dir / "file") << "x";
  EXPECT_EQ(run_cli({"gen", "--m", "10", "--n", "2", "--out", (dir / "file" / "sub").string()}).code, 3);
}

TEST(CliSolve, IdentityDirect) {
  const auto dir = test::scratch_dir("cli_solve_id");
  mm::write_file(dir / "A.mtx", DenseMatrix::identity(3));
  mm::write_file(dir / "b.mtx", Vector{1, 2, 3});
  const auto r = run_cli({"solve", "--A", (dir / "A.mtx").string(), "--b", (dir / "b.mtx").string(), "--method",
                          "direct", "--out", (dir / "x.mtx").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(mm::read_vector(dir / "x.mtx"), (Vector{1, 2, 3}));
  const auto kv = key_values(r.out);
  EXPECT_EQ(kv.at("method"), "direct");
  EXPECT_EQ(kv.at("sketch"), "");
  EXPECT_EQ(kv.at("termination"), "direct");
  EXPECT_EQ(kv.at("residual_norm"), "0");
}

TEST(CliSolve, SapOnGeneratedProblemReachesBeta) {
  const auto dir = test::scratch_dir("cli_solve_sap");
  ASSERT_EQ(run_cli({"gen", "--m", "3000", "--n", "40", "--cond", "1e6", "--beta", "1e-10", "--seed", "3", "--out",
                     dir.string()})
                .code,
            0);
  const auto r = run_cli({"solve", "--A", (dir / "A.mtx").string(), "--b", (dir / "b.mtx").string(), "--method", "sap",
                          "--sketch", "countsketch"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(r.out);
  EXPECT_EQ(kv.at("method"), "sap");
  EXPECT_EQ(kv.at("sketch"), "countsketch");
  EXPECT_EQ(kv.at("d"), "160");
  EXPECT_LE(std::abs(std::stod(kv.at("residual_norm")) - 1e-10), 1e-8);
}

TEST(CliSolve, JsonSummary) {
  const auto dir = test::scratch_dir("cli_solve_json");
  ASSERT_EQ(run_cli({"gen", "--m", "400", "--n", "8", "--out", dir.string()}).code, 0);
  const auto r = run_cli({"solve", "--A", (dir / "A.mtx").string(), "--b", (dir / "b.mtx").string(), "--method", "saa",
                          "--sketch", "gaussian", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_TRUE(j.is_object());
  for (const char* key : {"method", "sketch", "d", "iterations", "residual_norm", "termination", "wall_time_s"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["method"], "saa");
  EXPECT_EQ(j["sketch"], "gaussian");
  EXPECT_EQ(j["d"], 32);
  EXPECT_EQ(j["iterations"], 0);

  const auto l = run_cli({"solve", "--A", (dir / "A.mtx").string(), "--b", (dir / "b.mtx").string(), "--method",
                          "lsqr", "--json", "--max-iter", "2"});
  const auto jl = nlohmann::json::parse(l.out);
  EXPECT_TRUE(jl["sketch"].is_null());
  EXPECT_TRUE(jl["d"].is_null());
  EXPECT_EQ(jl["termination"], "max_iter");
  EXPECT_EQ(jl["iterations"], 2);
}

TEST(CliSolve, ErrorCodes) {
  const auto dir = test::scratch_dir("cli_solve_err");
  EXPECT_EQ(run_cli({"solve", "--A", (dir / "none.mtx").string(), "--b", (dir / "none.mtx").string()}).code, 3);
  std::ofstream(dir / "bad.mtx") << "garbage\n";
  EXPECT_EQ(run_cli({"solve", "--A", (dir / "bad.mtx").string(), "--b", (dir / "bad.mtx").string()}).code, 3);

  mm::write_file(dir / "A.mtx", DenseMatrix::from_rows({{1, 1}, {2, 2}, {3, 3}}));
  mm::write_file(dir / "b.mtx", Vector{1, 2, 3});
  const std::string a = (dir / "A.mtx").string();
  const std::string b = (dir / "b.mtx").string();
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--method", "direct"}).code, 4);
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--method", "saa"}).code, 4);
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--method", "qr"}).code, 2);
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--max-iter", "0"}).code, 2);
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", b, "--d-factor", "0.5"}).code, 2);
  mm::write_file(dir / "short.mtx", Vector{1, 2});
  EXPECT_EQ(run_cli({"solve", "--A", a, "--b", (dir / "short.mtx").string()}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(CliBench, CountingRuleAndQuietStdout) {
  const auto dir = test::scratch_dir("cli_bench") / "r";
  const auto r = run_cli({"bench", "--m-list", "2000,5000", "--n", "100", "--methods", "lsqr,sap", "--sketches",
                          "countsketch", "--repeats", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("[bench]"), std::string::npos);
  const auto recs = read_csv(dir / "results.csv");
  EXPECT_EQ(recs.size(), 8U);
  EXPECT_TRUE(std::filesystem::exists(dir / "config.txt"));
  EXPECT_FALSE(std::filesystem::exists(dir / "time.svg"));
}

TEST(CliBench, PlotsAndDeterminism) {
  const auto base = test::scratch_dir("cli_bench_det");
  const std::vector<std::string> flags{"bench", "--m-list", "300,600", "--n", "12", "--cond", "1e6", "--sketches",
                                       "countsketch,srht", "--repeats", "2", "--seed", "9", "--plot", "--out"};
  auto a = flags;
  a.push_back((base / "a").string());
  auto b = flags;
  b.push_back((base / "b").string());
  ASSERT_EQ(run_cli(a).code, 0);
  ASSERT_EQ(run_cli(b).code, 0);
  const auto ca = slurp(base / "a" / "results.csv");
  EXPECT_EQ(without_times(ca), without_times(slurp(base / "b" / "results.csv")));
  EXPECT_EQ(read_csv(base / "a" / "results.csv").size(), 2U * 2U * (1U + 2U * 2U));
  for (const char* f : {"time.svg", "forward_error.svg", "residual_error.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(base / "a" / f)) << f;
  }
}

TEST(CliBench, UsageErrors) {
  const auto dir = test::scratch_dir("cli_bench_bad");
  EXPECT_EQ(run_cli({"bench", "--m-list", "", "--n", "10", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--m-list", "100,abc", "--n", "10", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--m-list", "5", "--n", "10", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--m-list", "100", "--n", "10", "--methods", "direct", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--m-list", "100", "--n", "10", "--sketches", "fft", "--out", dir.string()}).code, 2);
}

TEST(CliSeed, EnvironmentOverrideAndFlagPrecedence) {
  const auto base = test::scratch_dir("cli_seed");
  const auto gen = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"gen", "--m", "30", "--n", "4", "--out", (base / name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    EXPECT_EQ(run_cli(args).code, 0);
    return slurp(base / name / "A.mtx");
  };
  const auto seed5 = gen("flag5", {"--seed", "5"});
  const auto seed6 = gen("flag6", {"--seed", "6"});
  ASSERT_NE(seed5, seed6);
  ::setenv(cli::kSeedEnv, "5", 1);
  const auto env5 = gen("env5", {});
  const auto env5_flag6 = gen("env5_flag6", {"--seed", "6"});
  ::unsetenv(cli::kSeedEnv);
  EXPECT_EQ(env5, seed5);
  EXPECT_EQ(env5_flag6, seed6);
}
