#pragma once

// Command-line front end shared by the `sketchls` executable and the tests.
//
//   sketchls gen   --m M --n N [--cond K] [--beta B] [--seed S] --out DIR
//   sketchls solve --A FILE --b FILE [--method M] [--sketch KIND] [--d-factor F]
//                  [--atol T] [--btol T] [--max-iter K] [--seed S] [--out FILE] [--json]
//   sketchls bench --m-list M1,M2,... --n N [--cond K] [--beta B] [--methods ...]
//                  [--sketches ...] [--d-factor F] [--repeats R] [--seed S] --out DIR [--plot]
//
// Exit codes: 0 success, 2 usage or invalid spec, 3 I/O or parse failure,
// 4 numerical failure. Only the solve summary goes to stdout; progress and
// diagnostics go to stderr. SKETCHLS_SEED supplies the default seed; an
// explicit --seed wins.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sketchls/bench.hpp"
#include "sketchls/errors.hpp"
#include "sketchls/format.hpp"
#include "sketchls/matrix_market.hpp"
#include "sketchls/probgen.hpp"
#include "sketchls/solvers.hpp"

namespace sketchls::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

inline constexpr const char* kSeedEnv = "SKETCHLS_SEED";

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw SpecError("empty entry in list '" + s + "'");
    out.push_back(item);
  }
  if (out.empty()) throw SpecError("list is empty");
  return out;
}

inline std::vector<Index> parse_m_list(const std::string& s) {
  std::vector<Index> out;
  for (const auto& item : split_list(s)) {
    const auto v = fmt::parse_int<long long>(item);
    if (!v || *v < 1) throw SpecError("invalid row count '" + item + "' in --m-list");
    out.push_back(static_cast<Index>(*v));
  }
  return out;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FileError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const SingularFactorError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const NumericalBreakdownError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kNumerical;
  }
}

}  // namespace detail

struct GenArgs {
  Index m = 0;
  Index n = 0;
  double cond = 1e10;
  double beta = 1e-10;
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_gen(const GenArgs& a, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemSpec spec{a.m, a.n, a.cond, a.beta, a.seed};
    spec.validate();
    const auto problem = generate_problem(spec);
    write_problem_dir(a.out, problem, spec);
    err << "wrote " << a.m << "x" << a.n << " problem to " << a.out << '\n';
    return int{kOk};
  });
}

struct SolveArgs {
  std::string a_path;
  std::string b_path;
  std::string method = "sap";
  std::string sketch = std::string(to_string(kDefaultSketch));
  double d_factor = 4.0;
  double atol = 1e-10;
  double btol = 1e-10;
  std::optional<Index> max_iter;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

inline int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Method method = parse_method(a.method);
    SketchSpec spec;
    spec.kind = parse_sketch_kind(a.sketch);
    spec.seed = derive_sketch_seed(a.seed, method);
    SolverOptions opts;
    opts.d_factor = a.d_factor;
    opts.atol = a.atol;
    opts.btol = a.btol;
    opts.max_iter = a.max_iter;
    opts.validate();

    auto matrix = mm::read(a.a_path);
    auto b = mm::read_vector(a.b_path);
    const SolveResult res = std::visit(
        [&](auto&& m) {
          using M = std::decay_t<decltype(m)>;
          const LeastSquaresProblem<M> problem(std::move(m), std::move(b));
          return solve(problem, method, spec, opts);
        },
        std::move(matrix));

    if (!a.out.empty()) mm::write_file(a.out, res.x);

    const bool sketched = res.method == Method::saa || res.method == Method::sap;
    if (a.json) {
      nlohmann::json j;
      j["method"] = std::string(to_string(res.method));
      j["sketch"] = sketched ? nlohmann::json(std::string(to_string(*res.sketch))) : nlohmann::json(nullptr);
      j["d"] = sketched ? nlohmann::json(*res.embed_dim) : nlohmann::json(nullptr);
      j["iterations"] = res.iterations;
      j["residual_norm"] = res.residual_norm;
      j["termination"] = std::string(to_string(res.termination));
      j["wall_time_s"] = res.wall_time_s;
      out << j.dump() << '\n';
    } else {
      out << "method=" << to_string(res.method) << '\n'
          << "sketch=" << (sketched ? to_string(*res.sketch) : "") << '\n'
          << "d=" << (sketched ? std::to_string(*res.embed_dim) : "") << '\n'
          << "iterations=" << res.iterations << '\n'
          << "residual_norm=" << fmt::shortest(res.residual_norm) << '\n'
          << "termination=" << to_string(res.termination) << '\n'
          << "wall_time_s=" << fmt::shortest(res.wall_time_s) << '\n';
    }
    return int{kOk};
  });
}

struct BenchArgs {
  std::string m_list;
  Index n = 0;
  double cond = 1e10;
  double beta = 1e-10;
  std::string methods = "lsqr,saa,sap";
  std::string sketches = std::string(to_string(kDefaultSketch));
  double d_factor = 4.0;
  Index repeats = 3;
  std::uint64_t seed = 0;
  std::string out;
  bool plot = false;
};

inline int cmd_bench(const BenchArgs& a, std::ostream& err) {
  return detail::guarded(err, [&] {
    BenchConfig cfg;
    cfg.m_list = detail::parse_m_list(a.m_list);
    cfg.n = a.n;
    cfg.kappa = a.cond;
    cfg.beta = a.beta;
    cfg.methods.clear();
    for (const auto& s : detail::split_list(a.methods)) cfg.methods.push_back(parse_method(s));
    cfg.sketches.clear();
    for (const auto& s : detail::split_list(a.sketches)) cfg.sketches.push_back(parse_sketch_kind(s));
    cfg.d_factor = a.d_factor;
    cfg.repeats = a.repeats;
    cfg.seed = a.seed;
    cfg.output_dir = a.out;
    cfg.validate();

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw FileError("cannot create directory", cfg.output_dir.string());

    const auto records = run_benchmark(cfg, [&](const BenchRecord& r) {
      err << "[bench] m=" << r.m << " trial=" << r.trial << " method=" << to_string(r.method);
      if (r.sketch) err << " sketch=" << to_string(*r.sketch) << " d=" << *r.d;
      err << " time=" << r.wall_time_s << "s fwd=" << r.forward_error << " res=" << r.residual_error
          << " iters=" << r.iterations << " (" << r.termination << ")\n";
    });
    write_csv(records, cfg.output_dir / "results.csv");
    write_config(cfg, cfg.output_dir / "config.txt");
    if (a.plot) render_plots(records, cfg.output_dir);
    err << "wrote " << records.size() << " records to " << (cfg.output_dir / "results.csv").string() << '\n';
    return int{kOk};
  });
}

/// Parses `args` (without the program name) and runs the chosen subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized sketching solvers for overdetermined least squares", "sketchls"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate an ill-conditioned test problem");
  g->add_option("--m", gen.m, "Rows")->required()->check(CLI::PositiveNumber);
  g->add_option("--n", gen.n, "Columns")->required()->check(CLI::PositiveNumber);
  g->add_option("--cond", gen.cond, "Condition number kappa")->capture_default_str();
  g->add_option("--beta", gen.beta, "Optimal residual norm")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->envname(kSeedEnv)->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  SolveArgs sol;
  std::optional<long long> max_iter;
  auto* s = app.add_subcommand("solve", "Solve min ||Ax - b|| for Matrix Market inputs");
  s->add_option("--A", sol.a_path, "Matrix file (.mtx)")->required();
  s->add_option("--b", sol.b_path, "Right-hand side file (.mtx)")->required();
  s->add_option("--method", sol.method, "lsqr, saa, sap or direct")
      ->check(CLI::IsMember({"lsqr", "saa", "sap", "direct"}))
      ->capture_default_str();
  s->add_option("--sketch", sol.sketch, "gaussian, srht, countsketch, sparsesign or identity")
      ->check(CLI::IsMember({"gaussian", "srht", "countsketch", "sparsesign", "identity"}))
      ->capture_default_str();
  s->add_option("--d-factor", sol.d_factor, "Embedding dimension as a multiple of n")->capture_default_str();
  s->add_option("--atol", sol.atol)->capture_default_str();
  s->add_option("--btol", sol.btol)->capture_default_str();
  s->add_option("--max-iter", max_iter, "Iteration cap (default 4n)");
  s->add_option("--seed", sol.seed, "Sketch seed")->envname(kSeedEnv)->capture_default_str();
  s->add_option("--out", sol.out, "Write the solution vector here (.mtx)");
  s->add_flag("--json", sol.json, "Print the summary as one JSON object");

  BenchArgs ben;
  auto* b = app.add_subcommand("bench", "Run a benchmark sweep and write results.csv");
  b->add_option("--m-list", ben.m_list, "Comma-separated row counts")->required();
  b->add_option("--n", ben.n, "Columns")->required();
  b->add_option("--cond", ben.cond)->capture_default_str();
  b->add_option("--beta", ben.beta)->capture_default_str();
  b->add_option("--methods", ben.methods)->capture_default_str();
  b->add_option("--sketches", ben.sketches)->capture_default_str();
  b->add_option("--d-factor", ben.d_factor)->capture_default_str();
  b->add_option("--repeats", ben.repeats)->capture_default_str();
  b->add_option("--seed", ben.seed)->envname(kSeedEnv)->capture_default_str();
  b->add_option("--out", ben.out, "Output directory")->required();
  b->add_flag("--plot", ben.plot, "Also write time.svg, forward_error.svg, residual_error.svg");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int{kOk} : int{kUsage};
  }

  if (g->parsed()) return cmd_gen(gen, err);
  if (s->parsed()) {
    if (max_iter) {
      if (*max_iter < 1) {
        err << "error: --max-iter must be at least 1\n";
        return kUsage;
      }
      sol.max_iter = static_cast<Index>(*max_iter);
    }
    return cmd_solve(sol, out, err);
  }
  return cmd_bench(ben, err);
}

}  // namespace sketchls::cli
