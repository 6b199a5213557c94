#pragma once

// Benchmark harness: error metrics, sweep runner, CSV log and SVG plots.
//
// residual_error is the relative residual suboptimality
//     (||A x_hat - b|| - beta) / ||b||,
// zero at the true optimum and comparable across problem sizes. It is clamped
// at 0 so roundoff never reports a point "better than optimal".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sketchls/errors.hpp"
#include "sketchls/format.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/lsqr.hpp"
#include "sketchls/probgen.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"
#include "sketchls/solvers.hpp"

namespace sketchls {

// ---------------------------------------------------------------------------
// Metrics

/// ||x_hat - x*|| / ||x*||
inline double forward_error(const Vector& x_hat, const Vector& x_star) {
  if (x_hat.size() != x_star.size()) throw ShapeError("forward_error: length mismatch");
  const double ref = x_star.norm();
  if (ref == 0.0) throw UndefinedMetricError("forward_error: ||x*|| is zero");
  return (x_hat.eigen() - x_star.eigen()).norm() / ref;
}

template <MatrixOperand M>
double residual_error(const M& a, const Vector& b, const Vector& x_hat, double beta) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) throw UndefinedMetricError("residual_error: ||b|| is zero");
  return std::max(0.0, (residual_norm(a, b, x_hat) - beta) / bnorm);
}

// ---------------------------------------------------------------------------
// Configuration and records

struct BenchConfig {
  std::vector<Index> m_list;
  Index n = 0;
  double kappa = 1e10;
  double beta = 1e-10;
  std::vector<Method> methods{Method::lsqr, Method::saa, Method::sap};
  std::vector<SketchKind> sketches{kDefaultSketch};
  double d_factor = 4.0;
  Index repeats = 3;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";

  void validate() const {
    if (m_list.empty()) throw SpecError("bench: m_list is empty");
    if (n < 1) throw SpecError("bench: n must be positive");
    for (Index m : m_list) {
      if (m < n) throw SpecError("bench: m=" + std::to_string(m) + " is smaller than n=" + std::to_string(n));
    }
    if (repeats < 1) throw SpecError("bench: repeats must be at least 1");
    if (methods.empty()) throw SpecError("bench: no methods selected");
    for (Method m : methods) {
      if (m == Method::direct) throw SpecError("bench: methods are lsqr, saa and sap");
    }
    const bool sketched = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::lsqr; });
    if (sketched && sketches.empty()) throw SpecError("bench: sketched methods need at least one sketch kind");
    SolverOptions opts;
    opts.d_factor = d_factor;
    opts.validate();
    for (Index m : m_list) ProblemSpec{m, n, kappa, beta, seed}.validate();
  }
};

struct BenchRecord {
  Method method = Method::lsqr;
  std::optional<SketchKind> sketch;
  Index m = 0;
  Index n = 0;
  std::optional<Index> d;
  double kappa = 0.0;
  double beta = 0.0;
  Index trial = 0;
  double wall_time_s = 0.0;
  double forward_error = 0.0;
  double residual_error = 0.0;
  Index iterations = 0;
  /// Termination name, or "failed" when the solver threw.
  std::string termination;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

/// Metric value written for failed solves (all metrics are nonnegative
/// otherwise).
inline constexpr double kFailedMetric = -1.0;

inline std::uint64_t problem_seed(std::uint64_t base, Index m, Index trial) {
  return rng::derive_key(rng::derive_key(base, static_cast<std::uint64_t>(m)), static_cast<std::uint64_t>(trial));
}

inline std::uint64_t bench_sketch_seed(std::uint64_t problem_seed, Method method, SketchKind kind) {
  return rng::derive_key(derive_sketch_seed(problem_seed, method), static_cast<std::uint64_t>(kind));
}

/// Optional per-record progress sink (the CLI points it at stderr).
using BenchProgress = std::function<void(const BenchRecord&)>;

/// Runs every (m, trial, method, sketch) cell in that order. lsqr contributes
/// one record per (m, trial) since it takes no sketch. All methods of one
/// (m, trial) share a single generated problem. Solver errors are recorded as
/// termination "failed" and never abort the sweep.
inline std::vector<BenchRecord> run_benchmark(const BenchConfig& config, const BenchProgress& progress = {}) {
  config.validate();
  std::vector<BenchRecord> records;
  for (Index m : config.m_list) {
    for (Index trial = 0; trial < config.repeats; ++trial) {
      const ProblemSpec pspec{m, config.n, config.kappa, config.beta, problem_seed(config.seed, m, trial)};
      const auto problem = generate_problem(pspec);
      SolverOptions opts;
      opts.d_factor = config.d_factor;

      for (Method method : config.methods) {
        std::vector<std::optional<SketchKind>> kinds;
        if (method == Method::lsqr) {
          kinds.emplace_back(std::nullopt);
        } else {
          kinds.assign(config.sketches.begin(), config.sketches.end());
        }
        for (const auto& kind : kinds) {
          BenchRecord rec;
          rec.method = method;
          rec.sketch = kind;
          rec.m = m;
          rec.n = config.n;
          rec.kappa = config.kappa;
          rec.beta = config.beta;
          rec.trial = trial;
          SketchSpec spec;
          if (kind) {
            spec.kind = *kind;
            spec.seed = bench_sketch_seed(pspec.seed, method, *kind);
            rec.d = resolve_embed_dim(spec, m, config.n, config.d_factor);
          }
          try {
            const auto res = solve(problem, method, spec, opts);
            rec.wall_time_s = res.wall_time_s;
            rec.forward_error = forward_error(res.x, *problem.x_star);
            rec.residual_error = residual_error(problem.a, problem.b, res.x, config.beta);
            rec.iterations = res.iterations;
            rec.termination = std::string(to_string(res.termination));
          } catch (const Error&) {
            rec.wall_time_s = kFailedMetric;
            rec.forward_error = kFailedMetric;
            rec.residual_error = kFailedMetric;
            rec.iterations = 0;
            rec.termination = "failed";
          }
          if (progress) progress(rec);
          records.push_back(std::move(rec));
        }
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kCsvHeader =
    "method,sketch,m,n,d,kappa,beta,trial,wall_time_s,forward_error,residual_error,iterations,termination";

inline void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << (r.sketch ? to_string(*r.sketch) : "") << ',' << r.m << ',' << r.n << ','
       << (r.d ? std::to_string(*r.d) : "") << ',' << fmt::shortest(r.kappa) << ',' << fmt::shortest(r.beta) << ','
       << r.trial << ',' << fmt::shortest(r.wall_time_s) << ',' << fmt::shortest(r.forward_error) << ','
       << fmt::shortest(r.residual_error) << ',' << r.iterations << ',' << r.termination << '\n';
  }
}

inline void write_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot open for writing", path.string());
  write_csv(os, records);
  os.flush();
  if (!os) throw FileError("write failed", path.string());
}

inline std::vector<BenchRecord> parse_csv(std::string_view text, const std::string& source = "<memory>") {
  std::vector<BenchRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) -> void {
    throw ParseError("csv line " + std::to_string(line_no) + ": " + what, source);
  };
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kCsvHeader) fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t s = 0;
    while (true) {
      const auto c = line.find(',', s);
      f.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (f.size() != 13) fail("expected 13 fields, got " + std::to_string(f.size()));
    const auto integer = [&](std::string_view v) {
      const auto x = fmt::parse_int<long long>(v);
      if (!x) fail("bad integer '" + std::string(v) + "'");
      return static_cast<Index>(*x);
    };
    const auto real = [&](std::string_view v) {
      const auto x = fmt::parse_double(v);
      if (!x) fail("bad number '" + std::string(v) + "'");
      return *x;
    };
    BenchRecord r;
    try {
      r.method = parse_method(f[0]);
      if (!f[1].empty()) r.sketch = parse_sketch_kind(f[1]);
    } catch (const SpecError& e) {
      fail(e.what());
    }
    r.m = integer(f[2]);
    r.n = integer(f[3]);
    if (!f[4].empty()) r.d = integer(f[4]);
    r.kappa = real(f[5]);
    r.beta = real(f[6]);
    r.trial = integer(f[7]);
    r.wall_time_s = real(f[8]);
    r.forward_error = real(f[9]);
    r.residual_error = real(f[10]);
    r.iterations = integer(f[11]);
    r.termination = std::string(f[12]);
    out.push_back(std::move(r));
  }
  if (line_no == 0) throw ParseError("csv is empty", source);
  return out;
}

inline std::vector<BenchRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open for reading", path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_csv(ss.str(), path.string());
}

/// Human-readable echo of the sweep configuration, written next to results.
inline void write_config(const BenchConfig& c, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot open for writing", path.string());
  const auto join = [](const auto& items, auto name) {
    std::string s;
    for (const auto& it : items) s += (s.empty() ? "" : ",") + std::string(name(it));
    return s;
  };
  os << "m_list=" << join(c.m_list, [](Index m) { return std::to_string(m); }) << "\n"
     << "n=" << c.n << "\n"
     << "kappa=" << fmt::shortest(c.kappa) << "\n"
     << "beta=" << fmt::shortest(c.beta) << "\n"
     << "methods=" << join(c.methods, [](Method m) { return to_string(m); }) << "\n"
     << "sketches=" << join(c.sketches, [](SketchKind k) { return to_string(k); }) << "\n"
     << "d_factor=" << fmt::shortest(c.d_factor) << "\n"
     << "repeats=" << c.repeats << "\n"
     << "seed=" << c.seed << "\n";
  if (!os) throw FileError("write failed", path.string());
}

// ---------------------------------------------------------------------------
// Plots

inline double median(std::vector<double> values) {
  if (values.empty()) throw UndefinedMetricError("median of an empty set");
  std::sort(values.begin(), values.end());
  const auto k = values.size() / 2;
  return values.size() % 2 == 1 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

struct PlotPoint {
  double m;
  double value;
};

/// Median-over-trials series keyed by "method" or "method/sketch". Failed
/// records are skipped.
inline std::map<std::string, std::vector<PlotPoint>> plot_series(const std::vector<BenchRecord>& records,
                                                                 double BenchRecord::*metric) {
  std::map<std::string, std::map<Index, std::vector<double>>> grouped;
  for (const auto& r : records) {
    if (r.termination == "failed") continue;
    std::string label(to_string(r.method));
    if (r.sketch) label += "/" + std::string(to_string(*r.sketch));
    grouped[label][r.m].push_back(r.*metric);
  }
  std::map<std::string, std::vector<PlotPoint>> out;
  for (auto& [label, by_m] : grouped) {
    for (auto& [m, vals] : by_m) out[label].push_back({static_cast<double>(m), median(vals)});
  }
  return out;
}

namespace detail {

/// Values at or below zero cannot sit on a log axis; they are drawn at this
/// floor.
inline constexpr double kLogFloor = 1e-17;

inline std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_loglog_svg(const std::filesystem::path& path, const std::string& title, const std::string& ylabel,
                             const std::map<std::string, std::vector<PlotPoint>>& series) {
  constexpr double width = 720;
  constexpr double height = 480;
  constexpr double left = 90;
  constexpr double right = 200;
  constexpr double top = 50;
  constexpr double bottom = 60;
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (const auto& [label, pts] : series) {
    for (const auto& p : pts) {
      const double lx = std::log10(p.m);
      const double ly = std::log10(std::max(p.value, kLogFloor));
      xmin = std::min(xmin, lx);
      xmax = std::max(xmax, lx);
      ymin = std::min(ymin, ly);
      ymax = std::max(ymax, ly);
    }
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const auto sx = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

  std::ofstream os(path);
  if (!os) throw FileError("cannot open for writing", path.string());
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text class=\"title\" x=\"" << left + pw / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
     << svg_escape(title) << "</text>\n";

  // Decade grid and tick labels.
  const double ystep = std::max(1.0, std::ceil((ymax - ymin) / 10.0));
  for (double e = xmin; e <= xmax + 1e-9; e += 1) {
    os << "<line x1=\"" << sx(e) << "\" y1=\"" << top << "\" x2=\"" << sx(e) << "\" y2=\"" << top + ph
       << "\" stroke=\"#dddddd\"/>\n"
       << "<text x=\"" << sx(e) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (double e = ymin; e <= ymax + 1e-9; e += ystep) {
    os << "<line x1=\"" << left << "\" y1=\"" << sy(e) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(e)
       << "\" stroke=\"#dddddd\"/>\n"
       << "<text x=\"" << left - 8 << "\" y=\"" << sy(e) + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text class=\"xlabel\" x=\"" << left + pw / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\">rows m</text>\n"
     << "<text class=\"ylabel\" transform=\"translate(22," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << svg_escape(ylabel) << "</text>\n";

  std::size_t idx = 0;
  for (const auto& [label, pts] : series) {
    const char* color = palette[idx % std::size(palette)];
    os << "<g class=\"series\" data-label=\"" << svg_escape(label) << "\">\n";
    if (pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& p : pts) {
        os << sx(std::log10(p.m)) << ',' << sy(std::log10(std::max(p.value, kLogFloor))) << ' ';
      }
      os << "\"/>\n";
    }
    for (const auto& p : pts) {
      os << "<circle class=\"marker\" cx=\"" << sx(std::log10(p.m)) << "\" cy=\""
         << sy(std::log10(std::max(p.value, kLogFloor))) << "\" r=\"4\" fill=\"" << color << "\">"
         << "<title>m=" << p.m << " value=" << fmt::shortest(p.value) << "</title></circle>\n";
    }
    os << "</g>\n";
    const double ly = top + 10 + 20 * static_cast<double>(idx);
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text class=\"legend\" x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << svg_escape(label)
       << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
  if (!os) throw FileError("write failed", path.string());
}

}  // namespace detail

/// Writes time.svg, forward_error.svg and residual_error.svg into out_dir:
/// log-log charts of the per-(method, sketch) median over trials against m.
inline void render_plots(const std::vector<BenchRecord>& records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw SpecError("render_plots: no records");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw FileError("cannot create directory", out_dir.string());
  detail::write_loglog_svg(out_dir / "time.svg", "Runtime", "wall time (s)",
                           plot_series(records, &BenchRecord::wall_time_s));
  detail::write_loglog_svg(out_dir / "forward_error.svg", "Forward error", "||x - x*|| / ||x*||",
                           plot_series(records, &BenchRecord::forward_error));
  detail::write_loglog_svg(out_dir / "residual_error.svg", "Residual error", "(||Ax - b|| - beta) / ||b||",
                           plot_series(records, &BenchRecord::residual_error));
}

}  // namespace sketchls
