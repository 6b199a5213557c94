// Generates an ill-conditioned problem and compares the three solution paths.

#include <cstdio>

#include "sketchls/sketchls.hpp"

int main() {
  using namespace sketchls;
  const auto problem = generate_problem({.m = 20000, .n = 100, .kappa = 1e8, .beta = 1e-10, .seed = 7});

  SketchSpec spec;  // countsketch, d = 4n
  spec.seed = 42;
  for (Method method : {Method::lsqr, Method::saa, Method::sap}) {
    const auto res = solve(problem, method, spec);
    std::printf("%-5s  time %.3fs  iters %4ld  forward error %.2e  residual %.3e\n",
                std::string(to_string(method)).c_str(), res.wall_time_s, static_cast<long>(res.iterations),
                forward_error(res.x, *problem.x_star), res.residual_norm);
  }
}
