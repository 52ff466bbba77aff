// Walks the warehouse strategy and the simple Markov approximation on the
// sample data: shifted uniform clouds on [0,1] and [2,3], and the mirror
// transfunction on a 16-point grid.

#include <cstdio>
#include <string>

#include "tfn.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : TFN_SAMPLE_DATA;
  const auto lambda = tfn::io::load_measure(dir + "/uniform_0_1.json");
  const auto rho = tfn::io::load_measure(dir + "/uniform_2_3.json");

  const auto cov = tfn::build_covering(tfn::Box{{0.0}, {3.0}}, {4, 8, 16, 32});
  const auto cost = tfn::CostFunction::power_distance(1.0, 1.0);
  std::printf("warehouse strategy, exact W1 = 2\n");
  std::printf("%6s %10s %10s %10s %10s %10s\n", "n", "first", "middle", "last", "total", "budget");
  for (int n : cov.levels()) {
    const auto rep = tfn::warehouse_strategy(lambda, rho, cost, tfn::CellPartition(cov, n));
    std::printf("%6d %10.6f %10.6f %10.6f %10.6f %10.6f\n", n, rep.first, rep.middle, rep.last, rep.total(), rep.error_budget());
  }

  const auto mu = tfn::io::load_measure(dir + "/grid16.json");
  const auto phi = tfn::io::load_transfunction(dir + "/mirror.json");
  const auto unit = tfn::build_covering(tfn::Box{{0.0}, {1.0}}, {2, 4, 8});
  std::vector<tfn::PairField> battery{
      tfn::PairField("|x-y|", [](const tfn::Point& x, const tfn::Point& y) { return tfn::distance(x, y); })};
  std::printf("\nsimple Markov approximation of the mirror transfunction\n");
  std::printf("%6s %8s %12s %12s %12s\n", "n", "cells", "<c,kappa_n>", "gap", "beta_n");
  for (int n : unit.levels()) {
    const tfn::CellPartition cells(unit, n);
    const auto approx = tfn::simple_markov_approx(phi, mu, cells, cells, std::span<const tfn::PairField>(battery));
    const auto& o = approx.oscillations.front();
    std::printf("%6d %8zu %12.6f %12.6f %12.6f\n", n, cells.size(), approx.kappa_n_points.integrate(battery.front()), o.measured, o.beta_max);
  }
  return 0;
}
