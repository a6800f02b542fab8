#pragma once

// Random weight panels for search-vs-oracle comparisons: mixed continuous and
// heavily tied covariate columns, integer or continuous weights, partial
// active masks. Integer-weight panels make every candidate objective exact in
// floating point, so tie-breaking can be compared bitwise; continuous panels
// almost surely have no cross-set ties at all.

#include <random>

#include "dtr/clause_search.hpp"

struct PanelSetup {
  dtr::WeightPanel panel;
  double eta = 0.0;
  bool integer_weights = false;
};

inline PanelSetup random_panel(std::uint64_t seed, int max_n = 200, int max_d = 6, int max_m = 3) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int n = uniform_int(1, max_n);
  const int d = uniform_int(1, max_d);
  const int m = uniform_int(1, max_m);

  Eigen::MatrixXd X(n, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j = 0; j < d; ++j) {
    const int style = uniform_int(0, 3);
    for (int i = 0; i < n; ++i) {
      switch (style) {
        case 0: X(i, j) = normal(rng); break;                                // continuous
        case 1: X(i, j) = uniform_int(0, 3); break;                          // small grid
        case 2: X(i, j) = uniform_int(0, 1); break;                          // binary
        default: X(i, j) = 0.5 * uniform_int(-2, 2); break;                  // tied halves
      }
    }
  }

  std::vector<std::uint8_t> active(static_cast<std::size_t>(n));
  bool any = false;
  for (int i = 0; i < n; ++i) {
    active[static_cast<std::size_t>(i)] = uniform_int(0, 9) < 8 ? 1 : 0;
    any = any || active[static_cast<std::size_t>(i)];
  }
  if (!any) active[0] = 1;

  PanelSetup out;
  out.integer_weights = uniform_int(0, 1) == 0;
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    for (int a = 0; a < m; ++a)
      U(i, a) = out.integer_weights ? static_cast<double>(uniform_int(-5, 5)) : 2.0 * normal(rng);
  }
  out.eta = out.integer_weights ? 0.125 * uniform_int(0, 2)
                                : 0.05 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  out.panel = dtr::WeightPanel::make(std::move(X), std::move(U), std::move(active));
  return out;
}
