#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "drpo/random.hpp"

namespace testing_support {

inline std::vector<double> random_vector(drpo::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Scores whose sorted neighbours differ by at least `gap`.
inline std::vector<double> spaced_scores(drpo::Rng& rng, std::size_t n, double gap) {
  std::vector<double> v(n);
  double x = rng.uniform(-1.0, 1.0);
  for (double& s : v) {
    s = x;
    x += gap + rng.uniform(0.0, 1.0);
  }
  rng.shuffle(v);
  return v;
}

// Random doubly stochastic matrix as a convex mix of permutation matrices.
inline std::vector<double> random_doubly_stochastic(drpo::Rng& rng, std::size_t k,
                                                    std::size_t terms) {
  std::vector<double> m(k * k, 0.0);
  std::vector<double> w(terms);
  for (double& x : w) x = rng.uniform(0.01, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> perm(k);
  for (std::size_t t = 0; t < terms; ++t) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    for (std::size_t j = 0; j < k; ++j) m[j * k + perm[j]] += w[t] / total;
  }
  return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace testing_support
