#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "drpo/error.hpp"
#include "drpo/sortnet.hpp"
#include "test_support.hpp"

using namespace drpo;
using testing_support::max_abs_diff;

namespace {

bool sorts_all_permutations(const ComparatorSchedule& s, std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  std::vector<double> want(v.rbegin(), v.rend());
  do {
    if (apply_hard(s, v) != want) return false;
  } while (std::next_permutation(v.begin(), v.end()));
  return true;
}

std::vector<Value> constants(Tape& t, const std::vector<double>& xs) {
  std::vector<Value> out;
  for (double x : xs) out.push_back(t.constant(x));
  return out;
}

// Dense reference: one k x k swap matrix per layer, multiplied left to right,
// values propagated alongside. Only for unpadded schedules.
std::vector<double> dense_soft_perm(const ComparatorSchedule& s, std::vector<double> v,
                                    double alpha) {
  const std::size_t k = s.k;
  std::vector<double> p(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) p[i * k + i] = 1.0;
  for (const auto& layer : s.layers) {
    std::vector<double> m(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) m[i * k + i] = 1.0;
    std::vector<double> next = v;
    for (const auto& c : layer) {
      const double h = soft_h(v[c.lower] - v[c.upper], alpha);
      m[c.upper * k + c.upper] = 1.0 - h;
      m[c.lower * k + c.upper] = h;
      m[c.upper * k + c.lower] = h;
      m[c.lower * k + c.lower] = 1.0 - h;
      next[c.upper] = (1.0 - h) * v[c.upper] + h * v[c.lower];
      next[c.lower] = h * v[c.upper] + (1.0 - h) * v[c.lower];
    }
    std::vector<double> prod(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l) prod[i * k + j] += p[i * k + l] * m[l * k + j];
    p = prod;
    v = next;
  }
  return p;
}

void check_doubly_stochastic(const SoftPermutation& p, double tol) {
  const std::size_t k = p.k();
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row += p(i, j).data();
      col += p(j, i).data();
      CHECK(p(i, j).data() >= 0.0);
    }
    CHECK(std::abs(row - 1.0) <= tol);
    CHECK(std::abs(col - 1.0) <= tol);
  }
}

}  // namespace

TEST_CASE("odd-even schedule layout") {
  const auto s = odd_even_schedule(4);
  using L = ComparatorLayer;
  REQUIRE(s.layers.size() == 4);
  CHECK(s.layers[0] == L{{0, 1}, {2, 3}});
  CHECK(s.layers[1] == L{{1, 2}});
  CHECK(s.layers[2] == L{{0, 1}, {2, 3}});
  CHECK(s.layers[3] == L{{1, 2}});

  const auto one = odd_even_schedule(1);
  CHECK(one.layers.size() == 1);
  CHECK(one.layers[0].empty());
  CHECK_THROWS_AS(odd_even_schedule(0), DomainError);
}

TEST_CASE("odd-even sorts every permutation up to 7") {
  for (std::size_t n = 1; n <= 7; ++n) CHECK(sorts_all_permutations(odd_even_schedule(n), n));
}

TEST_CASE("bitonic schedule") {
  const auto s4 = bitonic_schedule(4);
  CHECK(s4.width == 4);
  CHECK(s4.layers.size() == 3);
  CHECK(s4.comparator_count() == 6);
  CHECK(sorts_all_permutations(s4, 4));

  const auto s1 = bitonic_schedule(1);
  CHECK(s1.width == 1);
  CHECK(s1.comparator_count() == 0);
  CHECK(apply_hard(s1, std::vector<double>{3.0}) == std::vector<double>{3.0});

  for (std::size_t n = 2; n <= 8; ++n) {
    const auto s = bitonic_schedule(n);
    CHECK(s.width >= n);
    CHECK(sorts_all_permutations(s, n));
  }
  // Comparator count of the power-of-two construction: (n/2) * m(m+1)/2, n = 2^m.
  CHECK(bitonic_schedule(8).comparator_count() == 4 * 6);
  CHECK(bitonic_schedule(16).comparator_count() == 8 * 10);
}

TEST_CASE("bitonic handles duplicates after padding") {
  const auto s = bitonic_schedule(5);
  CHECK(apply_hard(s, std::vector<double>{2, 2, -1, 7, 2}) == std::vector<double>{7, 2, 2, 2, -1});
}

TEST_CASE("network kind names") {
  CHECK(parse_network_kind("odd_even") == NetworkKind::OddEven);
  CHECK(parse_network_kind("bitonic") == NetworkKind::Bitonic);
  CHECK(to_string(NetworkKind::Bitonic) == "bitonic");
  CHECK_THROWS_AS(parse_network_kind("bubble"), DomainError);
}

TEST_CASE("soft_h values") {
  CHECK(soft_h(0.0, 1.0) == 0.5);
  CHECK(soft_h(0.5, 1.0) == doctest::Approx(0.875).epsilon(1e-15));
  // Both neighbouring branch formulas meet at the boundary.
  CHECK(soft_h(0.25, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(1.0 - 1.0 / (16.0 * 0.25) == doctest::Approx(0.25 + 0.5));
  CHECK(soft_h(-0.25, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(soft_h(-3.0, 2.0) == doctest::Approx(1.0 / 96.0));
}

TEST_CASE("soft_h properties on a grid") {
  for (double alpha : {0.5, 1.0, 4.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -5.0 + 10.0 * i / 1000.0;
      const double h = soft_h(x, alpha);
      CHECK(h > 0.0);
      CHECK(h < 1.0);
      CHECK(std::abs(h + soft_h(-x, alpha) - 1.0) <= 1e-12);
      CHECK(h >= prev);
      prev = h;
    }
  }
}

TEST_CASE("soft_h tape version matches and differentiates") {
  for (double x : {-2.0, -0.1, 0.0, 0.2, 3.0}) {
    Tape t;
    const Value v = t.leaf(x, true);
    const Value h = soft_h(v, 1.5);
    CHECK(h.data() == doctest::Approx(soft_h(x, 1.5)).epsilon(1e-15));
    const double fd = (soft_h(x + 1e-6, 1.5) - soft_h(x - 1e-6, 1.5)) / 2e-6;
    CHECK(t.backward(h)[v] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("soft_swap") {
  Tape t;
  const auto p = soft_swap(t.constant(2.0), t.constant(4.0), 1.0);
  CHECK(p.max.data() == doctest::Approx(3.9375).epsilon(1e-14));
  CHECK(p.min.data() == doctest::Approx(2.0625).epsilon(1e-14));

  const auto same = soft_swap(t.constant(1.7), t.constant(1.7), 3.0);
  CHECK(same.max.data() == doctest::Approx(1.7));
  CHECK(same.min.data() == doctest::Approx(1.7));

  const auto hard = soft_swap(t.constant(2.0), t.constant(4.0), 1e6);
  CHECK(std::abs(hard.max.data() - 4.0) <= 1e-4);
  CHECK(std::abs(hard.min.data() - 2.0) <= 1e-4);
}

TEST_CASE("soft_sort on the four-element example") {
  Tape t;
  const auto r = soft_sort(constants(t, {10, 2, 4, 8}), SortConfig{1e4, NetworkKind::OddEven});
  const std::vector<double> want{10, 8, 4, 2};
  for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(r.sorted[d].data() - want[d]) <= 1e-3);
  const auto hard = hard_sort(std::vector<double>{10, 2, 4, 8});
  CHECK(max_abs_diff(r.p_soft.matrix(), hard.p_hard.matrix()) <= 1e-3);
}

TEST_CASE("soft_sort with one element") {
  Tape t;
  const auto r = soft_sort(constants(t, {3.5}), SortConfig{});
  CHECK(r.p_soft.k() == 1);
  CHECK(r.p_soft(0, 0).data() == 1.0);
  CHECK(r.sorted[0].data() == 3.5);
}

TEST_CASE("soft_sort agrees with a dense matrix product") {
  drpo::Rng rng(11);
  for (std::size_t k : {2u, 3u, 4u, 7u, 8u}) {
    for (auto kind : {NetworkKind::OddEven, NetworkKind::Bitonic}) {
      const auto sched = make_schedule(kind, k);
      if (sched.width != k) continue;
      for (double alpha : {0.3, 1.0, 10.0}) {
        const auto xs = testing_support::random_vector(rng, k, -3.0, 3.0);
        Tape t;
        const auto r = soft_sort(constants(t, xs), sched, alpha);
        const auto ref = dense_soft_perm(sched, xs, alpha);
        CHECK(max_abs_diff(r.p_soft.matrix(), ref) <= 1e-12);
        for (std::size_t d = 0; d < k; ++d) {
          double s = 0.0;
          for (std::size_t j = 0; j < k; ++j) s += ref[j * k + d] * xs[j];
          CHECK(r.sorted[d].data() == doctest::Approx(s).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("soft_sort is doubly stochastic") {
  drpo::Rng rng(5);
  for (std::size_t k : {2u, 3u, 5u, 8u}) {
    for (auto kind : {NetworkKind::OddEven, NetworkKind::Bitonic}) {
      for (double alpha : {0.1, 1.0, 100.0}) {
        Tape t;
        const auto r = soft_sort(constants(t, testing_support::random_vector(rng, k, -4, 4)),
                                 SortConfig{alpha, kind});
        check_doubly_stochastic(r.p_soft, 1e-9);
      }
    }
  }
}

TEST_CASE("soft_sort approaches hard sort for large alpha") {
  drpo::Rng rng(9);
  for (std::size_t k : {3u, 4u, 5u, 6u, 8u}) {
    for (auto kind : {NetworkKind::OddEven, NetworkKind::Bitonic}) {
      const auto xs = testing_support::spaced_scores(rng, k, 0.1);
      Tape t;
      const auto r = soft_sort(constants(t, xs), SortConfig{1e4, kind});
      const auto hard = hard_sort(xs);
      CHECK(max_abs_diff(r.p_soft.matrix(), hard.p_hard.matrix()) <= 1e-3);
    }
  }
}

TEST_CASE("soft_sort gradient matches finite differences") {
  drpo::Rng rng(13);
  for (auto kind : {NetworkKind::OddEven, NetworkKind::Bitonic}) {
    for (std::size_t k : {3u, 4u, 6u}) {
      const auto sched = make_schedule(kind, k);
      std::vector<double> xs;
      do {
        xs = testing_support::random_vector(rng, k, -1.5, 1.5);
      } while (kink_distance(sched, xs, 1.0) < 1e-3);
      const TapeFunction f = [&](Tape&, std::span<const Value> x) {
        const auto r = soft_sort(x, sched, 1.0);
        Value acc = r.sorted[0];
        for (std::size_t d = 1; d < k; ++d) acc = acc + r.sorted[d] * static_cast<double>(d + 1);
        return acc + r.p_soft(0, k - 1) * 3.0;
      };
      CHECK(finite_diff_check(f, xs, 1e-5) <= 1e-6);
    }
  }
}

TEST_CASE("soft_sort rejects bad input") {
  Tape t;
  CHECK_THROWS_AS(soft_sort(constants(t, {1, 2}), SortConfig{0.0}), DomainError);
  CHECK_THROWS_AS(soft_sort(std::vector<Value>{}, SortConfig{}), DomainError);
  CHECK_THROWS_AS(soft_sort(constants(t, {1, 2, 3}), odd_even_schedule(4), 1.0), DomainError);
}

TEST_CASE("hard_sort") {
  const auto r = hard_sort(std::vector<double>{10, 2, 4, 8});
  CHECK(r.p_hard.position_of == std::vector<std::size_t>{0, 3, 2, 1});
  CHECK(r.sorted == std::vector<double>{10, 8, 4, 2});

  const auto ties = hard_sort(std::vector<double>{1, 1, 1});
  CHECK(ties.p_hard.position_of == std::vector<std::size_t>{0, 1, 2});

  const auto three = hard_sort(std::vector<double>{1, 3, 2});
  CHECK(three.sorted == std::vector<double>{3, 2, 1});
  CHECK(three.p_hard.position_of == std::vector<std::size_t>{2, 0, 1});
  CHECK(three.p_hard.order() == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("kink distance") {
  const auto s = odd_even_schedule(2);
  CHECK(kink_distance(s, std::vector<double>{0.0, 0.25}, 1.0) == doctest::Approx(0.0));
  CHECK(kink_distance(s, std::vector<double>{0.0, 1.0}, 1.0) == doctest::Approx(0.75));
}
