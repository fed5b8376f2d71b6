#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "drpo/diffcalc.hpp"
#include "drpo/error.hpp"
#include "test_support.hpp"

using namespace drpo;

namespace {

// Central difference on a plain double function.
template <typename F>
double central(F f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("leaf stores its value") {
  Tape t;
  CHECK(t.leaf(3.0).data() == 3.0);
  CHECK(t.leaf(0.0).data() == 0.0);
  CHECK_THROWS_AS(t.leaf(std::nan("")), DomainError);
  CHECK_THROWS_AS(t.leaf(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("arithmetic forward values") {
  Tape t;
  const Value a = t.leaf(2.0), b = t.leaf(3.0);
  CHECK(t.arith(a, b, ArithKind::Mul).data() == 6.0);
  CHECK((a + b).data() == 5.0);
  CHECK((a - b).data() == -1.0);
  CHECK((a / b).data() == doctest::Approx(2.0 / 3.0));
  CHECK((-a).data() == -2.0);
  CHECK_THROWS_AS(t.leaf(5.0) / t.leaf(0.0), DomainError);
  CHECK_THROWS_AS(a / 0.0, DomainError);
}

TEST_CASE("product gradient matches finite differences") {
  Tape t;
  const Value a = t.leaf(2.0, true), b = t.leaf(3.0, true);
  const auto g = t.backward(a * b);
  CHECK(g[a] == doctest::Approx(central([](double x) { return x * 3.0; }, 2.0)).epsilon(1e-8));
  CHECK(g[b] == doctest::Approx(central([](double y) { return 2.0 * y; }, 3.0)).epsilon(1e-8));
}

TEST_CASE("unary ops") {
  Tape t;
  CHECK(pow2(t.leaf(0.0)).data() == 1.0);
  CHECK(ln(t.leaf(1.0)).data() == 0.0);
  CHECK(exp(t.leaf(0.0)).data() == 1.0);
  CHECK_THROWS_AS(ln(t.leaf(0.0)), DomainError);
  CHECK_THROWS_AS(ln(t.leaf(-1.0)), DomainError);

  const Value x = t.leaf(1.0, true);
  const auto g = t.backward(pow2(x));
  CHECK(g[x] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(g[x] == doctest::Approx(central([](double v) { return std::exp2(v); }, 1.0)).epsilon(1e-8));
  CHECK(g[x] == doctest::Approx(1.386294).epsilon(1e-6));
}

TEST_CASE("ln and exp gradients") {
  Tape t;
  const Value x = t.leaf(0.7, true);
  const Value y = ln(x) * exp(x);
  const auto g = t.backward(y);
  const double fd = central([](double v) { return std::log(v) * std::exp(v); }, 0.7);
  CHECK(g[x] == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("backward basics") {
  Tape t;
  const Value x = t.leaf(3.0, true);
  CHECK(t.backward(x)[x] == 1.0);

  const Value sq = x * x;
  CHECK(t.backward(sq)[x] == doctest::Approx(central([](double v) { return v * v; }, 3.0)));
  CHECK(t.backward(sq)[x] == doctest::Approx(6.0));

  const Value lonely = t.leaf(1.5, true);
  const auto g = t.backward(sq);
  REQUIRE(g.contains(lonely.id()));
  CHECK(g[lonely] == 0.0);

  const Value c = t.constant(2.0);
  CHECK_FALSE(g.contains(c.id()));
  CHECK_THROWS_AS(g.at(c.id()), DomainError);
}

TEST_CASE("reused node accumulates adjoints") {
  Tape t;
  const Value x = t.leaf(1.3, true);
  const Value y = x * x * x + 2.0 * x;
  CHECK(t.backward(y)[x] == doctest::Approx(3.0 * 1.3 * 1.3 + 2.0).epsilon(1e-12));
}

TEST_CASE("tape is topological and replays exactly") {
  Tape t;
  drpo::Rng rng(7);
  std::vector<Value> xs;
  for (int i = 0; i < 6; ++i) xs.push_back(t.leaf(rng.uniform(0.5, 2.0), true));
  Value acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) {
    acc = (acc * xs[i] + ln(xs[i])) / (1.0 + xs[i - 1]);
    acc = acc - pow2(xs[i] * 0.1);
  }
  for (NodeId id = 0; id < t.size(); ++id) {
    for (NodeId p : t.parents(id)) CHECK(p < id);
  }
  const auto replay = t.replay();
  REQUIRE(replay.size() == t.size());
  for (NodeId id = 0; id < t.size(); ++id) CHECK(replay[id] == t.data(id));
}

TEST_CASE("fused node carries caller partials") {
  Tape t;
  const Value a = t.leaf(2.0, true), b = t.leaf(5.0, true);
  const std::vector<Value> parents{a, b};
  const std::vector<double> partials{0.25, 0.0};
  const Value f = t.fused(9.0, parents, partials);
  CHECK(t.kind(f.id()) == OpKind::Fused);
  CHECK(t.parents(f.id()).size() == 1);
  const auto g = t.backward(f * 2.0);
  CHECK(g[a] == 0.5);
  CHECK(g[b] == 0.0);
}

TEST_CASE("finite_diff_check") {
  drpo::Rng rng(3);
  const auto point = testing_support::random_vector(rng, 5, -2.0, 2.0);

  const TapeFunction total = [](Tape&, std::span<const Value> x) { return sum(x); };
  CHECK(finite_diff_check(total, point, 1e-5) <= 1e-8);

  const TapeFunction constant = [](Tape& t, std::span<const Value>) { return t.constant(4.0); };
  CHECK(finite_diff_check(constant, point, 1e-5) == 0.0);

  const TapeFunction smooth = [](Tape&, std::span<const Value> x) {
    Value acc = x[0] * x[1];
    for (std::size_t i = 2; i < x.size(); ++i) acc = acc + pow2(x[i]) * x[i - 1];
    return acc;
  };
  CHECK(finite_diff_check(smooth, point, 1e-5) <= 1e-6);

  // A wrong local partial is caught.
  const TapeFunction broken = [](Tape& t, std::span<const Value> x) {
    const std::vector<Value> parents{x[0]};
    const std::vector<double> partials{1.0};
    return t.fused(x[0].data() * x[0].data(), parents, partials);
  };
  CHECK(finite_diff_check(broken, point, 1e-5) > 1e-2);
}

TEST_CASE("value_and_grad") {
  const TapeFunction f = [](Tape&, std::span<const Value> x) { return x[0] * x[0] + 3.0 * x[1]; };
  const std::vector<double> p{2.0, -1.0};
  const auto [v, g] = value_and_grad(f, p);
  CHECK(v == doctest::Approx(1.0));
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(3.0));
}

TEST_CASE("mixing tapes is rejected") {
  Tape t1, t2;
  CHECK_THROWS_AS(t1.leaf(1.0) + t2.leaf(2.0), DomainError);
}

TEST_CASE("non-finite results are numeric errors") {
  Tape t;
  CHECK_THROWS_AS(pow2(t.leaf(5000.0)), NumericError);
  CHECK_THROWS_AS(t.leaf(1e200) * t.leaf(1e200), NumericError);
}

TEST_CASE("clear resets the tape") {
  Tape t;
  t.leaf(1.0) + t.leaf(2.0);
  CHECK(t.size() == 3);
  t.clear();
  CHECK(t.size() == 0);
}
