#include "drpo/sortnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "drpo/error.hpp"

namespace drpo {

namespace {

constexpr double kPadGap = 1e6;

double pad_sentinel(std::span<const double> scores) {
  return *std::min_element(scores.begin(), scores.end()) - kPadGap;
}

}  // namespace

NetworkKind parse_network_kind(std::string_view name) {
  if (name == "odd_even" || name == "odd-even" || name == "oddeven") return NetworkKind::OddEven;
  if (name == "bitonic") return NetworkKind::Bitonic;
  throw DomainError("unknown network kind '" + std::string(name) + "'");
}

std::string_view to_string(NetworkKind kind) {
  return kind == NetworkKind::OddEven ? "odd_even" : "bitonic";
}

std::size_t ComparatorSchedule::comparator_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

ComparatorSchedule odd_even_schedule(std::size_t k) {
  if (k == 0) throw DomainError("odd_even_schedule: k must be >= 1");
  ComparatorSchedule s{k, k, NetworkKind::OddEven, {}};
  s.layers.resize(k);
  for (std::size_t layer = 0; layer < k; ++layer) {
    for (std::size_t i = layer % 2; i + 1 < k; i += 2) s.layers[layer].push_back({i, i + 1});
  }
  return s;
}

ComparatorSchedule bitonic_schedule(std::size_t k) {
  if (k == 0) throw DomainError("bitonic_schedule: k must be >= 1");
  std::size_t n = 1;
  while (n < k) n *= 2;
  ComparatorSchedule s{k, n, NetworkKind::Bitonic, {}};
  for (std::size_t block = 2; block <= n; block *= 2) {
    // Mirror comparators merge two sorted halves of each block.
    ComparatorLayer mirror;
    for (std::size_t start = 0; start < n; start += block) {
      for (std::size_t t = 0; t < block / 2; ++t) mirror.push_back({start + t, start + block - 1 - t});
    }
    s.layers.push_back(std::move(mirror));
    for (std::size_t half = block / 4; half >= 1; half /= 2) {
      ComparatorLayer cleaner;
      for (std::size_t start = 0; start < n; start += 2 * half) {
        for (std::size_t t = 0; t < half; ++t) cleaner.push_back({start + t, start + t + half});
      }
      s.layers.push_back(std::move(cleaner));
    }
  }
  return s;
}

ComparatorSchedule make_schedule(NetworkKind kind, std::size_t k) {
  return kind == NetworkKind::OddEven ? odd_even_schedule(k) : bitonic_schedule(k);
}

std::vector<double> apply_hard(const ComparatorSchedule& schedule, std::span<const double> scores) {
  if (scores.size() != schedule.k) throw DomainError("apply_hard: length mismatch");
  std::vector<double> v(scores.begin(), scores.end());
  v.resize(schedule.width, schedule.width > schedule.k ? pad_sentinel(scores) : 0.0);
  for (const auto& layer : schedule.layers) {
    for (const auto& c : layer) {
      if (v[c.lower] > v[c.upper]) std::swap(v[c.lower], v[c.upper]);
    }
  }
  v.resize(schedule.k);
  return v;
}

double soft_h(double x, double alpha) {
  const double ax = alpha * x;
  if (ax < -0.25) return -1.0 / (16.0 * ax);
  if (ax > 0.25) return 1.0 - 1.0 / (16.0 * ax);
  return ax + 0.5;
}

Value soft_h(Value x, double alpha) {
  const double ax = alpha * x.data();
  if (ax < -0.25) return (-1.0 / (16.0 * alpha)) / x;
  if (ax > 0.25) return 1.0 - (1.0 / (16.0 * alpha)) / x;
  return alpha * x + 0.5;
}

SoftPair soft_swap(Value a, Value b, double alpha) {
  const Value h = soft_h(b - a, alpha);
  const Value keep = 1.0 - h;
  return {a * keep + b * h, a * h + b * keep};
}

double kink_distance(const ComparatorSchedule& schedule, std::span<const double> scores,
                     double alpha) {
  if (scores.size() != schedule.k) throw DomainError("kink_distance: length mismatch");
  std::vector<double> v(scores.begin(), scores.end());
  std::vector<bool> pad(schedule.width, false);
  v.resize(schedule.width, 0.0);
  std::fill(pad.begin() + static_cast<std::ptrdiff_t>(schedule.k), pad.end(), true);
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& layer : schedule.layers) {
    for (const auto& c : layer) {
      if (pad[c.upper] || pad[c.lower]) {
        if (pad[c.upper] && !pad[c.lower]) {
          std::swap(v[c.upper], v[c.lower]);
          std::swap(pad[c.upper], pad[c.lower]);
        }
        continue;
      }
      const double x = v[c.lower] - v[c.upper];
      closest = std::min(closest, std::abs(std::abs(alpha * x) - 0.25));
      const double h = soft_h(x, alpha);
      const double hi = v[c.upper] * (1.0 - h) + v[c.lower] * h;
      const double lo = v[c.upper] * h + v[c.lower] * (1.0 - h);
      v[c.upper] = hi;
      v[c.lower] = lo;
    }
  }
  return closest;
}

SoftPermutation::SoftPermutation(std::size_t k, std::vector<Value> entries)
    : k_(k), entries_(std::move(entries)) {
  if (entries_.size() != k_ * k_) throw DomainError("SoftPermutation: expected k*k entries");
}

SoftPermutation SoftPermutation::from_matrix(Tape& tape, std::size_t k,
                                             std::span<const double> entries) {
  if (entries.size() != k * k) throw DomainError("SoftPermutation: expected k*k entries");
  std::vector<Value> vals;
  vals.reserve(entries.size());
  for (double e : entries) vals.push_back(tape.constant(e));
  return SoftPermutation(k, std::move(vals));
}

std::vector<double> SoftPermutation::matrix() const {
  std::vector<double> m(entries_.size());
  std::transform(entries_.begin(), entries_.end(), m.begin(), [](const Value& v) { return v.data(); });
  return m;
}

SoftSortResult soft_sort(std::span<const Value> scores, const ComparatorSchedule& schedule,
                         double alpha) {
  if (!(alpha > 0.0)) throw DomainError("soft_sort: alpha must be > 0");
  if (scores.size() != schedule.k || scores.empty()) {
    throw DomainError("soft_sort: expected " + std::to_string(schedule.k) + " scores, got " +
                      std::to_string(scores.size()));
  }
  Tape& tape = *scores.front().tape();
  const std::size_t n = schedule.width;
  const std::size_t k = schedule.k;

  const Value zero = tape.constant(0.0);
  const Value one = tape.constant(1.0);
  auto is_zero = [&](const Value& v) { return v.id() == zero.id(); };

  std::vector<Value> p(n * n, zero);
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = one;

  std::vector<Value> current(scores.begin(), scores.end());
  std::vector<bool> pad(n, false);
  if (n > k) {
    std::vector<double> raw(k);
    for (std::size_t i = 0; i < k; ++i) raw[i] = scores[i].data();
    const Value sentinel = tape.constant(pad_sentinel(raw));
    current.resize(n, sentinel);
    std::fill(pad.begin() + static_cast<std::ptrdiff_t>(k), pad.end(), true);
  }

  for (const auto& layer : schedule.layers) {
    for (const auto& c : layer) {
      const std::size_t u = c.upper;
      const std::size_t l = c.lower;
      // Pads carry no real mass; a pad reaching the upper slot is swapped out
      // exactly so real rows and columns stay closed under the network.
      if (pad[u] || pad[l]) {
        if (pad[u] && !pad[l]) {
          for (std::size_t r = 0; r < n; ++r) std::swap(p[r * n + u], p[r * n + l]);
          std::swap(current[u], current[l]);
          std::swap(pad[u], pad[l]);
        }
        continue;
      }
      const Value h = soft_h(current[l] - current[u], alpha);
      const Value keep = 1.0 - h;
      const Value hi = current[u] * keep + current[l] * h;
      const Value lo = current[u] * h + current[l] * keep;
      current[u] = hi;
      current[l] = lo;
      for (std::size_t r = 0; r < n; ++r) {
        const Value pu = p[r * n + u];
        const Value pl = p[r * n + l];
        const bool zu = is_zero(pu);
        const bool zl = is_zero(pl);
        if (zu && zl) continue;
        if (zl) {
          p[r * n + u] = pu * keep;
          p[r * n + l] = pu * h;
        } else if (zu) {
          p[r * n + u] = pl * h;
          p[r * n + l] = pl * keep;
        } else {
          p[r * n + u] = pu * keep + pl * h;
          p[r * n + l] = pu * h + pl * keep;
        }
      }
    }
  }

  std::vector<Value> entries;
  entries.reserve(k * k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t d = 0; d < k; ++d) entries.push_back(p[j * n + d]);
  }
  SoftPermutation p_soft(k, std::move(entries));

  std::vector<Value> sorted;
  sorted.reserve(k);
  for (std::size_t d = 0; d < k; ++d) {
    Value acc = zero;
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (is_zero(p_soft(j, d))) continue;
      const Value term = p_soft(j, d) * scores[j];
      acc = any ? acc + term : term;
      any = true;
    }
    sorted.push_back(acc);
  }
  return {std::move(p_soft), std::move(sorted)};
}

SoftSortResult soft_sort(std::span<const Value> scores, const SortConfig& config) {
  if (scores.empty()) throw DomainError("soft_sort: empty score vector");
  return soft_sort(scores, make_schedule(config.network, scores.size()), config.alpha);
}

std::vector<std::size_t> HardPermutation::order() const {
  std::vector<std::size_t> out(position_of.size());
  for (std::size_t j = 0; j < position_of.size(); ++j) out[position_of[j]] = j;
  return out;
}

std::vector<double> HardPermutation::matrix() const {
  const std::size_t k = position_of.size();
  std::vector<double> m(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) m[j * k + position_of[j]] = 1.0;
  return m;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

HardSortResult hard_sort(std::span<const double> scores) {
  const auto order = descending_order(scores);
  HardSortResult out;
  out.p_hard.position_of.resize(scores.size());
  out.sorted.resize(scores.size());
  for (std::size_t d = 0; d < order.size(); ++d) {
    out.p_hard.position_of[order[d]] = d;
    out.sorted[d] = scores[order[d]];
  }
  return out;
}

}  // namespace drpo
