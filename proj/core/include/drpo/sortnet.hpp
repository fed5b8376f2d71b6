#pragma once

// Sorting networks and their differentiable relaxation.
//
// Everything sorts in DESCENDING order: position 0 holds the largest score.
// A permutation matrix P has rows indexed by source element j and columns by
// target position d, so sorted = P^T * scores.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "drpo/diffcalc.hpp"

namespace drpo {

enum class NetworkKind { OddEven, Bitonic };

NetworkKind parse_network_kind(std::string_view name);
std::string_view to_string(NetworkKind kind);

/// Compare-swap between two positions. After the comparator the larger value
/// sits at `upper` (upper < lower).
struct Comparator {
  std::size_t upper;
  std::size_t lower;

  friend bool operator==(const Comparator&, const Comparator&) = default;
};

using ComparatorLayer = std::vector<Comparator>;

struct ComparatorSchedule {
  std::size_t k = 0;      // number of real inputs
  std::size_t width = 0;  // network width; width > k means padded positions
  NetworkKind kind = NetworkKind::OddEven;
  std::vector<ComparatorLayer> layers;

  std::size_t comparator_count() const;
};

/// K layers alternating {(0,1),(2,3),...} and {(1,2),(3,4),...}.
ComparatorSchedule odd_even_schedule(std::size_t k);

/// Bitonic network over the next power of two >= k. Every comparator sends
/// the max to the lower index, so no direction flags are needed.
ComparatorSchedule bitonic_schedule(std::size_t k);

ComparatorSchedule make_schedule(NetworkKind kind, std::size_t k);

/// Plain compare-swap through the schedule; padded positions hold a sentinel
/// below every input and are dropped from the result.
std::vector<double> apply_hard(const ComparatorSchedule& schedule, std::span<const double> scores);

/// Smallest | |alpha*x| - 1/4 | over every relaxed comparison the soft sort
/// of `scores` performs, x being the compared difference. Finite-difference
/// checks need this bounded away from zero.
double kink_distance(const ComparatorSchedule& schedule, std::span<const double> scores,
                     double alpha);

struct SortConfig {
  double alpha = 1.0;
  NetworkKind network = NetworkKind::OddEven;
};

/// S-shaped relaxation of the step function: -1/(16ax) for ax < -1/4,
/// 1 - 1/(16ax) for ax > 1/4, ax + 1/2 in between.
double soft_h(double x, double alpha);
Value soft_h(Value x, double alpha);

struct SoftPair {
  Value max;
  Value min;
};

SoftPair soft_swap(Value a, Value b, double alpha);

/// K x K doubly stochastic matrix of tape values; entry (j, d) is the mass of
/// source j placed at position d.
class SoftPermutation {
 public:
  SoftPermutation() = default;
  SoftPermutation(std::size_t k, std::vector<Value> entries);

  /// Wraps a plain matrix (row-major) as tape constants.
  static SoftPermutation from_matrix(Tape& tape, std::size_t k, std::span<const double> entries);

  std::size_t k() const { return k_; }
  const Value& operator()(std::size_t source, std::size_t position) const {
    return entries_[source * k_ + position];
  }
  std::vector<double> matrix() const;
  Tape& tape() const { return *entries_.front().tape(); }

 private:
  std::size_t k_ = 0;
  std::vector<Value> entries_;
};

struct SoftSortResult {
  SoftPermutation p_soft;
  std::vector<Value> sorted;
};

/// Product of the per-layer relaxed swap matrices and P_soft^T * scores.
SoftSortResult soft_sort(std::span<const Value> scores, const ComparatorSchedule& schedule,
                         double alpha);
SoftSortResult soft_sort(std::span<const Value> scores, const SortConfig& config);

struct HardPermutation {
  std::vector<std::size_t> position_of;  // source j -> position d

  std::size_t k() const { return position_of.size(); }
  /// Inverse map: position d -> source j.
  std::vector<std::size_t> order() const;
  /// Row-major 0/1 matrix.
  std::vector<double> matrix() const;
};

struct HardSortResult {
  HardPermutation p_hard;
  std::vector<double> sorted;
};

/// Exact stable descending sort; ties keep the lower source index first.
HardSortResult hard_sort(std::span<const double> scores);

/// Indices of `scores` in stable descending order.
std::vector<std::size_t> descending_order(std::span<const double> scores);

}  // namespace drpo
