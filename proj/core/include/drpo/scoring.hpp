#pragma once

// Per-response ranking scores computed from a policy.

#include <cstddef>
#include <span>
#include <vector>

#include "drpo/data.hpp"
#include "drpo/diffcalc.hpp"
#include "drpo/policy.hpp"

namespace drpo {

using ScoreVector = std::vector<Value>;

struct ScoreConfig {
  double beta_prr = 0.1;    // strength of the policy/reference log-ratio
  double tau = 0.1;         // margin per rank step
  double beta_arp = 1.0;    // weight of the per-rank running average
  double ema_decay = 0.9999;

  void validate() const;
};

/// q[j] = rank of response j, 0 = most relevant. Ties go to the lower index.
struct RankAssignment {
  std::vector<std::size_t> q;

  std::size_t size() const { return q.size(); }
  friend bool operator==(const RankAssignment&, const RankAssignment&) = default;
};

RankAssignment ground_truth_ranks(std::span<const double> relevance);

/// Per-rank exponential moving average of length-normalized log-likelihoods.
class EmaState {
 public:
  struct Entry {
    double value = 0.0;
    bool initialized = false;
  };

  EmaState() = default;
  explicit EmaState(std::size_t ranks) : entries_(ranks) {}

  /// Uninitialized or never-seen ranks read as 0.
  double value(std::size_t rank) const;
  bool initialized(std::size_t rank) const;

  /// V <- decay*V + (1-decay)*x; the first observation of a rank is written
  /// through unchanged.
  void observe(std::size_t rank, double x, double decay);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void set(std::size_t rank, Entry entry);

  friend bool operator==(const EmaState& a, const EmaState& b);

 private:
  std::vector<Entry> entries_;
};

/// log pi(y_j | x) / |y_j| as tape values. Throws DomainError on an empty response.
ScoreVector base_scores(const PolicyBinding& policy, const RankingSample& sample);

/// Detached counterpart of base_scores.
std::vector<double> base_score_values(const TinyPolicy& policy, const RankingSample& sample);

/// beta * (log pi(y_j|x) - log pi_ref(y_j|x)), not length-normalized.
ScoreVector prr_scores(const PolicyBinding& policy, const TinyPolicy& reference,
                       const RankingSample& sample, double beta_prr);

/// base_j + tau*q_j - beta_arp*V[q_j]. The margin is a constant on the tape.
ScoreVector arp_scores(std::span<const Value> base, const RankAssignment& ranks,
                       const EmaState& ema, const ScoreConfig& config);

/// One observation per response of the sample.
void ema_update(EmaState& ema, const RankAssignment& ranks, std::span<const double> base,
                double decay);

/// Averages the detached base scores of a batch per rank, then applies one
/// observation per rank present.
void ema_update_batch(EmaState& ema, std::span<const RankAssignment> ranks,
                      std::span<const std::vector<double>> base, double decay);

}  // namespace drpo
