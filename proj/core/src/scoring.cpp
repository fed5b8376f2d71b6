#include "drpo/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "drpo/error.hpp"
#include "drpo/sortnet.hpp"

namespace drpo {

void ScoreConfig::validate() const {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw DomainError("ema_decay must be in [0,1]");
  if (!(beta_prr > 0.0)) throw DomainError("beta_prr must be > 0");
  if (!std::isfinite(beta_arp)) throw DomainError("beta_arp must be finite");
}

RankAssignment ground_truth_ranks(std::span<const double> relevance) {
  RankAssignment out;
  out.q = hard_sort(relevance).p_hard.position_of;
  return out;
}

double EmaState::value(std::size_t rank) const {
  if (rank >= entries_.size() || !entries_[rank].initialized) return 0.0;
  return entries_[rank].value;
}

bool EmaState::initialized(std::size_t rank) const {
  return rank < entries_.size() && entries_[rank].initialized;
}

void EmaState::observe(std::size_t rank, double x, double decay) {
  if (!std::isfinite(x)) throw NumericError("EMA observation is not finite");
  if (rank >= entries_.size()) entries_.resize(rank + 1);
  Entry& e = entries_[rank];
  if (!e.initialized) {
    e = {x, true};
    return;
  }
  e.value = decay * e.value + (1.0 - decay) * x;
}

void EmaState::set(std::size_t rank, Entry entry) {
  if (rank >= entries_.size()) entries_.resize(rank + 1);
  entries_[rank] = entry;
}

bool operator==(const EmaState& a, const EmaState& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (a.initialized(r) != b.initialized(r) || a.value(r) != b.value(r)) return false;
  }
  return true;
}

ScoreVector base_scores(const PolicyBinding& policy, const RankingSample& sample) {
  const TokenSeq prompt = tokenize(sample.prompt);
  ScoreVector out;
  out.reserve(sample.k());
  for (const auto& r : sample.responses) {
    const TokenSeq resp = tokenize(r);
    if (resp.empty()) throw DomainError("base_scores: empty response");
    out.push_back(policy.log_prob(prompt, resp) / static_cast<double>(resp.size()));
  }
  return out;
}

std::vector<double> base_score_values(const TinyPolicy& policy, const RankingSample& sample) {
  const TokenSeq prompt = tokenize(sample.prompt);
  std::vector<double> out;
  out.reserve(sample.k());
  for (const auto& r : sample.responses) {
    const TokenSeq resp = tokenize(r);
    if (resp.empty()) throw DomainError("base_scores: empty response");
    out.push_back(policy.log_prob(prompt, resp) / static_cast<double>(resp.size()));
  }
  return out;
}

ScoreVector prr_scores(const PolicyBinding& policy, const TinyPolicy& reference,
                       const RankingSample& sample, double beta_prr) {
  const TokenSeq prompt = tokenize(sample.prompt);
  ScoreVector out;
  out.reserve(sample.k());
  for (const auto& r : sample.responses) {
    const TokenSeq resp = tokenize(r);
    const double ref = reference.log_prob(prompt, resp);
    out.push_back((policy.log_prob(prompt, resp) - ref) * beta_prr);
  }
  return out;
}

ScoreVector arp_scores(std::span<const Value> base, const RankAssignment& ranks,
                       const EmaState& ema, const ScoreConfig& config) {
  if (base.size() != ranks.size()) {
    throw DomainError("arp_scores: " + std::to_string(base.size()) + " scores but " +
                      std::to_string(ranks.size()) + " ranks");
  }
  ScoreVector out;
  out.reserve(base.size());
  for (std::size_t j = 0; j < base.size(); ++j) {
    const std::size_t q = ranks.q[j];
    const double margin = config.tau * static_cast<double>(q) - config.beta_arp * ema.value(q);
    out.push_back(base[j] + margin);
  }
  return out;
}

void ema_update(EmaState& ema, const RankAssignment& ranks, std::span<const double> base,
                double decay) {
  if (base.size() != ranks.size()) throw DomainError("ema_update: length mismatch");
  if (!(decay >= 0.0 && decay <= 1.0)) throw DomainError("ema_update: decay must be in [0,1]");
  for (std::size_t j = 0; j < base.size(); ++j) ema.observe(ranks.q[j], base[j], decay);
}

void ema_update_batch(EmaState& ema, std::span<const RankAssignment> ranks,
                      std::span<const std::vector<double>> base, double decay) {
  if (ranks.size() != base.size()) throw DomainError("ema_update_batch: length mismatch");
  if (!(decay >= 0.0 && decay <= 1.0)) throw DomainError("ema_update: decay must be in [0,1]");
  std::vector<double> sum;
  std::vector<std::size_t> count;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (base[i].size() != ranks[i].size()) throw DomainError("ema_update_batch: length mismatch");
    for (std::size_t j = 0; j < base[i].size(); ++j) {
      const std::size_t q = ranks[i].q[j];
      if (q >= sum.size()) {
        sum.resize(q + 1, 0.0);
        count.resize(q + 1, 0);
      }
      sum[q] += base[i][j];
      ++count[q];
    }
  }
  for (std::size_t q = 0; q < sum.size(); ++q) {
    if (count[q]) ema.observe(q, sum[q] / static_cast<double>(count[q]), decay);
  }
}

}  // namespace drpo
