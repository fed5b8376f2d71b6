#include "drpo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drpo/error.hpp"

namespace drpo {

namespace {

constexpr double kCeClamp = 1e-12;

double gain(double relevance) { return std::exp2(relevance) - 1.0; }

Value log_sum_exp(std::span<const Value> xs) {
  double m = xs.front().data();
  for (const auto& x : xs) m = std::max(m, x.data());
  std::vector<Value> terms;
  terms.reserve(xs.size());
  for (const auto& x : xs) terms.push_back(exp(x - m));
  return ln(sum(terms)) + m;
}

// ln(1 + e^z) without overflow.
Value softplus(Value z) {
  if (z.data() > 0.0) return z + ln(1.0 + exp(-z));
  return ln(1.0 + exp(z));
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
  if (a == 0) throw DomainError(std::string(what) + ": empty list");
}

}  // namespace

DiscountScheme parse_discount(std::string_view name) {
  if (name == "inv_log") return DiscountScheme::InvLog;
  if (name == "inv") return DiscountScheme::Inv;
  if (name == "inv_sqrt") return DiscountScheme::InvSqrt;
  if (name == "inv_sq") return DiscountScheme::InvSq;
  throw DomainError("unknown discount '" + std::string(name) + "'");
}

std::string_view to_string(DiscountScheme scheme) {
  switch (scheme) {
    case DiscountScheme::InvLog: return "inv_log";
    case DiscountScheme::Inv: return "inv";
    case DiscountScheme::InvSqrt: return "inv_sqrt";
    case DiscountScheme::InvSq: return "inv_sq";
  }
  return "?";
}

double discount(DiscountScheme scheme, std::size_t position) {
  if (position == 0) throw DomainError("discount: positions are 1-based");
  const auto d = static_cast<double>(position);
  switch (scheme) {
    case DiscountScheme::InvLog: return 1.0 / std::log2(1.0 + d);
    case DiscountScheme::Inv: return 1.0 / d;
    case DiscountScheme::InvSqrt: return 1.0 / std::sqrt(d);
    case DiscountScheme::InvSq: return 1.0 / (d * d);
  }
  throw DomainError("unknown discount scheme");
}

double idcg(std::span<const double> relevance, DiscountScheme scheme) {
  const auto order = descending_order(relevance);
  double acc = 0.0;
  for (std::size_t d = 0; d < order.size(); ++d) {
    acc += gain(relevance[order[d]]) * discount(scheme, d + 1);
  }
  return acc;
}

double ndcg(std::span<const double> pred_scores, std::span<const double> relevance,
            DiscountScheme scheme) {
  check_lengths(pred_scores.size(), relevance.size(), "ndcg");
  const double ideal = idcg(relevance, scheme);
  if (ideal <= 0.0) return 1.0;
  const auto order = descending_order(pred_scores);
  double acc = 0.0;
  for (std::size_t d = 0; d < order.size(); ++d) {
    acc += gain(relevance[order[d]]) * discount(scheme, d + 1);
  }
  return std::min(acc / ideal, 1.0);
}

Value diff_ndcg(const SoftPermutation& p_soft, std::span<const double> relevance,
                DiscountScheme scheme) {
  check_lengths(p_soft.k(), relevance.size(), "diff_ndcg");
  Tape& tape = p_soft.tape();
  const double ideal = idcg(relevance, scheme);
  if (ideal <= 0.0) return tape.constant(1.0);
  const std::size_t k = p_soft.k();
  std::vector<Value> terms;
  terms.reserve(k);
  for (std::size_t d = 0; d < k; ++d) {
    std::vector<Value> mass;
    mass.reserve(k);
    for (std::size_t j = 0; j < k; ++j) mass.push_back(p_soft(j, d) * relevance[j]);
    const Value psi = sum(mass);
    terms.push_back((pow2(psi) - 1.0) * discount(scheme, d + 1));
  }
  const Value raw = sum(terms) / ideal;
  // Rounding can push a gain-optimal arrangement a few ulps past 1. Remove the
  // excess as a constant so the value is capped and the gradient is untouched.
  if (raw.data() > 1.0) return raw - tape.constant(raw.data() - 1.0);
  return raw;
}

Value drpo_loss(const SoftPermutation& p_soft, std::span<const double> relevance,
                DiscountScheme scheme) {
  return -diff_ndcg(p_soft, relevance, scheme);
}

HardPermutation ground_permutation(std::span<const double> relevance) {
  return hard_sort(relevance).p_hard;
}

Value ce_perm_loss(const SoftPermutation& p_soft, const HardPermutation& p_ground) {
  check_lengths(p_soft.k(), p_ground.k(), "ce_perm_loss");
  Tape& tape = p_soft.tape();
  const std::size_t k = p_soft.k();
  std::vector<Value> terms;
  terms.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Value& p = p_soft(j, p_ground.position_of[j]);
    if (p.data() < kCeClamp) {
      terms.push_back(tape.constant(std::log(kCeClamp)));
    } else if (p.data() >= 1.0) {
      terms.push_back(tape.constant(0.0));
    } else {
      terms.push_back(ln(p));
    }
  }
  return -sum(terms) / static_cast<double>(k);
}

Value listnet_loss(std::span<const Value> pred, std::span<const double> relevance) {
  check_lengths(pred.size(), relevance.size(), "listnet_loss");
  const double m = *std::max_element(relevance.begin(), relevance.end());
  std::vector<double> target(relevance.size());
  double z = 0.0;
  for (std::size_t j = 0; j < relevance.size(); ++j) z += target[j] = std::exp(relevance[j] - m);
  const Value lse = log_sum_exp(pred);
  std::vector<Value> terms;
  terms.reserve(pred.size());
  for (std::size_t j = 0; j < pred.size(); ++j) terms.push_back((pred[j] - lse) * (target[j] / z));
  return -sum(terms);
}

Value listmle_loss(std::span<const Value> pred, std::span<const double> relevance) {
  check_lengths(pred.size(), relevance.size(), "listmle_loss");
  const auto order = descending_order(relevance);
  std::vector<Value> ordered;
  ordered.reserve(order.size());
  for (std::size_t idx : order) ordered.push_back(pred[idx]);
  std::vector<Value> terms;
  terms.reserve(order.size());
  for (std::size_t t = 0; t < ordered.size(); ++t) {
    const std::span<const Value> rest(ordered.begin() + static_cast<std::ptrdiff_t>(t), ordered.end());
    terms.push_back(log_sum_exp(rest) - ordered[t]);
  }
  return sum(terms);
}

Value pairwise_logistic_loss(std::span<const Value> pred, std::span<const double> relevance) {
  check_lengths(pred.size(), relevance.size(), "pairwise_logistic_loss");
  std::vector<Value> terms;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    for (std::size_t l = 0; l < pred.size(); ++l) {
      if (relevance[j] > relevance[l]) terms.push_back(softplus(pred[l] - pred[j]));
    }
  }
  if (terms.empty()) return pred.front().tape()->constant(0.0);
  return sum(terms) / static_cast<double>(terms.size());
}

}  // namespace drpo
