#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "drpo/data.hpp"
#include "drpo/losses.hpp"
#include "drpo/policy.hpp"

namespace drpo {

/// Concordant / strictly ordered relevance pairs; predicted ties count 0.5.
/// Empty when relevance has no strictly ordered pair.
std::optional<double> ranking_accuracy(std::span<const double> pred,
                                       std::span<const double> relevance);

/// 1 when the stable argmax of pred has maximal relevance.
double precision_at_1(std::span<const double> pred, std::span<const double> relevance);

/// Sample Pearson correlation. Throws DomainError for n < 2 or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct EvalReport {
  double mean_ndcg = 0.0;
  double ranking_accuracy = 0.0;  // NaN if no sample had an ordered pair
  double precision_at_1 = 0.0;
  double mean_base_loglik = 0.0;  // nats per token, over all responses
  std::size_t n_samples = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores every response by its length-normalized log-likelihood (no margin)
/// and averages the per-sample metrics in dataset order.
EvalReport eval_report(const TinyPolicy& policy, const Dataset& dataset,
                       DiscountScheme scheme = DiscountScheme::InvLog);

/// "mean_ndcg,ranking_accuracy,precision_at_1,mean_base_loglik,n_samples"
inline constexpr const char* kEvalReportColumns =
    "mean_ndcg,ranking_accuracy,precision_at_1,mean_base_loglik,n_samples";
std::string to_csv_row(const EvalReport& report);

}  // namespace drpo
