#include "drpo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "drpo/error.hpp"
#include "drpo/scoring.hpp"

namespace drpo {

std::optional<double> ranking_accuracy(std::span<const double> pred,
                                       std::span<const double> relevance) {
  if (pred.size() != relevance.size()) throw DomainError("ranking_accuracy: length mismatch");
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    for (std::size_t l = 0; l < pred.size(); ++l) {
      if (!(relevance[j] > relevance[l])) continue;
      ++pairs;
      if (pred[j] > pred[l]) {
        concordant += 1.0;
      } else if (pred[j] == pred[l]) {
        concordant += 0.5;
      }
    }
  }
  if (pairs == 0) return std::nullopt;
  return concordant / static_cast<double>(pairs);
}

double precision_at_1(std::span<const double> pred, std::span<const double> relevance) {
  if (pred.size() != relevance.size() || pred.empty()) {
    throw DomainError("precision_at_1: length mismatch or empty list");
  }
  const auto top = std::max_element(pred.begin(), pred.end()) - pred.begin();
  const double best = *std::max_element(relevance.begin(), relevance.end());
  return relevance[static_cast<std::size_t>(top)] == best ? 1.0 : 0.0;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: length mismatch");
  if (xs.size() < 2) throw DomainError("pearson: need at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport eval_report(const TinyPolicy& policy, const Dataset& dataset, DiscountScheme scheme) {
  if (dataset.empty()) throw DataError("eval_report: empty dataset");
  double ndcg_sum = 0.0, acc_sum = 0.0, p1_sum = 0.0, loglik_sum = 0.0;
  std::size_t acc_count = 0, responses = 0;
  for (const auto& sample : dataset.samples) {
    const auto scores = base_score_values(policy, sample);
    ndcg_sum += ndcg(scores, sample.relevance, scheme);
    if (const auto acc = ranking_accuracy(scores, sample.relevance)) {
      acc_sum += *acc;
      ++acc_count;
    }
    p1_sum += precision_at_1(scores, sample.relevance);
    for (double s : scores) loglik_sum += s;
    responses += scores.size();
  }
  const auto n = static_cast<double>(dataset.size());
  EvalReport r;
  r.mean_ndcg = ndcg_sum / n;
  r.ranking_accuracy = acc_count ? acc_sum / static_cast<double>(acc_count)
                                 : std::numeric_limits<double>::quiet_NaN();
  r.precision_at_1 = p1_sum / n;
  r.mean_base_loglik = loglik_sum / static_cast<double>(responses);
  r.n_samples = dataset.size();
  return r;
}

std::string to_csv_row(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%zu", report.mean_ndcg,
                report.ranking_accuracy, report.precision_at_1, report.mean_base_loglik,
                report.n_samples);
  return buf;
}

}  // namespace drpo
