#pragma once

// Ranking losses over soft permutations and score vectors.
//
// DCG positions are 1-based: the top slot has discount(1).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "drpo/diffcalc.hpp"
#include "drpo/sortnet.hpp"

namespace drpo {

enum class DiscountScheme {
  InvLog,   // 1 / log2(1 + d)
  Inv,      // 1 / d
  InvSqrt,  // 1 / sqrt(d)
  InvSq,    // 1 / d^2
};

DiscountScheme parse_discount(std::string_view name);
std::string_view to_string(DiscountScheme scheme);

/// Discount at 1-based position d >= 1.
double discount(DiscountScheme scheme, std::size_t position);

/// DCG of the relevance-descending order. Zero means degenerate (all gains 0).
double idcg(std::span<const double> relevance, DiscountScheme scheme);

/// Hard NDCG of the order induced by pred_scores (stable ties). A degenerate
/// list (iDCG == 0) scores 1.0.
double ndcg(std::span<const double> pred_scores, std::span<const double> relevance,
            DiscountScheme scheme);

/// (1/iDCG) * sum_d (2^{psi'(d)} - 1) * discount(d) with psi' = P_soft^T s.
/// Degenerate lists give a constant 1.0 with no gradient.
Value diff_ndcg(const SoftPermutation& p_soft, std::span<const double> relevance,
                DiscountScheme scheme);

/// -diff_ndcg.
Value drpo_loss(const SoftPermutation& p_soft, std::span<const double> relevance,
                DiscountScheme scheme);

/// Target ordering as a permutation matrix.
using GroundPermutation = HardPermutation;

/// 0/1 matrix of the stable descending sort of relevance.
GroundPermutation ground_permutation(std::span<const double> relevance);

/// Column-wise cross entropy, averaged over positions, with P_soft entries
/// clamped to [1e-12, 1] inside the log.
Value ce_perm_loss(const SoftPermutation& p_soft, const GroundPermutation& p_ground);

/// Cross entropy between top-1 softmax distributions of relevance and pred.
Value listnet_loss(std::span<const Value> pred, std::span<const double> relevance);

/// Negative Plackett-Luce log-likelihood of the relevance-descending order.
Value listmle_loss(std::span<const Value> pred, std::span<const double> relevance);

/// Mean of -ln sigmoid(pred_j - pred_l) over pairs with relevance_j > relevance_l.
/// Zero (a tape constant) when no pair is strictly ordered.
Value pairwise_logistic_loss(std::span<const Value> pred, std::span<const double> relevance);

}  // namespace drpo
