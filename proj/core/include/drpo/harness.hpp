#pragma once

// Listwise preference training loop, checkpoints and metrics logging.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "drpo/data.hpp"
#include "drpo/losses.hpp"
#include "drpo/metrics.hpp"
#include "drpo/optim.hpp"
#include "drpo/policy.hpp"
#include "drpo/scoring.hpp"
#include "drpo/sortnet.hpp"

namespace drpo {

enum class LossKind { DiffNdcg, CrossEntropy, ListNet, ListMle, PairLogistic };
enum class ScoreKind { Arp, Prr, Base };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);
ScoreKind parse_score_kind(std::string_view name);
std::string_view to_string(ScoreKind kind);

struct TrainConfig {
  LossKind loss = LossKind::DiffNdcg;
  ScoreKind score = ScoreKind::Arp;
  DiscountScheme discount = DiscountScheme::InvLog;
  NetworkKind network = NetworkKind::OddEven;
  double alpha = 1.0;
  double tau = 0.1;
  double beta_arp = 1.0;
  double beta_prr = 0.1;
  double ema_decay = 0.9999;
  double lr = 1e-2;
  std::size_t warmup_steps = 150;
  std::size_t steps = 2000;
  std::size_t batch_size = 4;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 0;
  double holdout = 0.1;

  /// Throws DomainError on an out-of-range field.
  void validate() const;
  ScoreConfig score_config() const;
  SortConfig sort_config() const { return {alpha, network}; }
};

/// Warmed-up learning rate for 1-based update number `step`.
double lr_at(std::size_t step, const TrainConfig& config);

struct MetricsRow {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean batch loss since the previous row
  double diffndcg = 0.0;    // mean training diffNDCG since the previous row
  double eval_ndcg = 0.0;
  double ranking_accuracy = 0.0;
  double precision_at_1 = 0.0;
  double mean_loglik = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "step,train_loss,diffndcg,eval_ndcg,ranking_accuracy,precision_at_1,mean_loglik";

void write_metrics_csv(std::span<const MetricsRow> rows, std::ostream& out);

/// Loss and diagnostics of one sample on a tape.
struct SampleLoss {
  Value loss;
  double diffndcg = 0.0;         // detached soft NDCG of the sample's scores
  std::vector<double> base;      // detached length-normalized log-likelihoods
  RankAssignment ranks;
};

/// Scores per config.score, sorts per config.network and evaluates config.loss.
/// `reference` is required for ScoreKind::Prr.
SampleLoss sample_loss(const PolicyBinding& policy, const TinyPolicy* reference,
                       const RankingSample& sample, const EmaState& ema,
                       const TrainConfig& config);

/// Loss of config.loss on raw score values (no policy), used by gradient checks.
Value loss_on_scores(std::span<const Value> scores, std::span<const double> relevance,
                     const TrainConfig& config);

/// Max finite_diff_check error of loss_on_scores w.r.t. the input scores over
/// `points` random (scores, relevance) draws. Scores are uniform in [-2, 2]
/// and redrawn until every relaxed comparison is at least 1e-3 (in alpha*x
/// units) away from a branch boundary of h.
double gradcheck_loss(const TrainConfig& config, std::size_t k, std::size_t points,
                      std::uint64_t seed, double eps = 1e-5);

struct TrainResult {
  TinyPolicy policy;
  EmaState ema;
  std::vector<MetricsRow> history;
};

/// Trains `init` on `train_set`, evaluating on `eval_set` every
/// config.eval_interval steps (and after the last step). Unless config.steps is 0,
/// history[0] is the evaluation of `init` at step 0. The reference for
/// PRR scores is a frozen copy of `init`. Throws NumericError naming the
/// offending sample if a loss is not finite.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& eval_set,
                  TinyPolicy init, EmaState ema = {});

/// Splits `dataset` with config.holdout / config.seed and trains.
TrainResult train(const TrainConfig& config, const Dataset& dataset, TinyPolicy init,
                  EmaState ema = {});

struct Checkpoint {
  TinyPolicy policy;
  EmaState ema;
};

/// {"ema":[[rank,value,initialized],...],"hyperparams":{...},"params":[...]}
void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drpo
