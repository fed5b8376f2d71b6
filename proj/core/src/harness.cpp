#include "drpo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "drpo/error.hpp"
#include "drpo/random.hpp"
#include "json_text.hpp"

namespace drpo {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "diffndcg") return LossKind::DiffNdcg;
  if (name == "ce") return LossKind::CrossEntropy;
  if (name == "listnet") return LossKind::ListNet;
  if (name == "listmle") return LossKind::ListMle;
  if (name == "pairlogistic") return LossKind::PairLogistic;
  throw DomainError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::DiffNdcg: return "diffndcg";
    case LossKind::CrossEntropy: return "ce";
    case LossKind::ListNet: return "listnet";
    case LossKind::ListMle: return "listmle";
    case LossKind::PairLogistic: return "pairlogistic";
  }
  return "?";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "arp") return ScoreKind::Arp;
  if (name == "prr") return ScoreKind::Prr;
  if (name == "base") return ScoreKind::Base;
  throw DomainError("unknown score '" + std::string(name) + "'");
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Arp: return "arp";
    case ScoreKind::Prr: return "prr";
    case ScoreKind::Base: return "base";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be > 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw DomainError("lr must be >= 0");
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  if (eval_interval == 0) throw DomainError("eval interval must be >= 1");
  if (!(holdout > 0.0 && holdout < 1.0)) throw DomainError("holdout must be in (0,1)");
  score_config().validate();
}

ScoreConfig TrainConfig::score_config() const { return {beta_prr, tau, beta_arp, ema_decay}; }

double lr_at(std::size_t step, const TrainConfig& config) {
  return warmup_lr(step, config.lr, config.warmup_steps);
}

void write_metrics_csv(std::span<const MetricsRow> rows, std::ostream& out) {
  out << kMetricsHeader << '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                  r.train_loss, r.diffndcg, r.eval_ndcg, r.ranking_accuracy, r.precision_at_1,
                  r.mean_loglik);
    out << buf;
  }
}

Value loss_on_scores(std::span<const Value> scores, std::span<const double> relevance,
                     const TrainConfig& config) {
  switch (config.loss) {
    case LossKind::DiffNdcg: {
      const auto sorted = soft_sort(scores, config.sort_config());
      return drpo_loss(sorted.p_soft, relevance, config.discount);
    }
    case LossKind::CrossEntropy: {
      const auto sorted = soft_sort(scores, config.sort_config());
      return ce_perm_loss(sorted.p_soft, ground_permutation(relevance));
    }
    case LossKind::ListNet: return listnet_loss(scores, relevance);
    case LossKind::ListMle: return listmle_loss(scores, relevance);
    case LossKind::PairLogistic: return pairwise_logistic_loss(scores, relevance);
  }
  throw DomainError("unknown loss kind");
}

namespace {

double detached_diff_ndcg(std::span<const Value> scores, std::span<const double> relevance,
                          const TrainConfig& config) {
  Tape scratch;
  std::vector<Value> consts;
  consts.reserve(scores.size());
  for (const auto& s : scores) consts.push_back(scratch.constant(s.data()));
  const auto sorted = soft_sort(consts, config.sort_config());
  return diff_ndcg(sorted.p_soft, relevance, config.discount).data();
}

}  // namespace

double gradcheck_loss(const TrainConfig& config, std::size_t k, std::size_t points,
                      std::uint64_t seed, double eps) {
  if (k == 0) throw DomainError("gradcheck: k must be >= 1");
  const ComparatorSchedule schedule = make_schedule(config.network, k);
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<double> scores(k), relevance(k);
    do {
      for (double& s : scores) s = rng.uniform(-2.0, 2.0);
    } while (kink_distance(schedule, scores, config.alpha) < 1e-3);
    for (double& r : relevance) r = rng.uniform();
    const TapeFunction f = [&](Tape&, std::span<const Value> x) {
      return loss_on_scores(x, relevance, config);
    };
    worst = std::max(worst, finite_diff_check(f, scores, eps));
  }
  return worst;
}

SampleLoss sample_loss(const PolicyBinding& policy, const TinyPolicy* reference,
                       const RankingSample& sample, const EmaState& ema,
                       const TrainConfig& config) {
  SampleLoss out;
  out.ranks = ground_truth_ranks(sample.relevance);
  const ScoreVector base = base_scores(policy, sample);
  out.base.reserve(base.size());
  for (const auto& b : base) out.base.push_back(b.data());

  ScoreVector scores;
  switch (config.score) {
    case ScoreKind::Arp: scores = arp_scores(base, out.ranks, ema, config.score_config()); break;
    case ScoreKind::Base: scores = base; break;
    case ScoreKind::Prr:
      if (reference == nullptr) throw DomainError("prr scores need a reference policy");
      scores = prr_scores(policy, *reference, sample, config.beta_prr);
      break;
  }

  if (config.loss == LossKind::DiffNdcg) {
    const auto sorted = soft_sort(scores, config.sort_config());
    const Value score = diff_ndcg(sorted.p_soft, sample.relevance, config.discount);
    out.loss = -score;
    out.diffndcg = score.data();
  } else {
    out.loss = loss_on_scores(scores, sample.relevance, config);
    out.diffndcg = detached_diff_ndcg(scores, sample.relevance, config);
  }
  return out;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& eval_set,
                  TinyPolicy init, EmaState ema) {
  config.validate();
  if (train_set.empty()) throw DataError("training dataset is empty");
  if (eval_set.empty()) throw DataError("evaluation dataset is empty");
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    train_set.samples[i].validate();
    if (train_set.samples[i].k() < 2) {
      throw DataError("training sample " + std::to_string(i) + " has fewer than 2 responses");
    }
  }

  TrainResult result{std::move(init), std::move(ema), {}};
  TinyPolicy& policy = result.policy;
  const TinyPolicy reference = policy.clone_frozen();
  RmspropState state(policy.params().size());
  Rng rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t cursor = 0;

  Tape tape;
  double loss_acc = 0.0, ndcg_acc = 0.0;
  std::size_t acc_steps = 0;
  std::vector<RankAssignment> batch_ranks;
  std::vector<std::vector<double>> batch_base;

  // Step 0 evaluates the initial policy; its loss columns are left at zero.
  if (config.steps > 0) {
    const EvalReport report = eval_report(policy, eval_set, config.discount);
    result.history.push_back(MetricsRow{0, 0.0, 0.0, report.mean_ndcg, report.ranking_accuracy,
                                        report.precision_at_1, report.mean_base_loglik});
  }

  for (std::size_t step = 1; step <= config.steps; ++step) {
    tape.clear();
    batch_ranks.clear();
    batch_base.clear();
    std::vector<double> grad;
    double batch_loss = 0.0, batch_ndcg = 0.0;
    {
      const PolicyBinding bound(policy, tape);
      std::vector<Value> losses;
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        if (cursor == order.size()) {
          rng.shuffle(order);
          cursor = 0;
        }
        const std::size_t idx = order[cursor++];
        const RankingSample& sample = train_set.samples[idx];
        SampleLoss sl = sample_loss(bound, &reference, sample, result.ema, config);
        if (!std::isfinite(sl.loss.data())) {
          throw NumericError("non-finite loss at step " + std::to_string(step) +
                             " on training sample " + std::to_string(idx) + " (prompt " +
                             json_text::quote(sample.prompt) + ")");
        }
        losses.push_back(sl.loss);
        batch_ndcg += sl.diffndcg;
        batch_ranks.push_back(std::move(sl.ranks));
        batch_base.push_back(std::move(sl.base));
      }
      const Value total = sum(losses) / static_cast<double>(losses.size());
      batch_loss = total.data();
      grad = bound.gradient(tape.backward(total));
    }
    rmsprop_step(policy.mutable_params(), grad, state, lr_at(step, config));
    ema_update_batch(result.ema, batch_ranks, batch_base, config.ema_decay);

    loss_acc += batch_loss;
    ndcg_acc += batch_ndcg / static_cast<double>(config.batch_size);
    ++acc_steps;
    if (step % config.eval_interval == 0 || step == config.steps) {
      const EvalReport report = eval_report(policy, eval_set, config.discount);
      result.history.push_back(MetricsRow{step, loss_acc / static_cast<double>(acc_steps),
                                          ndcg_acc / static_cast<double>(acc_steps),
                                          report.mean_ndcg, report.ranking_accuracy,
                                          report.precision_at_1, report.mean_base_loglik});
      loss_acc = ndcg_acc = 0.0;
      acc_steps = 0;
    }
  }
  return result;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, TinyPolicy init,
                  EmaState ema) {
  config.validate();
  if (dataset.empty()) throw DataError("training dataset is empty");
  auto [train_set, eval_set] = split(dataset, config.holdout, config.seed);
  if (eval_set.empty()) eval_set = train_set;
  if (train_set.empty()) train_set = eval_set;
  return train(config, train_set, eval_set, std::move(init), std::move(ema));
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const auto& shape = ckpt.policy.shape();
  std::string text = "{\"ema\":[";
  const auto& entries = ckpt.ema.entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    if (r) text += ',';
    text += '[' + std::to_string(r) + ',' + json_text::number(entries[r].value) + ',' +
            (entries[r].initialized ? "true" : "false") + ']';
  }
  text += "],\"hyperparams\":{\"embed_dim\":" + std::to_string(shape.embed_dim) +
          ",\"vocab_size\":" + std::to_string(shape.vocab_size) + "},\"params\":" +
          json_text::number_array(ckpt.policy.params()) + "}\n";
  out << text;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  save_checkpoint(ckpt, out);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint (") + e.what() + ")");
  }
  try {
    const auto& hp = doc.at("hyperparams");
    PolicyShape shape{hp.at("vocab_size").get<std::size_t>(), hp.at("embed_dim").get<std::size_t>()};
    auto params = doc.at("params").get<std::vector<double>>();
    EmaState ema;
    for (const auto& e : doc.at("ema")) {
      if (!e.is_array() || e.size() != 3) throw DataError("checkpoint ema entries must be triples");
      ema.set(e.at(0).get<std::size_t>(), {e.at(1).get<double>(), e.at(2).get<bool>()});
    }
    return {TinyPolicy::from_params(shape, std::move(params)), std::move(ema)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid checkpoint (") + e.what() + ")");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return load_checkpoint(in);
}

}  // namespace drpo
