// drpo command line: data generation, SFT, listwise training, evaluation and
// a couple of diagnostic commands.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drpo/data.hpp"
#include "drpo/error.hpp"
#include "drpo/harness.hpp"
#include "drpo/metrics.hpp"
#include "drpo/policy.hpp"
#include "drpo/sortnet.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct GenArgs {
  std::string out;
  drpo::SynthConfig synth;
};

struct SftArgs {
  std::string data, out, init;
  drpo::SftConfig sft;
  std::size_t vocab = 128;
  std::size_t embed_dim = 16;
  std::uint64_t init_seed = 0;
};

struct TrainArgs {
  std::string data, init, out, metrics;
  std::string loss = "diffndcg", score = "arp", discount = "inv_log", network = "odd_even";
  drpo::TrainConfig config;
};

struct EvalArgs {
  std::string model, data;
  std::string discount = "inv_log";
  bool header = false;
};

struct GradcheckArgs {
  std::size_t k = 4;
  double alpha = 1.0;
  std::string loss = "diffndcg", network = "odd_even", discount = "inv_log";
  std::size_t points = 20;
  std::uint64_t seed = 0;
};

struct SortDemoArgs {
  std::string scores;
  double alpha = 1.0;
  std::string network = "odd_even";
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::vector<double> parse_scores(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw drpo::DomainError("bad score '" + item + "'");
    }
    if (used != item.size()) throw drpo::DomainError("bad score '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw drpo::DomainError("no scores given");
  return out;
}

int run_gen(const GenArgs& a) {
  a.synth.validate();
  drpo::write_jsonl(drpo::synth_generate(a.synth), a.out);
  return kOk;
}

int run_sft(const SftArgs& a) {
  const drpo::Dataset data = drpo::read_jsonl(a.data);
  if (data.empty()) throw drpo::DataError(a.data + ": dataset is empty");
  drpo::Checkpoint ckpt{a.init.empty() ? drpo::TinyPolicy::init(a.init_seed, a.vocab, a.embed_dim)
                                       : drpo::load_checkpoint(a.init).policy,
                        {}};
  drpo::SftReport report;
  ckpt.policy = drpo::sft_train(std::move(ckpt.policy), data, a.sft, &report);
  drpo::save_checkpoint(ckpt, a.out);
  for (std::size_t e = 0; e < report.mean_loglik.size(); ++e) {
    std::cout << "epoch " << e << " mean_loglik " << fmt(report.mean_loglik[e]) << '\n';
  }
  return kOk;
}

int run_train(TrainArgs a) {
  a.config.loss = drpo::parse_loss_kind(a.loss);
  a.config.score = drpo::parse_score_kind(a.score);
  a.config.discount = drpo::parse_discount(a.discount);
  a.config.network = drpo::parse_network_kind(a.network);
  a.config.validate();
  const drpo::Dataset data = drpo::read_jsonl(a.data);
  if (data.empty()) throw drpo::DataError(a.data + ": dataset is empty");
  drpo::Checkpoint init = drpo::load_checkpoint(a.init);
  const drpo::TrainResult result =
      drpo::train(a.config, data, std::move(init.policy), std::move(init.ema));
  drpo::save_checkpoint({result.policy, result.ema}, a.out);
  if (!a.metrics.empty()) {
    std::ofstream out(a.metrics, std::ios::binary);
    if (!out) throw drpo::DataError("cannot write " + a.metrics);
    drpo::write_metrics_csv(result.history, out);
  }
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "step " << last.step << " eval_ndcg " << fmt(last.eval_ndcg) << '\n';
  }
  return kOk;
}

int run_eval(const EvalArgs& a) {
  const drpo::Checkpoint ckpt = drpo::load_checkpoint(a.model);
  const drpo::Dataset data = drpo::read_jsonl(a.data);
  if (data.empty()) throw drpo::DataError(a.data + ": dataset is empty");
  const auto report = drpo::eval_report(ckpt.policy, data, drpo::parse_discount(a.discount));
  if (a.header) std::cout << drpo::kEvalReportColumns << '\n';
  std::cout << drpo::to_csv_row(report) << '\n';
  return kOk;
}

int run_gradcheck(const GradcheckArgs& a) {
  drpo::TrainConfig config;
  config.alpha = a.alpha;
  config.loss = drpo::parse_loss_kind(a.loss);
  config.network = drpo::parse_network_kind(a.network);
  config.discount = drpo::parse_discount(a.discount);
  if (!(a.alpha > 0.0)) throw drpo::DomainError("alpha must be > 0");
  const double err = drpo::gradcheck_loss(config, a.k, a.points, a.seed);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", err);
  std::cout << "max_rel_error " << buf << '\n';
  return err <= 1e-4 ? kOk : kNumeric;
}

int run_sort_demo(const SortDemoArgs& a) {
  const std::vector<double> raw = parse_scores(a.scores);
  drpo::Tape tape;
  std::vector<drpo::Value> scores;
  for (double s : raw) scores.push_back(tape.constant(s));
  const auto result =
      drpo::soft_sort(scores, drpo::SortConfig{a.alpha, drpo::parse_network_kind(a.network)});
  const std::size_t k = raw.size();
  std::cout << "P_soft\n";
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t d = 0; d < k; ++d) {
      std::cout << (d ? " " : "") << fmt(result.p_soft(j, d).data());
    }
    std::cout << '\n';
  }
  std::cout << "sorted";
  for (const auto& v : result.sorted) std::cout << ' ' << fmt(v.data());
  std::cout << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Listwise preference optimization with a differentiable NDCG surrogate"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic ranking dataset (JSONL)");
  gen_cmd->add_option("--out", gen.out, "Output file")->required();
  gen_cmd->add_option("--prompts", gen.synth.n_prompts, "Number of prompts")->capture_default_str();
  gen_cmd->add_option("--k", gen.synth.k, "Responses per prompt")->capture_default_str();
  gen_cmd->add_option("--seed", gen.synth.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--corruption-step", gen.synth.corruption_step,
                      "Fraction of tokens corrupted per rank")
      ->capture_default_str();
  gen_cmd->add_option("--prompt-len", gen.synth.prompt_len)->capture_default_str();
  gen_cmd->add_option("--response-len", gen.synth.response_len)->capture_default_str();

  SftArgs sft;
  auto* sft_cmd = app.add_subcommand("sft", "Supervised fine-tuning on top responses");
  sft_cmd->add_option("--data", sft.data, "Dataset (JSONL)")->required();
  sft_cmd->add_option("--out", sft.out, "Output checkpoint")->required();
  sft_cmd->add_option("--epochs", sft.sft.epochs)->capture_default_str();
  sft_cmd->add_option("--lr", sft.sft.lr)->capture_default_str();
  sft_cmd->add_option("--batch", sft.sft.batch_size)->capture_default_str();
  sft_cmd->add_option("--seed", sft.sft.seed, "Shuffle seed")->capture_default_str();
  sft_cmd->add_option("--init-seed", sft.init_seed, "Parameter init seed")->capture_default_str();
  sft_cmd->add_option("--init", sft.init, "Start from this checkpoint instead of a fresh init");
  sft_cmd->add_option("--vocab", sft.vocab)->capture_default_str();
  sft_cmd->add_option("--embed-dim", sft.embed_dim)->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Listwise preference training");
  train_cmd->add_option("--data", tr.data, "Dataset (JSONL)")->required();
  train_cmd->add_option("--init", tr.init, "Initial checkpoint")->required();
  train_cmd->add_option("--out", tr.out, "Output checkpoint")->required();
  train_cmd->add_option("--metrics", tr.metrics, "Metrics CSV");
  train_cmd->add_option("--loss", tr.loss, "diffndcg|ce|listnet|listmle|pairlogistic")
      ->capture_default_str();
  train_cmd->add_option("--score", tr.score, "arp|prr|base")->capture_default_str();
  train_cmd->add_option("--discount", tr.discount, "inv_log|inv|inv_sqrt|inv_sq")
      ->capture_default_str();
  train_cmd->add_option("--network", tr.network, "odd_even|bitonic")->capture_default_str();
  train_cmd->add_option("--alpha", tr.config.alpha)->capture_default_str();
  train_cmd->add_option("--tau", tr.config.tau)->capture_default_str();
  train_cmd->add_option("--beta", tr.config.beta_arp, "Margin weight")->capture_default_str();
  train_cmd->add_option("--beta-prr", tr.config.beta_prr)->capture_default_str();
  train_cmd->add_option("--ema-decay", tr.config.ema_decay)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.lr)->capture_default_str();
  train_cmd->add_option("--steps", tr.config.steps)->capture_default_str();
  train_cmd->add_option("--warmup", tr.config.warmup_steps)->capture_default_str();
  train_cmd->add_option("--batch", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed)->capture_default_str();
  train_cmd->add_option("--holdout", tr.config.holdout)->capture_default_str();
  train_cmd->add_option("--eval-interval", tr.config.eval_interval)->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints one CSV row");
  eval_cmd->add_option("--model", ev.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset (JSONL)")->required();
  eval_cmd->add_option("--discount", ev.discount)->capture_default_str();
  eval_cmd->add_flag("--header", ev.header, "Print the column names first");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of a loss gradient");
  gc_cmd->add_option("--k", gc.k)->capture_default_str();
  gc_cmd->add_option("--alpha", gc.alpha)->capture_default_str();
  gc_cmd->add_option("--loss", gc.loss)->capture_default_str();
  gc_cmd->add_option("--network", gc.network)->capture_default_str();
  gc_cmd->add_option("--discount", gc.discount)->capture_default_str();
  gc_cmd->add_option("--points", gc.points)->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();

  SortDemoArgs sd;
  auto* sd_cmd = app.add_subcommand("sort-demo", "Print the relaxed permutation of a score list");
  sd_cmd->add_option("--scores", sd.scores, "Comma-separated scores")->required();
  sd_cmd->add_option("--alpha", sd.alpha)->capture_default_str();
  sd_cmd->add_option("--network", sd.network)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*sft_cmd) return run_sft(sft);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*gc_cmd) return run_gradcheck(gc);
    if (*sd_cmd) return run_sort_demo(sd);
  } catch (const drpo::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const drpo::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const drpo::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
