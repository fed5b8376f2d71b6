#include "drpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drpo/error.hpp"
#include "drpo/optim.hpp"
#include "drpo/random.hpp"

namespace drpo {

namespace {

struct Layout {
  std::size_t v, d;
  std::size_t embed, w_hid, b_hid, w_out, b_out, total;

  explicit Layout(const PolicyShape& s) : v(s.vocab_size), d(s.embed_dim) {
    embed = 0;
    w_hid = embed + v * d;
    b_hid = w_hid + d * d;
    w_out = b_hid + d;
    b_out = w_out + v * d;
    total = b_out + v;
  }
};

// Forward pass for one context; fills hidden activations and returns logits.
void forward(const Layout& L, std::span<const double> p, std::span<const double> mean_embed,
             std::vector<double>& act, std::vector<double>& logits) {
  for (std::size_t h = 0; h < L.d; ++h) {
    double z = p[L.b_hid + h];
    const double* row = &p[L.w_hid + h * L.d];
    for (std::size_t i = 0; i < L.d; ++i) z += row[i] * mean_embed[i];
    act[h] = std::tanh(z);
  }
  for (std::size_t o = 0; o < L.v; ++o) {
    double z = p[L.b_out + o];
    const double* row = &p[L.w_out + o * L.d];
    for (std::size_t h = 0; h < L.d; ++h) z += row[h] * act[h];
    logits[o] = z;
  }
}

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_tokens(std::span<const Token> tokens, std::size_t vocab) {
  for (Token t : tokens) {
    if (t >= vocab) {
      throw DomainError("token id " + std::to_string(t) + " outside vocabulary of " +
                        std::to_string(vocab));
    }
  }
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  out.reserve(text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

std::size_t PolicyShape::param_count() const { return Layout(*this).total; }

TinyPolicy TinyPolicy::init(std::uint64_t seed, std::size_t vocab_size, std::size_t embed_dim) {
  if (vocab_size == 0 || embed_dim == 0) throw DomainError("policy sizes must be >= 1");
  PolicyShape shape{vocab_size, embed_dim};
  std::vector<double> params(shape.param_count());
  Rng rng(seed);
  for (double& x : params) x = rng.uniform(-0.05, 0.05);
  return TinyPolicy(shape, std::move(params), false);
}

TinyPolicy TinyPolicy::from_params(PolicyShape shape, std::vector<double> params, bool frozen) {
  if (shape.vocab_size == 0 || shape.embed_dim == 0) throw DomainError("policy sizes must be >= 1");
  if (params.size() != shape.param_count()) {
    throw DataError("expected " + std::to_string(shape.param_count()) + " parameters, got " +
                    std::to_string(params.size()));
  }
  for (double x : params) {
    if (!std::isfinite(x)) throw DataError("non-finite policy parameter");
  }
  return TinyPolicy(shape, std::move(params), frozen);
}

std::span<double> TinyPolicy::mutable_params() {
  if (frozen_) throw DomainError("frozen policy rejects parameter updates");
  return params_;
}

TinyPolicy TinyPolicy::clone_frozen() const { return TinyPolicy(shape_, params_, true); }

std::vector<double> TinyPolicy::next_token_probs(std::span<const Token> context) const {
  const Layout L(shape_);
  check_tokens(context, L.v);
  std::vector<double> mean(L.d, 0.0);
  for (Token t : context) {
    for (std::size_t i = 0; i < L.d; ++i) mean[i] += params_[L.embed + t * L.d + i];
  }
  if (!context.empty()) {
    for (double& m : mean) m /= static_cast<double>(context.size());
  }
  std::vector<double> act(L.d), logits(L.v);
  forward(L, params_, mean, act, logits);
  const double lse = log_sum_exp(logits);
  for (double& l : logits) l = std::exp(l - lse);
  return logits;
}

double TinyPolicy::log_prob(std::span<const Token> prompt, std::span<const Token> response) const {
  return log_prob(prompt, response, {});
}

double TinyPolicy::log_prob(std::span<const Token> prompt, std::span<const Token> response,
                            std::span<double> grad) const {
  if (response.empty()) throw DomainError("log_prob: empty response");
  const Layout L(shape_);
  check_tokens(prompt, L.v);
  check_tokens(response, L.v);
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != L.total) throw DomainError("log_prob: gradient size mismatch");

  const std::size_t steps = response.size();
  std::vector<double> sum(L.d, 0.0), mean(L.d), act(L.d), logits(L.v);
  std::vector<double> g(L.v), dz(L.d);
  // Per-step d(logp)/d(mean embedding) / context length, for the embedding pass.
  std::vector<double> dmean(want_grad ? steps * L.d : 0, 0.0);

  auto add_embedding = [&](Token t) {
    for (std::size_t i = 0; i < L.d; ++i) sum[i] += params_[L.embed + t * L.d + i];
  };
  for (Token t : prompt) add_embedding(t);
  std::size_t count = prompt.size();

  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
    for (std::size_t i = 0; i < L.d; ++i) mean[i] = sum[i] * inv;
    forward(L, params_, mean, act, logits);
    const double lse = log_sum_exp(logits);
    const Token y = response[t];
    total += logits[y] - lse;

    if (want_grad) {
      for (std::size_t o = 0; o < L.v; ++o) g[o] = -std::exp(logits[o] - lse);
      g[y] += 1.0;
      std::fill(dz.begin(), dz.end(), 0.0);
      for (std::size_t o = 0; o < L.v; ++o) {
        grad[L.b_out + o] += g[o];
        const double* w = &params_[L.w_out + o * L.d];
        double* gw = &grad[L.w_out + o * L.d];
        for (std::size_t h = 0; h < L.d; ++h) {
          gw[h] += g[o] * act[h];
          dz[h] += g[o] * w[h];
        }
      }
      for (std::size_t h = 0; h < L.d; ++h) dz[h] *= 1.0 - act[h] * act[h];
      for (std::size_t h = 0; h < L.d; ++h) {
        grad[L.b_hid + h] += dz[h];
        double* gw = &grad[L.w_hid + h * L.d];
        const double* w = &params_[L.w_hid + h * L.d];
        for (std::size_t i = 0; i < L.d; ++i) {
          gw[i] += dz[h] * mean[i];
          dmean[t * L.d + i] += dz[h] * w[i] * inv;
        }
      }
    }
    add_embedding(y);
    ++count;
  }

  if (want_grad) {
    // Context token at index c feeds every step whose context is longer than
    // c, so it receives the suffix sum of dmean from that step on.
    std::vector<double> suffix(L.d, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
      // response[t] is in the context of steps t+1..steps-1 only.
      const Token y = response[t];
      for (std::size_t i = 0; i < L.d; ++i) grad[L.embed + y * L.d + i] += suffix[i];
      for (std::size_t i = 0; i < L.d; ++i) suffix[i] += dmean[t * L.d + i];
    }
    for (Token tok : prompt) {
      for (std::size_t i = 0; i < L.d; ++i) grad[L.embed + tok * L.d + i] += suffix[i];
    }
  }
  return total;
}

PolicyBinding::PolicyBinding(const TinyPolicy& policy, Tape& tape) : policy_(&policy), tape_(&tape) {
  const auto params = policy.params();
  leaves_.reserve(params.size());
  for (double x : params) leaves_.push_back(tape.leaf(x, true));
}

Value PolicyBinding::log_prob(std::span<const Token> prompt, std::span<const Token> response) const {
  std::vector<double> grad(leaves_.size(), 0.0);
  const double lp = policy_->log_prob(prompt, response, grad);
  return tape_->fused(lp, leaves_, grad);
}

namespace {

std::size_t top_index(const RankingSample& s) {
  return static_cast<std::size_t>(
      std::max_element(s.relevance.begin(), s.relevance.end()) - s.relevance.begin());
}

}  // namespace

double top_response_loglik(const TinyPolicy& policy, const Dataset& dataset) {
  if (dataset.empty()) throw DataError("top_response_loglik: empty dataset");
  double acc = 0.0;
  for (const auto& s : dataset.samples) {
    const TokenSeq prompt = tokenize(s.prompt);
    const TokenSeq resp = tokenize(s.responses[top_index(s)]);
    acc += policy.log_prob(prompt, resp) / static_cast<double>(resp.size());
  }
  return acc / static_cast<double>(dataset.size());
}

TinyPolicy sft_train(TinyPolicy policy, const Dataset& dataset, const SftConfig& config,
                     SftReport* report) {
  if (dataset.empty()) throw DataError("sft_train: empty dataset");
  if (config.batch_size == 0) throw DomainError("sft_train: batch_size must be >= 1");
  if (report) report->mean_loglik = {top_response_loglik(policy, dataset)};

  const std::size_t n_params = policy.params().size();
  RmspropState state(n_params);
  std::vector<double> grad(n_params), step_grad(n_params);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(step_grad.begin(), step_grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = dataset.samples[order[b]];
        const TokenSeq prompt = tokenize(s.prompt);
        const TokenSeq resp = tokenize(s.responses[top_index(s)]);
        std::fill(grad.begin(), grad.end(), 0.0);
        policy.log_prob(prompt, resp, grad);
        // Minimize the negative mean per-token log-likelihood.
        const double w = -1.0 / (static_cast<double>(resp.size()) * static_cast<double>(end - start));
        for (std::size_t i = 0; i < n_params; ++i) step_grad[i] += w * grad[i];
      }
      rmsprop_step(policy.mutable_params(), step_grad, state, config.lr);
    }
    if (report) report->mean_loglik.push_back(top_response_loglik(policy, dataset));
  }
  return policy;
}

}  // namespace drpo
