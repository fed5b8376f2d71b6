#pragma once

// Tiny autoregressive token policy.
//
// next-token logits = W_out * tanh(W_hid * mean(E[context]) + b_hid) + b_out
//
// The context is prompt ++ response prefix; tokens are bytes. The flat
// parameter vector is laid out as [E (V x D) | W_hid (D x D) | b_hid (D) |
// W_out (V x D) | b_out (V)].

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "drpo/data.hpp"
#include "drpo/diffcalc.hpp"

namespace drpo {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

/// Byte-level tokenization.
TokenSeq tokenize(std::string_view text);

struct PolicyShape {
  std::size_t vocab_size = 128;
  std::size_t embed_dim = 16;

  std::size_t param_count() const;
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

class TinyPolicy {
 public:
  /// Parameters uniform in [-0.05, 0.05], deterministic in `seed`.
  static TinyPolicy init(std::uint64_t seed, std::size_t vocab_size = 128,
                         std::size_t embed_dim = 16);
  static TinyPolicy from_params(PolicyShape shape, std::vector<double> params,
                                bool frozen = false);

  const PolicyShape& shape() const { return shape_; }
  std::span<const double> params() const { return params_; }
  bool frozen() const { return frozen_; }

  /// Mutable parameter view; throws DomainError on a frozen policy.
  std::span<double> mutable_params();

  /// Deep copy that rejects further updates.
  TinyPolicy clone_frozen() const;

  std::vector<double> next_token_probs(std::span<const Token> context) const;

  /// sum_t ln softmax(logits(prompt ++ response[:t]))[response[t]].
  /// Throws DomainError for an empty response or an out-of-range token.
  double log_prob(std::span<const Token> prompt, std::span<const Token> response) const;

  /// As above and adds d(log_prob)/d(params) into `grad`.
  double log_prob(std::span<const Token> prompt, std::span<const Token> response,
                  std::span<double> grad) const;

 private:
  TinyPolicy(PolicyShape shape, std::vector<double> params, bool frozen)
      : shape_(shape), params_(std::move(params)), frozen_(frozen) {}

  PolicyShape shape_;
  std::vector<double> params_;
  bool frozen_ = false;
};

/// A policy's parameters placed on a tape as tracked leaves for one step.
class PolicyBinding {
 public:
  PolicyBinding(const TinyPolicy& policy, Tape& tape);

  const TinyPolicy& policy() const { return *policy_; }
  Tape& tape() const { return *tape_; }
  std::span<const Value> leaves() const { return leaves_; }

  /// Sequence log-likelihood as one fused tape node with closed-form partials
  /// towards every parameter leaf.
  Value log_prob(std::span<const Token> prompt, std::span<const Token> response) const;

  std::vector<double> gradient(const GradientMap& grads) const { return grads.gather(leaves_); }

 private:
  const TinyPolicy* policy_;
  Tape* tape_;
  std::vector<Value> leaves_;
};

struct SftConfig {
  std::size_t epochs = 1;
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct SftReport {
  /// Mean per-token log-likelihood of the top responses, before training and
  /// after each epoch.
  std::vector<double> mean_loglik;
};

/// Mean per-token log-likelihood of each sample's highest-relevance response.
double top_response_loglik(const TinyPolicy& policy, const Dataset& dataset);

/// Maximizes the log-likelihood of each sample's top response with RMSProp.
TinyPolicy sft_train(TinyPolicy policy, const Dataset& dataset, const SftConfig& config,
                     SftReport* report = nullptr);

}  // namespace drpo
