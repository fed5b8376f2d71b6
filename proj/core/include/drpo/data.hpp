#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace drpo {

/// One prompt with K scored responses.
struct RankingSample {
  std::string prompt;
  std::vector<std::string> responses;
  std::vector<double> relevance;  // in [0, 1], one per response
  std::optional<std::vector<double>> raw_rewards;

  std::size_t k() const { return responses.size(); }

  /// Throws DataError on length mismatch, out-of-range or non-finite relevance.
  void validate() const;

  friend bool operator==(const RankingSample&, const RankingSample&) = default;
};

struct Dataset {
  std::vector<RankingSample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  std::set<std::size_t> k_values() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// s_j = (1/K) * sum_l sigmoid(R_j - R_l), evaluated through the logistic so
/// large rewards cannot overflow. The self term contributes 1/2, hence
/// sum_j s_j = K/2.
std::vector<double> rewards_to_relevance(std::span<const double> rewards);

struct SynthConfig {
  std::size_t n_prompts = 1000;
  std::size_t k = 4;
  std::size_t prompt_len = 8;
  std::size_t response_len = 24;
  double corruption_step = 0.08;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Number of substituted tokens in variant `rank` of a response of `len` tokens.
std::size_t corruption_count(std::size_t rank, double corruption_step, std::size_t len);

/// Synthetic ranking data with a known quality oracle.
///
/// Each prompt belongs to one of four hidden topics. The prompt is drawn from
/// the topic's prompt alphabet and the hidden target response from the
/// topic's response alphabet (8 of 32 lowercase-ish symbols). Variant r of the
/// target has corruption_count(r) positions replaced by symbols of *other*
/// topics, so every topic-blind statistic (unigram frequency, length) is
/// uninformative and only prompt-conditional knowledge separates the
/// variants. Reward R_r = -(substitutions), relevance from
/// rewards_to_relevance.
Dataset synth_generate(const SynthConfig& config);

/// One JSON object per line: {"prompt", "responses", "scores", optional
/// "rewards"}. Output keys are sorted and floats use 17 significant digits.
void write_jsonl(const Dataset& dataset, std::ostream& out);
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Throws DataError naming the 1-based line number of the first bad line.
Dataset read_jsonl(std::istream& in);
Dataset read_jsonl(const std::filesystem::path& path);

/// Seed-deterministic shuffle split into (train, held-out). The held-out part
/// gets round(n * holdout_fraction) samples.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double holdout_fraction,
                                  std::uint64_t seed);

}  // namespace drpo
