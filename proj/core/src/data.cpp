#include "drpo/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "drpo/error.hpp"
#include "drpo/random.hpp"
#include "json_text.hpp"

namespace drpo {

namespace {

constexpr std::size_t kTopics = 4;
constexpr std::string_view kPromptAlphabet = "ABCDEFGHIJKLMNOP";                  // 4 per topic
constexpr std::string_view kResponseAlphabet = "abcdefghijklmnopqrstuvwxyz012345";  // 8 per topic
constexpr std::size_t kPromptPerTopic = kPromptAlphabet.size() / kTopics;
constexpr std::size_t kResponsePerTopic = kResponseAlphabet.size() / kTopics;

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

void RankingSample::validate() const {
  if (responses.empty()) throw DataError("sample has no responses");
  if (relevance.size() != responses.size()) {
    throw DataError(std::to_string(responses.size()) + " responses but " +
                    std::to_string(relevance.size()) + " scores");
  }
  for (double s : relevance) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw DataError("score " + std::to_string(s) + " outside [0,1]");
    }
  }
  if (raw_rewards) {
    if (raw_rewards->size() != responses.size()) {
      throw DataError(std::to_string(responses.size()) + " responses but " +
                      std::to_string(raw_rewards->size()) + " rewards");
    }
    for (double r : *raw_rewards) {
      if (!std::isfinite(r)) throw DataError("non-finite reward");
    }
  }
}

std::set<std::size_t> Dataset::k_values() const {
  std::set<std::size_t> ks;
  for (const auto& s : samples) ks.insert(s.k());
  return ks;
}

std::vector<double> rewards_to_relevance(std::span<const double> rewards) {
  const std::size_t k = rewards.size();
  std::vector<double> s(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t l = 0; l < k; ++l) acc += logistic(rewards[j] - rewards[l]);
    s[j] = acc / static_cast<double>(k);
  }
  return s;
}

void SynthConfig::validate() const {
  if (n_prompts == 0) throw DomainError("synth: n_prompts must be >= 1");
  if (k < 2) throw DomainError("synth: k must be >= 2");
  if (prompt_len == 0 || prompt_len > 64) throw DomainError("synth: prompt_len must be in [1,64]");
  if (response_len == 0 || response_len > 64) {
    throw DomainError("synth: response_len must be in [1,64]");
  }
  if (!(corruption_step > 0.0 && corruption_step < 1.0)) {
    throw DomainError("synth: corruption_step must be in (0,1)");
  }
}

std::size_t corruption_count(std::size_t rank, double corruption_step, std::size_t len) {
  const double raw = static_cast<double>(rank) * corruption_step * static_cast<double>(len);
  const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(n, len);
}

Dataset synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Dataset out;
  out.samples.reserve(config.n_prompts);
  for (std::size_t p = 0; p < config.n_prompts; ++p) {
    const std::size_t topic = rng.below(kTopics);
    RankingSample sample;
    for (std::size_t i = 0; i < config.prompt_len; ++i) {
      sample.prompt += kPromptAlphabet[topic * kPromptPerTopic + rng.below(kPromptPerTopic)];
    }
    std::string target;
    for (std::size_t i = 0; i < config.response_len; ++i) {
      target += kResponseAlphabet[topic * kResponsePerTopic + rng.below(kResponsePerTopic)];
    }

    std::vector<std::string> variants;
    std::vector<double> rewards;
    std::vector<std::size_t> positions(config.response_len);
    for (std::size_t r = 0; r < config.k; ++r) {
      const std::size_t count = corruption_count(r, config.corruption_step, config.response_len);
      std::iota(positions.begin(), positions.end(), std::size_t{0});
      std::string variant = target;
      for (std::size_t c = 0; c < count; ++c) {
        // Partial Fisher-Yates: distinct positions.
        std::swap(positions[c], positions[c + rng.below(config.response_len - c)]);
        const std::size_t other =
            (topic + 1 + rng.below(kTopics - 1)) % kTopics;  // any topic but ours
        variant[positions[c]] =
            kResponseAlphabet[other * kResponsePerTopic + rng.below(kResponsePerTopic)];
      }
      variants.push_back(std::move(variant));
      rewards.push_back(-static_cast<double>(count));
    }

    // List order is shuffled so position in the list carries no signal.
    std::vector<std::size_t> order(config.k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<double> shuffled_rewards;
    for (std::size_t idx : order) {
      sample.responses.push_back(variants[idx]);
      shuffled_rewards.push_back(rewards[idx]);
    }
    sample.relevance = rewards_to_relevance(shuffled_rewards);
    sample.raw_rewards = std::move(shuffled_rewards);
    out.samples.push_back(std::move(sample));
  }
  return out;
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& s : dataset.samples) {
    std::string line = "{\"prompt\":" + json_text::quote(s.prompt) + ",\"responses\":[";
    for (std::size_t i = 0; i < s.responses.size(); ++i) {
      if (i) line += ',';
      line += json_text::quote(s.responses[i]);
    }
    line += ']';
    if (s.raw_rewards) line += ",\"rewards\":" + json_text::number_array(*s.raw_rewards);
    line += ",\"scores\":" + json_text::number_array(s.relevance) + "}\n";
    out << line;
  }
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_jsonl(dataset, out);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dataset read_jsonl(std::istream& in) {
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = line_prefix(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw DataError(where + "expected a JSON object");

    RankingSample s;
    try {
      if (!obj.contains("prompt") || !obj["prompt"].is_string()) {
        throw DataError(where + "missing or invalid field 'prompt'");
      }
      s.prompt = obj["prompt"].get<std::string>();
      if (!obj.contains("responses") || !obj["responses"].is_array()) {
        throw DataError(where + "missing or invalid field 'responses'");
      }
      for (const auto& r : obj["responses"]) {
        if (!r.is_string()) throw DataError(where + "responses must be strings");
        s.responses.push_back(r.get<std::string>());
      }
      if (!obj.contains("scores") || !obj["scores"].is_array()) {
        throw DataError(where + "missing or invalid field 'scores'");
      }
      for (const auto& v : obj["scores"]) {
        if (!v.is_number()) throw DataError(where + "scores must be numbers");
        s.relevance.push_back(v.get<double>());
      }
      if (obj.contains("rewards")) {
        if (!obj["rewards"].is_array()) throw DataError(where + "invalid field 'rewards'");
        std::vector<double> rewards;
        for (const auto& v : obj["rewards"]) {
          if (!v.is_number()) throw DataError(where + "rewards must be numbers");
          rewards.push_back(v.get<double>());
        }
        s.raw_rewards = std::move(rewards);
      }
      s.validate();
    } catch (const DataError& e) {
      const std::string msg = e.what();
      throw DataError(msg.rfind("line ", 0) == 0 ? msg : where + msg);
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_jsonl(in);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double holdout_fraction,
                                  std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw DomainError("split: holdout fraction must be in (0,1)");
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_eval = static_cast<std::size_t>(
      std::llround(holdout_fraction * static_cast<double>(dataset.size())));
  Dataset train;
  Dataset eval;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_eval ? eval : train).samples.push_back(dataset.samples[idx[i]]);
  }
  return {std::move(train), std::move(eval)};
}

}  // namespace drpo
