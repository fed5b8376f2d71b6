#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drpo/data.hpp"
#include "drpo/error.hpp"
#include "test_support.hpp"

using namespace drpo;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string to_text(const Dataset& d) {
  std::ostringstream out;
  write_jsonl(d, out);
  return out.str();
}

Dataset from_text(const std::string& text) {
  std::istringstream in(text);
  return read_jsonl(in);
}

std::string error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::size_t hamming(const std::string& a, const std::string& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

TEST_CASE("relevance from rewards") {
  CHECK(rewards_to_relevance(std::vector<double>{3, 3, 3}) == std::vector<double>{0.5, 0.5, 0.5});
  const auto two = rewards_to_relevance(std::vector<double>{1, 0});
  CHECK(two[0] == doctest::Approx(0.61553).epsilon(1e-5));
  CHECK(two[1] == doctest::Approx(0.38447).epsilon(1e-5));
  const auto huge = rewards_to_relevance(std::vector<double>{1000, -1000});
  CHECK(huge[0] == doctest::Approx(0.75));
  CHECK(huge[1] == doctest::Approx(0.25));
}

TEST_CASE("relevance properties on random rewards") {
  drpo::Rng rng(12);
  for (std::size_t k : {2u, 4u, 8u}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto r = testing_support::random_vector(rng, k, -5.0, 5.0);
      const auto s = rewards_to_relevance(r);
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        double want = 0.0;
        for (std::size_t l = 0; l < k; ++l) want += sigmoid(r[j] - r[l]) / double(k);
        CHECK(s[j] == doctest::Approx(want).epsilon(1e-12));
        CHECK(s[j] > 0.0);
        CHECK(s[j] < 1.0);
        total += s[j];
        for (std::size_t l = 0; l < k; ++l) {
          if (r[j] > r[l]) CHECK(s[j] > s[l]);
        }
      }
      CHECK(std::abs(total - double(k) / 2.0) <= 1e-9);

      auto shifted = r;
      for (double& x : shifted) x += 17.25;
      const auto s2 = rewards_to_relevance(shifted);
      for (std::size_t j = 0; j < k; ++j) CHECK(std::abs(s2[j] - s[j]) <= 1e-12);
    }
  }
}

TEST_CASE("corruption count") {
  CHECK(corruption_count(0, 0.08, 24) == 0);
  CHECK(corruption_count(1, 0.08, 24) == 2);  // ceil(1.92)
  CHECK(corruption_count(3, 0.08, 24) == 6);  // ceil(5.76)
  CHECK(corruption_count(2, 0.25, 8) == 4);   // exact product stays put
  CHECK(corruption_count(9, 0.5, 10) == 10);
}

TEST_CASE("synthetic data") {
  SynthConfig c;
  c.n_prompts = 60;
  c.k = 5;
  c.seed = 4;
  const Dataset d = synth_generate(c);
  REQUIRE(d.size() == 60);
  CHECK(d.k_values() == std::set<std::size_t>{5});
  for (const auto& s : d.samples) {
    CHECK_NOTHROW(s.validate());
    CHECK(s.prompt.size() == c.prompt_len);
    REQUIRE(s.raw_rewards.has_value());
    const auto& r = *s.raw_rewards;
    const std::size_t top = std::max_element(r.begin(), r.end()) - r.begin();
    CHECK(r[top] == 0.0);
    CHECK(*std::max_element(s.relevance.begin(), s.relevance.end()) == s.relevance[top]);
    for (std::size_t j = 0; j < s.k(); ++j) {
      CHECK(s.responses[j].size() == c.response_len);
      // Reward is minus the number of substituted positions.
      CHECK(double(hamming(s.responses[j], s.responses[top])) == -r[j]);
    }
    // Ordering the variants by substitution count gives strictly decreasing relevance.
    std::vector<std::size_t> idx(s.k());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r[a] > r[b]; });
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(s.relevance[idx[i - 1]] > s.relevance[idx[i]]);
  }
  CHECK(to_text(synth_generate(c)) == to_text(d));
  c.seed = 5;
  CHECK(to_text(synth_generate(c)) != to_text(d));
}

TEST_CASE("synthetic data hides list position") {
  SynthConfig c;
  c.n_prompts = 2000;
  c.seed = 1;
  const Dataset d = synth_generate(c);
  std::vector<int> top_at(c.k, 0);
  for (const auto& s : d.samples) {
    ++top_at[std::max_element(s.relevance.begin(), s.relevance.end()) - s.relevance.begin()];
  }
  for (int n : top_at) CHECK(std::abs(n - 500) < 90);
}

TEST_CASE("synth config validation") {
  SynthConfig c;
  c.k = 1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.corruption_step = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.response_len = 65;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("jsonl round trip") {
  SynthConfig c;
  c.n_prompts = 25;
  c.seed = 9;
  const Dataset d = synth_generate(c);
  const std::string text = to_text(d);
  const Dataset back = from_text(text);
  CHECK(back == d);
  CHECK(to_text(back) == text);

  RankingSample plain;
  plain.prompt = "quote \" and \\ and \xc3\xa9";
  plain.responses = {"x", "y\nz"};
  plain.relevance = {0.1, 1.0 / 3.0};
  const Dataset one{{plain}};
  CHECK(from_text(to_text(one)) == one);
  CHECK(to_text(one).find("rewards") == std::string::npos);
}

TEST_CASE("jsonl format") {
  RankingSample s;
  s.prompt = "p";
  s.responses = {"a", "b"};
  s.relevance = {1.0, 0.25};
  s.raw_rewards = std::vector<double>{0.0, -2.0};
  CHECK(to_text(Dataset{{s}}) ==
        "{\"prompt\":\"p\",\"responses\":[\"a\",\"b\"],\"rewards\":[0.0,-2.0],\"scores\":[1.0,0.25]}\n");
}

TEST_CASE("jsonl errors name the line") {
  const std::string good = R"({"prompt":"p","responses":["a","b"],"scores":[0.5,0.5]})";
  CHECK(from_text(good + "\n\n" + good + "\n").size() == 2);
  CHECK(from_text("").empty());

  const std::string mismatch = error_of(good + "\n" + R"({"prompt":"p","responses":["a","b"],"scores":[0.5]})");
  CHECK(mismatch.find("line 2") != std::string::npos);
  CHECK(mismatch.find("2 responses but 1 scores") != std::string::npos);

  const std::string range = error_of(R"({"prompt":"p","responses":["a"],"scores":[1.5]})");
  CHECK(range.find("line 1") != std::string::npos);
  CHECK(range.find("outside [0,1]") != std::string::npos);

  const std::string broken = error_of(good + "\n" + good + "\n{not json");
  CHECK(broken.find("line 3") != std::string::npos);
  CHECK(broken.find("malformed") != std::string::npos);

  const std::string missing = error_of(R"({"prompt":"p","responses":["a"]})");
  CHECK(missing.find("scores") != std::string::npos);

  CHECK(mismatch != range);
  CHECK(range != broken);
  CHECK_THROWS_AS(read_jsonl(std::filesystem::path("/nonexistent/file.jsonl")), DataError);
}

TEST_CASE("split") {
  SynthConfig c;
  c.n_prompts = 10;
  const Dataset d = synth_generate(c);
  const auto [train, eval] = split(d, 0.5, 3);
  CHECK(train.size() == 5);
  CHECK(eval.size() == 5);

  std::multiset<std::string> all, parts;
  for (const auto& s : d.samples) all.insert(s.prompt + s.responses[0]);
  for (const auto& s : train.samples) parts.insert(s.prompt + s.responses[0]);
  for (const auto& s : eval.samples) parts.insert(s.prompt + s.responses[0]);
  CHECK(all == parts);

  const auto again = split(d, 0.5, 3);
  CHECK(again.first == train);
  CHECK(again.second == eval);
  CHECK(split(d, 0.3, 0).second.size() == 3);

  CHECK_THROWS_AS(split(d, 0.0, 1), DomainError);
  CHECK_THROWS_AS(split(d, 1.0, 1), DomainError);
}

TEST_CASE("sample validation") {
  RankingSample s;
  s.prompt = "p";
  s.responses = {"a", "b"};
  s.relevance = {0.2, std::nan("")};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.relevance = {0.2};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.relevance = {0.2, -0.1};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.relevance = {0.2, 0.3};
  CHECK_NOTHROW(s.validate());
}
