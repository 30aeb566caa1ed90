#include <codewave/nlp.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace codewave;

namespace {

SmoothingSpec smoothing(SmoothingKind k, double delta = 1.0) { return SmoothingSpec{k, delta}; }

double p(const NGramModel& m, std::string_view ctx, char s, const SmoothingSpec& sm) {
  return probability(m, as_bytes(ctx), static_cast<std::uint8_t>(s), sm);
}

std::string random_text(std::mt19937_64& rng, std::size_t n, int alphabet) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() % alphabet);
  return s;
}

}  // namespace

TEST(NGram, UnigramCounts) {
  const auto m = train_model(as_bytes("aaab"), 1);
  const auto& cc = m.contexts.at(0);
  EXPECT_EQ(cc.count('a'), 3u);
  EXPECT_EQ(cc.count('b'), 1u);
  EXPECT_EQ(cc.total, 4u);
}

TEST(NGram, BigramCounts) {
  const auto m = train_model(as_bytes("abab"), 2);
  EXPECT_EQ(m.contexts.at('a').count('b'), 2u);
  EXPECT_EQ(m.contexts.at('b').count('a'), 1u);
}

TEST(NGram, ShortInputGivesEmptyModel) {
  EXPECT_TRUE(train_model(as_bytes(""), 1).empty());
  EXPECT_TRUE(train_model(as_bytes("ab"), 3).empty());
  EXPECT_THROW(train_model(as_bytes("ab"), 4), ConfigError);
}

TEST(NGram, TotalsMatchCounts) {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 3; ++n) {
    const auto m = train_model(as_bytes(random_text(rng, 500, 7)), n);
    for (const auto& [ctx, cc] : m.contexts) {
      std::uint64_t sum = 0;
      for (const auto& [s, c] : cc.next) sum += c;
      EXPECT_EQ(sum, cc.total);
    }
  }
}

TEST(Probability, Examples) {
  const auto m = train_model(as_bytes("aaab"), 1);
  EXPECT_DOUBLE_EQ(p(m, "", 'a', smoothing(SmoothingKind::mle)), 0.75);
  EXPECT_DOUBLE_EQ(p(m, "", 'a', smoothing(SmoothingKind::add_delta, 1.0)), 4.0 / 260.0);
  EXPECT_DOUBLE_EQ(p(m, "", 'a', smoothing(SmoothingKind::witten_bell)), 0.5);
  EXPECT_DOUBLE_EQ(p(m, "", 'z', smoothing(SmoothingKind::witten_bell)), 2.0 / (6.0 * 254.0));
}

TEST(Probability, WrongContextLengthIsUsageError) {
  const auto m = train_model(as_bytes("abc"), 2);
  EXPECT_THROW(p(m, "", 'a', smoothing(SmoothingKind::mle)), UsageError);
  EXPECT_THROW(p(m, "ab", 'a', smoothing(SmoothingKind::mle)), UsageError);
}

TEST(Probability, UnseenContext) {
  const auto m = train_model(as_bytes("abab"), 2);
  EXPECT_EQ(p(m, "z", 'a', smoothing(SmoothingKind::mle)), 0.0);
  EXPECT_DOUBLE_EQ(p(m, "z", 'a', smoothing(SmoothingKind::add_delta)), 1.0 / 256.0);
  EXPECT_DOUBLE_EQ(p(m, "z", 'a', smoothing(SmoothingKind::witten_bell)), 1.0 / 256.0);
}

TEST(Probability, WittenBellWithEverySymbolSeen) {
  std::string all;
  for (int i = 0; i < 256; ++i) all.push_back(static_cast<char>(i));
  all += "aaa";
  const auto m = train_model(as_bytes(all), 1);
  EXPECT_DOUBLE_EQ(p(m, "", 'a', smoothing(SmoothingKind::witten_bell)), 4.0 / 259.0);
  double sum = 0;
  for (int s = 0; s < 256; ++s) sum += probability(m, {}, static_cast<std::uint8_t>(s), smoothing(SmoothingKind::witten_bell));
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Probability, DistributionsSumToOne) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 3;
    const auto m = train_model(as_bytes(random_text(rng, 200 + rng() % 300, 2 + trial * 8)), n);
    for (const auto& sm : {smoothing(SmoothingKind::add_delta, 0.01), smoothing(SmoothingKind::add_delta, 1.0),
                           smoothing(SmoothingKind::witten_bell), smoothing(SmoothingKind::mle)}) {
      for (const auto& [ctx, cc] : m.contexts) {
        std::vector<std::uint8_t> context;
        for (int k = n - 2; k >= 0; --k) context.push_back(static_cast<std::uint8_t>(ctx >> (8 * k)));
        double sum = 0;
        for (int s = 0; s < 256; ++s) {
          const double pr = probability(m, context, static_cast<std::uint8_t>(s), sm);
          EXPECT_GE(pr, 0.0);
          EXPECT_LE(pr, 1.0);
          sum += pr;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(Probability, AddDeltaApproachesMle) {
  std::mt19937_64 rng(3);
  const auto m = train_model(as_bytes(random_text(rng, 400, 20)), 1);
  for (int s = 0; s < 256; ++s) {
    const auto sym = static_cast<std::uint8_t>(s);
    EXPECT_NEAR(probability(m, {}, sym, smoothing(SmoothingKind::add_delta, 1e-9)),
                probability(m, {}, sym, smoothing(SmoothingKind::mle)), 1e-6);
  }
}

TEST(Score, MleOfOwnText) {
  const auto m = train_model(as_bytes("aa"), 1);
  EXPECT_EQ(score_document(as_bytes("aa"), m, smoothing(SmoothingKind::mle)), 0.0);
}

TEST(Score, MleSentinels) {
  const auto m = train_model(as_bytes("aa"), 1);
  EXPECT_EQ(score_document(as_bytes("ab"), m, smoothing(SmoothingKind::mle)), kNegInf);
  EXPECT_EQ(score_document(as_bytes("a"), NGramModel{}, smoothing(SmoothingKind::mle)), kNegInf);
}

TEST(Score, SmoothedScoresAreFinite) {
  std::mt19937_64 rng(4);
  const auto m = train_model(as_bytes("hello"), 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto doc = random_text(rng, 100, 256);
    EXPECT_TRUE(std::isfinite(score_document(as_bytes(doc), m, smoothing(SmoothingKind::add_delta))));
    EXPECT_TRUE(std::isfinite(score_document(as_bytes(doc), m, smoothing(SmoothingKind::witten_bell))));
  }
}

TEST(Score, UnigramAdditiveOverConcatenation) {
  std::mt19937_64 rng(5);
  const auto m = train_model(as_bytes(random_text(rng, 300, 30)), 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_text(rng, 50, 40), y = random_text(rng, 70, 40);
    for (const auto& sm : {smoothing(SmoothingKind::add_delta), smoothing(SmoothingKind::witten_bell)}) {
      EXPECT_NEAR(score_document(as_bytes(x + y), m, sm),
                  score_document(as_bytes(x), m, sm) + score_document(as_bytes(y), m, sm), 1e-9);
    }
  }
}

TEST(Score, BruteForceProductOracle) {
  const std::string text = "the quick brown fox";
  const auto m = train_model(as_bytes(text), 2);
  const auto sm = smoothing(SmoothingKind::witten_bell);
  double product = 1.0;
  for (std::size_t i = 0; i + 2 <= text.size(); ++i) product *= p(m, text.substr(i, 1), text[i + 1], sm);
  EXPECT_NEAR(score_document(as_bytes(text), m, sm), std::log(product), 1e-9);
}

TEST(Classify, OwnTrainingTextWinsUnderEveryEstimator) {
  const std::string a = "int main() { char buf[8]; strcpy(buf, argv[1]); }";
  const std::string b = "SELECT * FROM users WHERE name = '%s' OR 1=1 --";
  for (int n = 1; n <= 3; ++n) {
    LanguageModelSet set;
    set.n = n;
    set.config_hash = "h";
    set.models.emplace(WeaknessClass::from_id("CWE-119"), train_model(as_bytes(a), n));
    set.models.emplace(WeaknessClass::from_id("CWE-89"), train_model(as_bytes(b), n));
    for (auto kind : {SmoothingKind::mle, SmoothingKind::add_delta, SmoothingKind::witten_bell}) {
      EXPECT_EQ(classify_document(as_bytes(a), set, smoothing(kind)).ranked[0].label.id(), "CWE-119");
      EXPECT_EQ(classify_document(as_bytes(b), set, smoothing(kind)).ranked[0].label.id(), "CWE-89");
    }
  }
}

TEST(Container, RoundTrip) {
  std::mt19937_64 rng(6);
  LanguageModelSet set;
  set.n = 3;
  set.config_hash = "-nopreprep -char -trigram";
  for (const char* id : {"CVE-2010-1234", "CWE-20"}) {
    set.models.emplace(WeaknessClass::from_id(id), train_model(as_bytes(random_text(rng, 400, 256)), 3, WeaknessClass::from_id(id)));
  }
  const auto bytes = serialize(set);
  EXPECT_EQ(bytes.substr(0, 4), "CWNM");
  EXPECT_EQ(deserialize_language_models(bytes), set);
  EXPECT_THROW(deserialize_language_models(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(deserialize_language_models("CWTS" + bytes.substr(4)), ParseError);
}
