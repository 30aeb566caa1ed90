#include <codewave/signal.hpp>

#include <gtest/gtest.h>

#include "support/synthetic_corpus.hpp"

#include <cmath>
#include <random>

using namespace codewave;

namespace {

Signal from(std::initializer_list<int> bytes, int ngram) {
  std::string s;
  for (int b : bytes) s.push_back(static_cast<char>(b));
  return signal_from_bytes(std::string_view(s), ngram);
}

Signal of(std::vector<double> samples) {
  Signal s;
  s.samples = std::move(samples);
  return s;
}

}  // namespace

TEST(LoadSignal, ZeroBytesAreSilence) { EXPECT_EQ(from({0x00, 0x00}, 2).samples, std::vector<double>{0.0}); }

TEST(LoadSignal, MostNegativeByte) { EXPECT_EQ(from({0x80}, 1).samples, std::vector<double>{-1.0}); }

TEST(LoadSignal, MostPositiveSixteenBit) {
  EXPECT_DOUBLE_EQ(from({0x7F, 0xFF}, 2).samples.at(0), 32767.0 / 32768.0);
}

TEST(LoadSignal, BigEndianTrigram) {
  EXPECT_DOUBLE_EQ(from({0x01, 0x02, 0x03}, 3).samples.at(0), static_cast<double>(0x010203) / 8388608.0);
  EXPECT_DOUBLE_EQ(from({0xFF, 0xFF, 0xFF}, 3).samples.at(0), -1.0 / 8388608.0);
}

TEST(LoadSignal, SlidingWindowLength) {
  EXPECT_EQ(from({1, 2, 3, 4, 5}, 2).samples.size(), 4u);
  EXPECT_EQ(from({1, 2, 3, 4, 5}, 1).samples.size(), 5u);
  EXPECT_EQ(from({1, 2, 3, 4, 5}, 3).samples.size(), 3u);
  EXPECT_TRUE(from({1}, 2).samples.empty());
  EXPECT_TRUE(from({}, 1).samples.empty());
}

TEST(LoadSignal, RejectsBadNgram) {
  EXPECT_THROW(from({1, 2}, 0), ConfigError);
  EXPECT_THROW(from({1, 2}, 4), ConfigError);
}

TEST(LoadSignal, SamplesInRangeAndContentAddressed) {
  std::mt19937_64 rng(5);
  codewave::testing::TempDir dir;
  for (int ngram = 1; ngram <= 3; ++ngram) {
    const auto bytes = codewave::testing::random_bytes(rng, 300);
    codewave::testing::write_bytes(dir.path() / "a.bin", bytes);
    codewave::testing::write_bytes(dir.path() / "b.bin", bytes);
    const auto a = load_signal(dir.path() / "a.bin", ngram);
    const auto b = load_signal(dir.path() / "b.bin", ngram);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.ngram, ngram);
    EXPECT_EQ(a.samples.size(), 300u - ngram + 1);
    for (double x : a.samples) {
      EXPECT_GE(x, -1.0);
      EXPECT_LT(x, 1.0);
    }
  }
}

TEST(LoadSignal, UnreadableFileIsIoError) { EXPECT_THROW(load_signal("/nonexistent/file.c", 2), IoError); }

TEST(Normalize, ScalesByPeak) {
  EXPECT_EQ(normalize(of({0.25, -0.5})).samples, (std::vector<double>{0.5, -1.0}));
}

TEST(Normalize, ZeroAndEmptyUnchanged) {
  EXPECT_EQ(normalize(of({0, 0, 0})).samples, (std::vector<double>{0, 0, 0}));
  EXPECT_TRUE(normalize(of({})).samples.empty());
}

TEST(Normalize, AlreadyNormalizedUnchanged) {
  EXPECT_EQ(normalize(of({1.0, -0.2})).samples, (std::vector<double>{1.0, -0.2}));
}

TEST(Normalize, IdempotentWithUnitPeak) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng() % 50);
    for (auto& x : v) x = u(rng);
    const auto once = normalize(of(v));
    EXPECT_EQ(normalize(once).samples, once.samples);
    double peak = 0;
    for (double x : once.samples) peak = std::max(peak, std::abs(x));
    EXPECT_TRUE(peak == 0.0 || peak == 1.0);
  }
}
